"""Spanning KeyChain subgraphs of sparse random graphs.

The package samples G(n, p), checks the structural properties the embedding
relies on, runs extension-rotation Hamiltonicity tools, builds and verifies
KeyChain embeddings, and measures maximum common edge subgraphs.
"""

from .embed import (
    Comb,
    EmbedConfig,
    EmbedResult,
    Embedding,
    Partition,
    PipelineTrace,
    build_comb,
    close_chain,
    embed_keychain,
    partition_vertices,
    select_keys,
    verify_embedding,
)
from .errors import (
    CapacityError,
    InfeasibleError,
    InputError,
    KeyChainError,
    OverlapError,
    ParameterError,
    ParseError,
)
from .graph import (
    Graph,
    KeyChainParams,
    compute_parameters,
    degree_classes,
    keychain_template,
    parse,
    read_graph,
    sample_gnp,
    serialize,
    write_graph,
)
from .mcs import McsResult, mces_exact, mces_heuristic, mcs_experiment, union_bound_eval
from .posa import (
    HamiltonFailure,
    HamiltonResult,
    certify_expander,
    find_boosters,
    hamilton_path_endpoints,
    hamiltonize,
    rotate,
    rotation_closure,
)
from .properties import PropertyReport, check_all, check_set_expansion
from .seeding import derive_seed
from .tails import TailBoundQuery, tail_bound_eval

__version__ = "0.1.0"
