"""Command-line entry point, sweep harness and report writer.

Every subcommand builds a list of flat rows plus a JSON payload.  With
``--out DIR`` they are written to ``DIR/<name>.csv`` and ``DIR/<name>.json``
(each via a temporary file and a rename); otherwise the ``--format`` view goes
to stdout.  Wall-clock timings never enter a report, so a fixed master seed
gives byte-identical output.

Exit status is 0 whenever the computation ran, whatever it found (a violated
property or a failed embedding is data), 1 on library or I/O errors and 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Sequence

from . import mcs, posa, properties
from .constants import profile_constants
from .embed import EmbedConfig, Embedding, embed_keychain, verify_embedding
from .errors import KeyChainError, ParameterError
from .graph import (
    Graph,
    KeyChainParams,
    compute_parameters,
    keychain_template,
    read_graph,
    sample_gnp,
    serialize,
)
from .seeding import derive_seed

METRICS = ("connected", "min-degree-2", "hamiltonian", "embed", "properties")


# -- configuration ---------------------------------------------------------------------------


def edge_probability(n: int, p: float | None = None, c: float | None = None) -> float:
    """``p`` itself, or ``(ln n + c) / n`` clipped to ``[0, 1]``."""
    if (p is None) == (c is None):
        raise ParameterError("give exactly one of p and c")
    if p is not None:
        if not 0 <= p <= 1:
            raise ParameterError(f"p must lie in [0, 1], got {p}")
        return float(p)
    if n < 2:
        raise ParameterError(f"the c-offset needs n >= 2, got n = {n}")
    return min(1.0, max(0.0, (math.log(n) + c) / n))


@dataclass
class RunConfig:
    """One sweep: the grid, the metric and the seeds.

    Trial ``i`` at every grid point uses ``derive_seed(seed, "trial", i)``, so
    neighbouring grid points see coupled samples.
    """

    ns: list[int] = field(default_factory=list)
    ps: list[float] | None = None
    cs: list[float] | None = None
    trials: int = 10
    seed: int = 0
    metric: str = "connected"
    profile: str = "desk"
    gamma: float | None = None
    growth: float | None = None

    def validate(self) -> "RunConfig":
        if (self.ps is None) == (self.cs is None):
            raise ParameterError("give exactly one of a p-grid and a c-grid")
        if self.metric not in METRICS:
            raise ParameterError(f"unknown metric {self.metric!r}; choose from {', '.join(METRICS)}")
        if self.trials < 0:
            raise ParameterError(f"trials must be non-negative, got {self.trials}")
        if any(n < 1 for n in self.ns):
            raise ParameterError("every n must be positive")
        return self

    def points(self) -> list[tuple[int, str, float, float]]:
        """``(n, grid label, grid value, p)`` in grid order."""
        out = []
        for n in self.ns:
            if self.cs is not None:
                out.extend((n, "c", c, edge_probability(n, c=c)) for c in self.cs)
            else:
                out.extend((n, "p", p, edge_probability(n, p=p)) for p in self.ps)
        return out


# -- reports ---------------------------------------------------------------------------------


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in columns})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v, separators=(",", ":"))
    if v is None:
        return ""
    return v


def to_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit_report(
    rows: Sequence[dict], columns: Sequence[str], payload: dict | None, out_dir: str, name: str
) -> list[str]:
    """Write ``name.csv`` (columns in the given order) and ``name.json``; returns the paths."""
    csv_path = os.path.join(out_dir, f"{name}.csv")
    json_path = os.path.join(out_dir, f"{name}.json")
    _atomic_write(csv_path, rows_to_csv(rows, columns))
    body = {"rows": list(rows)} if payload is None else payload
    _atomic_write(json_path, to_json(body))
    return [csv_path, json_path]


# -- sweep ------------------------------------------------------------------------------------


@dataclass
class SweepResult:
    rows: list[dict] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)

    ROW_COLUMNS = ("n", "grid", "value", "p", "trial", "seed", "success", "detail")
    SUMMARY_COLUMNS = ("n", "grid", "value", "p", "trials", "successes", "rate")


def _trial(metric: str, G: Graph, seed: int, cfg: RunConfig) -> tuple[bool, str]:
    if metric == "connected":
        return G.is_connected(), ""
    if metric == "min-degree-2":
        return G.n >= 1 and G.min_degree() >= 2, ""
    if metric == "hamiltonian":
        r = posa.hamiltonize(G, seed=derive_seed(seed, "hamiltonize"))
        ok = isinstance(r, posa.HamiltonResult) and posa.is_hamilton_cycle(G, r.cycle)
        return ok, "" if ok else r.stage
    if metric == "embed":
        r = embed_keychain(G, EmbedConfig(profile=cfg.profile, gamma=cfg.gamma, growth=cfg.growth, seed=seed))
        if r.ok:
            return True, ""
        return False, (r.trace.failure or {}).get("obstruction", (r.trace.failure or {}).get("stage", ""))
    c = profile_constants(cfg.profile, cfg.gamma)
    reports = properties.check_all(G, c, mode="sampled", seed=derive_seed(seed, "check"))
    bad = [r.property for r in reports if r.violated]
    return not bad, ",".join(bad)


def sweep_experiment(cfg: RunConfig) -> SweepResult:
    """Sample, measure and aggregate at every grid point; an empty grid gives empty tables."""
    cfg.validate()
    out = SweepResult()
    for n, label, value, p in cfg.points():
        wins = 0
        for i in range(cfg.trials):
            s = derive_seed(cfg.seed, "trial", i)
            G = sample_gnp(n, p, derive_seed(s, "graph"))
            ok, detail = _trial(cfg.metric, G, s, cfg)
            wins += ok
            out.rows.append(
                {"n": n, "grid": label, "value": value, "p": p, "trial": i, "seed": s, "success": int(ok), "detail": detail}
            )
        out.summary.append(
            {"n": n, "grid": label, "value": value, "p": p, "trials": cfg.trials, "successes": wins,
             "rate": wins / cfg.trials if cfg.trials else None}
        )
    return out


# -- subcommands ------------------------------------------------------------------------------


@dataclass
class Report:
    name: str
    rows: list[dict]
    columns: tuple[str, ...]
    payload: dict
    text: str | None = None  # raw artefact (graph text) written beside the report


def _graph(args) -> tuple[Graph, dict]:
    if getattr(args, "graph", None):
        return read_graph(args.graph), {"graph": os.path.basename(args.graph)}
    if args.n is None:
        raise ParameterError("give --graph FILE or --n with --p or --c")
    p = edge_probability(args.n, args.p, args.c)
    return sample_gnp(args.n, p, derive_seed(args.seed, "sample")), {"n": args.n, "p": p, "seed": args.seed}


def cmd_sample(args) -> Report:
    G, meta = _graph(args)
    row = {**meta, "m": G.m, "min_degree": G.min_degree() if G.n else 0, "connected": int(G.is_connected())}
    return Report("sample", [row], ("n", "p", "seed", "m", "min_degree", "connected"), row, serialize(G))


def cmd_template(args) -> Report:
    if args.n is None or args.t is None or args.ell is None:
        raise ParameterError("template needs --n, --t and --ell")
    params = KeyChainParams(n=args.n, t=args.t, ell=args.ell).validate()
    G = keychain_template(params)
    row = {"n": G.n, "t": params.t, "ell": params.ell, "m": G.m}
    return Report("template", [row], ("n", "t", "ell", "m"), row, serialize(G))


def cmd_params(args) -> Report:
    if args.n is None:
        raise ParameterError("params needs --n")
    params = compute_parameters(args.n, args.profile, args.growth)
    row = params.to_dict()
    return Report("params", [row], ("n", "t", "ell", "j0", "a_seq"), row)


def cmd_check(args) -> Report:
    G, meta = _graph(args)
    c = profile_constants(args.profile, args.gamma)
    wanted = [s.strip().upper() for s in args.properties.split(",")] if args.properties else None
    reports = []
    if wanted is None or {"P1", "P2"} & set(wanted):
        reports.extend(properties.check_degree_properties(G, c))
    if wanted is None or {"P3", "P4"} & set(wanted):
        reports.extend(properties.check_small_structure(G, c))
    for which in properties.SET_PROPERTIES:
        if wanted is None or which in wanted:
            reports.append(properties.check_set_expansion(G, which, args.mode, c, args.trials, derive_seed(args.seed, "check")))
    if wanted is not None:
        unknown = set(wanted) - {"P1", "P2", "P3", "P4", *properties.SET_PROPERTIES}
        if unknown:
            raise ParameterError(f"unknown properties: {', '.join(sorted(unknown))}")
        reports = [r for r in reports if r.property in wanted]
    rows = [r.to_dict() for r in reports]
    return Report("check", rows, ("property", "verdict", "mode", "witness", "params"), {**meta, "reports": rows})


def _embed_config(args, seed: int) -> EmbedConfig:
    return EmbedConfig(profile=args.profile, gamma=args.gamma, growth=args.growth, seed=seed,
                       strategy=args.strategy, attempts=args.attempts)


def cmd_embed(args) -> Report:
    G, meta = _graph(args)
    r = embed_keychain(G, _embed_config(args, args.seed))
    failure = r.trace.failure or {}
    row = {**meta, "success": int(r.ok), "stage": failure.get("stage", ""), "obstruction": failure.get("obstruction", ""),
           "attempts": 1 + max((s["attempt"] for s in r.trace.stages), default=0)}
    payload = {**meta, "trace": r.trace.to_dict(), "embedding": r.embedding.to_dict() if r.ok else None}
    text = r.embedding.to_json() + "\n" if r.ok else None
    return Report("embed", [row], ("n", "p", "seed", "success", "stage", "obstruction", "attempts"), payload, text)


def cmd_verify(args) -> Report:
    if not args.graph or not args.embedding:
        raise ParameterError("verify needs --graph and --embedding")
    G = read_graph(args.graph)
    with open(args.embedding, encoding="utf-8") as fh:
        e = Embedding.from_json(fh.read())
    ok, why = verify_embedding(G, e)
    row = {"ok": int(ok), "diagnosis": why}
    return Report("verify", [row], ("ok", "diagnosis"), row)


def cmd_hamiltonize(args) -> Report:
    G, meta = _graph(args)
    r = posa.hamiltonize(G, seed=derive_seed(args.seed, "hamiltonize"))
    ok = isinstance(r, posa.HamiltonResult)
    row = {**meta, "success": int(ok), "rounds": r.rounds, "stage": "" if ok else r.stage,
           "longest_path": G.n if ok else r.longest_path_len}
    return Report("hamiltonize", [row], ("n", "p", "seed", "success", "rounds", "stage", "longest_path"),
                  {**meta, "result": r.to_dict()})


def cmd_mcs(args) -> Report:
    eps = args.eps if args.eps is not None else [0.5]
    if args.bound:
        if args.n is None:
            raise ParameterError("--bound needs --n")
        rows = [mcs.union_bound_eval(args.n, e, args.delta, args.p).to_dict() for e in eps]
        cols = ("n", "eps", "delta", "p", "m", "log_bound", "middle_log", "simplified_log", "certifies", "signs_agree")
        return Report("bound", rows, cols, {"bounds": rows})
    if args.n is None:
        raise ParameterError("mcs needs --n")
    p = edge_probability(args.n, args.p, args.c)
    s = mcs.mcs_experiment(args.n, p, args.trials, args.seed, args.mode if args.mode != "sampled" else "heuristic", eps)
    return Report("mcs", [t.row() for t in s.trials], ("trial", "M", "mode", "seed"), s.to_dict())


def cmd_sweep(args) -> Report:
    cfg = RunConfig(
        ns=args.n_grid or ([] if args.n is None else [args.n]),
        ps=args.p_grid, cs=args.c_grid, trials=args.trials, seed=args.seed, metric=args.metric,
        profile=args.profile, gamma=args.gamma, growth=args.growth,
    )
    if cfg.ps is None and cfg.cs is None:
        cfg.cs = []
    res = sweep_experiment(cfg)
    payload = {"metric": cfg.metric, "seed": cfg.seed, "trials": cfg.trials, "summary": res.summary}
    rep = Report("sweep", res.rows, SweepResult.ROW_COLUMNS, payload)
    rep.summary = res.summary  # type: ignore[attr-defined]
    return rep


COMMANDS = {
    "sample": cmd_sample,
    "template": cmd_template,
    "params": cmd_params,
    "check": cmd_check,
    "embed": cmd_embed,
    "verify": cmd_verify,
    "hamiltonize": cmd_hamiltonize,
    "mcs": cmd_mcs,
    "sweep": cmd_sweep,
}

ARTEFACTS = {"sample": "graph.txt", "template": "graph.txt", "embed": "embedding.json"}


# -- argument parsing -------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    prob = common.add_mutually_exclusive_group()
    prob.add_argument("--p", type=float, help="edge probability")
    prob.add_argument("--c", type=float, help="offset: p = (ln n + c) / n")
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--profile", choices=("paper", "desk"), default="desk")
    common.add_argument("--gamma", type=float)
    common.add_argument("--growth", type=float)
    common.add_argument("--graph", help="graph file in the 'n m' edge-list format")
    common.add_argument("--out", help="directory for CSV and JSON reports")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--mode", choices=("exact", "sampled", "heuristic", "auto"), default="sampled")

    ap = argparse.ArgumentParser(prog="keychain", description="KeyChain embeddings in sparse random graphs.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="sample G(n, p)")
    t = sub.add_parser("template", parents=[common], help="write the KeyChain template")
    t.add_argument("--t", type=int)
    t.add_argument("--ell", type=int)
    sub.add_parser("params", parents=[common], help="derive t, ell and the layer sequence")
    ch = sub.add_parser("check", parents=[common], help="check the random-graph properties")
    ch.add_argument("--properties", help="comma list such as P1,P5 (default: all)")
    for name in ("embed",):
        e = sub.add_parser(name, parents=[common], help="embed the KeyChain")
        e.add_argument("--strategy", choices=("paper", "lowest-degree"), default="lowest-degree")
        e.add_argument("--attempts", type=int, default=6)
    v = sub.add_parser("verify", parents=[common], help="verify an embedding certificate")
    v.add_argument("--embedding", help="embedding JSON file")
    sub.add_parser("hamiltonize", parents=[common], help="find a Hamilton cycle")
    m = sub.add_parser("mcs", parents=[common], help="maximum common edge subgraph experiment or union bound")
    m.add_argument("--eps", type=_floats)
    m.add_argument("--delta", type=float)
    m.add_argument("--bound", action="store_true", help="evaluate the union bound instead of sampling")
    s = sub.add_parser("sweep", parents=[common], help="success rates over an n / c grid")
    s.add_argument("--n-grid", type=_ints)
    s.add_argument("--c-grid", type=_floats)
    s.add_argument("--p-grid", type=_floats)
    s.add_argument("--metric", choices=METRICS, default="connected")
    return ap


def render(rep: Report, fmt: str) -> str:
    if fmt == "csv":
        return rows_to_csv(rep.rows, rep.columns)
    return to_json(rep.payload)


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        rep = COMMANDS[args.command](args)
        if args.out:
            emit_report(rep.rows, rep.columns, rep.payload, args.out, rep.name)
            if rep.text is not None:
                _atomic_write(os.path.join(args.out, ARTEFACTS[args.command]), rep.text)
            summary = getattr(rep, "summary", None)
            if summary is not None:
                _atomic_write(os.path.join(args.out, "sweep-summary.csv"),
                              rows_to_csv(summary, SweepResult.SUMMARY_COLUMNS))
        elif rep.text is not None and args.command in ("sample", "template"):
            sys.stdout.write(rep.text)
        else:
            sys.stdout.write(render(rep, args.format))
    except (KeyChainError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
