"""Hamilton cycles by sparsify, certify and booster rounds on G(n, p)."""

import argparse
import math

from keychain import HamiltonResult, derive_seed, hamiltonize, sample_gnp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--c", type=float, default=3.0, help="p = (ln n + c) / n")
    ap.add_argument("--seeds", type=int, default=5)
    a = ap.parse_args()
    p = (math.log(a.n) + a.c) / a.n
    for s in range(a.seeds):
        G = sample_gnp(a.n, p, derive_seed(s, "graph"))
        r = hamiltonize(G, seed=s)
        if isinstance(r, HamiltonResult):
            print(f"seed {s}: cycle found, {r.rounds} booster rounds, certified={not r.fallback}")
        else:
            print(f"seed {s}: {r.stage}, longest path {r.longest_path_len}, min degree {G.min_degree()}")


if __name__ == "__main__":
    main()
