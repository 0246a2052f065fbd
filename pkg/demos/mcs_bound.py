"""Common edge subgraphs of two G(n, p): small exact runs and the union bound."""

import argparse

from keychain.mcs import mcs_experiment, union_bound_eval


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=7)
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--trials", type=int, default=50)
    a = ap.parse_args()
    s = mcs_experiment(a.n, a.p, a.trials, seed=0)
    d = s.to_dict()
    print(f"n={a.n} p={a.p}: M min {d['min']} mean {d['mean']:.2f} max {d['max']}; within 1.5n: {d['within']['0.5']:.2f}")
    for n in (10**3, 10**4, 10**6):
        b = union_bound_eval(n, 0.5, 0.5 / 3)
        print(f"n={n}: m={b.m} log bound {b.log_bound:.4g} certifies={b.certifies} simplified log {b.simplified_log:.4g}")


if __name__ == "__main__":
    main()
