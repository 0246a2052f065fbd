"""Embed the KeyChain into G(n, (ln n + c)/n) and check the certificate."""

import argparse
import math

from keychain import EmbedConfig, derive_seed, embed_keychain, sample_gnp, verify_embedding


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--c", type=float, default=2.0)
    ap.add_argument("--seeds", type=int, default=5)
    a = ap.parse_args()
    p = (math.log(a.n) + a.c) / a.n
    wins = 0
    for s in range(a.seeds):
        G = sample_gnp(a.n, p, derive_seed(s, "graph"))
        r = embed_keychain(G, EmbedConfig(seed=s))
        if r.ok:
            ok, why = verify_embedding(G, r.embedding)
            wins += ok
            k = r.embedding.params
            print(f"seed {s}: KC({k.n},{k.t},{k.ell}) embedded, verify: {why}")
        else:
            f = r.trace.failure
            print(f"seed {s}: failed at {f['stage']} ({f.get('obstruction', f.get('error'))})")
    print(f"{wins}/{a.seeds} verified")


if __name__ == "__main__":
    main()
