"""Per-degree flip probabilities of the four EDN variants, as CSV.

    python3 scripts/flip_prob_curves.py --rho 0.25 --k 7 --max-degree 60 --out curves.csv
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from ednoise.flipprob import Variant, flip_prob_table


@dataclass
class Config:
    rho: float = 0.25
    k: int = 7
    max_degree: int = 60
    out: str | None = None


def run(cfg: Config) -> dict:
    tables = {v: flip_prob_table(v, cfg.rho, cfg.k, cfg.max_degree).probs for v in Variant}
    fh = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["degree", *(v.value for v in Variant)])
    for d in range(cfg.max_degree + 1):
        writer.writerow([d, *(f"{tables[v][d]:.10f}" for v in Variant)])
    if cfg.out:
        fh.close()

    pwn = tables[Variant.SEQ_PWN]
    drops = np.flatnonzero(np.diff(pwn[1:]) < 0) + 1
    return {
        "seq_pwn_first_decrease": int(drops[0]) if len(drops) else None,
        "seq_limit": (cfg.k - 1) / cfg.k,
        "veto_at_max": float(tables[Variant.VETO][-1]),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--rho", type=float, default=Config.rho)
    p.add_argument("--k", type=int, default=Config.k)
    p.add_argument("--max-degree", type=int, default=Config.max_degree)
    p.add_argument("--out")
    args = p.parse_args()
    info = run(Config(args.rho, args.k, args.max_degree, args.out))
    for key, val in info.items():
        print(f"# {key}: {val}", file=sys.stderr)


if __name__ == "__main__":
    main()
