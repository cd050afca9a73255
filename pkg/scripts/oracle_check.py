"""Compare the auditor with the brute-force per-packet enumerator on random
toy rule-sets and report any disagreement."""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from fwaudit.audit import CATALOGUE, analyze  # noqa: E402
from fwaudit.ir import allowed_region  # noqa: E402
from oracle import enumerate_case, rasterize  # noqa: E402
from toycases import TOY_REG, TOY_THRESHOLDS, random_case, to_config  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-rules", type=int, default=10)
    args = ap.parse_args()

    t0 = time.time()
    bad, fired = [], {c.code: 0 for c in CATALOGUE}
    for k in range(args.cases):
        case = random_case(random.Random(args.seed + k), args.max_rules)
        cfg = to_config(case)
        o = enumerate_case(case, CATALOGUE)
        a = analyze(cfg, TOY_REG, TOY_THRESHOLDS)
        mask, _ = rasterize(allowed_region(cfg, TOY_REG))
        diff = [] if (mask == o.allowed).all() else ["allowed"]
        diff += [f"E{i}" for i, e in enumerate(a.effective) if not (rasterize(e)[0] == o.effective[i]).all()]
        diff += [c for c in o.indicators if a.indicators[c] != o.indicators[c]]
        diff += [f"count:{c}" for c, n in o.threshold_counts.items() if a.thresholds[c].count != n]
        for c, on in o.indicators.items():
            fired[c] += on
        if diff:
            bad.append((args.seed + k, diff))
    for seed, diff in bad[:20]:
        print(f"seed {seed}: {', '.join(diff)}")
    print(f"{args.cases} cases, {len(bad)} mismatches, {time.time() - t0:.1f}s")
    print("codes never fired: " + (", ".join(c for c, n in fired.items() if not n) or "none"))
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
