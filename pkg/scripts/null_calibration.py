#!/usr/bin/env python3
"""False-positive calibration of the end-to-end residual audit.

Generates bias-free corpora across many seeds and reports how often the
two-group residual test rejects. A calibrated pipeline should reject at
roughly the nominal alpha.
"""

import argparse
import json

from evalaudit.synth import SynthConfig, power_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=3000, help="records per corpus")
    parser.add_argument("--seeds", type=int, default=200, help="number of corpora")
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--master-seed", type=int, default=0)
    parser.add_argument("--out", help="optional JSON output path")
    args = parser.parse_args()

    config = SynthConfig(n=args.n, seed=args.master_seed)
    result = power_experiment(config, n_seeds=args.seeds, alpha=args.alpha)
    print(
        f"rejection rate {result.rate:.4f} ± {result.standard_error:.4f} "
        f"({result.n_rejections}/{result.n_seeds}) at alpha={args.alpha}"
    )
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result.to_dict(), fh, indent=2)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
