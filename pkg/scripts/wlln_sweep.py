"""Random and adversarial one-sided games checked against the closed-form capital bound."""
import argparse
import json

from gtprob import suites


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=100_000)
    ap.add_argument("--certificate-sequences", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = {
        "tightness": suites.wlln_tightness(),
        "sweep": suites.wlln_sweep(args.instances, args.seed),
        "certificate": suites.wlln_certificate_check(args.certificate_sequences, args.seed),
    }
    print(json.dumps(out, indent=2, default=float))
    return 0 if all(r["passed"] for r in out.values()) else 2


if __name__ == "__main__":
    raise SystemExit(main())
