"""Mean final capital of every detector on symmetric random walks, with z-scores."""
import argparse

from gtprob import suites


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--steps", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    res = suites.neutrality(args.paths, args.steps, args.seed)
    print(f"{'detector':28s} {'initial':>10s} {'mean final':>12s} {'se':>10s} {'z':>7s}")
    for name, d in res["detectors"].items():
        print(f"{name:28s} {d['initial']:10.6f} {d['mean_final']:12.6f} {d['se']:10.2e} {d['z']:+7.2f}")
    print(f"{'PASS' if res['passed'] else 'FAIL'} in {res['runtime_s']:.1f}s "
          f"(walk step {suites.NEUTRALITY_STEP}, {args.paths} paths)")
    return 0 if res["passed"] else 2


if __name__ == "__main__":
    raise SystemExit(main())
