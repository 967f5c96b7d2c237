"""Schedules, pathwise bounds and witness factors of the semi-strict increase construction."""
import argparse
import json

from gtprob import suites
from gtprob.corpora import mixed_corpus
from gtprob.increase import EpsilonSchedule, e_cd_witness, minimal_exponent
from gtprob.paths import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--exponents", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--paths", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for k in args.exponents:
        print(json.dumps({"schedule": EpsilonSchedule.from_exponent(k).to_dict()}))
    res = suites.first_process_bound(tuple(args.exponents), args.paths, args.seed)
    print(json.dumps({k: v for k, v in res.items() if k != "runtime_s"}, indent=2, default=float))
    w = e_cd_witness(C=1.5, D=1, epsilon_exponent=4, K=2)
    line = w.evaluate(Path.from_points([(0, 0), (2, 2)]))
    print("straight line 0 -> 2:", json.dumps(line.to_dict()))
    sample = [w.evaluate(p) for p in mixed_corpus(w.schedule, 50, args.seed)]
    branches = {b: sum(r.branch == b for r in sample) for b in ("first", "second")}
    print("branches on 50 corpus paths:", branches)
    print("minimal exponent for K=10, D=1:", minimal_exponent(1, 10))
    return 0 if res["passed"] else 2


if __name__ == "__main__":
    raise SystemExit(main())
