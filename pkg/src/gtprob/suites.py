"""Verification suites shared by the command line, the tests and the scripts.

Each suite returns a plain dict with at least ``passed``, ``instances`` and
``worst_slack`` (the smallest observed margin of the checked inequality;
negative means violated).
"""
from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np

from .corpora import cycle_corpus, mixed_corpus
from .detectors import EventParams, enumerate_events, isolated_point_witness, monotone_witness
from .increase import (
    EpsilonSchedule,
    FirstProcess,
    SecondProcess,
    cycle_payoff,
    darboux_integral,
    decompose_cycles,
    layer_payoff,
    lower_sum,
    run_first_process,
    upper_sum,
)
from .paths import gen_random_walks
from .trading import POSITIVITY_TOL, eval_elementary
from .upper_prob import coherence_check
from .wlln import BOUND_RTOL, GameConfig, capital_bound, play_game, play_games_batch

SUITES = ("wlln", "wlln_tightness", "layers", "darboux", "coherence", "first_process")


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        out = fn(*args, **kw)
        out["runtime_s"] = time.perf_counter() - t0
        return out

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ------------------------------------------------------------------- game

@_timed
def wlln_tightness() -> dict:
    """``c = 1, N = 4``, all moves ``+1``: the bound holds with equality."""
    cfg = GameConfig(4, 1.0)
    tr = play_game(cfg, [1.0] * 4)
    slack = [k - capital_bound(cfg, n, p) for n, (k, p) in enumerate(zip(tr.capitals, tr.prefix_sums))]
    return {"passed": all(s == 0 for s in slack), "instances": 1, "worst_slack": min(slack),
            "stakes": list(tr.stakes), "capitals": list(tr.capitals)}


def _reality(kind: str, rng: np.random.Generator, c: float):
    if kind == "uniform":
        return lambda n, s, p, active: rng.uniform(-c, c, size=len(s))
    if kind == "extreme":
        return lambda n, s, p, active: np.where(rng.random(len(s)) < 0.5, c, -c)
    if kind == "adaptive":
        # the worst case for a single round: move against a positive stake
        return lambda n, s, p, active: np.where(s > 0, -c, c)
    if kind == "hover":
        # keep the running sum near zero from above, where the bound is tightest
        return lambda n, s, p, active: np.clip(np.where(p > 0, -p, c * rng.random(len(s))), -c, c)
    raise ValueError(kind)


@_timed
def wlln_sweep(n_instances: int = 100_000, seed: int = 0, batch: int = 5_000) -> dict:
    """Random games with ``c in {0.5, 1, 2}``, ``N in [1, 200]`` and several Realities."""
    rng = np.random.default_rng(seed)
    kinds = ("uniform", "extreme", "adaptive", "hover")
    done, worst, min_k = 0, math.inf, math.inf
    k = 0
    while done < n_instances:
        size = min(batch, n_instances - done)
        c = (0.5, 1.0, 2.0)[k % 3]
        kind = kinds[(k // 3) % len(kinds)]
        N = rng.integers(1, 201, size=size)
        out = play_games_batch(c, N, _reality(kind, rng, c))
        K, bound = out["K"], out["bound"]
        mask = ~np.isnan(K)
        rel = (K[mask] - bound[mask]) / np.maximum(1.0, np.abs(bound[mask]))
        worst = min(worst, float(rel.min()))
        min_k = min(min_k, float(K[mask].min()))
        done += size
        k += 1
    return {"passed": worst >= -BOUND_RTOL and min_k >= -BOUND_RTOL, "instances": done,
            "worst_slack": worst, "min_capital": min_k}


@_timed
def wlln_certificate_check(n_sequences: int = 1000, seed: int = 0) -> dict:
    """``N = 100, c = 1``: moves with ``sum >= 50`` always leave ``K_N >= 25``."""
    rng = np.random.default_rng(seed)
    N, c = 100, 1.0
    target = 50.0
    worst = math.inf
    for _ in range(n_sequences):
        x = rng.uniform(-1, 1, N)
        # push the sum up to at least 50 while staying in [-1, 1]
        deficit = target - x.sum()
        if deficit > 0:
            room = 1 - x
            x = x + room * min(1.0, deficit / room.sum())
        x = np.clip(x, -1, 1)
        if x.sum() < target:
            x[np.argmin(x)] += target - x.sum()
        rng.shuffle(x)
        tr = play_game(GameConfig(N, c), [float(v) for v in x])
        assert sum(tr.moves) >= target - 1e-9
        worst = min(worst, float(tr.final) - 25.0)
    return {"passed": worst >= -25.0 * BOUND_RTOL, "instances": n_sequences, "worst_slack": worst}


# ----------------------------------------------------------- layer algebra

def _random_exact_schedule(rng: np.random.Generator):
    """``(eps, delta, M)`` with ``eps = (p/q)^2`` so that ``sqrt(eps)`` is rational."""
    q = int(rng.integers(3, 60))
    p = int(rng.integers(1, q))
    eps = Fraction(p, q) ** 2
    M = int(rng.integers(1, 65))
    delta = (Fraction(p, q) - eps) / M
    return eps, delta, M


@_timed
def layer_algebra(n_instances: int = 1000, seed: int = 0) -> dict:
    """Layer ``m`` pays exactly ``delta`` on a rise of ``m delta`` and 0 on a fall of ``eps``."""
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(n_instances):
        eps, delta, M = _random_exact_schedule(rng)
        m = int(rng.integers(1, M + 1))
        if layer_payoff(eps, delta, m, m * delta) != delta or layer_payoff(eps, delta, m, -eps) != 0:
            failures += 1
    return {"passed": failures == 0, "instances": n_instances, "worst_slack": 0 if failures == 0 else -1,
            "failures": failures}


@_timed
def cycle_payoffs(schedule: EpsilonSchedule, n_paths: int = 200, seed: int = 0) -> dict:
    """Bundle payoff against ``delta * floor(X~ / delta)`` on exact cycle paths.

    Regular cycles must match exactly; cycles following an up-exit only need
    ``payoff <= X~``.
    """
    corpus = cycle_corpus(schedule, n_paths, seed, exact=isinstance(schedule.epsilon, Fraction))
    exact = isinstance(schedule.epsilon, Fraction)
    regular = irregular = mismatches = 0
    for path in corpus:
        d = decompose_cycles(path, schedule)
        for n in range(1, d.n_resolved + 1):
            pay = cycle_payoff(d, n)
            xt = d.X_trunc[n - 1]
            if d.regular(n):
                regular += 1
                expect = schedule.delta * math.floor(xt / schedule.delta) if exact else \
                    schedule.delta * math.floor(xt / schedule.delta + 1e-9)
                ok = pay == expect if exact else math.isclose(pay, expect, rel_tol=1e-12, abs_tol=1e-15)
            else:
                irregular += 1
                ok = pay <= xt
            mismatches += not ok
    return {"passed": mismatches == 0, "instances": regular + irregular, "regular": regular,
            "irregular": irregular, "worst_slack": 0 if mismatches == 0 else -1, "mismatches": mismatches}


@_timed
def darboux_sandwich(n_instances: int = 1000, seed: int = 0, doublings: int = 6) -> dict:
    """``L <= (eps/2) ln(1/eps) <= Upper`` and ``L`` increasing in ``M`` under doubling."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    monotone = True
    for _ in range(n_instances):
        eps = math.exp(-rng.uniform(0.5, 12))
        M0 = int(rng.integers(1, 33))
        I = darboux_integral(eps)
        prev = -math.inf
        for j in range(doublings):
            M = M0 * 2 ** j
            delta = (math.sqrt(eps) - eps) / M
            L, U = lower_sum(eps, delta, M), upper_sum(eps, delta, M)
            worst = min(worst, (I - L) / I, (U - I) / I)
            if L < prev * (1 - 1e-12):
                monotone = False
            prev = L
    return {"passed": worst >= -1e-12 and monotone, "instances": n_instances, "worst_slack": worst,
            "monotone": monotone}


# ---------------------------------------------------------------- coherence

@_timed
def coherence() -> dict:
    res = coherence_check()
    return {"passed": res.passed, "instances": res.checked, "worst_slack": 0 if res.passed else -1,
            "counterexample": None if res.counterexample is None else str(res.counterexample[0])}


# ------------------------------------------------------------ first process

@_timed
def first_process_bound(exponents=(2, 4), n_paths: int = 1000, seed: int = 0, rtol: float = 1e-9) -> dict:
    """First process on a mixed corpus of fully resolved paths.

    Checks ``final - initial >= Q - sqrt(eps) ln(1/eps)``, non-negativity,
    stakes at most ``ln(1/eps)`` and bundle values at most ``sqrt(eps)``.
    """
    out = {"passed": True, "instances": 0, "worst_slack": math.inf, "per_epsilon": {}}
    for k in exponents:
        sch = EpsilonSchedule.from_exponent(k)
        corpus = mixed_corpus(sch, n_paths, seed + k)
        worst = worst_sharp = math.inf
        min_cap, max_stake, max_bundle = math.inf, 0.0, 0.0
        unresolved = 0
        for path in corpus:
            res = run_first_process(path, sch)
            unresolved += not res.resolved
            lhs, rhs = res.bound()
            worst = min(worst, (lhs - rhs) / max(1.0, abs(rhs)))
            worst_sharp = min(worst_sharp, (lhs - res.sharp_bound()[1]) / max(1.0, abs(rhs)))
            min_cap = min(min_cap, float(res.trace.min_value))
            max_stake = max(max_stake, max(float(c.stake) for c in res.cycles))
            max_bundle = max(max_bundle, max(float(c.bundle_max) for c in res.cycles))
        ok = (unresolved == 0 and worst >= -rtol and min_cap >= -POSITIVITY_TOL
              and max_stake <= sch.log_inv and max_bundle <= float(sch.sqrt_eps))
        out["per_epsilon"][f"e^-{k}"] = {
            "N": sch.N, "M": sch.M, "worst_rel_slack": worst, "worst_rel_slack_sharp": worst_sharp,
            "min_capital": min_cap, "max_stake": max_stake, "stake_cap": sch.log_inv,
            "max_bundle": max_bundle, "bundle_cap": float(sch.sqrt_eps), "unresolved": unresolved,
            "passed": ok,
        }
        out["passed"] &= ok
        out["instances"] += len(corpus)
        out["worst_slack"] = min(out["worst_slack"], worst)
    return out


# -------------------------------------------------------------- neutrality

NEUTRALITY_STEP = 0.125


def neutrality_detectors() -> dict:
    """Detectors whose stop levels sit on the lattice of a walk with step 1/8.

    On that lattice every level is hit at a breakpoint, so each capital
    process is an exact martingale under the walk.
    """
    sch = EpsilonSchedule.from_epsilon(0.25, M=2)
    return {
        "isolated_point": isolated_point_witness(EventParams(0.25, 2, 0.5, 0.125)),
        "isolated_point_negative_D": isolated_point_witness(EventParams(-0.25, 2, -0.5, 0.125)),
        "monotone_up": monotone_witness(2, 0.5, 0.125, "up"),
        "monotone_down": monotone_witness(2, 0.5, 0.125, "down"),
        "isolated_point_family": enumerate_events([0, 4], [0.5, 1.0], b=0.25, epsilon=0.125).superposition,
        "increase_first": FirstProcess(sch),
        "increase_second": SecondProcess(sch),
    }


@_timed
def neutrality(n_paths: int = 100_000, n_steps: int = 64, seed: int = 0, z_max: float = 4.0) -> dict:
    """Mean final capital of each detector on random walks against its initial capital."""
    walks = gen_random_walks(seed, n_paths, n_steps, step_scale=NEUTRALITY_STEP)
    out = {"passed": True, "instances": n_paths, "worst_slack": math.inf, "detectors": {}}
    for name, det in neutrality_detectors().items():
        finals = np.fromiter((float(eval_elementary(det, p).final) for p in walks), float, n_paths)
        init = float(det.initial_capital)
        se = finals.std(ddof=1) / math.sqrt(n_paths)
        z = (finals.mean() - init) / se if se > 0 else 0.0
        ok = abs(z) <= z_max
        out["detectors"][name] = {"initial": init, "mean_final": float(finals.mean()), "se": float(se),
                                  "z": float(z), "passed": ok}
        out["passed"] &= ok
        out["worst_slack"] = min(out["worst_slack"], z_max - abs(z))
    return out


def run_suite(name: str, **kw) -> dict:
    table = {
        "wlln": wlln_sweep,
        "wlln_tightness": wlln_tightness,
        "layers": layer_algebra,
        "darboux": darboux_sandwich,
        "coherence": coherence,
        "first_process": first_process_bound,
    }
    if name not in table:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(table)}")
    return table[name](**kw)
