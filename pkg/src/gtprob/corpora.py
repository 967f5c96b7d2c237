"""Path corpora for the cycle construction and the falsification runs."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .increase import EpsilonSchedule, decompose_cycles
from .paths import Path, gen_random_walks


def cycle_path(schedule: EpsilonSchedule, rng: np.random.Generator, n_cycles: int | None = None,
               wiggle: float = 0.5, exact: bool = False, up_prob: float = 0.05) -> Path:
    """Path built cycle by cycle: rise to a new maximum, fall through ``M - eps``, revisit.

    Rises mix uniform draws on ``[0, 1.5 (sqrt(eps) - eps)]``, exact multiples
    of ``delta`` and zero. With probability ``wiggle`` the climb contains a dip
    that stays above the stop-loss level. With probability ``up_prob`` a
    cycle exits at ``M + D`` and overshoots, which makes the next cycle
    irregular. ``exact`` converts every draw to a
    Fraction, so the path is exact whenever the schedule is.
    """
    n_cycles = n_cycles if n_cycles is not None else schedule.N + 1
    eps, delta, trunc = schedule.epsilon, schedule.delta, schedule.truncation

    def num(x):
        return Fraction(x) if exact else x

    vals = [0 * eps]
    M = 0 * eps
    for _ in range(n_cycles):
        kind = rng.random()
        if kind < up_prob:
            # exit at M + D, overshoot, come back down through M + D and M + D - eps,
            # then climb to the new running maximum
            top = M + schedule.D + num(float(rng.uniform(0, 1))) * trunc
            vals += [top, M + schedule.D - eps - num(float(rng.uniform(0, 0.5))) * eps, top]
            M = top
            continue
        if kind < up_prob + 0.15:
            r = 0 * eps
        elif kind < up_prob + 0.4:
            r = int(rng.integers(1, schedule.M + 2)) * delta
        else:
            r = num(float(rng.uniform(0, 1.5))) * trunc
        if r > 0 and rng.random() < wiggle:
            up = num(float(rng.uniform(0.2, 0.8))) * r
            dip = num(float(rng.uniform(0.1, 0.9))) * eps
            vals += [M + up, M + up - dip if M + up - dip > M - eps else M]
        if r > 0:
            vals.append(M + r)
        overshoot = num(float(rng.uniform(0, 0.5))) * eps
        vals.append(M - eps - overshoot)
        M = M + r
        vals.append(M)
    return Path(tuple(range(len(vals))), tuple(vals))


def cycle_corpus(schedule: EpsilonSchedule, n_paths: int, seed: int, exact: bool = False) -> list[Path]:
    rng = np.random.default_rng(seed)
    return [cycle_path(schedule, rng, exact=exact) for _ in range(n_paths)]


def resolved_walks(schedule: EpsilonSchedule, n_paths: int, seed: int, n_steps: int = 1500,
                   step_scale: float | None = None, max_batches: int = 50) -> list[Path]:
    """Random walks on which all ``N`` cycles finish within the horizon."""
    h = step_scale if step_scale is not None else float(schedule.epsilon) / 2
    out = []
    for b in range(max_batches):
        for p in gen_random_walks(seed + b, max(4 * n_paths, 16), n_steps, step_scale=h):
            if decompose_cycles(p, schedule).resolved:
                out.append(p)
                if len(out) == n_paths:
                    return out
    return out


def cycle_walk(schedule: EpsilonSchedule, rng: np.random.Generator, sigma: float | None = None,
               revisit_drift: float = 1.0, max_steps: int = 200_000) -> Path:
    """Gaussian walk that is driftless inside each cycle and drifts up while
    climbing back to its running maximum, so that cycles finish quickly.

    The generator tracks the cycles only approximately; filter with
    :func:`decompose_cycles` when every cycle must be resolved.
    """
    eps, D = float(schedule.epsilon), float(schedule.D)
    sigma = sigma if sigma is not None else eps
    vals = [0.0]
    x = run_max = M = 0.0
    for _ in range(schedule.N):
        while M - eps < x < M + D and len(vals) < max_steps:
            x += rng.normal(0.0, sigma)
            vals.append(x)
            run_max = max(run_max, x)
        M = run_max
        while x < M and len(vals) < max_steps:
            x += rng.normal(revisit_drift * sigma, sigma)
            vals.append(x)
        run_max = max(run_max, x)
    return Path(tuple(float(i) for i in range(len(vals))), tuple(vals))


def cycle_walks(schedule: EpsilonSchedule, n_paths: int, seed: int, **kw) -> list[Path]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_paths:
        p = cycle_walk(schedule, rng, **kw)
        if decompose_cycles(p, schedule).resolved:
            out.append(p)
    return out


def mixed_corpus(schedule: EpsilonSchedule, n_paths: int, seed: int) -> list[Path]:
    """Half structured cycle paths, half cycle-resolving Gaussian walks."""
    n_walks = n_paths // 2
    return cycle_corpus(schedule, n_paths - n_walks, seed) + cycle_walks(schedule, n_walks, seed + 1)
