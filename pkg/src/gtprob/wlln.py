"""The N-round one-sided game and the prudent Sceptic behind the weak law.

Protocol, for ``n = 1..N``: Sceptic announces a stake ``s_n >= 0``, Reality
announces ``x_n in [-c, c]``, and ``K_n = K_{n-1} + s_n x_n`` with ``K_0 = 1``.
Sceptic stakes ``2/(c^2 N)`` times the running sum when it is non-negative
and nothing otherwise, which keeps

    K_n >= (N - n)/N + (sum_{j<=n} x_j)^{+,2} / (c^2 N)

for every sequence of moves.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .paths import DomainError

# relative tolerance used when comparing K_n with the closed-form bound
BOUND_RTOL = 1e-9


class ProtocolViolation(ValueError):
    """Reality played a move outside ``[-c, c]``."""

    def __init__(self, round_no: int, move, c):
        self.round = round_no
        super().__init__(f"round {round_no}: move {move!r} outside [-{c}, {c}]")


@dataclass(frozen=True)
class GameConfig:
    N: int
    c: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError("N must be an integer >= 1")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise DomainError("c must be finite and positive")


@dataclass(frozen=True)
class GameTranscript:
    config: GameConfig
    stakes: tuple
    moves: tuple
    capitals: tuple

    @property
    def prefix_sums(self) -> tuple:
        out, s = [0], 0
        for x in self.moves:
            s = s + x
            out.append(s)
        return tuple(out)

    @property
    def final(self):
        return self.capitals[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "s", "x", "K"])
        w.writerow([0, "", "", repr(float(self.capitals[0]))])
        for n, (s, x, k) in enumerate(zip(self.stakes, self.moves, self.capitals[1:]), start=1):
            w.writerow([n, repr(float(s)), repr(float(x)), repr(float(k))])
        return buf.getvalue()


def sceptic_stake(config: GameConfig, prefix_sum):
    """Stake for the next round given the running sum of Reality's moves."""
    if prefix_sum >= 0:
        return (2 / (config.c * config.c * config.N)) * prefix_sum
    return 0 * prefix_sum


def capital_bound(config: GameConfig, n: int, prefix_sum):
    """Guaranteed lower bound on ``K_n`` after ``n`` rounds."""
    if not 0 <= n <= config.N:
        raise DomainError(f"round {n} outside 0..{config.N}")
    pos = prefix_sum if prefix_sum > 0 else 0
    return (config.N - n) / config.N + pos * pos / (config.c * config.c * config.N)


# ----------------------------------------------------------- move sources

class FixedMoves:
    def __init__(self, moves: Iterable):
        self.moves = list(moves)

    def __call__(self, n, stake, history):
        return self.moves[n - 1]


class RandomMoves:
    """Uniform moves on ``[-c, c]`` from a seeded generator."""

    def __init__(self, c: float, seed: int, extreme: bool = False):
        self.c = c
        self.rng = np.random.default_rng(seed)
        self.extreme = extreme

    def __call__(self, n, stake, history):
        if self.extreme:
            return self.c if self.rng.random() < 0.5 else -self.c
        return float(self.rng.uniform(-self.c, self.c))


class StakeAdaptiveAdversary:
    """Plays against the announced stake: ``-c`` when staked, ``+c`` otherwise."""

    def __init__(self, c: float):
        self.c = c

    def __call__(self, n, stake, history):
        return -self.c if stake > 0 else self.c


def play_game(config: GameConfig, reality) -> GameTranscript:
    """Play N rounds with the prudent Sceptic against ``reality``.

    ``reality`` is a sequence of moves or a callable ``(n, stake, history)``
    where ``history`` is the transcript so far as ``(stakes, moves, capitals)``.
    """
    if not callable(reality):
        reality = FixedMoves(reality)
    stakes, moves, capitals = [], [], [1]
    prefix = 0
    for n in range(1, config.N + 1):
        s = sceptic_stake(config, prefix)
        x = reality(n, s, (stakes, moves, capitals))
        if abs(x) > config.c:
            raise ProtocolViolation(n, x, config.c)
        stakes.append(s)
        moves.append(x)
        capitals.append(capitals[-1] + s * x)
        prefix = prefix + x
    return GameTranscript(config, tuple(stakes), tuple(moves), tuple(capitals))


def wlln_certificate(delta1, delta2, c) -> int:
    """Smallest N with ``N >= c^2 / (delta1 * delta2^2)``.

    Inputs are read as their decimal representations so that ``0.04`` means
    exactly 4/100.
    """
    for name, v in (("delta1", delta1), ("delta2", delta2), ("c", c)):
        if not v > 0:
            raise DomainError(f"{name} must be positive")
    d1, d2, cc = (Fraction(str(v)) for v in (delta1, delta2, c))
    return max(1, math.ceil(cc * cc / (d1 * d2 * d2)))


def certificate_json(delta1, delta2, c) -> str:
    return json.dumps({"delta1": delta1, "delta2": delta2, "c": c,
                       "N": wlln_certificate(delta1, delta2, c)}, sort_keys=True)


# -------------------------------------------------------------- batched

def play_games_batch(c: float, N: np.ndarray, reality: Callable) -> dict:
    """Vectorised play of many games sharing ``c`` but with individual horizons.

    ``reality(n, stakes, prefix, active)`` returns a move per game for round
    ``n``; games with ``n > N`` are frozen. Returns arrays of shape
    ``(games, max(N) + 1)`` for capitals, prefix sums and bounds (NaN past
    each game's horizon) plus the stakes.
    """
    N = np.asarray(N, dtype=np.int64)
    G, T = len(N), int(N.max())
    K = np.full((G, T + 1), np.nan)
    P = np.full((G, T + 1), np.nan)
    S = np.full((G, T), np.nan)
    K[:, 0] = 1.0
    P[:, 0] = 0.0
    k = np.ones(G)
    p = np.zeros(G)
    coef = 2.0 / (c * c * N)
    for n in range(1, T + 1):
        active = N >= n
        s = np.where(p >= 0, coef * p, 0.0)
        x = np.asarray(reality(n, s, p, active), dtype=float)
        x = np.where(active, x, 0.0)
        bad = np.abs(x) > c
        if bad.any():
            raise ProtocolViolation(n, float(x[bad][0]), c)
        k = np.where(active, k + s * x, k)
        p = np.where(active, p + x, p)
        K[active, n] = k[active]
        P[active, n] = p[active]
        S[active, n - 1] = s[active]
    n_idx = np.arange(T + 1)[None, :]
    Nf = N[:, None].astype(float)
    bound = (Nf - n_idx) / Nf + np.maximum(P, 0.0) ** 2 / (c * c * Nf)
    bound[np.isnan(P)] = np.nan
    return {"K": K, "P": P, "stakes": S, "bound": bound}
