"""Witness strategies for isolated level points and monotone stretches.

Each witness starts from a small capital ``eps``, takes a unit position at
an entry stopping time and closes it at the first visit to a stop-loss
level ``eps`` away or a target ``D`` away. Its capital never goes negative
and ends at ``D + eps`` on the targeted event, so a countable weighted
family of them witnesses that the union of those events is null.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .paths import DomainError, Path
from .trading import (
    CapitalTrace,
    ElementaryStrategy,
    FixedTime,
    HitLevels,
    PortfolioRule,
    Superposition,
    first_capital_hit,
)

DEFAULT_EPSILON = 1e-3
DEFAULT_ALARM = 100


@dataclass(frozen=True)
class EventParams:
    b: float
    a: float
    D: float
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.D == 0:
            raise DomainError("D must be non-zero")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.a < 0:
            raise DomainError("a must be >= 0")


def isolated_point_witness(params: EventParams, stake=1) -> ElementaryStrategy:
    """Enter at the first visit to ``b`` at or after ``a``; exit at ``b - eps`` or ``b + D``.

    For negative ``D`` the position is short and the exit levels are
    ``b + eps`` and ``b + D``.
    """
    b, D, eps = params.b, params.D, params.epsilon
    if D > 0:
        h, exits = stake, (b - eps, b + D)
    else:
        h, exits = -stake, (b + eps, b + D)
    legs = (
        (HitLevels((b,), after=params.a), PortfolioRule.constant(h)),
        (HitLevels(exits), PortfolioRule.constant(0, abs(h))),
    )
    return ElementaryStrategy(legs, stake * eps, name=f"isolated(b={b},a={params.a},D={D})")


def monotone_witness(a, D, epsilon, direction: str = "up", stake=1) -> ElementaryStrategy:
    """Enter at time ``a`` and exit at ``omega(a) - eps`` or ``omega(a) + D`` (mirrored for down)."""
    if not D > 0:
        raise DomainError("D must be positive")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if direction == "up":
        h, exits = stake, (-epsilon, D)
    elif direction == "down":
        h, exits = -stake, (epsilon, -D)
    else:
        raise DomainError(f"direction must be 'up' or 'down', not {direction!r}")
    legs = (
        (FixedTime(a), PortfolioRule.constant(h)),
        (HitLevels(exits, relative=True), PortfolioRule.constant(0, abs(h))),
    )
    return ElementaryStrategy(legs, stake * epsilon, name=f"monotone_{direction}(a={a},D={D})")


@dataclass(frozen=True)
class WitnessFamily:
    """Diagonally enumerated ``(a, D)`` witnesses with positive weights."""

    kind: str
    params: tuple
    strategies: tuple
    weights: tuple

    @property
    def superposition(self) -> Superposition:
        return Superposition(self.strategies, self.weights, name=f"{self.kind}_family")

    @property
    def initial_capital(self):
        return self.superposition.initial_capital

    def __len__(self):
        return len(self.strategies)


def diagonal_pairs(a_grid: Sequence, D_grid: Sequence) -> list[tuple]:
    """Enumerate ``a_grid x D_grid`` along anti-diagonals ``i + j = const``."""
    idx = [(i, j) for i in range(len(a_grid)) for j in range(len(D_grid))]
    idx.sort(key=lambda ij: (ij[0] + ij[1], ij[0]))
    return [(a_grid[i], D_grid[j]) for i, j in idx]


def geometric_weights(n: int, exact: bool = False) -> tuple:
    if exact:
        return tuple(Fraction(1, 2 ** k) for k in range(1, n + 1))
    return tuple(2.0 ** -k for k in range(1, n + 1))


def enumerate_events(a_grid: Sequence, D_grid: Sequence, kind: str = "isolated_point", b=0,
                     epsilon=DEFAULT_EPSILON, weights: Sequence | None = None,
                     epsilon_decay: bool = False, direction: str = "up") -> WitnessFamily:
    """Weighted family of witnesses over an ``(a, D)`` grid.

    Default weights are ``2^-n`` in enumeration order. With ``epsilon_decay``
    member ``n`` uses ``eps_n = 2^-n * epsilon``.
    """
    if not len(a_grid) or not len(D_grid):
        raise DomainError("a_grid and D_grid must be non-empty")
    pairs = diagonal_pairs(list(a_grid), list(D_grid))
    if weights is None:
        weights = geometric_weights(len(pairs))
    weights = tuple(weights)
    if len(weights) != len(pairs):
        raise DomainError(f"{len(weights)} weights for {len(pairs)} members")
    params, strategies = [], []
    for n, (a, D) in enumerate(pairs, start=1):
        eps = epsilon * 2.0 ** -n if epsilon_decay else epsilon
        if kind == "isolated_point":
            p = EventParams(b, a, D, eps)
            strategies.append(isolated_point_witness(p))
        elif kind == "monotone":
            p = EventParams(0, a, D, eps)
            strategies.append(monotone_witness(a, D, eps, direction))
        else:
            raise DomainError(f"unknown witness kind {kind!r}")
        params.append(p)
    return WitnessFamily(kind, tuple(params), tuple(strategies), weights)


@dataclass
class MemberResult:
    a: float
    D: float
    epsilon: float
    final: float
    min: float
    factor: float
    trigger_time: float | None = None


@dataclass
class DetectionReport:
    members: list
    composite_initial: float
    composite_final: float
    composite_trace: CapitalTrace = field(repr=False)
    alarm: bool
    trigger: tuple | None
    trigger_time: float | None
    max_factor: float

    def to_dict(self) -> dict:
        return {
            "members": [
                {"a": float(m.a), "D": float(m.D), "epsilon": float(m.epsilon),
                 "final": float(m.final), "min": float(m.min), "factor": float(m.factor)}
                for m in self.members
            ],
            "composite": {"initial": float(self.composite_initial),
                          "final": float(self.composite_final)},
            "alarm": self.alarm,
            "trigger": None if self.trigger is None else [float(v) for v in self.trigger],
            "trigger_time": None if self.trigger_time is None else float(self.trigger_time),
            "max_factor": float(self.max_factor),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def run_detector(family: WitnessFamily, path: Path, alarm_factor=DEFAULT_ALARM) -> DetectionReport:
    members = []
    traces = []
    trigger = trigger_time = None
    max_factor = 0
    for p, strat in zip(family.params, family.strategies):
        tr = strat.evaluate(path)
        traces.append(tr)
        factor = tr.final / tr.initial
        hit = first_capital_hit(tr, alarm_factor * tr.initial)
        members.append(MemberResult(p.a, p.D, p.epsilon, tr.final, tr.min_value, factor, hit))
        if factor > max_factor:
            max_factor = factor
        if hit is not None and (trigger_time is None or hit < trigger_time):
            trigger, trigger_time = (p.a, p.D), hit
    composite = family.superposition.weighted_trace(path)
    return DetectionReport(members, composite.initial, composite.final, composite,
                           trigger is not None, trigger, trigger_time, max_factor)
