"""Sceptic's side of the continuous-time protocol.

An elementary strategy is a finite program of ``(stopping rule, portfolio)``
pairs.  Resolving it on a path gives the trade list ``tau_1 <= tau_2 <= ...``
with portfolios ``h_n`` and the elementary capital process

    K_t = c + sum_n h_n * (omega(tau_{n+1} ^ t) - omega(tau_n ^ t)).

Between trades capital is linear in price, and price is linear in time
between breakpoints, so a :class:`CapitalTrace` sampled on the union of path
breakpoints and trade times is exact.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from numbers import Real
from typing import Callable, Iterable, Sequence

from .paths import NEVER, DomainError, Path, first_hit, value_at

# capital below -POSITIVITY_TOL counts as negative; absorbs float rounding of
# level differences such as (M - eps) - M
POSITIVITY_TOL = 1e-12


class ContractViolation(RuntimeError):
    """A portfolio rule returned a value outside its declared bound."""


# ------------------------------------------------------------------ rules

class StoppingRule:
    def resolve(self, path: Path, prev_time, prev_price):
        """Return ``(time, price)``; time is ``NEVER`` when the rule never fires."""
        raise NotImplementedError


@dataclass(frozen=True)
class FixedTime(StoppingRule):
    t: Real

    def resolve(self, path, prev_time, prev_price):
        t = self.t if self.t > prev_time else prev_time
        return t, value_at(path, t)


@dataclass(frozen=True)
class HitLevels(StoppingRule):
    """First visit to a finite level set, searched from the previous stopping time.

    ``levels`` is either a sequence or a callable ``(path, prev_time,
    prev_price) -> levels`` evaluated on the path prefix up to ``prev_time``.
    With ``relative`` the levels are offsets from ``prev_price``. The search
    starts at ``max(prev_time, after)``.
    """

    levels: Sequence | Callable
    after: Real = 0
    strict_after: bool = False
    relative: bool = False

    def resolve(self, path, prev_time, prev_price):
        if callable(self.levels):
            levels = tuple(self.levels(path, prev_time, prev_price))
        else:
            levels = tuple(self.levels)
        if self.relative:
            levels = tuple(prev_price + y for y in levels)
        start = self.after if self.after > prev_time else prev_time
        t, y = first_hit(path, start, levels, self.strict_after)
        return t, y


@dataclass(frozen=True)
class Never(StoppingRule):
    def resolve(self, path, prev_time, prev_price):
        return NEVER, None


@dataclass(frozen=True)
class PortfolioRule:
    """Bounded portfolio chosen at a stopping time.

    ``fn(path, t, price)`` may only look at the path on ``[0, t]``.
    """

    fn: Callable
    bound: Real

    def __post_init__(self):
        if not self.bound > 0:
            raise DomainError("portfolio bound must be positive")

    @classmethod
    def constant(cls, h, bound=None) -> "PortfolioRule":
        b = bound if bound is not None else (abs(h) if h != 0 else 1)
        return cls(lambda path, t, price: h, b)

    def __call__(self, path, t, price):
        h = self.fn(path, t, price)
        if abs(h) > self.bound:
            raise ContractViolation(f"portfolio {h!r} exceeds declared bound {self.bound!r} at t={t!r}")
        return h

    def scaled(self, k) -> "PortfolioRule":
        fn = self.fn
        return PortfolioRule(lambda path, t, price: k * fn(path, t, price), abs(k) * self.bound)


# ------------------------------------------------------------- strategies

@dataclass(frozen=True)
class Trades:
    """Resolved trades: position ``positions[n]`` is held on ``[times[n], times[n+1])``."""

    times: tuple
    prices: tuple
    positions: tuple

    @property
    def open_position(self):
        return self.positions[-1] if self.positions else 0


class Strategy:
    """Anything that resolves to a trade list on a path."""

    initial_capital: Real = 0
    name: str = ""

    def trades(self, path: Path) -> Trades:
        raise NotImplementedError

    def evaluate(self, path: Path) -> "CapitalTrace":
        return eval_elementary(self, path)


@dataclass(frozen=True)
class ElementaryStrategy(Strategy):
    legs: tuple
    initial_capital: Real = 0
    name: str = ""

    def __post_init__(self):
        legs = tuple(self.legs)
        if not legs:
            raise DomainError("a strategy needs at least one (rule, portfolio) pair")
        object.__setattr__(self, "legs", legs)

    def trades(self, path: Path) -> Trades:
        times, prices, positions = [], [], []
        prev_t, prev_p = 0, path.values[0]
        for rule, portfolio in self.legs:
            t, p = rule.resolve(path, prev_t, prev_p)
            if t is NEVER:
                break
            times.append(t)
            prices.append(p)
            positions.append(portfolio(path, t, p))
            prev_t, prev_p = t, p
        return Trades(tuple(times), tuple(prices), tuple(positions))

    def scaled(self, k) -> "ElementaryStrategy":
        legs = tuple((rule, port.scaled(k)) for rule, port in self.legs)
        return ElementaryStrategy(legs, k * self.initial_capital, self.name)


def buy_and_hold(h=1, initial_capital=0, name="buy_and_hold") -> ElementaryStrategy:
    return ElementaryStrategy(((FixedTime(0), PortfolioRule.constant(h)),), initial_capital, name)


# ---------------------------------------------------------------- traces

@dataclass(frozen=True)
class CapitalTrace:
    path: Path = field(repr=False)
    times: tuple
    capital: tuple
    initial: Real
    incomplete: bool = False

    @property
    def final(self):
        return self.capital[-1]

    @property
    def min_value(self):
        return min(self.capital)

    @property
    def max_value(self):
        return max(self.capital)

    @property
    def ever_negative(self) -> bool:
        return self.min_value < -POSITIVITY_TOL

    def capital_at(self, t):
        times = self.times
        i = bisect_right(times, t) - 1
        if i < 0:
            raise DomainError(f"negative time {t!r}")
        if i >= len(times) - 1:
            return self.capital[-1]
        t0 = times[i]
        if t == t0:
            return self.capital[i]
        c0, c1 = self.capital[i], self.capital[i + 1]
        return c0 + (c1 - c0) * ((t - t0) / (times[i + 1] - t0))

    def scaled(self, w) -> "CapitalTrace":
        return CapitalTrace(self.path, self.times, tuple(w * c for c in self.capital),
                            w * self.initial, self.incomplete)

    def flags(self) -> dict:
        return {
            "initial": float(self.initial),
            "final": float(self.final),
            "min": float(self.min_value),
            "incomplete": bool(self.incomplete),
            "ever_negative": bool(self.ever_negative),
        }

    def to_csv(self) -> str:
        rows = ["time,capital"]
        rows += [f"{float(t):.17g},{float(c):.17g}" for t, c in zip(self.times, self.capital)]
        return "\n".join(rows) + "\n"

    def sidecar_json(self) -> str:
        return json.dumps(self.flags(), sort_keys=True)


def eval_elementary(strategy: Strategy, path: Path) -> CapitalTrace:
    """Capital process of ``strategy`` on ``path`` sampled at every kink."""
    tr = strategy.trades(path)
    tt, tp, th = tr.times, tr.prices, tr.positions
    bt, bv = path.times, path.values
    horizon = bt[-1]
    nb, nt = len(bt), len(tt)
    while nt and tt[nt - 1] > horizon:
        nt -= 1
    out_t: list = []
    out_c: list = []
    banked = strategy.initial_capital
    pos = 0
    entry = 0
    i = j = 0
    while i < nb or j < nt:
        if j < nt and (i >= nb or tt[j] <= bt[i]):
            t = tt[j]
            price = tp[j]
            out_t.append(t)
            out_c.append(banked + pos * (price - entry) if pos else banked)
            while j < nt and tt[j] == t:
                if pos:
                    banked = banked + pos * (tp[j] - entry)
                pos = th[j]
                entry = tp[j]
                j += 1
            if i < nb and bt[i] == t:
                i += 1
        else:
            t = bt[i]
            out_t.append(t)
            out_c.append(banked + pos * (bv[i] - entry) if pos else banked)
            i += 1
    incomplete = bool(tr.open_position)
    return CapitalTrace(path, tuple(out_t), tuple(out_c), strategy.initial_capital, incomplete)


def sum_processes(traces: Sequence[CapitalTrace]) -> CapitalTrace:
    """Pointwise sum of capital traces over one path."""
    traces = list(traces)
    if not traces:
        raise DomainError("nothing to sum")
    path = traces[0].path
    for tr in traces[1:]:
        if tr.path is not path and tr.path != path:
            raise DomainError("traces come from different paths")
    if len(traces) == 1:
        return traces[0]
    grid = sorted(set().union(*(tr.times for tr in traces)))
    total = []
    for t in grid:
        s = 0
        for tr in traces:
            s = s + tr.capital_at(t)
        total.append(s)
    initial = 0
    for tr in traces:
        initial = initial + tr.initial
    return CapitalTrace(path, tuple(grid), tuple(total), initial,
                        any(tr.incomplete for tr in traces))


@dataclass(frozen=True)
class PositivityVerdict:
    positive: bool
    time: Real | None = None
    value: Real | None = None

    def __bool__(self):
        return self.positive


def check_positive(trace: CapitalTrace, tol: float = POSITIVITY_TOL) -> PositivityVerdict:
    """First point where capital drops below ``-tol`` (the trace minimum sits at a kink)."""
    for t, c in zip(trace.times, trace.capital):
        if c < -tol:
            return PositivityVerdict(False, t, c)
    return PositivityVerdict(True)


# ------------------------------------------------------------ transforms

@dataclass(frozen=True)
class StoppedStrategy(Strategy):
    """``multiplier * base``, liquidated the first time its capital reaches ``threshold``."""

    base: Strategy
    multiplier: Real
    threshold: Real
    name: str = ""

    @property
    def initial_capital(self):
        return self.multiplier * self.base.initial_capital

    def trades(self, path: Path) -> Trades:
        base = self.base.trades(path)
        k = self.multiplier
        scaled = Trades(base.times, base.prices, tuple(k * h for h in base.positions))
        trace = eval_elementary(_FixedTrades(scaled, self.initial_capital), path)
        hit = first_capital_hit(trace, self.threshold)
        if hit is None:
            return scaled
        t_stop = hit
        keep = bisect_right(scaled.times, t_stop)
        return Trades(scaled.times[:keep] + (t_stop,),
                      scaled.prices[:keep] + (value_at(path, t_stop),),
                      scaled.positions[:keep] + (0,))


@dataclass(frozen=True)
class _FixedTrades(Strategy):
    fixed: Trades
    initial_capital: Real = 0

    def trades(self, path):
        return self.fixed


def first_capital_hit(trace: CapitalTrace, threshold):
    times, cap = trace.times, trace.capital
    if cap[0] >= threshold:
        return times[0]
    for k in range(1, len(times)):
        if cap[k] >= threshold:
            c0, c1 = cap[k - 1], cap[k]
            t0, t1 = times[k - 1], times[k]
            if c1 == threshold:
                return t1
            t = t0 + (threshold - c0) / (c1 - c0) * (t1 - t0)
            return t1 if t > t1 else t
    return None


def stop_at_threshold(strategy: Strategy, multiplier, threshold) -> StoppedStrategy:
    if not multiplier > 1:
        raise DomainError("multiplier must exceed 1")
    return StoppedStrategy(strategy, multiplier, threshold, name=f"stopped({strategy.name})")


@dataclass(frozen=True)
class Superposition(Strategy):
    """Finite positive combination ``sum_n w_n * G_n`` of strategies."""

    members: tuple
    weights: tuple
    name: str = "superposition"

    def __post_init__(self):
        members, weights = tuple(self.members), tuple(self.weights)
        if not members or len(members) != len(weights):
            raise DomainError("need one positive weight per member")
        for w in weights:
            if not w > 0:
                raise DomainError(f"weight {w!r} is not positive")
        total = 0
        for w in weights:
            total = total + w
        if total > 1 + 1e-12:
            raise DomainError(f"weights sum to {total!r} > 1")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)

    @property
    def initial_capital(self):
        total = 0
        for w, m in zip(self.weights, self.members):
            total = total + w * m.initial_capital
        return total

    def trades(self, path: Path) -> Trades:
        events = []
        for idx, m in enumerate(self.members):
            tr = m.trades(path)
            for t, p, h in zip(tr.times, tr.prices, tr.positions):
                events.append((t, idx, p, h))
        events.sort(key=lambda e: (e[0], e[1]))
        current = [0] * len(self.members)
        times, prices, positions = [], [], []
        k = 0
        while k < len(events):
            t = events[k][0]
            price = events[k][2]
            while k < len(events) and events[k][0] == t:
                current[events[k][1]] = events[k][3]
                k += 1
            pos = 0
            for w, h in zip(self.weights, current):
                if h:
                    pos = pos + w * h
            times.append(t)
            prices.append(price)
            positions.append(pos)
        return Trades(tuple(times), tuple(prices), tuple(positions))

    def member_traces(self, path: Path) -> list[CapitalTrace]:
        return [eval_elementary(m, path) for m in self.members]

    def weighted_trace(self, path: Path) -> CapitalTrace:
        """Composite as the pointwise weighted sum of member traces."""
        return sum_processes([tr.scaled(w) for tr, w in zip(self.member_traces(path), self.weights)])


def superpose_weighted(strategies: Iterable[Strategy], weights: Iterable) -> Superposition:
    return Superposition(tuple(strategies), tuple(weights))
