"""Witness that points of semi-strict increase are null.

The path is cut into cycles: starting from a revisit ``U_n`` of the running
maximum ``M_n``, cycle ``n`` ends at ``T_n``, the first visit to
``M_n - eps`` or ``M_n + D``.  Two positive elementary capital processes
cover the two ways the event ``E_{C,D}`` can unfold:

* the *second process* is long one unit during every cycle; it loses at most
  ``eps`` per cycle and gains ``D`` on a cycle that ends at ``M_n + D``;
* the *first process* bets, through the prudent one-sided game, that the
  per-cycle gains of the running maximum are small: it shorts a bundle of
  ``M`` layer strategies whose total payoff is ``delta * floor(X~_n / delta)``.

Schedules use ``eps = e^-k`` (so ``ln(1/eps) = k`` exactly) or an explicit
epsilon; with a rational square epsilon and :class:`~fractions.Fraction`
paths every identity is checked in exact arithmetic.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real

from .paths import NEVER, DomainError, Path, first_hit, running_max
from .trading import (
    CapitalTrace,
    ElementaryStrategy,
    FixedTime,
    HitLevels,
    PortfolioRule,
    Strategy,
    Trades,
    eval_elementary,
)
from .wlln import GameConfig, capital_bound, sceptic_stake

MAX_LAYERS = 2 ** 30


class ScheduleError(ValueError):
    """The epsilon schedule cannot satisfy a requirement of the construction."""


# ------------------------------------------------------------ Darboux sums

def _sqrt(x):
    if isinstance(x, Fraction):
        n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if n * n == x.numerator and d * d == x.denominator:
            return Fraction(n, d)
        return math.sqrt(x)
    return math.sqrt(x)


def lower_sum(epsilon, delta, M: int):
    """``sum_{m=1..M} eps*delta / (m*delta + eps)``."""
    total = 0
    for m in range(1, M + 1):
        total = total + epsilon * delta / (m * delta + epsilon)
    return total


def upper_sum(epsilon, delta, M: int):
    """``sum_{m=0..M-1} eps*delta / (m*delta + eps)``."""
    total = 0
    for m in range(0, M):
        total = total + epsilon * delta / (m * delta + epsilon)
    return total


def layer_count(epsilon, delta) -> int:
    """``M = (sqrt(eps) - eps) / delta``; raises unless it is an integer."""
    ratio = (_sqrt(epsilon) - epsilon) / delta
    M = round(ratio)
    if M < 1 or abs(ratio - M) > 1e-9 * max(1, M):
        raise DomainError(f"(sqrt(eps) - eps)/delta = {float(ratio)!r} is not a positive integer")
    return int(M)


def darboux_sums(epsilon, delta) -> tuple:
    """Lower and upper Darboux sums of ``eps/(x + eps)`` on ``[0, sqrt(eps) - eps]``."""
    M = layer_count(epsilon, delta)
    return lower_sum(epsilon, delta, M), upper_sum(epsilon, delta, M)


def darboux_integral(epsilon, log_inv=None) -> float:
    """``integral_0^{sqrt(eps)-eps} eps dx/(x+eps) = (eps/2) ln(1/eps)``."""
    if log_inv is None:
        log_inv = -math.log(epsilon)
    return float(epsilon) / 2 * log_inv


def choose_layers(epsilon, log_inv=None) -> int:
    """Smallest power-of-two ``M`` whose lower sum reaches ``(eps/3) ln(1/eps)``."""
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    if log_inv is None:
        log_inv = -math.log(epsilon)
    target = float(epsilon) / 3 * log_inv
    trunc = _sqrt(epsilon) - epsilon
    M = 1
    while M <= MAX_LAYERS:
        if float(lower_sum(epsilon, trunc / M, M)) >= target:
            return M
        M *= 2
    raise ScheduleError(f"lower Darboux sum never reaches (eps/3)ln(1/eps) for eps={float(epsilon)!r}")


def choose_delta(epsilon, log_inv=None):
    """Largest ``delta = (sqrt(eps) - eps)/M`` (``M`` doubling) with ``L >= (eps/3) ln(1/eps)``."""
    return (_sqrt(epsilon) - epsilon) / choose_layers(epsilon, log_inv)


# ------------------------------------------------------------------ schedule

@dataclass(frozen=True)
class EpsilonSchedule:
    epsilon: Real
    M: int
    C: Real = 1
    D: Real = 1
    k: int | None = None
    log_inv: float = field(default=None)

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ScheduleError("epsilon must lie in (0, 1)")
        if not (self.C > 0 and self.D > 0):
            raise ScheduleError("C and D must be positive")
        if int(self.M) != self.M or self.M < 1:
            raise ScheduleError("M must be a positive integer")
        if self.log_inv is None:
            object.__setattr__(self, "log_inv", float(self.k) if self.k is not None
                               else -math.log(self.epsilon))
        if self.truncation > self.D:
            raise ScheduleError("need sqrt(eps) - eps <= D; take a smaller epsilon")
        if self.N < 1:
            raise ScheduleError("epsilon too large: N = 0")
        if float(self.L) < float(self.epsilon) / 3 * self.log_inv * (1 - 1e-12):
            raise ScheduleError(f"M={self.M} layers too coarse: L < (eps/3) ln(1/eps)")

    @classmethod
    def from_exponent(cls, k: int, C=1, D=1, M: int | None = None) -> "EpsilonSchedule":
        eps = math.exp(-k)
        if M is None:
            M = choose_layers(eps, float(k))
        return cls(eps, M, C, D, k=k)

    @classmethod
    def from_epsilon(cls, epsilon, C=1, D=1, M: int | None = None) -> "EpsilonSchedule":
        if M is None:
            M = choose_layers(epsilon)
        return cls(epsilon, M, C, D)

    @property
    def sqrt_eps(self):
        return _sqrt(self.epsilon)

    @property
    def truncation(self):
        return self.sqrt_eps - self.epsilon

    @property
    def delta(self):
        return self.truncation / self.M

    @property
    def N(self) -> int:
        return math.floor(1 / (float(self.epsilon) * math.sqrt(self.log_inv)))

    @property
    def L(self):
        return lower_sum(self.epsilon, self.delta, self.M)

    @property
    def upper(self):
        return upper_sum(self.epsilon, self.delta, self.M)

    @property
    def margin(self) -> float:
        """``sqrt(eps) ln(1/eps)``, added to the first process's initial capital."""
        return float(self.sqrt_eps) * self.log_inv

    @property
    def eps_N(self):
        return self.epsilon * self.N

    def layer_portfolio(self, m: int):
        return self.delta / (m * self.delta + self.epsilon)

    def layer_capital(self, m: int):
        return self.epsilon * self.delta / (m * self.delta + self.epsilon)

    def game(self) -> GameConfig:
        return GameConfig(self.N, float(self.sqrt_eps))

    def to_dict(self) -> dict:
        return {
            "epsilon": float(self.epsilon), "epsilon_exponent": self.k,
            "delta": float(self.delta), "M": self.M, "N": self.N,
            "L": float(self.L), "margin": self.margin, "C": float(self.C), "D": float(self.D),
        }


# ------------------------------------------------------- cycle decomposition

@dataclass(frozen=True)
class CycleDecomposition:
    """Stopping times of the cycle construction on one path.

    ``U[n]``, ``T[n]`` for cycles ``n = 0, 1, ...``; ``M[n]`` the running
    maximum at the start of cycle ``n``; ``peaks[n]`` the path maximum over
    ``[U_n, T_n]``; ``exit_up[n]`` whether cycle ``n`` ended at ``M_n + D``.
    Sequences stop at the first time resolving to NEVER.
    """

    path: Path = field(repr=False)
    schedule: EpsilonSchedule = field(repr=False)
    M: tuple
    U: tuple
    T: tuple
    exit_prices: tuple
    peaks: tuple

    @property
    def n_resolved(self) -> int:
        """Number of cycles whose exit time is finite."""
        return sum(1 for t in self.T if t is not NEVER)

    @property
    def resolved(self) -> bool:
        """All ``N`` cycles finished, i.e. ``T_{N-1} < inf``."""
        return self.n_resolved == self.schedule.N

    @property
    def exit_up(self) -> tuple:
        D = self.schedule.D
        return tuple(p == self.M[n] + D for n, p in enumerate(self.exit_prices))

    @property
    def X(self) -> tuple:
        """Increments ``X_n = M_n - M_{n-1}``, ``n = 1..``."""
        return tuple(self.M[n] - self.M[n - 1] for n in range(1, len(self.M)))

    @property
    def X_trunc(self) -> tuple:
        cap = self.schedule.truncation
        return tuple(x if x < cap else cap for x in self.X)

    @property
    def moves(self) -> tuple:
        """Game moves ``x_n = L - X~_n``."""
        L = self.schedule.L
        return tuple(L - x for x in self.X_trunc)

    def regular(self, n: int) -> bool:
        """Cycle ``n`` (1-based) starts at a revisit after a stop-loss exit."""
        return n == 1 or not self.exit_up[n - 2]

    @property
    def first_up_exit(self) -> int | None:
        for n, up in enumerate(self.exit_up):
            if up:
                return n
        return None


def decompose_cycles(path: Path, schedule: EpsilonSchedule, rebase: bool = True) -> CycleDecomposition:
    if path.values[0] != 0:
        if not rebase:
            raise DomainError("the construction needs a path starting from 0")
        path = path.shifted(-path.values[0])
    eps, D, N = schedule.epsilon, schedule.D, schedule.N
    M, U, T, exits, peaks = [0 * eps], [0], [], [], []
    # running maximum over [0, T_{n-1}], updated incrementally
    run_max, prev_t = M[0], 0
    for n in range(N):
        u = U[n]
        if u is NEVER:
            break
        t, y = first_hit(path, u, (M[n] - eps, M[n] + D), strict_after=True)
        T.append(t)
        if t is NEVER:
            break
        exits.append(y)
        peaks.append(_max_between(path, u, t, M[n], y))
        run_max = _max_between(path, prev_t, t, run_max, y)
        prev_t = t
        M.append(run_max)
        if n + 1 < N:
            U.append(first_hit(path, t, (M[n + 1],), strict_after=True)[0])
    return CycleDecomposition(path, schedule, tuple(M), tuple(U), tuple(T), tuple(exits), tuple(peaks))


def _max_between(path: Path, u, t, start_value, end_value):
    """Maximum over ``[u, t]`` given the path values at both ends."""
    best = start_value if start_value > end_value else end_value
    times, values = path.times, path.values
    i = bisect_right(times, u)
    while i < len(times) and times[i] < t:
        if values[i] > best:
            best = values[i]
        i += 1
    return best


# ------------------------------------------------------------- layers

def layer_payoff(epsilon, delta, m: int, move):
    """Capital of layer ``m`` after the price moves by ``move`` from the cycle start."""
    h = delta / (m * delta + epsilon)
    return epsilon * delta / (m * delta + epsilon) + h * move


def _revisit_levels(path, t, price):
    return (running_max(path, t, end_value=price),)


def _cycle_chain(schedule: EpsilonSchedule, n_cycles: int, entry_portfolio: PortfolioRule | None):
    """Rules reproducing ``U_0, T_0, ..., U_{n_cycles}`` with zero portfolios.

    The final rule (``U_{n_cycles}``) carries ``entry_portfolio``.
    """
    zero = PortfolioRule.constant(0)
    exits = (-schedule.epsilon, schedule.D)
    legs = []
    for j in range(n_cycles + 1):
        entry = FixedTime(0) if j == 0 else HitLevels(_revisit_levels, strict_after=True)
        port = entry_portfolio if (j == n_cycles and entry_portfolio is not None) else zero
        legs.append((entry, port))
        if j < n_cycles:
            legs.append((HitLevels(exits, strict_after=True, relative=True), zero))
    return legs


def layer_strategy(n: int, m: int, schedule: EpsilonSchedule) -> ElementaryStrategy:
    """Layer ``m`` of cycle ``n`` (1-based): long ``delta/(m delta + eps)`` from ``U_{n-1}``
    until ``M_{n-1} + m delta`` or ``M_{n-1} - eps`` is hit."""
    if not 1 <= m <= schedule.M:
        raise DomainError(f"layer index {m} outside 1..{schedule.M}")
    if not 1 <= n <= schedule.N:
        raise DomainError(f"cycle index {n} outside 1..{schedule.N}")
    h = schedule.layer_portfolio(m)
    legs = _cycle_chain(schedule, n - 1, PortfolioRule.constant(h))
    legs.append((HitLevels((m * schedule.delta, -schedule.epsilon), strict_after=True, relative=True),
                 PortfolioRule.constant(0, h)))
    return ElementaryStrategy(tuple(legs), schedule.layer_capital(m), name=f"layer(n={n},m={m})")


def cycle_payoff(decomp: CycleDecomposition, n: int, schedule: EpsilonSchedule | None = None):
    """Realised bundle value ``S_n(T_{n-1})``: the sum of the M layer payoffs of cycle ``n``."""
    sch = schedule or decomp.schedule
    if not 1 <= n <= len(decomp.T) or decomp.T[n - 1] is NEVER:
        raise DomainError(f"cycle {n} is not resolved")
    base = decomp.M[n - 1]
    peak = decomp.peaks[n - 1]
    total = 0
    for m in range(1, sch.M + 1):
        if peak >= base + m * sch.delta:
            total = total + layer_payoff(sch.epsilon, sch.delta, m, m * sch.delta)
        else:
            total = total + layer_payoff(sch.epsilon, sch.delta, m, -sch.epsilon)
    return total


# ------------------------------------------------------------- processes

class SecondProcess(Strategy):
    """Long one unit on ``[U_n, T_n)`` for ``n < N``; starts from ``eps N``."""

    def __init__(self, schedule: EpsilonSchedule):
        self.schedule = schedule
        self.initial_capital = schedule.eps_N
        self.name = "second_process"

    def trades(self, path: Path) -> Trades:
        off = path.values[0]
        d = decompose_cycles(_rebased(path), self.schedule, rebase=False)
        times, prices, positions = [], [], []
        for n, u in enumerate(d.U):
            if u is NEVER:
                break
            times.append(u)
            prices.append(d.M[n])
            positions.append(1)
            if n < len(d.exit_prices):
                times.append(d.T[n])
                prices.append(d.exit_prices[n])
                positions.append(0)
        return Trades(tuple(times), tuple(p + off for p in prices), tuple(positions))


def second_process_rules(schedule: EpsilonSchedule) -> ElementaryStrategy:
    """The same strategy written as a generic stopping-rule program."""
    one, zero = PortfolioRule.constant(1), PortfolioRule.constant(0, 1)
    exits = (-schedule.epsilon, schedule.D)
    legs = []
    for j in range(schedule.N):
        entry = FixedTime(0) if j == 0 else HitLevels(_revisit_levels, strict_after=True)
        legs.append((entry, one))
        legs.append((HitLevels(exits, strict_after=True, relative=True), zero))
    return ElementaryStrategy(tuple(legs), schedule.eps_N, name="second_process_rules")


def second_process(path: Path, schedule: EpsilonSchedule) -> CapitalTrace:
    return eval_elementary(SecondProcess(schedule), _rebased(path))


@dataclass
class CycleRecord:
    n: int
    stake: Real
    move: Real | None
    payoff: Real | None
    bundle_max: Real
    regular: bool


@dataclass
class FirstProcessResult:
    trace: CapitalTrace = field(repr=False)
    decomposition: CycleDecomposition = field(repr=False)
    cycles: list
    game_capitals: tuple

    @property
    def stakes(self) -> tuple:
        return tuple(c.stake for c in self.cycles)

    @property
    def resolved(self) -> bool:
        return self.decomposition.resolved

    def bound(self) -> tuple:
        """``(lhs, rhs)`` of ``final - initial >= (sum x_n)^{+,2}/(eps N) - sqrt(eps) ln(1/eps)``."""
        sch = self.decomposition.schedule
        total = 0
        for c in self.cycles:
            if c.move is not None:
                total = total + c.move
        pos = float(total) if total > 0 else 0.0
        rhs = pos * pos / (float(sch.epsilon) * sch.N) - sch.margin
        return float(self.trace.final - self.trace.initial), rhs

    def sharp_bound(self) -> tuple:
        """Same left side against ``Q - sum x_n^2/(eps N)`` (exact loss of the game recursion)."""
        sch = self.decomposition.schedule
        lhs, _ = self.bound()
        moves = [float(c.move) for c in self.cycles if c.move is not None]
        total = sum(moves)
        pos = max(total, 0.0)
        eN = float(sch.epsilon) * sch.N
        return lhs, pos * pos / eN - sum(x * x for x in moves) / eN


class FirstProcess(Strategy):
    """Prudent one-sided game played on the shorted layer bundles, one round per cycle."""

    def __init__(self, schedule: EpsilonSchedule):
        self.schedule = schedule
        self.initial_capital = 1 + schedule.margin
        self.name = "first_process"

    def run(self, path: Path) -> FirstProcessResult:
        """Evaluate on ``path``; the decomposition refers to the path shifted to start at 0."""
        trades, d, cycles, K = self._build(path)
        trace = eval_elementary(_Fixed(trades, self.initial_capital), path)
        return FirstProcessResult(trace, d, cycles, K)

    def trades(self, path: Path) -> Trades:
        return self._build(path)[0]

    def _build(self, path: Path):
        sch = self.schedule
        off = path.values[0]
        path = _rebased(path)
        d = decompose_cycles(path, sch, rebase=False)
        game = sch.game()
        eps, delta = sch.epsilon, sch.delta
        h = [sch.layer_portfolio(m) for m in range(1, sch.M + 1)]
        c_m = [sch.layer_capital(m) for m in range(1, sch.M + 1)]
        times, prices, positions = [], [], []
        cycles = []
        K = [1]
        prefix = 0
        for i, u in enumerate(d.U):
            if u is NEVER:
                break
            n = i + 1
            if abs(prefix) > i * game.c * (1 + 1e-12):
                raise ScheduleError(f"prefix sum {float(prefix)!r} exceeds {i} * sqrt(eps)")
            s = sceptic_stake(game, prefix)
            base = d.M[i]
            # layer exits: first visit to base + m delta or base - eps after U
            exits = []
            for m in range(1, sch.M + 1):
                t_m, y_m = first_hit(path, u, (base + m * delta, base - eps), strict_after=True)
                exits.append((t_m, m, y_m))
            if s:
                open_layers = set(range(1, sch.M + 1))
                times.append(u)
                prices.append(base)
                positions.append(-s * _sum(h))
                exits_sorted = sorted((e for e in exits if e[0] is not NEVER), key=lambda e: (e[0], e[1]))
                k = 0
                while k < len(exits_sorted):
                    t = exits_sorted[k][0]
                    price = exits_sorted[k][2]
                    while k < len(exits_sorted) and exits_sorted[k][0] == t:
                        open_layers.discard(exits_sorted[k][1])
                        k += 1
                    times.append(t)
                    prices.append(price)
                    positions.append(-s * _sum(h[m - 1] for m in sorted(open_layers)) if open_layers else 0)
            peak = d.peaks[i] if i < len(d.peaks) else None
            bundle_max = _bundle_max(sch, base, peak if peak is not None else _open_peak(path, u, base), h, c_m)
            if i < len(d.exit_prices):
                payoff = 0
                for t_m, m, y_m in exits:
                    payoff = payoff + c_m[m - 1] + h[m - 1] * (y_m - base)
                x = d.moves[i]
                if abs(x) > game.c:
                    raise ScheduleError(f"cycle {n}: move {float(x)!r} exceeds sqrt(eps); epsilon too large")
                K.append(K[-1] + s * x)
                prefix = prefix + x
                cycles.append(CycleRecord(n, s, x, payoff, bundle_max, d.regular(n)))
            else:
                cycles.append(CycleRecord(n, s, None, None, bundle_max, d.regular(n)))
        trades = Trades(tuple(times), tuple(p + off for p in prices), tuple(positions))
        return trades, d, cycles, tuple(K)


def _sum(xs):
    total = 0
    for x in xs:
        total = total + x
    return total


def _open_peak(path: Path, u, base):
    return max([base] + [v for s, v in zip(path.times, path.values) if s > u])


def _bundle_max(sch: EpsilonSchedule, base, peak, h, c_m):
    total = 0
    for m in range(1, sch.M + 1):
        level = base + m * sch.delta
        top = level if peak >= level else peak
        total = total + c_m[m - 1] + h[m - 1] * (top - base)
    return total


class _Fixed(Strategy):
    def __init__(self, trades: Trades, initial):
        self._trades = trades
        self.initial_capital = initial

    def trades(self, path):
        return self._trades


def _rebased(path: Path) -> Path:
    return path if path.values[0] == 0 else path.shifted(-path.values[0])


def first_process(path: Path, schedule: EpsilonSchedule) -> CapitalTrace:
    return FirstProcess(schedule).run(_rebased(path)).trace


def run_first_process(path: Path, schedule: EpsilonSchedule) -> FirstProcessResult:
    return FirstProcess(schedule).run(_rebased(path))


# ------------------------------------------------------------ the pair

def eps_n_for_exponent(k: int) -> float:
    """``eps N`` for ``eps = e^-k`` without overflowing for large ``k``."""
    if k <= 600:
        return math.exp(-k) * math.floor(math.exp(k) / math.sqrt(k))
    return 1 / math.sqrt(k)


def minimal_exponent(D, K, k_max: int = 10 ** 6) -> int:
    """Smallest integer ``k`` with ``e^-k * floor(e^k / sqrt(k)) <= D / K``."""
    target = D / K
    k = 1
    while k <= k_max:
        if eps_n_for_exponent(k) <= target:
            return k
        k += 1
    raise ScheduleError("no feasible exponent below k_max")


@dataclass
class ECDPathReport:
    branch: str
    first_factor: float
    second_factor: float
    achieved: bool
    first_final: float
    second_final: float
    bound_lhs: float
    bound_rhs: float
    resolved: bool

    def to_dict(self) -> dict:
        return {
            "branch": self.branch, "factors": {"first": self.first_factor, "second": self.second_factor},
            "achieved": self.achieved, "first_final": self.first_final, "second_final": self.second_final,
            "bound_lhs": self.bound_lhs, "bound_rhs": self.bound_rhs, "resolved": self.resolved,
        }


@dataclass(frozen=True)
class ECDWitness:
    """The two processes for ``E_{C,D}`` with target blow-up factor ``K``."""

    schedule: EpsilonSchedule
    K: Real

    @property
    def first(self) -> FirstProcess:
        return FirstProcess(self.schedule)

    @property
    def second(self) -> SecondProcess:
        return SecondProcess(self.schedule)

    def evaluate(self, path: Path, decrease: bool = False) -> ECDPathReport:
        """Branch and factors on ``path`` (on ``-path`` for semi-strict decrease)."""
        p = _rebased(path.negated() if decrease else path)
        sch = self.schedule
        res = FirstProcess(sch).run(p)
        second = eval_elementary(SecondProcess(sch), p)
        d = res.decomposition
        if d.resolved:
            t_last = d.T[sch.N - 1]
            c_hit = first_hit(p, 0, (sch.C,))[0]
            branch = "second" if c_hit < t_last else "first"
        else:
            branch = "second"
        f1 = float(res.trace.final / res.trace.initial)
        f2 = float(second.final / second.initial)
        achieved = (f1 if branch == "first" else f2) >= self.K
        lhs, rhs = res.bound()
        return ECDPathReport(branch, f1, f2, achieved, float(res.trace.final), float(second.final),
                             lhs, rhs, d.resolved)

    def to_dict(self) -> dict:
        out = self.schedule.to_dict()
        out["K"] = float(self.K)
        out["eps_N"] = float(self.schedule.eps_N)
        return out


def e_cd_witness(C, D, epsilon_exponent: int = 4, K=2, M: int | None = None) -> ECDWitness:
    """Build the witness pair; raises :class:`ScheduleError` when ``eps N > D/K``."""
    for name, v in (("C", C), ("D", D), ("K", K)):
        if not v > 0:
            raise DomainError(f"{name} must be positive")
    sch = EpsilonSchedule.from_exponent(epsilon_exponent, C, D, M)
    if sch.eps_N > D / K:
        k_min = minimal_exponent(D, K)
        raise ScheduleError(
            f"eps N = {sch.eps_N:.6g} > D/K = {D / K:.6g}; needs eps <= e^-{k_min}"
        )
    return ECDWitness(sch, K)


def report_json(witness: ECDWitness, reports: list) -> str:
    out = witness.to_dict()
    out["paths"] = [r.to_dict() for r in reports]
    return json.dumps(out, sort_keys=True)
