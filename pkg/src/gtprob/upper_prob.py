"""Upper-probability evidence from explicit witnesses.

The upper probability of an event is the cheapest initial capital of a
positive capital process whose final value dominates the event's indicator.
It cannot be computed; what can be done is to exhibit a witness, check on a
corpus that it stays non-negative and ends at or above 1 where the event
holds, and report its initial capital as an upper bound.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .detectors import EventParams, enumerate_events, isolated_point_witness, monotone_witness
from .increase import EpsilonSchedule, FirstProcess, SecondProcess, layer_strategy, second_process_rules
from .paths import NEVER, DomainError, Path, first_hit, gen_constant, gen_random_walk, gen_stopped_walk, value_at
from .trading import (
    POSITIVITY_TOL,
    CapitalTrace,
    Strategy,
    buy_and_hold,
    eval_elementary,
    stop_at_threshold,
    sum_processes,
)


class Verdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNDETERMINED = "undetermined"

    @classmethod
    def of(cls, flag: bool) -> "Verdict":
        return cls.TRUE if flag else cls.FALSE


@dataclass(frozen=True)
class EventPredicate:
    """Named decidable predicate on (constantly extended) piecewise-linear paths."""

    name: str
    fn: Callable[[Path], Verdict] = field(repr=False)
    # true when the verdict on a truncated path may differ from the untruncated one
    horizon_limited: bool = False

    def __call__(self, path: Path) -> Verdict:
        return self.fn(path)


# ---------------------------------------------------------------- catalogue

def never_event() -> EventPredicate:
    return EventPredicate("never", lambda p: Verdict.FALSE)


def always_event() -> EventPredicate:
    return EventPredicate("always", lambda p: Verdict.TRUE)


def _exits_up(path: Path, start, lo, hi) -> bool:
    t, y = first_hit(path, start, (lo, hi))
    return t is not NEVER and y == hi


def isolated_point_event(params: EventParams) -> EventPredicate:
    """After the first visit to ``b`` at or after ``a`` the path reaches ``b + D``
    before ``b - eps`` (mirrored for negative ``D``).

    This is where the single isolated-point witness ends at ``|D| + eps``.
    """
    b, D, eps = params.b, params.D, params.epsilon

    def fn(path):
        t, _ = first_hit(path, params.a, (b,))
        if t is NEVER:
            return Verdict.FALSE
        if D > 0:
            return Verdict.of(_exits_up(path, t, b - eps, b + D))
        return Verdict.of(_exits_up(path.negated(), t, -b - eps, -b - D))

    return EventPredicate(f"isolated_point(b={b},a={params.a},D={D},eps={eps})", fn)


def monotone_event(a, D, epsilon, direction: str = "up") -> EventPredicate:
    """From time ``a`` the path moves ``D`` in ``direction`` before moving ``eps`` against it."""
    sign = {"up": 1, "down": -1}.get(direction)
    if sign is None:
        raise DomainError(f"direction must be 'up' or 'down', not {direction!r}")

    def fn(path):
        p = path if sign > 0 else path.negated()
        y0 = value_at(p, a)
        return Verdict.of(_exits_up(p, a, y0 - epsilon, y0 + D))

    return EventPredicate(f"monotone_{direction}(a={a},D={D},eps={epsilon})", fn)


def e_cd_event(C, D) -> EventPredicate:
    """Exact test of: from 0 the path reaches a point of semi-strict increase ``t``
    before hitting ``C``, then reaches ``omega(t) + D`` before returning to ``omega(t)``.

    On a piecewise-linear path such points fill the rising segments, with the
    left breakpoint included when the path does not fall into it. Paths not
    starting at 0 are shifted to do so.
    """
    if not (C > 0 and D > 0):
        raise DomainError("C and D must be positive")

    def fn(path):
        if path.values[0] != 0:
            path = path.shifted(-path.values[0])
        t, v = path.times, path.values
        tau_c = first_hit(path, 0, (C,))[0]
        for i in range(len(t) - 1):
            if not v[i + 1] > v[i] or not t[i] < tau_c:
                continue
            closed = i == 0 or v[i - 1] <= v[i]
            floor = math.inf
            for j in range(i + 1, len(t)):
                floor = min(floor, v[j])
                if not floor > v[i]:
                    break
                top = v[j] - D
                if top > v[i] or (closed and top == v[i]):
                    return Verdict.TRUE
        return Verdict.FALSE

    return EventPredicate(f"E_CD(C={C},D={D})", fn)


def _level_measure(path: Path, b):
    t, v = path.times, path.values
    if v[-1] == b:
        return math.inf
    total = 0
    for i in range(len(t) - 1):
        if v[i] == b and v[i + 1] == b:
            total = total + (t[i + 1] - t[i])
    return total


def level_set_unbounded(b) -> EventPredicate:
    """``{t : omega(t) = b}`` is unbounded."""
    return EventPredicate(f"level_set_unbounded(b={b})", lambda p: Verdict.of(p.values[-1] == b),
                          horizon_limited=True)


def level_set_null(b) -> EventPredicate:
    """``{t : omega(t) = b}`` has Lebesgue measure zero."""
    return EventPredicate(f"level_set_null(b={b})", lambda p: Verdict.of(_level_measure(p, b) == 0),
                          horizon_limited=True)


def constant_event() -> EventPredicate:
    return EventPredicate("constant", lambda p: Verdict.of(all(v == p.values[0] for v in p.values)))


def _tail_start(path: Path):
    v = path.values
    j = len(v) - 1
    while j > 0 and v[j - 1] == v[-1]:
        j -= 1
    return j


def ray_of_extremum() -> EventPredicate:
    """Some ``[t, inf)`` with ``t > 0`` is a ray of local maximum or minimum.

    The maximal constant tail of an extended piecewise-linear path always
    starts after a rising or falling segment, so the event holds exactly for
    non-constant paths; on truncated walks this is an artefact of the
    constant extension.
    """
    return EventPredicate("ray_of_extremum", lambda p: Verdict.of(_tail_start(p) > 0),
                          horizon_limited=True)


def ray_of_maximum() -> EventPredicate:
    def fn(p):
        j = _tail_start(p)
        return Verdict.of(j > 0 and p.values[j - 1] < p.values[j])

    return EventPredicate("ray_of_maximum", fn, horizon_limited=True)


def nowhere_differentiable() -> EventPredicate:
    """``omega'(t)`` exists for no ``t``: never the case for a piecewise-linear path."""
    return EventPredicate("nowhere_differentiable", lambda p: Verdict.FALSE)


def complement(event: EventPredicate) -> EventPredicate:
    flip = {Verdict.TRUE: Verdict.FALSE, Verdict.FALSE: Verdict.TRUE,
            Verdict.UNDETERMINED: Verdict.UNDETERMINED}
    return EventPredicate(f"not({event.name})", lambda p: flip[event(p)], event.horizon_limited)


def union(events: Sequence[EventPredicate]) -> EventPredicate:
    def fn(p):
        vs = [e(p) for e in events]
        if Verdict.TRUE in vs:
            return Verdict.TRUE
        return Verdict.UNDETERMINED if Verdict.UNDETERMINED in vs else Verdict.FALSE

    return EventPredicate("union(" + ",".join(e.name for e in events) + ")", fn,
                          any(e.horizon_limited for e in events))


# ----------------------------------------------------------- witness reports

class Status(enum.Enum):
    VALID = "valid"
    INVALID = "invalid"
    NO_CLAIM = "no_claim"


@dataclass
class PathResult:
    index: int
    verdict: Verdict
    final: float
    min: float


@dataclass
class WitnessReport:
    event: str
    witness: str
    initial_capital: object
    results: list
    status: Status
    violating_path: int | None = None
    horizon_limited: bool = False

    @property
    def bound(self):
        """``UpProb(E) <= S0`` when the witness superhedged on every corpus path."""
        return self.initial_capital if self.status is Status.VALID else None

    @property
    def n_event_paths(self) -> int:
        return sum(1 for r in self.results if r.verdict is Verdict.TRUE)

    def to_dict(self) -> dict:
        return {
            "event": self.event, "witness": self.witness,
            "initial_capital": float(self.initial_capital), "status": self.status.value,
            "bound": None if self.bound is None else float(self.bound),
            "checked_paths": len(self.results), "event_paths": self.n_event_paths,
            "violating_path": self.violating_path, "horizon_limited": self.horizon_limited,
            "results": [{"verdict": r.verdict.value, "final": float(r.final), "min": float(r.min)}
                        for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def witness_upper_bound(event: EventPredicate, witness: Strategy, corpus: Sequence[Path],
                        tol: float = POSITIVITY_TOL) -> WitnessReport:
    """Check ``witness`` against ``event`` on ``corpus``.

    The report is INVALID if the capital goes below ``-tol`` on some path,
    NO_CLAIM if it ends below ``1 - tol`` on a path where the event holds or
    the event is undetermined there, VALID otherwise.
    """
    if not len(corpus):
        raise DomainError("corpus must be non-empty")
    results = []
    status, bad = Status.VALID, None
    for i, path in enumerate(corpus):
        tr = witness.evaluate(path)
        verdict = event(path)
        results.append(PathResult(i, verdict, tr.final, tr.min_value))
        if tr.min_value < -tol:
            if status is not Status.INVALID:
                status, bad = Status.INVALID, i
        elif status is Status.VALID and verdict is not Verdict.FALSE and tr.final < 1 - tol:
            status, bad = Status.NO_CLAIM, i
    return WitnessReport(event.name, witness.name or type(witness).__name__,
                         witness.initial_capital, results, status, bad, event.horizon_limited)


def threshold_transform(strategy: Strategy, eps_prime):
    """Scale by ``1 + eps'`` and liquidate at capital 1."""
    if not eps_prime > 0:
        raise DomainError("eps' must be positive")
    return stop_at_threshold(strategy, 1 + eps_prime, 1)


# --------------------------------------------------------------- coherence

def strategy_library(schedule: EpsilonSchedule | None = None) -> list[Strategy]:
    """Representative strategies of every kind the package builds."""
    sch = schedule or EpsilonSchedule.from_exponent(4)
    params = EventParams(0, 0, 1, 1e-3)
    fam = enumerate_events([0, 1], [0.5, 1])
    return [
        buy_and_hold(1, 0),
        buy_and_hold(-2, 1),
        isolated_point_witness(params),
        isolated_point_witness(EventParams(0, 1, -1, 1e-3)),
        monotone_witness(0, 1, 1e-3, "up"),
        monotone_witness(0.5, 1, 1e-3, "down"),
        fam.superposition,
        threshold_transform(isolated_point_witness(params), 0.1),
        SecondProcess(sch),
        second_process_rules(sch),
        FirstProcess(sch),
        layer_strategy(1, 1, sch),
        layer_strategy(2, sch.M, sch),
    ]


@dataclass
class CoherenceResult:
    passed: bool
    checked: int
    counterexample: tuple | None = None


def coherence_check(corpus: Sequence[Path] | None = None, library: Sequence[Strategy] | None = None) -> CoherenceResult:
    """Every strategy's capital is identically its initial capital on constant paths."""
    corpus = corpus if corpus is not None else [gen_constant(0), gen_constant(5, 3.0), gen_constant(-2.5, 10.0)]
    library = library if library is not None else strategy_library()
    checked = 0
    for path in corpus:
        if any(v != path.values[0] for v in path.values):
            raise DomainError("coherence corpus must hold constant paths only")
        for strat in library:
            tr = strat.evaluate(path)
            checked += 1
            if any(c != tr.initial for c in tr.capital):
                return CoherenceResult(False, checked, (strat.name, path))
    return CoherenceResult(True, checked)


# --------------------------------------------------------- null witnesses

@dataclass
class NullWitnessClaim:
    verdict: Verdict
    initial_capital: object
    finals: list
    covering: list
    trace_min: float

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "initial_capital": float(self.initial_capital),
                "finals": [float(f) for f in self.finals], "covering": self.covering,
                "trace_min": float(self.trace_min)}


def null_witness_form(members: Sequence[Strategy], event: EventPredicate, corpus: Sequence[Path],
                      tol: float = POSITIVITY_TOL) -> NullWitnessClaim:
    """Sum members with initial capitals ``2^-n`` into one process with ``S0 <= 1``.

    On every event path its final capital is at least the number of members
    ending at or above 1 there; the verdict is TRUE when every event path is
    covered by every member, UNDETERMINED without event paths.
    """
    if not members:
        raise DomainError("need at least one member")
    S0 = 0
    for n, m in enumerate(members, start=1):
        c = m.initial_capital
        if not math.isclose(float(c), 2.0 ** -n, rel_tol=1e-12, abs_tol=0):
            raise DomainError(f"member {n} has initial capital {c!r}, expected 2^-{n}")
        S0 = S0 + c
    finals, covering = [], []
    worst = math.inf
    all_covered, any_event = True, False
    for path in corpus:
        if event(path) is not Verdict.TRUE:
            continue
        any_event = True
        traces = [eval_elementary(m, path) for m in members]
        total = sum_processes(traces)
        count = sum(1 for tr in traces if tr.final >= 1 - tol)
        worst = min(worst, total.min_value)
        finals.append(total.final)
        covering.append(count)
        if count < len(members) or total.final < count - tol * len(members):
            all_covered = False
    if not any_event:
        return NullWitnessClaim(Verdict.UNDETERMINED, S0, [], [], math.nan)
    return NullWitnessClaim(Verdict.of(all_covered and worst >= -tol), S0, finals, covering, worst)


# -------------------------------------------------------- uncertainty demo

@dataclass
class DemoSide:
    label: str
    witness_paths: str
    realized: list
    representable: bool = True

    @property
    def ok(self) -> bool:
        return self.representable and bool(self.realized) and all(self.realized)


@dataclass
class UncertaintyDemo:
    event: str
    event_side: DemoSide
    complement_side: DemoSide
    note: str = ""

    def to_dict(self) -> dict:
        def side(s):
            return {"label": s.label, "witness_paths": s.witness_paths, "representable": s.representable,
                    "checked": len(s.realized), "realized": sum(bool(r) for r in s.realized), "ok": s.ok}
        return {"event": self.event, "event_side": side(self.event_side),
                "complement_side": side(self.complement_side), "note": self.note}


UNCERTAIN_EVENTS = ("level_set_unbounded", "level_set_null", "constant", "ray_of_extremum",
                    "nowhere_differentiable")


def uncertainty_demo(event: str, b=0.0, seeds: Sequence[int] = range(20), n_steps: int = 2000) -> UncertaintyDemo:
    """Exhibit the martingale paths behind complete uncertainty of a catalogued event.

    Informational: each side lists whether its witness paths realise it. No
    numerical lower bound on upper probability is claimed.
    """
    if event not in UNCERTAIN_EVENTS:
        raise DomainError(f"uncatalogued event {event!r}; choose from {UNCERTAIN_EVENTS}")
    walks = [gen_random_walk(s, n_steps) for s in seeds]
    const_b, const_other = gen_constant(b, 10.0), gen_constant(b + 1, 10.0)

    def realized(pred, paths):
        return [pred(p) is Verdict.TRUE for p in paths]

    if event == "level_set_unbounded":
        e = level_set_unbounded(b)
        return UncertaintyDemo(e.name, DemoSide("E", f"constant at {b}", realized(e, [const_b])),
                               DemoSide("not E", f"constant at {b + 1}", realized(complement(e), [const_other])))
    if event == "level_set_null":
        e = level_set_null(b)
        return UncertaintyDemo(e.name, DemoSide("E", f"constant at {b + 1}", realized(e, [const_other])),
                               DemoSide("not E", f"constant at {b}", realized(complement(e), [const_b])))
    if event == "constant":
        e = constant_event()
        return UncertaintyDemo(e.name, DemoSide("E", "constant path", realized(e, [const_b])),
                               DemoSide("not E", "random walks", realized(complement(e), walks)))
    if event == "ray_of_extremum":
        e = ray_of_extremum()
        stopped = [gen_stopped_walk(s, n_steps, 1.0, lower_stop=-1.0) for s in seeds]
        flags = [e(p) is Verdict.TRUE and abs(p.values[-1]) == 1.0 for p in stopped]
        return UncertaintyDemo(
            ray_of_extremum().name,
            DemoSide("E", "walks stopped at +1 or -1 (eventually constant at an extremum)", flags),
            DemoSide("not E", "constant path", realized(complement(ray_of_extremum()), [const_b])),
            note="every non-constant truncated path has an artificial ray from its constant extension",
        )
    e = nowhere_differentiable()
    return UncertaintyDemo(
        e.name, DemoSide("E", "Brownian paths (not piecewise linear)", [], representable=False),
        DemoSide("not E", "constant path", realized(complement(e), [const_b])),
        note="piecewise-linear paths are differentiable off their breakpoints",
    )
