"""Piecewise-linear price paths, exact hitting times and path generators.

A :class:`Path` is a list of breakpoints ``(t_i, v_i)`` with ``t_0 = 0``,
linear interpolation between breakpoints and constant extension after the
last one, so it defines a continuous function on ``[0, inf)``.  Hitting
times of finite level sets are solved per segment in closed form, which
keeps every capital identity downstream free of discretisation error.

All arithmetic is generic over :class:`numbers.Real`, so paths built from
:class:`fractions.Fraction` values are handled exactly.
"""
from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from numbers import Real
from typing import Iterable, Sequence

import numpy as np

# level tolerance for paths read from CSV
INGEST_ATOL = 1e-12


class DomainError(ValueError):
    """Raised when an argument lies outside an operation's domain."""


class ParseError(ValueError):
    """Raised by :func:`load_path_csv`; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class _Never:
    """The stopping-time value of ``inf(empty set)``.

    Compares greater than every finite time. Arithmetic is rejected so that
    an unresolved time can never leak into a capital computation.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NEVER"

    def __reduce__(self):
        return (_Never, ())

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("NEVER")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def _no_arithmetic(self, *args):
        raise TypeError("arithmetic with NEVER is undefined")

    __add__ = __radd__ = __sub__ = __rsub__ = _no_arithmetic
    __mul__ = __rmul__ = __truediv__ = __rtruediv__ = _no_arithmetic
    __neg__ = __float__ = _no_arithmetic


NEVER = _Never()


@dataclass(frozen=True)
class Path:
    """Continuous price path ``omega``: breakpoints plus linear interpolation."""

    times: tuple
    values: tuple
    # absolute tolerance for level comparisons; 0 for constructed paths
    atol: float = field(default=0.0, compare=False)

    def __post_init__(self):
        times = tuple(self.times)
        values = tuple(self.values)
        if len(times) == 0 or len(times) != len(values):
            raise DomainError("times and values must be non-empty and of equal length")
        if times[0] != 0:
            raise DomainError("paths start at time 0")
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise DomainError("times must be strictly increasing")
        for v in values:
            if isinstance(v, float) and not math.isfinite(v):
                raise DomainError("values must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_points(cls, points: Iterable[tuple]) -> "Path":
        pts = list(points)
        return cls(tuple(p[0] for p in pts), tuple(p[1] for p in pts))

    @property
    def horizon(self):
        return self.times[-1]

    @property
    def start(self):
        return self.values[0]

    def __len__(self):
        return len(self.times)

    def negated(self) -> "Path":
        return Path(self.times, tuple(-v for v in self.values), self.atol)

    def shifted(self, offset) -> "Path":
        return Path(self.times, tuple(v + offset for v in self.values), self.atol)


def value_at(path: Path, t) -> Real:
    """Price at time ``t``: linear interpolation, constant past the horizon."""
    if t < 0:
        raise DomainError(f"negative time {t!r}")
    times, values = path.times, path.values
    i = bisect_right(times, t) - 1
    if i >= len(times) - 1:
        return values[-1]
    t0 = times[i]
    if t == t0:
        return values[i]
    t1 = times[i + 1]
    v0, v1 = values[i], values[i + 1]
    return v0 + (v1 - v0) * ((t - t0) / (t1 - t0))


def first_hit(path: Path, start, levels: Sequence, strict_after: bool = False,
              atol: float = 0.0):
    """``(time, level)`` of the first visit to ``levels``, or ``(NEVER, None)``.

    With ``strict_after`` the result is ``inf{t > start : omega(t) in levels}``,
    which equals ``start`` itself when the path stays on a level immediately
    after ``start``. The returned level is the exact level value, so callers
    can use it as ``omega(tau)`` without interpolation error.
    """
    if start < 0:
        raise DomainError(f"negative start time {start!r}")
    if not levels:
        raise DomainError("levels must be non-empty")
    times, values = path.times, path.values
    n = len(times)
    if atol == 0:
        atol = path.atol

    def eq(a, b):
        return a == b if atol == 0 else abs(a - b) <= atol

    i = bisect_right(times, start) - 1
    if i >= n - 1:
        # constant extension: the path sits at values[-1] forever
        v = values[-1]
        for y in levels:
            if eq(v, y):
                return start, y
        return NEVER, None

    if not strict_after:
        v_start = values[i] if times[i] == start else value_at(path, start)
        for y in levels:
            if eq(v_start, y):
                return start, y

    best_t = NEVER
    best_y = None
    while i < n - 1:
        t0, t1 = times[i], times[i + 1]
        v0, v1 = values[i], values[i + 1]
        lo = start if start > t0 else t0
        for y in levels:
            if eq(v0, v1):
                if eq(v0, y):
                    # flat on the level: the infimum is the left end of the overlap
                    cand = lo
                else:
                    continue
            else:
                if eq(v1, y):
                    cand = t1
                elif eq(v0, y):
                    cand = t0
                else:
                    frac = (y - v0) / (v1 - v0)
                    if not 0 < frac < 1:
                        continue
                    cand = t0 + frac * (t1 - t0)
                    if cand > t1:
                        cand = t1
                if cand < lo or (strict_after and cand == lo):
                    # the crossing at the left end does not count; the
                    # segment is monotone, so there is no later crossing
                    if eq(v1, y) and t1 > lo:
                        cand = t1
                    else:
                        continue
            if cand < best_t:
                best_t, best_y = cand, y
        if best_t is not NEVER:
            return best_t, best_y
        i += 1
    # past the last breakpoint the path is constant at values[-1]; a level
    # equal to it would have been caught at the last breakpoint
    return NEVER, None


def hitting_time(path: Path, start, levels: Iterable, strict_after: bool = False,
                 atol: float = 0.0):
    """First time ``>= start`` (``> start`` when strict) at which the path is in ``levels``."""
    return first_hit(path, start, tuple(levels), strict_after, atol)[0]


def running_max(path: Path, up_to, half_open: bool = True, end_value=None) -> Real:
    """Supremum of the path over ``[0, up_to)`` or ``[0, up_to]``.

    For a continuous path both suprema coincide; ``half_open`` is accepted
    for symmetry with the stopping-time definitions. ``end_value`` lets the
    caller supply the exact price at ``up_to`` (e.g. a hit level).
    """
    if up_to < 0:
        raise DomainError(f"negative time {up_to!r}")
    if up_to is NEVER:
        return max(path.values)
    times, values = path.times, path.values
    k = bisect_right(times, up_to)
    best = max(values[:k])
    end = value_at(path, up_to) if end_value is None else end_value
    return end if end > best else best


def running_min(path: Path, up_to, end_value=None) -> Real:
    if up_to is NEVER:
        return min(path.values)
    k = bisect_right(path.times, up_to)
    best = min(path.values[:k])
    end = value_at(path, up_to) if end_value is None else end_value
    return end if end < best else best


# ---------------------------------------------------------------- generators

def gen_random_walk(seed: int, n_steps: int, dt: float = 1.0, step_scale: float = 1.0,
                    start: float = 0.0) -> Path:
    """Symmetric random walk with i.i.d. ``+-step_scale*sqrt(dt)`` increments.

    Values are ``start + h * k`` with ``k`` an exact integer partial sum, so
    for dyadic ``h`` the breakpoints lie exactly on the lattice ``start + hZ``.
    """
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    if not dt > 0 or not step_scale > 0:
        raise DomainError("dt and step_scale must be positive")
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=n_steps) * 2 - 1
    return _walk_path(np.concatenate(([0], np.cumsum(signs))), dt, step_scale * math.sqrt(dt), start)


def gen_random_walks(seed: int, n_paths: int, n_steps: int, dt: float = 1.0,
                     step_scale: float = 1.0, start: float = 0.0) -> list[Path]:
    """Batch version of :func:`gen_random_walk` drawing all paths from one stream."""
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(n_paths, n_steps)) * 2 - 1
    k = np.concatenate((np.zeros((n_paths, 1), dtype=np.int64), np.cumsum(signs, axis=1)), axis=1)
    h = step_scale * math.sqrt(dt)
    return [_walk_path(row, dt, h, start) for row in k]


def _walk_path(k, dt, h, start) -> Path:
    n = len(k)
    times = tuple(i * dt for i in range(n))
    values = tuple(start + h * int(j) for j in k)
    return Path(times, values)


def gen_stopped_walk(seed: int, n_steps: int, stop_level: float, dt: float = 1.0,
                     step_scale: float = 1.0, lower_stop: float | None = None) -> Path:
    """Random walk from 0 frozen at the first visit to ``stop_level`` (or ``lower_stop``)."""
    walk = gen_random_walk(seed, n_steps, dt, step_scale, 0.0)
    levels = (stop_level,) if lower_stop is None else (stop_level, lower_stop)
    t = hitting_time(walk, 0, levels)
    if t is NEVER:
        return walk
    k = walk.times.index(t) if t in walk.times else None
    if k is None:
        raise DomainError("stop_level must lie on the walk lattice")
    times = walk.times[: k + 1]
    values = walk.values[: k + 1]
    return Path(times + (times[-1] + dt,), values + (values[-1],))


def gen_constant(level, horizon=1.0) -> Path:
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    return Path((0, horizon), (level, level))


def gen_violation(kind: str, **params) -> Path:
    """Deterministic paths realising the null events targeted by the detectors.

    ``isolated_level_point(b, D, a=0)``
        starts at ``b + D/2``, reaches ``b`` at time ``a + 1`` and then moves
        straight to ``b + D`` and stays there.
    ``monotone_run(a, D, level=0)``
        constant at ``level`` until ``a``, then rises by ``D`` over one unit.
    ``semi_strict_increase(C, D)``
        the line from 0 to ``2D`` over ``[0, 2]``; every point of
        ``[0, 2)`` is a point of semi-strict increase.
    """
    if kind == "isolated_level_point":
        b, D, a = params.get("b", 0), params["D"], params.get("a", 0)
        if D == 0:
            raise DomainError("D must be non-zero")
        if a < 0:
            raise DomainError("a must be >= 0")
        return Path((0, a + 1, a + 2), (b + D / 2, b, b + D))
    if kind == "monotone_run":
        a, D, level = params.get("a", 0), params["D"], params.get("level", 0)
        if not D > 0:
            raise DomainError("D must be positive")
        if a < 0:
            raise DomainError("a must be >= 0")
        if a == 0:
            return Path((0, 1), (level, level + D))
        return Path((0, a, a + 1), (level, level, level + D))
    if kind == "semi_strict_increase":
        C, D = params.get("C", 1), params["D"]
        if not (D > 0 and C > 0):
            raise DomainError("C and D must be positive")
        return Path((0, 2), (0, 2 * D))
    raise DomainError(f"unknown violation kind {kind!r}")


# ---------------------------------------------------------------------- CSV

def load_path_csv(data: bytes | str) -> Path:
    """Parse ``time,price`` rows (header optional) into a Path rebased to t=0.

    Ingested paths compare levels with absolute tolerance ``INGEST_ATOL``.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    times: list[float] = []
    values: list[float] = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", lineno)
        a, b = row[0].strip(), row[1].strip()
        if not times and lineno == 1 and (a.lower(), b.lower()) == ("time", "price"):
            continue
        try:
            t, v = float(a), float(b)
        except ValueError:
            raise ParseError(f"non-numeric cell in {row!r}", lineno) from None
        if not (math.isfinite(t) and math.isfinite(v)):
            raise ParseError("non-finite value", lineno)
        if times and not t > times[-1]:
            raise ParseError("times must be strictly increasing", lineno)
        times.append(t)
        values.append(v)
    if not times:
        raise ParseError("empty path file", None)
    t0 = times[0]
    if t0 != 0:
        times = [t - t0 for t in times]
        for lineno in range(1, len(times)):
            if not times[lineno] > times[lineno - 1]:
                raise ParseError("times collapse after rebasing", lineno + 1)
    return Path(tuple(times), tuple(values), INGEST_ATOL)


def dump_path_csv(path: Path, header: bool = True) -> str:
    out = ["time,price"] if header else []
    for t, v in zip(path.times, path.values):
        out.append(f"{float(t):.17g},{float(v):.17g}")
    return "\n".join(out) + "\n"
