import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtprob.paths import (
    NEVER,
    DomainError,
    ParseError,
    Path,
    dump_path_csv,
    first_hit,
    gen_constant,
    gen_random_walk,
    gen_random_walks,
    gen_stopped_walk,
    gen_violation,
    hitting_time,
    load_path_csv,
    running_max,
    value_at,
)


def P(*pts):
    return Path.from_points(pts)


# ------------------------------------------------------------------ Path

def test_path_validation():
    with pytest.raises(DomainError):
        Path((1, 2), (0, 0))
    with pytest.raises(DomainError):
        Path((0, 1, 1), (0, 0, 0))
    with pytest.raises(DomainError):
        Path((0, 1), (0, math.inf))
    with pytest.raises(DomainError):
        Path((0, 1), (0,))


def test_never_ordering_and_arithmetic():
    assert NEVER > 1e300 and not NEVER < 5
    assert min(3.0, NEVER) == 3.0 and max(3.0, NEVER) is NEVER
    with pytest.raises(TypeError):
        NEVER + 1
    with pytest.raises(TypeError):
        1 - NEVER


@pytest.mark.parametrize("path,t,expected", [
    (P((0, 0), (1, 1)), 0.5, 0.5),
    (P((0, 0), (1, 1)), 2, 1),
    (P((0, 3)), 7, 3),
])
def test_value_at_examples(path, t, expected):
    assert value_at(path, t) == expected


def test_value_at_rejects_negative_time():
    with pytest.raises(DomainError):
        value_at(P((0, 0), (1, 1)), -0.1)


# --------------------------------------------------------------- hitting

def test_hitting_examples():
    assert hitting_time(P((0, 0), (2, 2)), 0, {1}) == 1
    assert hitting_time(P((0, 0), (1, -1)), 0, {1}) is NEVER
    assert hitting_time(P((0, 0), (1, 1), (2, 0)), 0, {0}, strict_after=True) == 2


def test_strict_hit_on_flat_stretch_is_immediate():
    # the level is re-touched immediately after ``start``: the infimum is start itself
    p = P((0, 0), (1, 0), (2, 1))
    assert hitting_time(p, 0, {0}, strict_after=True) == 0


def test_hit_returns_exact_level():
    p = P((0, 0.1), (3, 0.7))
    t, y = first_hit(p, 0, (0.3,))
    assert y == 0.3
    assert abs(value_at(p, t) - 0.3) <= 1e-12


def test_constant_extension_hits():
    p = P((0, 0), (1, 2))
    assert hitting_time(p, 5, {2}) == 5
    assert hitting_time(p, 5, {2}, strict_after=True) == 5
    assert hitting_time(p, 5, {1}) is NEVER


def test_fraction_paths_are_exact():
    p = P((0, Fraction(0)), (3, Fraction(1)))
    t, y = first_hit(p, 0, (Fraction(1, 3),))
    assert t == 1 and isinstance(t, Fraction)


def _brute_first_hit(path, start, levels, per_segment=1000):
    # dense sampling oracle: first sample whose sign relative to a level changes
    ts = [start]
    for a, b in zip(path.times, path.times[1:]):
        if b <= start:
            continue
        lo = max(a, start)
        ts.extend(np.linspace(lo, b, per_segment)[1:])
    vals = [value_at(path, t) for t in ts]
    for y in levels:
        if vals[0] == y:
            return ts[0]
    for (t0, v0), (t1, v1) in zip(zip(ts, vals), zip(ts[1:], vals[1:])):
        for y in levels:
            if (v0 - y) * (v1 - y) <= 0:
                return t1
    return NEVER


path_st = st.lists(st.integers(-20, 20), min_size=2, max_size=8).map(
    lambda vs: Path(tuple(range(len(vs))), tuple(v / 4 for v in vs)))


@settings(max_examples=60, deadline=None)
@given(path_st, st.lists(st.integers(-25, 25), min_size=1, max_size=3), st.integers(0, 3))
def test_hitting_matches_dense_scan(path, level_ints, start):
    levels = tuple(l / 7 + 0.013 for l in level_ints)
    t, y = first_hit(path, start, levels)
    brute = _brute_first_hit(path, start, levels)
    if t is NEVER:
        assert brute is NEVER
    else:
        assert abs(value_at(path, t) - y) <= 1e-12
        # no earlier crossing than the dense scan sees (within one sample spacing)
        assert brute is not NEVER and t <= brute + 1e-12 and brute - t <= 1e-3 + 1e-12


@settings(max_examples=60, deadline=None)
@given(path_st, st.floats(0, 10), st.floats(0, 10))
def test_running_max_monotone(path, t1, t2):
    lo, hi = sorted((t1, t2))
    assert running_max(path, lo, half_open=False) <= running_max(path, hi, half_open=False)


def test_running_max_examples():
    assert running_max(P((0, 0), (1, 1), (2, 0)), 2, half_open=True) == 1
    assert running_max(P((0, 0), (1, 1)), 0.5, half_open=False) == 0.5
    assert running_max(P((0, 5)), 100) == 5
    assert running_max(P((0, 0), (1, 3)), NEVER) == 3


# ------------------------------------------------------------- generators

def test_random_walk_deterministic_and_exact_increments():
    a = gen_random_walk(11, 50, dt=0.25, step_scale=0.5, start=1.0)
    b = gen_random_walk(11, 50, dt=0.25, step_scale=0.5, start=1.0)
    assert a == b
    steps = np.diff(a.values)
    assert np.allclose(np.abs(steps), 0.5 * math.sqrt(0.25))
    assert math.isclose(sum(steps), a.values[-1] - 1.0, abs_tol=1e-12)


def test_random_walk_single_step():
    p = gen_random_walk(3, 1, step_scale=2.0)
    assert p.values[0] == 0 and abs(p.values[1]) == 2.0


def test_random_walk_domain():
    with pytest.raises(DomainError):
        gen_random_walk(0, 0)
    with pytest.raises(DomainError):
        gen_random_walk(0, 5, dt=0)


def test_random_walk_mean_clt():
    n, steps = 100_000, 16
    finals = np.array([p.values[-1] for p in gen_random_walks(5, n, steps)])
    assert abs(finals.mean()) <= 4 * math.sqrt(steps) / math.sqrt(n)


def test_stopped_walk_freezes():
    p = gen_stopped_walk(1, 10_000, 3.0)
    assert p.values[-1] == 3.0 and p.values[-2] == 3.0
    assert max(p.values) == 3.0


def test_constant_path():
    p = gen_constant(2.5, horizon=1.0)
    assert value_at(p, 5) == 2.5 and value_at(p, 0.3) == 2.5


def test_violation_isolated_point():
    p = gen_violation("isolated_level_point", b=0, D=1)
    t0 = hitting_time(p, 0, {0})
    assert t0 is not NEVER
    assert hitting_time(p, t0, {0}, strict_after=True) > hitting_time(p, t0, {1})


def test_violation_monotone_run():
    p = gen_violation("monotone_run", a=0, D=1)
    assert running_max(p, p.horizon, half_open=False) == 1


def test_violation_semi_strict_increase():
    p = gen_violation("semi_strict_increase", C=2, D=1)
    # brute force: every grid point of the rising segment satisfies the definition locally
    h = 1e-3
    for t in np.linspace(0, 1.9, 50):
        left = [value_at(p, max(t - k * h, 0)) for k in range(1, 5)]
        right = [value_at(p, t + k * h) for k in range(1, 5)]
        assert all(v <= value_at(p, t) for v in left)
        assert all(v > value_at(p, t) for v in right)


def test_violation_domain_errors():
    with pytest.raises(DomainError):
        gen_violation("monotone_run", D=-1)
    with pytest.raises(DomainError):
        gen_violation("isolated_level_point", b=0, D=0)
    with pytest.raises(DomainError):
        gen_violation("nope", D=1)


# ------------------------------------------------------------------- CSV

def test_csv_examples():
    assert load_path_csv(b"0,1\n1,2") == P((0, 1.0), (1, 2.0))
    assert load_path_csv("1,5\n2,6") == P((0, 5.0), (1, 6.0))
    assert load_path_csv("time,price\n0,1\n") == P((0, 1.0))


@pytest.mark.parametrize("text,line", [
    ("0,1\n0,2", 2),
    ("0,1\n1,abc", 2),
    ("0,1,2\n", 1),
    ("", None),
])
def test_csv_errors(text, line):
    with pytest.raises(ParseError) as exc:
        load_path_csv(text)
    assert exc.value.line == line


def test_ingested_paths_use_tolerance():
    p = load_path_csv("0,0\n1,1.0000000000001\n")
    assert first_hit(p, 0, (1.0,)) == (1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=20),
       st.lists(st.floats(1e-6, 1e3), min_size=19, max_size=19))
def test_csv_round_trip(values, gaps):
    times = [0.0]
    for g in gaps[: len(values) - 1]:
        times.append(times[-1] + g)
    p = Path(tuple(times), tuple(values))
    assert load_path_csv(dump_path_csv(p)) == p
