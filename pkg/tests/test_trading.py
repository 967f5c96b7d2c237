import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtprob.detectors import EventParams, isolated_point_witness
from gtprob.paths import DomainError, Path, gen_constant, gen_random_walk, gen_violation
from gtprob.trading import (
    ContractViolation,
    ElementaryStrategy,
    FixedTime,
    HitLevels,
    Never,
    PortfolioRule,
    Superposition,
    buy_and_hold,
    check_positive,
    eval_elementary,
    first_capital_hit,
    stop_at_threshold,
    sum_processes,
    superpose_weighted,
)


def P(*pts):
    return Path.from_points(pts)


def witness(eps=1e-3, a=0, D=1, b=0):
    return isolated_point_witness(EventParams(b, a, D, eps))


path_st = st.lists(st.integers(-12, 12), min_size=2, max_size=10).map(
    lambda vs: Path(tuple(range(len(vs))), tuple(v / 4 for v in vs)))


# ------------------------------------------------------- capital engine

def test_buy_and_hold_gain_equals_price_change():
    tr = eval_elementary(buy_and_hold(1, 0), P((0, 0), (1, 1)))
    assert tr.final == 1
    assert tr.incomplete


def test_capital_formula_by_hand():
    # h=2 from t=0.5 until the path hits 1.5, then h=-1 forever
    strat = ElementaryStrategy((
        (FixedTime(0.5), PortfolioRule.constant(2)),
        (HitLevels((1.5,)), PortfolioRule.constant(-1)),
    ), initial_capital=3)
    p = P((0, 0), (2, 2), (3, 0))
    tr = eval_elementary(strat, p)
    # c + 2*(1.5 - 0.5) - (0 - 1.5) = 3 + 2 + 1.5
    assert tr.final == pytest.approx(6.5, abs=1e-12)
    assert tr.capital_at(0.25) == 3
    assert tr.capital_at(1.0) == pytest.approx(3 + 2 * 0.5)


def test_isolated_point_witness_pays_d_plus_eps_exactly():
    p = gen_violation("isolated_level_point", b=0, D=1)
    tr = eval_elementary(witness(), p)
    assert tr.initial == 0.001
    assert tr.final == 1.001
    assert check_positive(tr)
    assert not tr.incomplete


def test_negative_d_witness_mirrors():
    p = gen_violation("isolated_level_point", b=0, D=-1)
    tr = eval_elementary(isolated_point_witness(EventParams(0, 0, -1, 1e-3)), p)
    assert tr.final == pytest.approx(1.001, abs=1e-15)
    assert check_positive(tr)


@pytest.mark.parametrize("level", [0.0, 5.0, -3.25])
def test_constant_paths_leave_capital_unchanged(level):
    p = gen_constant(level, 4.0)
    for strat in (buy_and_hold(7, 2), witness(b=level), witness(b=level + 1)):
        tr = eval_elementary(strat, p)
        assert all(c == strat.initial_capital for c in tr.capital)


def test_portfolio_bound_is_enforced():
    strat = ElementaryStrategy(((FixedTime(0), PortfolioRule(lambda p, t, x: 3.0, 2.0)),))
    with pytest.raises(ContractViolation):
        eval_elementary(strat, P((0, 0), (1, 1)))
    with pytest.raises(DomainError):
        PortfolioRule.constant(1, bound=0)


def test_never_rule_stops_the_sequence():
    strat = ElementaryStrategy(((FixedTime(0), PortfolioRule.constant(1)),
                                (Never(), PortfolioRule.constant(0, 1))))
    tr = eval_elementary(strat, P((0, 0), (1, 2)))
    assert tr.final == 2 and tr.incomplete


def test_exact_arithmetic_on_fraction_paths():
    p = P((0, Fraction(0)), (3, Fraction(1)), (4, Fraction(-1, 3)))
    strat = ElementaryStrategy(((HitLevels((Fraction(1, 3),)), PortfolioRule.constant(Fraction(1, 7))),
                                (HitLevels((Fraction(-1, 3), Fraction(2, 3)),), PortfolioRule.constant(0, 1))),
                               initial_capital=Fraction(1, 21))
    tr = eval_elementary(strat, p)
    assert tr.final == Fraction(1, 21) + Fraction(1, 7) * Fraction(1, 3)


@settings(max_examples=60, deadline=None)
@given(path_st, st.integers(-4, 4), st.integers(-4, 4), st.integers(0, 5), st.integers(0, 4), st.integers(1, 4))
def test_linearity_for_shared_stopping_times(path, h1, h2, c1, t0, k):
    def strat(h, c):
        return ElementaryStrategy((
            (FixedTime(t0), PortfolioRule.constant(h, 10)),
            (HitLevels((-k / 4, k / 4), relative=True, strict_after=True), PortfolioRule.constant(-h, 10)),
        ), initial_capital=c)

    a = eval_elementary(strat(h1, c1), path)
    b = eval_elementary(strat(h2, 2), path)
    both = eval_elementary(strat(h1 + h2, c1 + 2), path)
    summed = sum_processes([a, b])
    for t in both.times:
        assert both.capital_at(t) == pytest.approx(summed.capital_at(t), abs=1e-9)


# --------------------------------------------------------------- sums

def test_sum_processes_identity_and_copies():
    p = gen_random_walk(2, 30)
    tr = eval_elementary(buy_and_hold(1, 5), p)
    assert sum_processes([tr]) == tr
    triple = sum_processes([tr, tr, tr])
    assert triple.initial == 15
    for t, c in zip(tr.times, tr.capital):
        assert triple.capital_at(t) == pytest.approx(3 * c)


def test_sum_processes_rejects_mixed_paths():
    a = eval_elementary(buy_and_hold(), gen_random_walk(1, 5))
    b = eval_elementary(buy_and_hold(), gen_random_walk(2, 5))
    with pytest.raises(DomainError):
        sum_processes([a, b])


def test_weighted_grid_initial_capital():
    eps = [1e-3 * (k + 1) for k in range(6)]
    strats = [witness(e, a=k % 3, D=1 + k // 3) for k, e in enumerate(eps)]
    weights = [Fraction(1, 2 ** (n + 1)) for n in range(6)]
    sp = superpose_weighted(strats, weights)
    assert sp.initial_capital == sum(w * e for w, e in zip(weights, eps))


# ----------------------------------------------------------- positivity

def test_check_positive_examples():
    flat = eval_elementary(buy_and_hold(0, 1), P((0, 0), (1, 1)))
    assert check_positive(flat)
    dip = eval_elementary(buy_and_hold(1, 0), P((0, 0), (1, -2), (2, 1)))
    v = check_positive(dip)
    assert not v and v.time == 1 and v.value == -2


def test_witness_positive_on_random_corpus():
    for s in range(200):
        p = gen_random_walk(s, 60, step_scale=0.01)
        assert check_positive(eval_elementary(witness(a=s % 7), p))


def test_trace_export():
    tr = eval_elementary(witness(), gen_violation("isolated_level_point", b=0, D=1))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "time,capital" and len(lines) == len(tr.times) + 1
    side = json.loads(tr.sidecar_json())
    assert side == {"initial": 0.001, "final": 1.001, "min": 0.001, "incomplete": False, "ever_negative": False}


# ---------------------------------------------------- threshold transform

def test_stop_at_threshold_touching_exactly():
    # buy-and-hold from 0 on a path touching 1/1.01 then falling
    top = 1 / 1.01
    p = P((0, 0), (1, top), (2, -0.5))
    st_ = stop_at_threshold(buy_and_hold(1, 0), 1.01, 1)
    tr = eval_elementary(st_, p)
    assert tr.final == pytest.approx(1, abs=1e-12)
    assert st_.initial_capital == 0


def test_stop_at_threshold_without_hit_is_scaling():
    p = gen_random_walk(4, 20, step_scale=0.01)
    base = eval_elementary(witness(), p)
    tr = eval_elementary(stop_at_threshold(witness(), 2, 10), p)
    assert tr.final == pytest.approx(2 * base.final, abs=1e-15)


def test_stop_at_threshold_domain():
    with pytest.raises(DomainError):
        stop_at_threshold(witness(), 1, 1)


@settings(max_examples=60, deadline=None)
@given(path_st, st.integers(1, 5), st.floats(0.01, 1.0))
def test_stop_at_threshold_properties(path, h, eps_prime):
    base = buy_and_hold(h, 2.0)
    m = 1 + eps_prime
    orig = eval_elementary(base, path)
    tr = eval_elementary(stop_at_threshold(base, m, 5.0), path)
    assert tr.initial == pytest.approx(m * 2.0)
    if orig.max_value >= 5.0 / m:
        assert tr.final >= 5.0 - 1e-9
    assert tr.max_value <= max(5.0, m * orig.max_value) + 1e-9


def test_first_capital_hit_interpolates():
    tr = eval_elementary(buy_and_hold(1, 0), P((0, 0), (2, 2)))
    assert first_capital_hit(tr, 1) == 1
    assert first_capital_hit(tr, 3) is None


# ---------------------------------------------------------- superposition

def test_superposition_single_identity():
    p = gen_violation("isolated_level_point", b=0, D=1)
    sp = superpose_weighted([witness()], [1])
    assert eval_elementary(sp, p).capital == eval_elementary(witness(), p).capital


def test_superposition_halves():
    sp = superpose_weighted([witness(1e-3), witness(3e-3)], [0.5, 0.5])
    assert sp.initial_capital == pytest.approx(2e-3, abs=1e-18)


def test_superposition_geometric_20():
    strats = [witness(1e-3 * (n % 4 + 1), a=n % 5) for n in range(20)]
    weights = [Fraction(1, 2 ** (n + 1)) for n in range(20)]
    sp = superpose_weighted(strats, weights)
    assert sp.initial_capital == sum(w * s.initial_capital for w, s in zip(weights, strats))


def test_superposition_routes_agree():
    strats = [witness(1e-2, a=a, D=D) for a in (0, 1, 3) for D in (0.25, 0.5)]
    sp = superpose_weighted(strats, [1 / 8] * 6)
    for s in range(30):
        p = gen_random_walk(s, 40, step_scale=0.05)
        direct = eval_elementary(sp, p)
        summed = sp.weighted_trace(p)
        for t in summed.times:
            assert direct.capital_at(t) == pytest.approx(summed.capital_at(t), abs=1e-12)


@pytest.mark.parametrize("weights", [[0, 0.5], [-0.1, 0.5], [0.7, 0.7]])
def test_superposition_weight_errors(weights):
    with pytest.raises(DomainError):
        Superposition((witness(), witness()), tuple(weights))
