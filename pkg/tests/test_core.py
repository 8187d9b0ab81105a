from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avgregret.core import (
    Dataset,
    DegenerateUtilityError,
    LinearUtility,
    Population,
    TabularUtility,
    ValidationError,
    arr_exact_discrete,
    arr_sampled,
    percentile_rank_index,
    regret_ratio,
    rr_percentiles,
    rr_stddev,
    satisfaction,
    utility_of,
    vrr_sampled,
)
from avgregret.distributions import DiscreteDistribution, SampleSet

from conftest import HI, HILTON, IC, SL, USERS


def exact_arr(S, users=USERS):
    """Rational arithmetic reference for the four equally likely hotel users."""
    total = Fraction(0)
    for u in users.values():
        u = [Fraction(str(x)) for x in u]
        top = max(u)
        sat = max((u[i] for i in S), default=Fraction(0))
        total += (top - sat) / top
    return total / len(users)


def sampled_table(users, counts, hotels):
    rows = [users_row for name, c in counts for users_row in [USERS[name]] * c]
    return SampleSet(hotels, "tabular", rows, seed=0)


# -- points and utilities ---------------------------------------------------

def test_dataset_rejects_bad_coordinates():
    with pytest.raises(ValidationError):
        Dataset(np.array([[1.0, -0.1]]))
    with pytest.raises(ValidationError):
        Dataset(np.array([[1.0, np.nan]]))
    with pytest.raises(ValidationError):
        Dataset(np.array([[1.0, 2.0], [1.0, 2.0]]))


def test_from_rows_drops_duplicates_keeping_first():
    D = Dataset.from_rows([[1, 2], [0, 1], [1, 2], [0, 1], [3, 3]], labels="abcde")
    assert D.n == 3
    assert D.labels == ("a", "b", "e")
    assert D.source_rows == (0, 1, 4)
    assert D.dropped == (2, 3)


def test_dataset_is_read_only(hotels):
    with pytest.raises(ValueError):
        hotels.coords[0, 0] = 9.0


def test_alex_on_holiday_inn(users, hotels):
    assert utility_of(users["Alex"], hotels.point(HI)) == 0.9


def test_zero_linear_weights_rejected():
    with pytest.raises(ValidationError):
        LinearUtility((0.0, 0.0, 0.0))


def test_linear_utility_by_hand():
    D = Dataset(np.array([[0.3, 0.4]]))
    assert utility_of(LinearUtility((1, 1)), D.point(0)) == pytest.approx(0.7, abs=1e-15)


def test_tabular_range_checked():
    with pytest.raises(ValidationError):
        TabularUtility((0.5, 1.2))


# -- satisfaction and regret ------------------------------------------------

def test_alex_best_point_in_ic_hilton(users, hotels):
    assert satisfaction(users["Alex"], {IC, HILTON}, hotels) == (0.4, HILTON)


def test_satisfaction_of_empty_set(users, hotels):
    assert satisfaction(users["Tom"], [], hotels) == (0.0, None)


def test_sam_best_in_d(users, hotels):
    assert satisfaction(users["Sam"], range(4), hotels) == (1.0, IC)


def test_regret_ratio_examples(users, hotels):
    assert regret_ratio(users["Alex"], {IC, HILTON}, hotels) == pytest.approx(5 / 9, abs=1e-12)
    assert regret_ratio(users["Tom"], {IC, HILTON}, hotels) == 0.0
    for u in users.values():
        assert regret_ratio(u, range(4), hotels) == 0.0
        assert regret_ratio(u, [], hotels) == 1.0


def test_regret_ratio_degenerate_user(hotels):
    with pytest.raises(DegenerateUtilityError):
        regret_ratio(TabularUtility((0, 0, 0, 0)), [0], hotels)


# -- averages ---------------------------------------------------------------

def test_arr_ic_hilton(hotel_F, hotels):
    got = arr_exact_discrete(hotel_F, [IC, HILTON], hotels)
    assert got == pytest.approx(float(exact_arr([IC, HILTON])), abs=1e-15)
    assert got == pytest.approx(0.2639, abs=5e-5)


@pytest.mark.parametrize("S", list(combinations(range(4), 2)))
def test_all_pairs_against_rational_reference(S, hotel_F, hotels):
    assert arr_exact_discrete(hotel_F, S, hotels) == pytest.approx(float(exact_arr(S)), abs=1e-15)


def test_pair_table_values(hotel_F, hotels):
    expected = {(HI, SL): 0.3, (HI, IC): 0.275, (HI, HILTON): 0.125,
                (SL, IC): 0.1556, (SL, HILTON): 0.08056, (IC, HILTON): 0.2639}
    for S, v in expected.items():
        assert arr_exact_discrete(hotel_F, S, hotels) == pytest.approx(v, abs=5e-5)


def test_arr_extremes(hotel_F, hotels):
    assert arr_exact_discrete(hotel_F, range(4), hotels) == 0.0
    assert arr_exact_discrete(hotel_F, [], hotels) == 1.0


def test_single_user_distribution(users, hotels):
    F = DiscreteDistribution((users["Alex"],), (1.0,))
    assert arr_exact_discrete(F, [SL], hotels) == pytest.approx(2 / 9, abs=1e-15)


def test_sampled_arr_alex3_jerry2_tom2_sam3(hotels, users):
    F_N = sampled_table(users, [("Alex", 3), ("Jerry", 2), ("Tom", 2), ("Sam", 3)], hotels)
    expected = (3 * Fraction(5, 9) + 2 * Fraction(1, 2)) / 10
    assert arr_sampled(F_N, [IC, HILTON], hotels) == pytest.approx(float(expected), abs=1e-15)
    assert arr_sampled(F_N, range(4), hotels) == 0.0


def test_sampled_single_sample(hotels, users):
    F_N = sampled_table(users, [("Jerry", 1)], hotels)
    assert arr_sampled(F_N, [HI], hotels) == regret_ratio(users["Jerry"], [HI], hotels)


def test_vrr_two_users(hotels, users):
    F_N = sampled_table(users, [("Alex", 1), ("Jerry", 1)], hotels)
    rr = np.array([5 / 9, 0.5])
    assert arr_sampled(F_N, [IC, HILTON], hotels) == pytest.approx(0.5278, abs=5e-5)
    assert vrr_sampled(F_N, [IC, HILTON], hotels) == pytest.approx(float(rr.var()), abs=1e-15)
    assert vrr_sampled(F_N, [IC, HILTON], hotels) == pytest.approx(0.000772, abs=1e-6)
    assert rr_stddev(F_N, [IC, HILTON], hotels) == pytest.approx(float(rr.std()), abs=1e-15)


def test_vrr_zero_cases(hotels, users):
    F_N = sampled_table(users, [("Tom", 4)], hotels)
    assert vrr_sampled(F_N, [HI], hotels) == 0.0
    F_N = sampled_table(users, [("Alex", 2), ("Sam", 1)], hotels)
    assert vrr_sampled(F_N, range(4), hotels) == 0.0


def test_percentiles_nearest_rank(hotels, users):
    F_N = sampled_table(users, [("Alex", 3), ("Jerry", 2), ("Tom", 2), ("Sam", 3)], hotels)
    rr = sorted([5 / 9] * 3 + [0.5] * 2 + [0.0] * 5)
    got = rr_percentiles(F_N, [IC, HILTON], hotels, [50, 60, 90, 100])
    # rank ceil(q/100 * 10): 5th, 6th, 9th, 10th smallest
    assert got == [rr[4], rr[5], rr[8], rr[9]]
    assert got[0] == 0.0
    assert got[-1] == max(rr)
    assert rr_percentiles(F_N, range(4), hotels, [0, 50, 100]) == [0.0, 0.0, 0.0]


def test_percentile_rank_index():
    assert percentile_rank_index(0, 10) == 0
    assert percentile_rank_index(50, 10) == 4
    assert percentile_rank_index(100, 10) == 9
    with pytest.raises(ValidationError):
        percentile_rank_index(101, 10)


def test_weighted_percentiles(hotel_pop):
    # four users at 0.25: rr for {IC, Hilton} is {0, 0, 0.5, 5/9}
    assert hotel_pop.percentiles([IC, HILTON], [50, 75, 100]) == pytest.approx([0.0, 0.5, 5 / 9], abs=1e-15)


def test_population_rejects_foreign_sample_set(hotels, users):
    F_N = sampled_table(users, [("Alex", 1)], hotels)
    other = Dataset(np.array([[1.0, 1.0], [2.0, 0.5], [0.1, 3.0], [5.0, 5.0]]))
    with pytest.raises(ValidationError):
        arr_sampled(F_N, [0], other)


def test_linear_utilities_block_invariant():
    rng = np.random.default_rng(3)
    D = Dataset.from_rows(rng.random((57, 5)))
    pop = Population(D, "linear", rng.random((33, 5)))
    full = pop.utilities()
    for i in range(0, 33, 7):
        for j in range(0, 57, 11):
            one = pop.utilities([i], [j])[0, 0]
            assert one == full[i, j]
            assert one == utility_of(pop.function(i), D.point(j))


# -- properties ---------------------------------------------------------------

@st.composite
def instances(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(2, 10))
    d = draw(st.integers(1, 4))
    m = draw(st.integers(1, 12))
    D = Dataset.from_rows(rng.random((n, d)) + 0.01)
    if draw(st.booleans()):
        pop = Population(D, "linear", rng.random((m, d)) + 1e-3, weights=rng.random(m) + 0.01)
    else:
        pop = Population(D, "tabular", rng.random((m, D.n)) * 0.98 + 0.01)
    S = [i for i in range(D.n) if rng.random() < 0.5]
    return pop, S


@settings(max_examples=150, deadline=None)
@given(instances())
def test_rr_in_unit_interval(inst):
    pop, S = inst
    rr = pop.regret_ratios(S)
    assert np.all((rr >= 0) & (rr <= 1))
    if not S:
        assert np.all(rr == 1)


@settings(max_examples=150, deadline=None)
@given(instances())
def test_arr_vrr_bounds(inst):
    pop, S = inst
    a = pop.arr(S)
    assert 0 <= a <= 1
    assert 0 <= pop.vrr(S) <= a * (1 - a) + 1e-12


@settings(max_examples=150, deadline=None)
@given(instances(), st.data())
def test_monotone_and_supermodular(inst, data):
    pop, T = inst
    n = pop.dataset.n
    S = [i for i in T if data.draw(st.booleans())]
    outside = [p for p in range(n) if p not in T]
    assert pop.arr(S) >= pop.arr(T) - 1e-12
    if outside:
        p = data.draw(st.sampled_from(outside))
        gain_S = pop.arr(S) - pop.arr(S + [p])
        gain_T = pop.arr(T) - pop.arr(T + [p])
        assert gain_S >= gain_T - 1e-12


@settings(max_examples=100, deadline=None)
@given(instances())
def test_percentiles_nondecreasing(inst):
    pop, S = inst
    qs = [0, 10, 25, 50, 75, 90, 99, 100]
    got = pop.percentiles(S, qs)
    assert all(a <= b for a, b in zip(got, got[1:]))
    assert got[-1] == pytest.approx(float(pop.regret_ratios(S).max()), abs=0)
