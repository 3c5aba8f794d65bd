import time
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from omnikit.placement import DOMAIN, expected_lookup_accuracy, get_predictor, make_demos, sweep


def oracle(k, n=12):
    # seen objects are right, unseen ones are a fair coin between two locations
    return float(Fraction(k, n) + Fraction(n - k, 2 * n))


@given(st.integers(0, 12))
def test_expected_accuracy_closed_form(k):
    assert expected_lookup_accuracy(k) == pytest.approx(oracle(k), abs=1e-12)


def test_sweep_matches_table_row():
    t0 = time.perf_counter()
    rows = {k: r for k, r, _ in sweep(seed=42, predictor=get_predictor("lookup"))}
    assert time.perf_counter() - t0 < 1.0
    for k, pct in [(0, 50.0), (3, 62.5), (6, 75.0), (9, 87.5), (12, 100.0)]:
        assert abs(100 * rows[k] - pct) <= 2.0
    for k, r in rows.items():
        assert r == pytest.approx(oracle(k), abs=0.02)


def test_sampled_sweep_near_oracle():
    rows = sweep(seed=42, predictor=get_predictor("lookup"), sampled=True)
    for k, r, n in rows:
        assert n >= 1
        assert abs(r - oracle(k)) < 0.2


def test_sweep_deterministic():
    a = sweep(seed=7, predictor=get_predictor("lookup"), sampled=True)
    assert a == sweep(seed=7, predictor=get_predictor("lookup"), sampled=True)


def test_unknown_predictor():
    with pytest.raises(Exception):
        get_predictor("nope")


def test_demos_cover_given_objects():
    objs = list(DOMAIN.objects)[:3]
    demos = make_demos(DOMAIN, objs)
    assert set(demos) == set(objs)
