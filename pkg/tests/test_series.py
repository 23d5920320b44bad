import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invcurve import (
    PlanarSeriesMap,
    Series1,
    Series2,
    canon,
    compose_maps,
    invert_map_series,
    reverse_series,
    to_planar_series,
)

CANON_SERIES = to_planar_series(canon(1.0, 0.0), 8)


def series2(terms, order=8):
    return Series2.from_terms(terms, order)


class TestSeries2Arithmetic:
    def test_monomial_product(self):
        assert (Series2.x(8) * Series2.y(8)).coeffs == {(1, 1): 1.0}

    def test_additive_identity(self):
        a = series2({(2, 1): 0.5, (0, 3): -2.0})
        assert (a + Series2.zero(8)).coeffs == a.coeffs

    def test_hand_expanded_product(self):
        # (1 - x)(1 - x - x^2) = 1 - 2x + x^3 once truncated at order 3
        p = series2({(0, 0): 1.0, (1, 0): -1.0}, order=3)
        q = series2({(0, 0): 1.0, (1, 0): -1.0, (2, 0): -1.0}, order=3)
        assert (p * q).coeffs == {(0, 0): 1.0, (1, 0): -2.0, (3, 0): 1.0}

    def test_truncation_drops_high_degrees(self):
        a = series2({(4, 0): 1.0}, order=8)
        b = series2({(0, 5): 1.0}, order=8)
        assert (a * b).coeffs == {}

    def test_no_zero_coefficients_stored(self):
        a = series2({(1, 0): 1.0})
        b = series2({(1, 0): -1.0, (2, 2): 3.0})
        assert (a + b).coeffs == {(2, 2): 3.0}

    def test_order_validation(self):
        with pytest.raises(ValueError):
            Series2({(5, 5): 1.0}, 8)


class TestComposeMaps:
    def test_canonical_square_x_component(self):
        sq = compose_maps(CANON_SERIES, CANON_SERIES)
        assert sq.fx.coeffs == {(1, 0): 1.0, (2, 0): 2.0, (3, 0): 2.0, (4, 0): 1.0}

    def test_canonical_square_y_component(self):
        # y (1 - 2x + x^3); the xy coefficient is -2 lambda with lambda = 1
        sq = compose_maps(CANON_SERIES, CANON_SERIES)
        assert sq.fy.coeffs == {(0, 1): 1.0, (1, 1): -2.0, (3, 1): 1.0}

    def test_identity_composition(self):
        ident = PlanarSeriesMap.identity(8)
        out = compose_maps(ident, CANON_SERIES)
        assert out.fx.coeffs == CANON_SERIES.fx.coeffs
        assert out.fy.coeffs == CANON_SERIES.fy.coeffs

    def test_order_mismatch_rejected(self):
        with pytest.raises(ValueError, match="order mismatch"):
            compose_maps(CANON_SERIES, PlanarSeriesMap.identity(6))


class TestInvertMapSeries:
    def test_canonical_inverse_x_coeffs(self):
        inv = invert_map_series(CANON_SERIES)
        got = [inv.fx.coeff(k, 0) for k in range(6)]
        np.testing.assert_allclose(got, [0, 1, -1, 2, -5, 14], atol=1e-12)

    def test_back_composition_is_identity(self):
        inv = invert_map_series(CANON_SERIES)
        comp = compose_maps(CANON_SERIES, inv)
        resid = dict(comp.fx.coeffs)
        resid[(1, 0)] = resid.get((1, 0), 0.0) - 1.0
        assert max(abs(v) for v in resid.values()) <= 1e-12
        resid_y = dict(comp.fy.coeffs)
        resid_y[(0, 1)] = resid_y.get((0, 1), 0.0) - 1.0
        assert max(abs(v) for v in resid_y.values()) <= 1e-12

    def test_inverted_square_structure(self):
        psi = invert_map_series(compose_maps(CANON_SERIES, CANON_SERIES))
        np.testing.assert_allclose(
            [psi.fx.coeff(k, 0) for k in range(4)], [0, 1, -2, 6], atol=1e-12
        )
        assert abs(psi.fy.coeff(1, 1) - 2.0) <= 1e-12

    def test_singular_linear_part_rejected(self):
        bad = Series2.from_terms({(1, 0): 1.0, (2, 0): 1.0}, 6)
        with pytest.raises(ValueError):
            PlanarSeriesMap(bad, Series2.from_terms({(2, 0): 1.0}, 6), 6)


class TestReverseSeries:
    def test_identity(self):
        t = Series1.identity(6)
        assert reverse_series(t).coeffs == t.coeffs

    def test_hand_example(self):
        s = Series1.from_coeffs([0, 1, 1], 4)
        assert reverse_series(s).coeffs == (0.0, 1.0, -1.0, 2.0, -5.0)

    def test_linear_scaling(self):
        s = Series1.from_coeffs([0, 2], 4)
        np.testing.assert_allclose(reverse_series(s).coeffs, [0, 0.5, 0, 0, 0])

    def test_back_composition(self):
        s = Series1.from_coeffs([0, 1, 1], 6)
        resid = s.compose(reverse_series(s)) - Series1.identity(6)
        assert max(abs(c) for c in resid.coeffs) <= 1e-12

    def test_rejects_constant_term(self):
        with pytest.raises(ValueError):
            reverse_series(Series1.from_coeffs([1, 1], 4))

    def test_rejects_zero_linear_coefficient(self):
        with pytest.raises(ValueError):
            reverse_series(Series1.from_coeffs([0, 0, 1], 4))


# ---------------------------------------------------------------------------
# property tests
# ---------------------------------------------------------------------------

coeff_values = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)
exponents = st.tuples(st.integers(0, 6), st.integers(0, 6)).filter(
    lambda ij: ij[0] + ij[1] <= 8
)
sparse_series = st.dictionaries(exponents, coeff_values, max_size=8).map(
    lambda d: Series2.from_terms(d, 8)
)


@settings(max_examples=60, deadline=None)
@given(sparse_series, sparse_series, sparse_series)
def test_multiplication_associative_and_distributive(a, b, c):
    left = (a * b) * c
    right = a * (b * c)
    keys = set(left.coeffs) | set(right.coeffs)
    assert all(abs(left.coeff(*k) - right.coeff(*k)) <= 1e-12 for k in keys)
    dist_l = a * (b + c)
    dist_r = a * b + a * c
    keys = set(dist_l.coeffs) | set(dist_r.coeffs)
    assert all(abs(dist_l.coeff(*k) - dist_r.coeff(*k)) <= 1e-12 for k in keys)


small_coeffs = st.floats(min_value=-0.5, max_value=0.5, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(-0.3, 0.3),
    st.floats(-0.3, 0.3),
    st.dictionaries(
        st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(
            lambda ij: 2 <= ij[0] + ij[1] <= 6
        ),
        small_coeffs,
        max_size=6,
    ),
)
def test_inverse_round_trip(b, c, higher):
    order = 8
    fx = Series2.from_terms({(1, 0): 1.0, (0, 1): b, **higher}, order)
    fy = Series2.from_terms({(1, 0): c, (0, 1): -1.0}, order)
    m = PlanarSeriesMap(fx, fy, order)
    comp = compose_maps(m, invert_map_series(m))
    resid = dict(comp.fx.coeffs)
    resid[(1, 0)] = resid.get((1, 0), 0.0) - 1.0
    resid_y = dict(comp.fy.coeffs)
    resid_y[(0, 1)] = resid_y.get((0, 1), 0.0) - 1.0
    worst = max(
        max((abs(v) for v in resid.values()), default=0.0),
        max((abs(v) for v in resid_y.values()), default=0.0),
    )
    assert worst <= 1e-10


@settings(max_examples=60, deadline=None)
@given(st.lists(small_coeffs, min_size=2, max_size=8))
def test_reversion_involution(tail):
    coeffs = [0.0, 1.0] + tail
    s = Series1.from_coeffs(coeffs, len(coeffs) - 1)
    twice = reverse_series(reverse_series(s))
    assert max(abs(a - b) for a, b in zip(twice.coeffs, s.coeffs)) <= 1e-10
