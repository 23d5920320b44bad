import numpy as np
import pytest

from invcurve import (
    MapFormatError,
    MapSpec,
    MapValidationError,
    Point,
    canon,
    eval_map,
    format_map_spec,
    invert_point,
    parse_map_spec,
    pert,
    to_planar_series,
)

CANON_TEXT = """
# canonical map, lambda = 1, mu = 0
X 1 0 1
X 2 0 1
Y 0 1 -1
Y 1 1 1
"""


class TestParsing:
    def test_minimal_legal_map(self):
        m = parse_map_spec(CANON_TEXT)
        assert m.lam == 1.0 and m.mu == 0.0
        assert m.x_terms == {(1, 0): 1.0, (2, 0): 1.0}

    def test_quadratic_y_term_rejected(self):
        with pytest.raises(MapValidationError, match="quadratic part of Y"):
            parse_map_spec(CANON_TEXT + "Y 2 0 0.3\n")

    def test_cubic_terms_are_free(self):
        m = parse_map_spec(CANON_TEXT + "Y 3 0 0.1\n")
        assert m.y_terms[(3, 0)] == 0.1

    def test_malformed_line_reports_number(self):
        with pytest.raises(MapFormatError, match="line 2"):
            parse_map_spec("X 1 0 1\nX 2 zero 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(MapFormatError, match="duplicate"):
            parse_map_spec(CANON_TEXT + "X 2 0 1\n")

    def test_nonpositive_lambda_rejected(self):
        bad = CANON_TEXT.replace("Y 1 1 1", "Y 1 1 -2")
        with pytest.raises(MapValidationError, match="lambda"):
            parse_map_spec(bad)

    def test_missing_skeleton_entry_rejected(self):
        with pytest.raises(MapValidationError):
            parse_map_spec("X 1 0 1\nY 0 1 -1\nY 1 1 1\n")  # no x^2 term

    def test_format_round_trip(self):
        m = pert(1.25, -0.5, 0.07)
        again = parse_map_spec(format_map_spec(m))
        assert again.x_terms == m.x_terms and again.y_terms == m.y_terms


class TestEvaluation:
    def test_axis_invariance(self):
        img = eval_map(canon(), Point(0.1, 0.0))
        assert img.x == pytest.approx(0.11, rel=1e-15) and img.y == 0.0

    def test_pure_reflection_on_y_axis(self):
        assert eval_map(canon(), Point(0.0, 0.2)) == Point(0.0, -0.2)

    def test_perturbed_map_lifts_the_axis(self):
        img = eval_map(pert(c=0.1), Point(0.1, 0.0))
        assert img.x == pytest.approx(0.11, abs=1e-15)
        assert img.y == pytest.approx(0.0001, abs=1e-18)

    def test_jacobian_matches_finite_differences(self):
        m = pert(1.3, -0.7, 0.4)
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = Point(*rng.uniform(-0.2, 0.2, size=2))
            _, jac = eval_map(m, p, with_jacobian=True)
            h = 1e-6
            fd = np.empty((2, 2))
            for col, (dx, dy) in enumerate([(h, 0.0), (0.0, h)]):
                plus = eval_map(m, Point(p.x + dx, p.y + dy))
                minus = eval_map(m, Point(p.x - dx, p.y - dy))
                fd[0, col] = (plus.x - minus.x) / (2 * h)
                fd[1, col] = (plus.y - minus.y) / (2 * h)
            np.testing.assert_allclose(jac, fd, rtol=1e-6, atol=1e-9)

    def test_series_conversion_matches_eval_exactly(self):
        m = pert(0.8, 0.6, -0.3)
        sm = to_planar_series(m, 8)
        rng = np.random.default_rng(11)
        for _ in range(25):
            x, y = rng.uniform(-0.2, 0.2, size=2)
            img = eval_map(m, Point(x, y))
            sx, sy = sm.eval(x, y)
            assert img.x == sx and img.y == sy


class TestInvertPoint:
    def test_axis_preimage(self):
        p = invert_point(canon(), Point(0.11, 0.0))
        assert p.x == pytest.approx(0.1, abs=1e-12)
        assert p.y == pytest.approx(0.0, abs=1e-14)

    def test_fixed_point(self):
        p = invert_point(canon(), Point(0.0, 0.0))
        assert p == Point(0.0, 0.0)

    def test_off_axis_preimage(self):
        p = invert_point(canon(), Point(0.11, -0.18))
        assert p.x == pytest.approx(0.1, abs=1e-12)
        assert p.y == pytest.approx(0.2, abs=1e-12)

    def test_round_trip_random_points(self):
        m = pert(1.5, 0.4, 0.2)
        rng = np.random.default_rng(5)
        for _ in range(50):
            p = Point(*rng.uniform(-0.2, 0.2, size=2))
            img = eval_map(m, p)
            back = invert_point(m, img)
            assert abs(back.x - p.x) <= 1e-10 and abs(back.y - p.y) <= 1e-10


def test_degree_reported():
    assert canon().degree == 2
    assert pert().degree == 3


def test_direct_mapspec_validation():
    with pytest.raises(MapValidationError):
        MapSpec({(1, 0): 1.0, (2, 0): 1.0, (0, 2): 0.5}, {(0, 1): -1.0, (1, 1): 1.0})
