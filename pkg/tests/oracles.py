"""Independent oracles and shared helpers for the test suite.

The manifold jet oracle solves the invariance identity F(X(x, F)) = Y(x, F)
order by order in exact rational arithmetic with sympy, completely apart
from the package's own series machinery.  Closed forms for the perturbed
canonical map were derived by hand from the same identity:

    F(x + x^2) = -F(x) (1 - lam x) + c x^3   (mu = 0)

    a3 = c / 2
    a4 = a3 (lam - 3) / 2
    a5 = a3 ((lam - 4)(lam - 3) - 6) / 4
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import sympy as sp

from invcurve import MapSpec
from invcurve.mapdef import to_planar_series
from invcurve.normalform import normalize_to_order


def pert_jet_closed_form(lam: float, c: float) -> tuple[float, float, float]:
    """(a3, a4, a5) for the perturbed canonical map with mu = 0."""
    a3 = c / 2.0
    a4 = a3 * (lam - 3.0) / 2.0
    a5 = a3 * ((lam - 4.0) * (lam - 3.0) - 6.0) / 4.0
    return a3, a4, a5


def manifold_jet(m: MapSpec, order: int) -> list[float]:
    """Taylor coefficients a_3..a_order of the invariant graph, via sympy.

    Substitutes F = sum a_k x^k into F(X(x, F(x))) - Y(x, F(x)) and solves
    the coefficient equations sequentially in exact rationals.
    """
    x = sp.symbols("x")
    unknowns = {k: sp.symbols(f"a{k}") for k in range(3, order + 1)}
    f_poly = sum(unknowns[k] * x**k for k in unknowns)

    def on_curve(terms) -> sp.Expr:
        acc = sp.Integer(0)
        for (i, j), coeff in terms.items():
            acc += sp.Rational(Fraction(coeff)) * x**i * f_poly**j
        return acc

    def trunc(expr: sp.Expr) -> sp.Expr:
        expr = sp.expand(expr)
        kept = [t for t in sp.Add.make_args(expr) if sp.degree(t, x) <= order]
        return sp.Add(*kept)

    big_x = trunc(on_curve(m.x_terms))
    big_y = trunc(on_curve(m.y_terms))
    f_of_x = trunc(f_poly.subs(x, big_x))
    residual = sp.Poly(trunc(f_of_x - big_y), x)

    solution: dict[sp.Symbol, sp.Rational] = {}
    for k in range(3, order + 1):
        eq = residual.coeff_monomial(x**k).subs(solution)
        sol = sp.solve(sp.Eq(eq, 0), unknowns[k])
        if len(sol) != 1:
            raise RuntimeError(f"jet equation at order {k} is not uniquely solvable")
        solution[unknowns[k]] = sol[0]
    return [float(solution[unknowns[k]]) for k in range(3, order + 1)]


def random_form2_map(rng: np.random.Generator) -> MapSpec:
    """A random admissible map with cubic/quartic coefficients in [-1, 1]."""
    lam = float(rng.uniform(0.5, 2.0))
    mu = float(rng.uniform(-1.0, 1.0))
    x_terms = {(1, 0): 1.0, (2, 0): 1.0, (1, 1): mu}
    y_terms = {(0, 1): -1.0, (1, 1): lam}
    for table in (x_terms, y_terms):
        for deg in (3, 4):
            for i in range(deg + 1):
                table[(deg - i, i)] = float(rng.uniform(-1.0, 1.0))
    return MapSpec(x_terms, y_terms)


def flatten_map(m: MapSpec, n_power: int = 8):
    """The map in flattened coordinates (no pure-x terms in Y through n_power)."""
    order = max(n_power + 2, m.degree, 12)
    return normalize_to_order(to_planar_series(m, order), n_power).normalized


def sample_shadow_pair(rng: np.random.Generator, delta: float, n_power: int):
    """A random pair respecting the metric hypotheses, built from representable floats.

    Offsets scale like x^8 and x^11; below x ~ 0.02 an abscissa offset of
    that size falls under the spacing of doubles, so only ordinate offsets
    are drawn there.
    """
    from invcurve import Point, ShadowPair, shadow_metric

    while True:
        x = float(np.exp(rng.uniform(np.log(delta * 0.02), np.log(delta))))
        y = float(rng.uniform(-0.9, 0.9)) * x**n_power
        if x >= 0.02:
            t = rng.uniform(0.0, 0.9)
            s = rng.uniform(0.0, 1.0)
            dx = float(np.sign(rng.uniform(-1, 1))) * s * t * x**8
            dy = float(np.sign(rng.uniform(-1, 1))) * (1 - s) * t * x**11
        else:
            dx = 0.0
            dy = float(rng.uniform(-0.9, 0.9)) * x**11
        pair = ShadowPair(Point(x, y), Point(x + dx, y + dy))
        if abs(pair.q.y) <= pair.q.x**n_power and shadow_metric(pair) <= 1.0:
            return pair
