"""Truncated power-series arithmetic: univariate, bivariate, and planar maps.

Univariate series are dense coefficient tuples, bivariate series are sparse
dictionaries keyed by exponent pairs, and a planar map is a pair of bivariate
series with no constant term and an invertible linear part.  Every operation
truncates to the carrying order and returns a new immutable value, so series
can be shared freely across threads.

The module supplies the three nontrivial primitives the rest of the package
is built on: composition of planar maps, local inversion of a planar map near
the origin (order-by-order fixed-point correction around the inverted linear
part), and reversion of a univariate series.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

DEFAULT_ORDER = 12


# ---------------------------------------------------------------------------
# univariate series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Series1:
    """Dense univariate series  c0 + c1 t + ... + c_order t^order."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if len(self.coeffs) == 0:
            raise ValueError("Series1 needs at least the constant coefficient")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def zero(cls, order: int = DEFAULT_ORDER) -> Series1:
        return cls((0.0,) * (order + 1))

    @classmethod
    def identity(cls, order: int = DEFAULT_ORDER) -> Series1:
        c = [0.0] * (order + 1)
        c[1] = 1.0
        return cls(tuple(c))

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[float], order: int) -> Series1:
        c = list(float(v) for v in coeffs)[: order + 1]
        c += [0.0] * (order + 1 - len(c))
        return cls(tuple(c))

    def coeff(self, k: int) -> float:
        return self.coeffs[k] if 0 <= k <= self.order else 0.0

    def truncate(self, order: int) -> Series1:
        return Series1.from_coeffs(self.coeffs, order)

    def __add__(self, other: Series1) -> Series1:
        n = min(self.order, other.order)
        return Series1(tuple(self.coeffs[k] + other.coeffs[k] for k in range(n + 1)))

    def __sub__(self, other: Series1) -> Series1:
        n = min(self.order, other.order)
        return Series1(tuple(self.coeffs[k] - other.coeffs[k] for k in range(n + 1)))

    def __neg__(self) -> Series1:
        return Series1(tuple(-c for c in self.coeffs))

    def scale(self, factor: float) -> Series1:
        return Series1(tuple(factor * c for c in self.coeffs))

    def __mul__(self, other: Series1) -> Series1:
        n = min(self.order, other.order)
        out = [0.0] * (n + 1)
        for i, a in enumerate(self.coeffs[: n + 1]):
            if a == 0.0:
                continue
            for j in range(0, n + 1 - i):
                b = other.coeffs[j]
                if b != 0.0:
                    out[i + j] += a * b
        return Series1(tuple(out))

    def compose(self, inner: Series1) -> Series1:
        """self(inner(t)); inner must have zero constant term."""
        if inner.coeff(0) != 0.0:
            raise ValueError("composition needs a zero constant term in the inner series")
        n = min(self.order, inner.order)
        inner = inner.truncate(n)
        result = Series1.from_coeffs([self.coeff(n)], n)
        for k in range(n - 1, -1, -1):
            result = result * inner
            result = Series1(
                tuple(
                    (result.coeffs[i] + self.coeff(k)) if i == 0 else result.coeffs[i]
                    for i in range(n + 1)
                )
            )
        return result

    def eval(self, x):
        """Horner evaluation; accepts scalars or numpy arrays."""
        acc = np.zeros_like(np.asarray(x, dtype=float))
        for c in reversed(self.coeffs):
            acc = acc * x + c
        if np.isscalar(x):
            return float(acc)
        return acc


def reverse_series(s: Series1) -> Series1:
    """Compositional inverse g with s(g(t)) = t up to the truncation order."""
    if s.coeff(0) != 0.0:
        raise ValueError("series reversion needs s(0) = 0")
    a1 = s.coeff(1)
    if a1 == 0.0:
        raise ValueError("series reversion needs a nonzero linear coefficient")
    n = s.order
    g = Series1.identity(n).scale(1.0 / a1)
    # each sweep fixes one more order; h = s - a1 t starts at degree 2
    for _ in range(max(n - 1, 0)):
        comp = s.compose(g)
        err = comp - Series1.identity(n)
        g = g - err.scale(1.0 / a1)
    return g


# ---------------------------------------------------------------------------
# bivariate series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Series2:
    """Sparse bivariate series: coeffs maps (i, j) to the x^i y^j coefficient.

    Canonical form stores no zero coefficients and no key with i + j beyond
    the order.
    """

    coeffs: Mapping[tuple[int, int], float]
    order: int

    def __post_init__(self):
        clean: dict[tuple[int, int], float] = {}
        for key, val in self.coeffs.items():
            i, j = key
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in key {key}")
            if i + j > self.order:
                raise ValueError(f"key {key} exceeds truncation order {self.order}")
            v = float(val)
            if v != 0.0:
                clean[(int(i), int(j))] = v
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def zero(cls, order: int = DEFAULT_ORDER) -> Series2:
        return cls({}, order)

    @classmethod
    def constant(cls, value: float, order: int = DEFAULT_ORDER) -> Series2:
        return cls({(0, 0): value}, order)

    @classmethod
    def x(cls, order: int = DEFAULT_ORDER) -> Series2:
        return cls({(1, 0): 1.0}, order)

    @classmethod
    def y(cls, order: int = DEFAULT_ORDER) -> Series2:
        return cls({(0, 1): 1.0}, order)

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, int], float], order: int) -> Series2:
        """Build from a raw table, silently dropping terms beyond the order."""
        kept = {k: v for k, v in terms.items() if k[0] + k[1] <= order}
        return cls(kept, order)

    def coeff(self, i: int, j: int) -> float:
        return self.coeffs.get((i, j), 0.0)

    def terms(self) -> list[tuple[tuple[int, int], float]]:
        return sorted(self.coeffs.items())

    def truncate(self, order: int) -> Series2:
        return Series2.from_terms(self.coeffs, order)

    def __add__(self, other: Series2) -> Series2:
        n = min(self.order, other.order)
        out = {k: v for k, v in self.coeffs.items() if k[0] + k[1] <= n}
        for k, v in other.coeffs.items():
            if k[0] + k[1] <= n:
                out[k] = out.get(k, 0.0) + v
        return Series2(out, n)

    def __sub__(self, other: Series2) -> Series2:
        return self + (-other)

    def __neg__(self) -> Series2:
        return Series2({k: -v for k, v in self.coeffs.items()}, self.order)

    def scale(self, factor: float) -> Series2:
        return Series2({k: factor * v for k, v in self.coeffs.items()}, self.order)

    def __mul__(self, other: Series2) -> Series2:
        n = min(self.order, other.order)
        out: dict[tuple[int, int], float] = {}
        for (i1, j1), a in self.coeffs.items():
            for (i2, j2), b in other.coeffs.items():
                i, j = i1 + i2, j1 + j2
                if i + j > n:
                    continue
                key = (i, j)
                out[key] = out.get(key, 0.0) + a * b
        return Series2(out, n)

    def subst(self, sx: Series2, sy: Series2) -> Series2:
        """Substitute x -> sx, y -> sy; both must have zero constant term."""
        if sx.coeff(0, 0) != 0.0 or sy.coeff(0, 0) != 0.0:
            raise ValueError("substitution needs zero constant terms")
        n = min(self.order, sx.order, sy.order)
        sx, sy = sx.truncate(n), sy.truncate(n)
        max_i = max((i for (i, _) in self.coeffs), default=0)
        max_j = max((j for (_, j) in self.coeffs), default=0)
        pow_x = _powers(sx, max_i, n)
        pow_y = _powers(sy, max_j, n)
        out = Series2.zero(n)
        for (i, j), c in self.terms():
            out = out + (pow_x[i] * pow_y[j]).scale(c)
        return out

    def eval_series(self, sx: Series1, sy: Series1) -> Series1:
        """Substitute univariate series for x and y; zero constant terms required."""
        if sx.coeff(0) != 0.0 or sy.coeff(0) != 0.0:
            raise ValueError("substitution needs zero constant terms")
        n = min(self.order, sx.order, sy.order)
        sx, sy = sx.truncate(n), sy.truncate(n)
        max_i = max((i for (i, _) in self.coeffs), default=0)
        max_j = max((j for (_, j) in self.coeffs), default=0)
        one = Series1.from_coeffs([1.0], n)
        px = [one]
        for _ in range(max_i):
            px.append(px[-1] * sx)
        py = [one]
        for _ in range(max_j):
            py.append(py[-1] * sy)
        out = Series1.zero(n)
        for (i, j), c in self.terms():
            out = out + (px[i] * py[j]).scale(c)
        return out

    def eval(self, x, y):
        """Evaluate the polynomial at a point (or arrays of points)."""
        return eval_terms(self.terms(), x, y)


def _powers(s: Series2, upto: int, order: int) -> list[Series2]:
    out = [Series2.constant(1.0, order)]
    for _ in range(upto):
        out.append(out[-1] * s)
    return out


def eval_terms(terms, x, y):
    """Sum c * x^i * y^j over a sorted term list.

    Shared by polynomial map evaluation and series evaluation so the two
    paths agree bit for bit.
    """
    acc = np.zeros_like(np.asarray(x, dtype=float) * np.asarray(y, dtype=float))
    for (i, j), c in terms:
        acc = acc + c * np.asarray(x, dtype=float) ** i * np.asarray(y, dtype=float) ** j
    if np.isscalar(x) and np.isscalar(y):
        return float(acc)
    return acc


# ---------------------------------------------------------------------------
# planar maps as series pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanarSeriesMap:
    """A pair of bivariate series (fx, fy) fixing the origin.

    The 2x2 linear part must be invertible so the map has a local inverse.
    """

    fx: Series2
    fy: Series2
    order: int

    def __post_init__(self):
        if self.fx.order != self.order or self.fy.order != self.order:
            raise ValueError("component orders must match the map order")
        if self.fx.coeff(0, 0) != 0.0 or self.fy.coeff(0, 0) != 0.0:
            raise ValueError("planar series maps must fix the origin")
        if self.linear_determinant() == 0.0:
            raise ValueError("linear part is singular")

    def linear_part(self) -> np.ndarray:
        return np.array(
            [
                [self.fx.coeff(1, 0), self.fx.coeff(0, 1)],
                [self.fy.coeff(1, 0), self.fy.coeff(0, 1)],
            ]
        )

    def linear_determinant(self) -> float:
        a, b = self.fx.coeff(1, 0), self.fx.coeff(0, 1)
        c, d = self.fy.coeff(1, 0), self.fy.coeff(0, 1)
        return a * d - b * c

    @classmethod
    def identity(cls, order: int = DEFAULT_ORDER) -> PlanarSeriesMap:
        return cls(Series2.x(order), Series2.y(order), order)

    def eval(self, x, y):
        return self.fx.eval(x, y), self.fy.eval(x, y)


def compose_maps(outer: PlanarSeriesMap, inner: PlanarSeriesMap) -> PlanarSeriesMap:
    """outer(inner(x, y)) truncated to the common order."""
    if outer.order != inner.order:
        raise ValueError(f"order mismatch: {outer.order} vs {inner.order}")
    fx = outer.fx.subst(inner.fx, inner.fy)
    fy = outer.fy.subst(inner.fx, inner.fy)
    return PlanarSeriesMap(fx, fy, outer.order)


def invert_map_series(m: PlanarSeriesMap) -> PlanarSeriesMap:
    """Local inverse g with m(g) = identity up to the truncation order.

    The linear part is inverted exactly; higher orders are filled in by the
    fixed-point sweep g <- L^-1 (id - h(g)) with h the nonlinear part of m,
    which corrects one additional order per sweep.
    """
    det = m.linear_determinant()
    if det == 0.0:
        raise ValueError("cannot invert a map with singular linear part")
    a, b = m.fx.coeff(1, 0), m.fx.coeff(0, 1)
    c, d = m.fy.coeff(1, 0), m.fy.coeff(0, 1)
    ia, ib, ic, id_ = d / det, -b / det, -c / det, a / det
    n = m.order

    lin_x = Series2({(1, 0): a, (0, 1): b}, n)
    lin_y = Series2({(1, 0): c, (0, 1): d}, n)
    hx = m.fx - lin_x
    hy = m.fy - lin_y

    x_, y_ = Series2.x(n), Series2.y(n)
    gx = x_.scale(ia) + y_.scale(ib)
    gy = x_.scale(ic) + y_.scale(id_)
    for _ in range(max(n - 1, 0)):
        rx = x_ - hx.subst(gx, gy)
        ry = y_ - hy.subst(gx, gy)
        gx = rx.scale(ia) + ry.scale(ib)
        gy = rx.scale(ic) + ry.scale(id_)
    return PlanarSeriesMap(gx, gy, n)
