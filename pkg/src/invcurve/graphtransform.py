"""Constructive invariant-curve solver: push a seed segment, re-graph, repeat.

The engine starts from the horizontal seed [0, rho] x {0}, pushes it forward
through the flattened map, re-graphs the image over the abscissa after every
step, and stops once the curve covers [0, delta].  Shrinking rho and repeating
gives a Cauchy sequence of curves whose limit is the invariant curve; the
solver stops when two successive final curves agree to tol_converge.

Numerics that matter here:

* Grids are geometric ("graded") with the smallest positive node a fixed
  fraction of x_max, because all the dynamics concentrates near the origin.
* Re-graphing interpolates the tangency-scaled ordinate Y / X^3 with a
  monotone piecewise cubic (PCHIP) in X rather than Y itself.  The scaled
  ordinate is nearly constant for any curve tangent to order three, so the
  per-step interpolation error sits many orders below the curve instead of
  at a fixed relative level; without this the rho-refinement differences
  drown in interpolation noise.
* Monotonicity of the image abscissas is a hard guard: it is exactly the
  condition for the image to be a graph again.

Certificates are measured, not assumed: suprema of x^(m-N) |F^(m)(x)| on the
grid, the smallest observed dX/dx, and the drift constant
|X_max - (x_max + x_max^2)| / x_max^3.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import ConvergenceError, GuardError
from .mapdef import MapSpec, to_planar_series
from .normalform import NormalFormResult, normalize_to_order, pullback_curve
from .series import DEFAULT_ORDER, PlanarSeriesMap, eval_terms

GRID_SPAN = 1e-6  # smallest positive node = GRID_SPAN * x_max
TANGENCY_POWER = 3


def graded_grid(x_max: float, size: int) -> np.ndarray:
    """Geometric grid on [0, x_max]: zero plus size-1 nodes down to GRID_SPAN*x_max."""
    if x_max <= 0.0 or not math.isfinite(x_max):
        raise ValueError(f"x_max must be positive and finite, got {x_max}")
    if size < 8:
        raise ValueError("grid needs at least 8 nodes")
    pos = np.geomspace(x_max * GRID_SPAN, x_max, size - 1)
    pos[0] = x_max * GRID_SPAN
    pos[-1] = x_max
    return np.concatenate(([0.0], pos))


@dataclass(frozen=True)
class Curve:
    """Sampled graph {(x, F(x))} on a strictly increasing grid starting at 0."""

    xs: np.ndarray
    fs: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).copy()
        fs = np.asarray(self.fs, dtype=float).copy()
        if xs.ndim != 1 or xs.shape != fs.shape or xs.size < 4:
            raise ValueError("curve needs matching 1-d arrays with at least 4 nodes")
        if xs[0] != 0.0 or fs[0] != 0.0:
            raise ValueError("curve must start at the origin")
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(fs))):
            raise ValueError("curve values must be finite")
        xs.setflags(write=False)
        fs.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "fs", fs)

    @property
    def x_max(self) -> float:
        return float(self.xs[-1])

    @cached_property
    def scaled(self) -> np.ndarray:
        """F / x^3 at the positive nodes."""
        return self.fs[1:] / self.xs[1:] ** TANGENCY_POWER

    @cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(self.xs[1:], self.scaled, extrapolate=False)

    def check_tangency_cap(self, cap: float) -> None:
        worst = float(np.max(np.abs(self.scaled)))
        if worst > cap:
            raise GuardError(f"|F|/x^3 reached {worst:.3e}, above the cap {cap:.3e}")

    def eval(self, x):
        """Interpolated F(x) on [0, x_max].

        Below the smallest positive node the scaled ordinate is held
        constant, which preserves the cubic tangency.
        """
        scalar = np.ndim(x) == 0
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(arr < 0.0) or np.any(arr > self.x_max * (1.0 + 1e-12)):
            raise ValueError("evaluation outside the curve domain")
        arr_c = np.minimum(arr, self.x_max)
        out = np.empty_like(arr_c)
        low = arr_c < self.xs[1]
        if np.any(low):
            g0 = self.scaled[0]
            out[low] = g0 * arr_c[low] ** TANGENCY_POWER
        if np.any(~low):
            out[~low] = self._interp(arr_c[~low]) * arr_c[~low] ** TANGENCY_POWER
        if scalar:
            return float(out[0])
        return out


def seed_curve(rho: float, grid_size: int) -> Curve:
    """The flat seed segment [0, rho] x {0} on the graded grid."""
    return Curve(graded_grid(rho, grid_size), np.zeros(grid_size))


# ---------------------------------------------------------------------------
# fast polynomial evaluation for the push loop
# ---------------------------------------------------------------------------


class _MapEvaluator:
    """Vectorized evaluation of both polynomial components."""

    def __init__(self, m: MapSpec | PlanarSeriesMap):
        if isinstance(m, MapSpec):
            xt, yt = m.sorted_terms()
        else:
            xt, yt = m.fx.terms(), m.fy.terms()
        self._parts = []
        dmax_x = dmax_y = 0
        for terms in (xt, yt):
            ii = np.array([k[0] for k, _ in terms], dtype=int)
            jj = np.array([k[1] for k, _ in terms], dtype=int)
            cc = np.array([c for _, c in terms], dtype=float)
            self._parts.append((ii, jj, cc))
            if ii.size:
                dmax_x = max(dmax_x, int(ii.max()))
                dmax_y = max(dmax_y, int(jj.max()))
        self._dmax_x = dmax_x
        self._dmax_y = dmax_y

    @staticmethod
    def _power_table(v: np.ndarray, dmax: int) -> np.ndarray:
        table = np.empty((v.size, dmax + 1))
        table[:, 0] = 1.0
        for d in range(1, dmax + 1):
            table[:, d] = table[:, d - 1] * v
        return table

    def eval(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        px = self._power_table(np.asarray(x, dtype=float), self._dmax_x)
        py = self._power_table(np.asarray(y, dtype=float), self._dmax_y)
        out = []
        for ii, jj, cc in self._parts:
            out.append((px[:, ii] * py[:, jj]) @ cc)
        return out[0], out[1]


# ---------------------------------------------------------------------------
# push and certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCertificate:
    """Measured grid suprema of x^(m - n_power) |F^(m)(x)| for m = 0..m_max."""

    ks: tuple[float, ...]
    n_power: int
    m_max: int
    min_dxdx: float | None = None
    xmax_drift_c: float | None = None


def _grid_derivative(xs: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # three-point central difference on a nonuniform grid; exact for quadratics
    hm = xs[1:-1] - xs[:-2]
    hp = xs[2:] - xs[1:-1]
    d = (
        vals[2:] * hm / (hp * (hm + hp))
        - vals[:-2] * hp / (hm * (hm + hp))
        + vals[1:-1] * (hp - hm) / (hm * hp)
    )
    return xs[1:-1], d


def bound_certificate(c: Curve, n_power: int, m_max: int) -> BoundCertificate:
    """Measure the derivative envelopes K_m = sup x^(m-N) |F^(m)(x)|."""
    if not 0 <= m_max <= 3:
        raise ValueError("m_max must be between 0 and 3")
    if c.xs.size < 8 * max(m_max, 1):
        raise ValueError(f"grid too sparse for m_max={m_max}: {c.xs.size} nodes")
    ks = []
    xs, vals = c.xs[1:], c.fs[1:]
    for m in range(m_max + 1):
        if m > 0:
            xs, vals = _grid_derivative(xs, vals)
        ks.append(float(np.max(np.abs(vals) * xs ** float(m - n_power))))
    return BoundCertificate(tuple(ks), n_power, m_max)


def _push_once(
    ev: _MapEvaluator, c: Curve, grid_size: int, bound_cap: float | None
) -> tuple[Curve, float, float]:
    x, f = c.xs, c.fs
    big_x, big_y = ev.eval(x, f)
    if big_x[0] != 0.0 or big_y[0] != 0.0:
        raise GuardError("image of the origin moved off the origin")
    dx = np.diff(big_x)
    if np.any(dx <= 0.0):
        bad = int(np.argmax(dx <= 0.0))
        raise GuardError(
            f"graph monotonicity guard failed: image abscissas stall at x = {x[bad]:.6g}"
        )
    min_slope = float(np.min(dx / np.diff(x)))
    xm = c.x_max
    drift_c = float(abs(big_x[-1] - (xm + xm * xm)) / xm**3)

    new_xs = graded_grid(float(big_x[-1]), grid_size)
    scaled = big_y[1:] / big_x[1:] ** TANGENCY_POWER
    interp = PchipInterpolator(big_x[1:], scaled, extrapolate=False)
    new_scaled = interp(new_xs[1:])
    if not np.all(np.isfinite(new_scaled)):
        raise GuardError("re-graph interpolation left the image range")
    if bound_cap is not None:
        worst = float(np.max(np.abs(new_scaled)))
        if worst > bound_cap:
            raise GuardError(
                f"|F|/x^3 reached {worst:.3e} after the push, above the cap {bound_cap:.3e}"
            )
    new_fs = np.concatenate(([0.0], new_scaled * new_xs[1:] ** TANGENCY_POWER))
    return Curve(new_xs, new_fs), min_slope, drift_c


def push_curve(
    m: MapSpec | PlanarSeriesMap,
    c: Curve,
    *,
    n_power: int = 8,
    m_max: int = 2,
    grid_size: int | None = None,
    bound_cap: float | None = 100.0,
    max_x: float | None = None,
) -> tuple[Curve, BoundCertificate]:
    """One forward push of a curve, re-graphed onto the graded grid.

    Returns the image curve and its measured certificate (derivative
    envelopes, smallest secant slope of the abscissa map, and the drift
    constant of x_max).
    """
    if max_x is not None and c.x_max > max_x:
        raise GuardError(f"curve reaches {c.x_max:.6g}, past the working bound {max_x:.6g}")
    ev = _MapEvaluator(m)
    out, min_slope, drift_c = _push_once(ev, c, grid_size or c.xs.size, bound_cap)
    cert = bound_certificate(out, n_power, m_max)
    return out, replace(cert, min_dxdx=min_slope, xmax_drift_c=drift_c)


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    norm_order: int = 8  # flattening order N
    delta: float = 0.05
    rho0: float = 0.001
    rho_factor: float = 0.5
    grid_size: int = 512
    m_max: int = 2
    tol_converge: float = 1e-9
    tol_invariance: float = 1e-8
    max_levels: int = 8
    bound_cap: float = 100.0
    series_order: int | None = None

    def validate(self) -> None:
        if not (0.0 < self.rho0 < self.delta):
            raise ValueError("need 0 < rho0 < delta")
        if self.grid_size < 64:
            raise ValueError("grid_size must be at least 64")
        if self.tol_converge <= 0.0 or self.tol_invariance <= 0.0:
            raise ValueError("tolerances must be positive")
        if not 0 <= self.m_max <= 3:
            raise ValueError("m_max must be between 0 and 3")
        if self.norm_order < 3:
            raise ValueError("norm_order must be at least 3")
        if not (0.0 < self.rho_factor < 1.0):
            raise ValueError("rho_factor must lie in (0, 1)")
        if self.max_levels < 2:
            raise ValueError("need at least two refinement levels")


@dataclass(frozen=True)
class LevelResult:
    rho: float
    curve: Curve
    nu_bar: int
    x_max_trace: np.ndarray
    min_dxdx: float
    max_drift_c: float
    growth_margin_min: float


@dataclass(frozen=True)
class SolveDiagnostics:
    levels: tuple[LevelResult, ...]
    gaps: tuple[float, ...]
    converged: bool
    normal_form: NormalFormResult
    config: SolverConfig = field(repr=False)


def _prepare(m: MapSpec, cfg: SolverConfig) -> tuple[NormalFormResult, _MapEvaluator]:
    order = cfg.series_order or max(cfg.norm_order + 2, m.degree, DEFAULT_ORDER)
    nf = normalize_to_order(to_planar_series(m, order), cfg.norm_order)
    return nf, _MapEvaluator(nf.normalized)


def _run_level(ev: _MapEvaluator, rho: float, cfg: SolverConfig) -> LevelResult:
    curve = seed_curve(rho, cfg.grid_size)
    trace = [curve.x_max]
    min_slope = math.inf
    max_drift = 0.0
    margin = math.inf
    # the quadratic drift guarantees termination; the cap only catches stalls
    cap = int(2.0 / rho) * (int(math.log(cfg.delta / rho)) + 2) + 64
    while curve.x_max <= cfg.delta:
        if len(trace) > cap:
            raise ConvergenceError(
                f"push iteration exceeded its step cap ({cap}) at rho={rho:g}",
                history=trace,
            )
        prev = curve.x_max
        curve, slope, drift = _push_once(ev, curve, cfg.grid_size, cfg.bound_cap)
        if curve.x_max <= prev:
            raise GuardError("x_max failed to increase during a push")
        trace.append(curve.x_max)
        min_slope = min(min_slope, slope)
        max_drift = max(max_drift, drift)
        margin = min(margin, curve.x_max - (prev + 0.5 * prev * prev))
    return LevelResult(
        rho=rho,
        curve=curve,
        nu_bar=len(trace) - 1,
        x_max_trace=np.array(trace),
        min_dxdx=min_slope,
        max_drift_c=max_drift,
        growth_margin_min=margin,
    )


def _comparison_grid(delta: float, size: int = 256) -> np.ndarray:
    return np.geomspace(delta * 1e-5, 0.5 * delta, size)


def rho_refinement(
    m: MapSpec, cfg: SolverConfig, levels: int
) -> tuple[list[LevelResult], list[float]]:
    """Run a fixed schedule rho0 * rho_factor^k, k = 0..levels-1.

    Returns the per-level results (curves in flattened coordinates) and the
    sup-norm gaps between successive final curves on [0, delta/2].
    """
    cfg.validate()
    _, ev = _prepare(m, cfg)
    grid = _comparison_grid(cfg.delta)
    results: list[LevelResult] = []
    gaps: list[float] = []
    rho = cfg.rho0
    prev_vals = None
    for _ in range(levels):
        lv = _run_level(ev, rho, cfg)
        results.append(lv)
        vals = lv.curve.eval(grid)
        if prev_vals is not None:
            gaps.append(float(np.max(np.abs(vals - prev_vals))))
        prev_vals = vals
        rho *= cfg.rho_factor
    return results, gaps


def solve_manifold(
    m: MapSpec, cfg: SolverConfig | None = None
) -> tuple[Curve, BoundCertificate, SolveDiagnostics]:
    """Compute the invariant curve on [0, delta] by refined graph transport.

    Flattens the map to cfg.norm_order, runs the push loop for a shrinking
    sequence of seed lengths until two successive final curves agree to
    tol_converge on [0, delta/2], and returns the last curve mapped back to
    the original coordinates, together with its measured certificate and
    per-level diagnostics.
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    nf, ev = _prepare(m, cfg)
    grid = _comparison_grid(cfg.delta)
    levels: list[LevelResult] = []
    gaps: list[float] = []
    rho = cfg.rho0
    prev_vals = None
    converged = False
    for _ in range(cfg.max_levels):
        lv = _run_level(ev, rho, cfg)
        levels.append(lv)
        vals = lv.curve.eval(grid)
        if prev_vals is not None:
            gaps.append(float(np.max(np.abs(vals - prev_vals))))
            if gaps[-1] <= cfg.tol_converge:
                converged = True
                break
        prev_vals = vals
        rho *= cfg.rho_factor
    if not converged:
        raise ConvergenceError(
            f"refinement gaps never reached {cfg.tol_converge:g} "
            f"after {cfg.max_levels} levels",
            history=gaps,
        )
    final = levels[-1].curve
    cert = bound_certificate(final, cfg.norm_order, cfg.m_max)
    cert = replace(
        cert,
        min_dxdx=min(lv.min_dxdx for lv in levels),
        xmax_drift_c=max(lv.max_drift_c for lv in levels),
    )
    out = pullback_curve(final, nf.shift)
    out.check_tangency_cap(cfg.bound_cap)
    diag = SolveDiagnostics(tuple(levels), tuple(gaps), converged, nf, cfg)
    return out, cert, diag


# ---------------------------------------------------------------------------
# measurements on a computed curve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceReport:
    max_residual: float
    xs: np.ndarray
    residuals: np.ndarray
    failures: tuple[float, ...]


def invariance_residual(
    m: MapSpec, c: Curve, samples: int = 200
) -> tuple[float, InvarianceReport]:
    """Defect of the invariance identity on [0, x_max/2].

    For each sample abscissa xbar, finds xhat with the X image of
    (xhat, F(xhat)) equal to xbar (monotone root find) and measures
    |F(xbar) - Y image|.  Samples where the root find fails are excluded
    from the maximum and reported.
    """
    half = c.x_max / 2.0
    nodes = c.xs[(c.xs > 0.0) & (c.xs <= half)]
    if nodes.size == 0:
        raise ValueError("curve has no positive nodes below x_max/2")
    if nodes.size > samples:
        idx = np.unique(np.linspace(0, nodes.size - 1, samples).astype(int))
        nodes = nodes[idx]
    xt, yt = m.sorted_terms()

    def image_x(t: float, xbar: float) -> float:
        return eval_terms(xt, t, c.eval(t)) - xbar

    xs_ok: list[float] = []
    res: list[float] = []
    failures: list[float] = []
    rtol = 4.0 * np.finfo(float).eps
    for xbar in nodes:
        if image_x(xbar, xbar) < 0.0:
            failures.append(float(xbar))
            continue
        try:
            xhat = brentq(image_x, 0.0, xbar, args=(xbar,), rtol=rtol, xtol=1e-300)
        except ValueError:
            failures.append(float(xbar))
            continue
        y_img = eval_terms(yt, xhat, c.eval(xhat))
        xs_ok.append(float(xbar))
        res.append(abs(c.eval(xbar) - y_img))
    if failures:
        warnings.warn(
            f"{len(failures)} invariance samples had no preimage and were skipped",
            stacklevel=2,
        )
    res_arr = np.array(res)
    max_res = float(res_arr.max()) if res_arr.size else math.nan
    return max_res, InvarianceReport(max_res, np.array(xs_ok), res_arr, tuple(failures))


@dataclass(frozen=True)
class DecadeStats:
    lo: float
    hi: float
    count: int
    sup_cubic_ratio: float
    sup_scaled_23: float


@dataclass(frozen=True)
class TangencyReport:
    a3: float
    decades: tuple[DecadeStats, ...]
    cubic_bounded: bool
    vanishes_below_x23: bool


def tangency_fit(c: Curve) -> tuple[float, TangencyReport]:
    """Leading cubic coefficient and decay diagnostics near the origin.

    Fits F(x)/x^3 by least squares (a constant) over the smallest grid
    decade; the report tracks per-decade suprema of |F|/x^3 and |F|/x^(2/3)
    so growth of the cubic ratio toward 0 is flagged.
    """
    xs, fs = c.xs[1:], c.fs[1:]
    first = xs[0]
    small = xs <= first * 10.0 * (1.0 + 1e-12)
    if int(small.sum()) < 8:
        raise ValueError("need at least 8 samples in the smallest grid decade")
    ratio3 = fs / xs**3
    a3 = float(np.mean(ratio3[small]))

    rows: list[DecadeStats] = []
    lo = first
    while lo < c.x_max * (1.0 - 1e-12):
        hi = min(lo * 10.0, c.x_max)
        mask = (xs >= lo * (1.0 - 1e-12)) & (xs <= hi * (1.0 + 1e-12))
        if mask.any():
            rows.append(
                DecadeStats(
                    lo=float(lo),
                    hi=float(hi),
                    count=int(mask.sum()),
                    sup_cubic_ratio=float(np.max(np.abs(ratio3[mask]))),
                    sup_scaled_23=float(np.max(np.abs(fs[mask]) / xs[mask] ** (2.0 / 3.0))),
                )
            )
        lo = hi
    cubic_bounded = True
    if len(rows) >= 2:
        cubic_bounded = rows[0].sup_cubic_ratio <= 1.5 * rows[1].sup_cubic_ratio + 1e-300
    vanishes = True
    if len(rows) >= 2:
        vanishes = rows[0].sup_scaled_23 <= rows[-1].sup_scaled_23 + 1e-300
    return a3, TangencyReport(a3, tuple(rows), cubic_bounded, vanishes)
