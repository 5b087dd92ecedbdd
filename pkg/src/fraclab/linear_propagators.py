"""The linear flow w_t = -(-Laplace)^{alpha/2} w + kappa V_h w.

V_h is the inverse-power potential |x|^{-alpha} floored at the half-cell
radius.  Steps use Strang splitting (potential, diffusion, potential), so
every substep is a positive operator and nonnegativity is exact.  Runs over
distinct fields share nothing mutable beyond the per-grid array cache.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import power_map_coeff_max, solve_sigma
from .field import (
    Field,
    Grid,
    WeightSpec,
    _cached,
    _symbol,
    heat_propagate,
    weight_values,
    weighted_norm,
)


@dataclass(frozen=True)
class HardyOperatorSpec:
    """Parameters of the operator; cap radius None means h/2 of the grid."""

    alpha: float
    d: int
    kappa: float
    potential_cap_radius: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2, or 3, got {self.d}")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")
        if self.potential_cap_radius is not None and not self.potential_cap_radius > 0.0:
            raise ValueError("potential_cap_radius must be positive")

    def cap_radius(self, grid: Grid) -> float:
        if self.potential_cap_radius is not None:
            return self.potential_cap_radius
        return 0.5 * grid.h

    def potential(self, grid: Grid) -> np.ndarray:
        """kappa * max(|x|, cap)^{-alpha} on the lattice (cached per grid)."""
        cap = self.cap_radius(grid)
        key = ("potential", self.alpha, self.kappa, cap)

        def build(g):
            r = np.maximum(g.radius(), cap)
            return self.kappa * r ** (-self.alpha)

        return _cached(grid, key, build)

    def sigma(self) -> float:
        """Weight exponent: the smaller root of the power-map equation.

        Raises for kappa beyond the critical coupling (no root exists and
        the weighted theory does not apply).
        """
        if self.kappa == 0.0:
            return 0.0
        return solve_sigma(self.kappa, self.d, self.alpha)

    def weight(self, t: float) -> WeightSpec | None:
        sigma = self.sigma()
        if sigma == 0.0:
            return None
        return WeightSpec(sigma=sigma, t=t, alpha=self.alpha)


def hardy_step(w: Field, dt: float, spec: HardyOperatorSpec) -> Field:
    """One Strang step exp(V dt/2) exp(-dt (-Lap)^{a/2}) exp(V dt/2)."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if spec.d != w.grid.d:
        raise ValueError(f"spec dimension {spec.d} does not match grid {w.grid.d}")
    if spec.kappa == 0.0:
        return heat_propagate(w, dt, spec.alpha)
    grid = w.grid
    half = np.exp(0.5 * dt * spec.potential(grid))
    values = half * w.values
    spectrum = np.fft.rfftn(values)
    spectrum *= np.exp(-dt * _symbol(grid, spec.alpha))
    values = np.fft.irfftn(spectrum, s=grid.shape, axes=tuple(range(grid.d)))
    return Field(grid, half * values)


def dyadic_schedule(grid: Grid, alpha: float, horizon: float) -> np.ndarray:
    """Output times {t0 * 2^k} up to the horizon, t0 = 4 h^alpha.

    Below t0 the discrete kernel is under-resolved, so nothing is recorded
    there.
    """
    t0 = 4.0 * grid.h ** alpha
    if horizon < t0:
        raise ValueError(f"horizon {horizon} is below the first resolved time {t0}")
    count = int(math.floor(math.log2(horizon / t0))) + 1
    return t0 * 2.0 ** np.arange(count)


@dataclass(frozen=True)
class NormSeries:
    """Plain and weighted L^q norms along an evolution, q in {1, 2, inf}."""

    times: np.ndarray
    sigma: float
    plain_q1: np.ndarray
    plain_q2: np.ndarray
    plain_qinf: np.ndarray
    weighted_q1: np.ndarray
    weighted_q2: np.ndarray
    weighted_qinf: np.ndarray
    final: Field

    def rows(self):
        """Rows matching the CSV column order of the linear-evolve command."""
        cols = (
            self.times,
            self.plain_q1,
            self.plain_q2,
            self.plain_qinf,
            self.weighted_q1,
            self.weighted_q2,
            self.weighted_qinf,
        )
        return list(zip(*cols))


def _check_schedule(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("schedule must be a nonempty 1-d array of times")
    if not (times[0] > 0.0 and np.all(np.diff(times) > 0.0)):
        raise ValueError("schedule times must be positive and strictly increasing")
    return times


def hardy_evolve(
    w0: Field,
    spec: HardyOperatorSpec,
    times,
    substeps_per_interval: int = 24,
) -> NormSeries:
    """Evolve w0 and record norms at each scheduled time.

    Each interval between consecutive output times (starting from 0) is
    covered by equal Strang substeps; the splitting error is O(dt^2) per
    substep and the potential substep is exact.
    """
    times = _check_schedule(times)
    if substeps_per_interval < 1:
        raise ValueError("substeps_per_interval must be at least 1")
    if float(np.min(w0.values)) < 0.0:
        raise ValueError("w0 must be nonnegative")
    sigma = spec.sigma()  # raises for supercritical kappa before any work

    w = w0
    t_prev = 0.0
    plain = {1.0: [], 2.0: [], math.inf: []}
    weighted = {1.0: [], 2.0: [], math.inf: []}
    for t_out in times:
        dt = (t_out - t_prev) / substeps_per_interval
        for _ in range(substeps_per_interval):
            w = hardy_step(w, dt, spec)
        t_prev = t_out
        wspec = spec.weight(t_out)
        for q in plain:
            plain[q].append(weighted_norm(w, q))
            weighted[q].append(weighted_norm(w, q, wspec))
    return NormSeries(
        times=times,
        sigma=sigma,
        plain_q1=np.array(plain[1.0]),
        plain_q2=np.array(plain[2.0]),
        plain_qinf=np.array(plain[math.inf]),
        weighted_q1=np.array(weighted[1.0]),
        weighted_q2=np.array(weighted[2.0]),
        weighted_qinf=np.array(weighted[math.inf]),
        final=w,
    )


# ---------------------------------------------------------------------------
# kernel-ratio probe


@dataclass(frozen=True)
class RatioProbeResult:
    times: np.ndarray
    max_ratio: np.ndarray
    median_ratio: np.ndarray
    min_ratio: np.ndarray

    @property
    def overall_max(self) -> float:
        return float(np.max(self.max_ratio))


def cell_delta(grid: Grid, y) -> tuple[Field, tuple]:
    """Unit-mass indicator of the grid cell nearest to the point y."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size != grid.d:
        raise ValueError(f"y must have {grid.d} coordinates, got {y.size}")
    ax = grid.axis()
    idx = tuple(int(np.argmin(np.abs(ax - c))) for c in y)
    values = np.zeros(grid.shape)
    values[idx] = grid.h ** (-grid.d)
    return Field(grid, values), idx


def kernel_ratio_probe(
    grid: Grid,
    spec: HardyOperatorSpec,
    y,
    times,
    window_radius: float | None = None,
    support_floor: float = 1e-13,
    substeps_per_interval: int = 32,
) -> RatioProbeResult:
    """Measure e^{-tH}(x, y) / (phi(x, t) phi(y, t) G_alpha(x - y, t)).

    The numerator is the evolution of a unit-mass cell delta at y; the free
    kernel G_alpha comes from the same delta under kappa = 0 (exact, since
    the free flow is diagonal).  Samples keep |x - y| within the window,
    drop the origin cell (the continuum weight is singular there), and drop
    points where the free kernel has decayed under the support floor.
    """
    bound = power_map_coeff_max(spec.d, spec.alpha)
    if spec.kappa > bound + 1e-12:
        raise ValueError(
            f"kappa = {spec.kappa} exceeds the critical coupling {bound}; "
            "the kernel bound hypothesis fails"
        )
    times = _check_schedule(times)
    delta, idx = cell_delta(grid, y)
    y_point = tuple(grid.axis()[i] for i in idx)
    if window_radius is None:
        window_radius = 0.25 * grid.half_length

    # distance from the source point, unwrapped coordinates
    ax = grid.axis()
    dist_sq = np.zeros(grid.shape)
    for k in range(grid.d):
        shape = [1] * grid.d
        shape[k] = grid.n
        dist_sq = dist_sq + ((ax - y_point[k]) ** 2).reshape(shape)
    in_window = np.sqrt(dist_sq) <= window_radius
    off_origin = grid.radius() > 0.0

    w = delta
    t_prev = 0.0
    max_r, med_r, min_r = [], [], []
    for t_out in times:
        dt = (t_out - t_prev) / substeps_per_interval
        for _ in range(substeps_per_interval):
            w = hardy_step(w, dt, spec)
        t_prev = t_out
        free = heat_propagate(delta, t_out, spec.alpha)
        wspec = spec.weight(t_out)
        phi = np.ones(grid.shape) if wspec is None else weight_values(grid, wspec)
        mask = in_window & off_origin & (free.values > support_floor * np.max(free.values))
        ratio = w.values[mask] / (phi[mask] * phi[idx] * free.values[mask])
        max_r.append(float(np.max(ratio)))
        med_r.append(float(np.median(ratio)))
        min_r.append(float(np.min(ratio)))
    return RatioProbeResult(
        times=times,
        max_ratio=np.array(max_r),
        median_ratio=np.array(med_r),
        min_ratio=np.array(min_r),
    )


# ---------------------------------------------------------------------------
# hypercontractivity


@dataclass(frozen=True)
class HypercontractivityResult:
    slope: float
    expected: float
    times: np.ndarray
    norms: np.ndarray


def hypercontractivity_measure(
    w0: Field,
    spec: HardyOperatorSpec,
    q: float,
    r: float,
    times,
    substeps_per_interval: int = 24,
) -> HypercontractivityResult:
    """Fit the decay exponent of the weighted q-norm of e^{-tH} w0.

    For a datum with finite weighted r-norm the smoothing gain is
    -(d/alpha)(1/r - 1/q); the fitted slope is returned next to that target.
    """
    if not 1.0 <= r <= q:
        raise ValueError(f"need 1 <= r <= q, got r={r}, q={q}")
    times = _check_schedule(times)
    if times.size < 3 or times[-1] < 2.0 * times[0]:
        raise ValueError("degenerate fit window: need >= 3 times spanning a factor 2")
    if q == 1.0 or q == 2.0 or math.isinf(q):
        series = hardy_evolve(w0, spec, times, substeps_per_interval)
        norms = {
            1.0: series.weighted_q1,
            2.0: series.weighted_q2,
            math.inf: series.weighted_qinf,
        }[q]
    else:
        # general q: evolve once recording just this norm
        if float(np.min(w0.values)) < 0.0:
            raise ValueError("w0 must be nonnegative")
        w = w0
        t_prev = 0.0
        vals = []
        for t_out in times:
            dt = (t_out - t_prev) / substeps_per_interval
            for _ in range(substeps_per_interval):
                w = hardy_step(w, dt, spec)
            t_prev = t_out
            vals.append(weighted_norm(w, q, spec.weight(t_out)))
        norms = np.array(vals)
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    expected = -(spec.d / spec.alpha) * (inv_r - inv_q)
    slope = float(np.polyfit(np.log(times), np.log(norms), 1)[0])
    return HypercontractivityResult(
        slope=slope, expected=expected, times=times, norms=norms
    )
