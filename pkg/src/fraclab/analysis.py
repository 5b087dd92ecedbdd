"""Experiment harness: power-law slope fits, the blowup-threshold
bisection, steady-approach rate checks, and closed-form tail envelopes.

Everything here consumes ExperimentConfig and the solver's RunRecord;
nothing mutates shared state, so the sweep executor can run jobs on a
plain thread pool (the FFT work releases the GIL).
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .config import ExperimentConfig
from .constants import (
    ModelParams,
    kappa_from_delta,
    singular_amplitude,
    solve_sigma,
)
from .field import Field, WeightSpec, steady_state, weighted_norm
from .morrey import MorreyQuery, morrey_norm
from .nonlinear_solver import Blowup, Global, NumericalFailure, evolve


# ---------------------------------------------------------------------------
# power-law fitting


@dataclass(frozen=True)
class FitResult:
    """Least-squares slope of log(value) against log(time).

    Windows produced by this module sit inside the image-safe horizon;
    an explicit window is the caller's responsibility.
    """

    exponent: float
    stderr: float
    window: tuple
    n_points: int


def image_safe_horizon(grid, alpha: float) -> float:
    """Largest time with the self-similar scale t^{1/alpha} at L/8, one
    octave inside the periodic images."""
    return (grid.half_length / 8.0) ** alpha


def default_fit_window(times, grid, alpha: float) -> tuple:
    """Last time decade of the schedule inside the image-safe horizon."""
    times = np.asarray(times, dtype=float)
    horizon = image_safe_horizon(grid, alpha)
    usable = times[(times > 0.0) & (times <= horizon * (1.0 + 1e-12))]
    if usable.size == 0:
        raise ValueError(
            f"no positive schedule times inside the image-safe horizon {horizon:.6g}"
        )
    hi = float(usable.max())
    return (hi / 10.0, hi)


def fit_power_law(times, values, window=None) -> FitResult:
    """Fit value = C t^a on the window; returns the slope a with its
    standard error from the fit residuals.

    Fewer than 5 usable points, or nonpositive values in the window,
    raise ValueError.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be matching 1-d arrays")
    if window is None:
        if times.size == 0:
            raise ValueError("empty series")
        window = (float(times.min()), float(times.max()))
    lo, hi = float(window[0]), float(window[1])
    if not 0.0 < lo < hi:
        raise ValueError(f"window must satisfy 0 < t_min < t_max, got ({lo}, {hi})")
    sel = (times >= lo * (1.0 - 1e-12)) & (times <= hi * (1.0 + 1e-12))
    ts = times[sel]
    vs = values[sel]
    if ts.size < 5:
        raise ValueError(f"need at least 5 points in the fit window, got {ts.size}")
    if np.any(vs <= 0.0):
        raise ValueError("values must be positive inside the fit window")
    x = np.log(ts)
    y = np.log(vs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    # slope variance: RSS/(n-2) / sum (x - xbar)^2
    sxx = float(np.sum((x - np.mean(x)) ** 2))
    stderr = math.sqrt(float(np.sum(resid**2)) / (ts.size - 2) / sxx)
    return FitResult(float(slope), stderr, (lo, hi), int(ts.size))


# ---------------------------------------------------------------------------
# sweep executor


def thread_count(threads=None) -> int:
    """Worker count: explicit argument, else FRACLAB_THREADS, else 1."""
    if threads is not None:
        n = int(threads)
    else:
        n = int(os.environ.get("FRACLAB_THREADS", "1"))
    if n < 1:
        raise ValueError(f"thread count must be positive, got {n}")
    return n


def run_sweep(configs, threads=None, keep_snapshots: bool = False) -> list:
    """Evolve independent configs, preserving input order in the results.

    Jobs are deterministic per config, so any worker count yields the
    same records.
    """
    configs = list(configs)
    workers = min(thread_count(threads), max(len(configs), 1))
    job = lambda cfg: evolve(cfg, keep_snapshots=keep_snapshots)
    if workers == 1:
        return [job(cfg) for cfg in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, configs))


# ---------------------------------------------------------------------------
# threshold bisection


class MonotonicityError(RuntimeError):
    """A Global verdict appeared above a Blowup amplitude; order
    preservation forbids that, so the solver (not the data) is wrong."""


@dataclass(frozen=True)
class ThresholdBracket:
    """Amplitude bracket around the global/blowup transition."""

    lambda_global: float
    lambda_blowup: float
    ratio: float
    morrey_global: float
    morrey_blowup: float


def _scaled(config: ExperimentConfig, lam: float) -> ExperimentConfig:
    initial = replace(config.initial, scale=config.initial.scale * lam)
    return replace(config, initial=initial)


def _verdict(record) -> str:
    if isinstance(record.status, NumericalFailure):
        raise RuntimeError(f"numerical failure during classification: {record.status.reason}")
    return "Global" if isinstance(record.status, Global) else "Blowup"


class _ObservationLog:
    """Amplitude -> verdict cache, optionally persisted as JSON so an
    interrupted bisection resumes instead of recomputing."""

    def __init__(self, config_hash: str, path=None):
        self.config_hash = config_hash
        self.path = path
        self.seen = {}
        if path is not None and os.path.exists(path):
            with open(path) as fh:
                state = json.load(fh)
            if state.get("config_hash") != config_hash:
                raise ValueError(
                    f"state file {path} belongs to config {state.get('config_hash')!r}, "
                    f"not {config_hash!r}"
                )
            self.seen = {float(lam): kind for lam, kind in state["observations"]}

    def record(self, lam: float, kind: str):
        self.seen[lam] = kind
        self._check_monotone()
        if self.path is not None:
            state = {
                "config_hash": self.config_hash,
                "observations": sorted(self.seen.items()),
            }
            with open(self.path, "w") as fh:
                json.dump(state, fh, indent=2)

    def _check_monotone(self):
        globals_ = [lam for lam, kind in self.seen.items() if kind == "Global"]
        blowups = [lam for lam, kind in self.seen.items() if kind == "Blowup"]
        if globals_ and blowups and max(globals_) > min(blowups):
            raise MonotonicityError(
                f"Global at lambda = {max(globals_):.6g} above Blowup at "
                f"lambda = {min(blowups):.6g}; order preservation is violated"
            )


def classify_threshold(
    config: ExperimentConfig,
    lambda_lo: float,
    lambda_hi: float,
    tol: float = 0.1,
    state_path=None,
    threads=None,
    max_iter: int = 40,
    reverify: bool = True,
) -> ThresholdBracket:
    """Geometric bisection of the datum amplitude until the bracket
    ratio drops to 1 + tol.

    The endpoints must straddle the transition (lambda_lo Global,
    lambda_hi Blowup).  Every verdict lands in a monotonicity check;
    with reverify the final bracket is reclassified at halved eta.
    Returns the bracket with the Morrey norm of the scaled datum at
    both ends, at the critical index s = d (p - 1) / alpha.
    """
    params = config.params
    if not 0.0 < lambda_lo < lambda_hi:
        raise ValueError(f"need 0 < lambda_lo < lambda_hi, got ({lambda_lo}, {lambda_hi})")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if config.initial.kind == "zero":
        raise ValueError("cannot bisect amplitude on the zero datum")
    s_index = params.d * (params.p - 1.0) / params.alpha
    if not s_index > 1.0:
        raise ValueError(
            f"Morrey index d(p-1)/alpha = {s_index:.4g} needs p > 1 + alpha/d"
        )

    log = _ObservationLog(config.config_hash(), state_path)

    def observe(lams):
        missing = [lam for lam in lams if lam not in log.seen]
        records = run_sweep([_scaled(config, lam) for lam in missing], threads)
        for lam, rec in zip(missing, records):
            log.record(lam, _verdict(rec))
        return [log.seen[lam] for lam in lams]

    lo_kind, hi_kind = observe([lambda_lo, lambda_hi])
    if lo_kind != "Global":
        raise ValueError(f"lambda_lo = {lambda_lo} classified {lo_kind}; bracket must straddle")
    if hi_kind != "Blowup":
        raise ValueError(f"lambda_hi = {lambda_hi} classified {hi_kind}; bracket must straddle")

    lo, hi = lambda_lo, lambda_hi
    for _ in range(max_iter):
        if hi / lo <= 1.0 + tol:
            break
        mid = math.sqrt(lo * hi)
        (kind,) = observe([mid])
        if kind == "Global":
            lo = mid
        else:
            hi = mid
    else:
        raise RuntimeError(f"bracket ratio {hi / lo:.4g} after {max_iter} iterations")

    if reverify:
        timing = replace(config.time, eta=config.time.eta / 2.0)
        fine = replace(config, time=timing)
        checks = run_sweep([_scaled(fine, lo), _scaled(fine, hi)], threads)
        kinds = [_verdict(rec) for rec in checks]
        if kinds != ["Global", "Blowup"]:
            raise RuntimeError(
                f"bracket unstable under halved eta: got {kinds[0]}/{kinds[1]} "
                f"at lambda = {lo:.6g}/{hi:.6g}"
            )

    query = MorreyQuery(s=s_index, q=1.0)
    grid = config.build_grid()
    return ThresholdBracket(
        lambda_global=lo,
        lambda_blowup=hi,
        ratio=hi / lo,
        morrey_global=morrey_norm(_scaled(config, lo).initial_field(grid), query),
        morrey_blowup=morrey_norm(_scaled(config, hi).initial_field(grid), query),
    )


# ---------------------------------------------------------------------------
# steady-state deficit runs

# The capped steady sample is not a discrete fixed point: its core cell
# drifts by O(1) under the splitting scheme, self-similarly in h.  All
# deficit measurements therefore compare against a reference run started
# from the b = 0 datum, which cancels that shared background exactly.


@dataclass(frozen=True)
class DeficitEvolution:
    """Reference-minus-run differences at the schedule times inside the
    image-safe horizon."""

    times: np.ndarray
    deficits: tuple
    reference_drift: float


def deficit_evolution(config: ExperimentConfig) -> DeficitEvolution:
    """Co-run config and its b = 0 twin; returns w(t) = u_ref(t) - u(t).

    Both runs must stay global.  reference_drift records how far the
    reference trajectory moves off the steady sample in sup norm,
    relative to the sample's sup.
    """
    if config.initial.kind not in ("steady_deficit_tail", "steady_deficit_bump"):
        raise ValueError(
            f"needs a steady-deficit initial datum, got {config.initial.kind!r}"
        )
    reference = replace(config, initial=replace(config.initial, b=0.0))
    run_rec, ref_rec = run_sweep([config, reference], keep_snapshots=True)
    for rec, label in ((run_rec, "deficit run"), (ref_rec, "reference run")):
        if not isinstance(rec.status, Global):
            raise RuntimeError(f"{label} did not stay global: {rec.status_dict()}")
    grid = config.build_grid()
    horizon = image_safe_horizon(grid, config.params.alpha)
    sample = steady_state(grid, config.params).values
    sample_sup = float(np.max(sample))

    times = []
    deficits = []
    drift = 0.0
    for t, u, ref in zip(run_rec.times, run_rec.snapshots, ref_rec.snapshots):
        if not 0.0 < t <= horizon * (1.0 + 1e-12):
            continue
        times.append(t)
        deficits.append(ref.values - u.values)
        drift = max(drift, float(np.max(np.abs(ref.values - sample))) / sample_sup)
    if not times:
        raise ValueError("no schedule times inside the image-safe horizon")
    return DeficitEvolution(np.asarray(times), tuple(deficits), drift)


def _resolve_sigma(config: ExperimentConfig, sigma) -> float:
    if sigma is not None:
        if not sigma >= 0.0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        return float(sigma)
    return solve_sigma(config.kappa(), config.params.d, config.params.alpha)


def _monotone(series) -> bool:
    series = np.asarray(series)
    slack = 1e-9 * float(np.max(series, initial=0.0))
    return bool(np.all(np.diff(series) <= slack))


@dataclass(frozen=True)
class ConvergenceRates:
    """Inner/outer approach rates toward the steady state.

    Fits are None in the at_floor (b = 0) and ell = sigma modes; the
    monotone flags are evaluated over the fit window either way.
    """

    inner: FitResult | None
    outer: FitResult | None
    times: np.ndarray
    inner_sup: np.ndarray
    outer_sup: np.ndarray
    sigma: float
    ell: float
    inner_monotone: bool
    outer_monotone: bool
    at_floor: bool
    reference_drift: float


def singular_convergence_rates(config: ExperimentConfig, sigma=None) -> ConvergenceRates:
    """Measure how a tail deficit closes: fits sup_{r <= t^{1/a}} r^s w
    against -(ell - sigma)/alpha and sup_{t^{1/a} <= r <= L/4} w against
    -ell/alpha, with w the reference-minus-run difference.

    At ell = sigma the rates degenerate and the check becomes monotone
    decrease of both series; at b = 0 both series sit at the rounding
    floor and no fit is attempted.
    """
    if config.initial.kind != "steady_deficit_tail":
        raise ValueError(
            f"needs a steady_deficit_tail initial datum, got {config.initial.kind!r}"
        )
    params = config.params
    sigma = _resolve_sigma(config, sigma)
    ell = config.initial.ell
    if not sigma <= ell < params.d - sigma:
        raise ValueError(
            f"ell must lie in [sigma, d - sigma) = [{sigma:.6g}, {params.d - sigma:.6g}), "
            f"got {ell}"
        )

    grid = config.build_grid()
    rc = grid.capped_radius()
    run = deficit_evolution(config)
    inner_sup = np.empty(run.times.size)
    outer_sup = np.empty(run.times.size)
    for i, (t, w) in enumerate(zip(run.times, run.deficits)):
        edge = t ** (1.0 / params.alpha)
        inner = rc <= edge
        outer = (rc >= edge) & (rc <= grid.half_length / 4.0)
        if not inner.any() or not outer.any():
            raise ValueError(f"fit region empty at t = {t:.6g}; window collapsed")
        inner_sup[i] = np.max(rc[inner] ** sigma * w[inner])
        outer_sup[i] = np.max(w[outer])

    window = default_fit_window(run.times, grid, params.alpha)
    in_window = (run.times >= window[0] * (1.0 - 1e-12)) & (
        run.times <= window[1] * (1.0 + 1e-12)
    )
    floor = 1e-13 * float(np.max(steady_state(grid, params).values))
    at_floor = max(inner_sup.max(), outer_sup.max()) <= floor
    degenerate = abs(ell - sigma) <= 1e-12
    if at_floor or degenerate:
        inner_fit = outer_fit = None
    else:
        inner_fit = fit_power_law(run.times, inner_sup, window)
        outer_fit = fit_power_law(run.times, outer_sup, window)
    return ConvergenceRates(
        inner=inner_fit,
        outer=outer_fit,
        times=run.times,
        inner_sup=inner_sup,
        outer_sup=outer_sup,
        sigma=sigma,
        ell=ell,
        inner_monotone=_monotone(inner_sup[in_window]),
        outer_monotone=_monotone(outer_sup[in_window]),
        at_floor=at_floor,
        reference_drift=run.reference_drift,
    )


def l2_stability_check(config: ExperimentConfig, sigma=None) -> FitResult:
    """Fit the L^2 decay of a bump deficit; the expected slope is
    -(d - 2 sigma)/(2 alpha).

    Raises if the difference dips negative beyond rounding (order
    preservation must hold between the run and its reference), if the
    series is not monotone non-increasing on the fit window, or if the
    deficit sits at the rounding floor (b = 0: nothing to fit).
    """
    if config.initial.kind != "steady_deficit_bump":
        raise ValueError(
            f"needs a steady_deficit_bump initial datum, got {config.initial.kind!r}"
        )
    grid = config.build_grid()
    run = deficit_evolution(config)
    h_d = grid.h**grid.d
    values = np.array([math.sqrt(np.sum(w**2) * h_d) for w in run.deficits])

    peak = max(float(np.max(np.abs(w))) for w in run.deficits)
    floor = 1e-13 * float(np.max(steady_state(grid, config.params).values))
    if peak <= floor:
        raise ValueError("deficit at the rounding floor; no rate to fit")
    worst = min(float(np.min(w)) for w in run.deficits)
    if worst < -1e-6 * peak:
        raise RuntimeError(
            f"deficit went negative ({worst:.3g} against peak {peak:.3g}); "
            "the run overtook its reference"
        )
    window = default_fit_window(run.times, grid, config.params.alpha)
    in_window = (run.times >= window[0] * (1.0 - 1e-12)) & (
        run.times <= window[1] * (1.0 + 1e-12)
    )
    if not _monotone(values[in_window]):
        raise RuntimeError("L2 deficit is not monotone non-increasing on the fit window")
    return fit_power_law(run.times, values, window)


# ---------------------------------------------------------------------------
# weighted decay of small data


def weighted_decay_check(config: ExperimentConfig, qs=(1.0, 2.0, math.inf)) -> dict:
    """Fit ||u(t)||_{q, phi_sigma(t)} for each q; the expected slope is
    -(d/alpha)(1 - 1/q), with sigma solved from kappa_delta = (delta s)^{p-1}.

    The datum must sit below delta * u_inf pointwise (the barrier class
    for global existence of small data); delta comes from the potential
    section, falling back to the initial section where it has one.
    """
    params = config.params
    delta = config.potential.delta
    if delta is None and config.initial.kind in ("truncated_singular", "power_tail"):
        delta = config.initial.delta
    if delta is None:
        raise ValueError("needs delta (potential section) to form the barrier class")
    sigma = solve_sigma(kappa_from_delta(params, delta), params.d, params.alpha)

    grid = config.build_grid()
    barrier = delta * steady_state(grid, params).values
    u0 = config.initial_field(grid).values
    excess = float(np.max(u0 - barrier))
    if excess > 1e-12 * float(np.max(barrier)):
        raise ValueError(
            f"datum exceeds delta * u_inf by {excess:.3g}; outside the barrier class"
        )

    record = evolve(config, keep_snapshots=True)
    if not isinstance(record.status, Global):
        raise RuntimeError(f"run did not stay global: {record.status_dict()}")
    horizon = image_safe_horizon(grid, params.alpha)
    keep = [
        (t, snap)
        for t, snap in zip(record.times, record.snapshots)
        if 0.0 < t <= horizon * (1.0 + 1e-12)
    ]
    if not keep:
        raise ValueError("no schedule times inside the image-safe horizon")
    times = np.array([t for t, _ in keep])
    window = default_fit_window(times, grid, params.alpha)

    out = {}
    for q in qs:
        series = np.array(
            [weighted_norm(snap, q, WeightSpec(sigma, t, params.alpha)) for t, snap in keep]
        )
        out[q] = fit_power_law(times, series, window)
    return out


# ---------------------------------------------------------------------------
# tail-deficit envelope


class EnvelopeMax(NamedTuple):
    radius: float
    value: float


def envelope_max(params: ModelParams, b: float, ell: float, sigma: float, t: float) -> EnvelopeMax:
    """Closed-form maximum of s r^{-m} - b t^{(sigma-ell)/alpha} r^{-sigma}.

    Needs sigma (p - 1) > alpha (so the dent is steeper than the steady
    tail and an interior maximum exists) and ell >= sigma.  The argmax
    grows like t^{(sigma-ell)(p-1)/(alpha(sigma(p-1)-alpha))} and the
    maximum like t^{(ell-sigma)/(sigma(p-1)-alpha)}; at ell = sigma both
    are t-free.
    """
    m = params.alpha / (params.p - 1.0)
    if not sigma * (params.p - 1.0) > params.alpha:
        raise ValueError(
            f"need sigma (p - 1) > alpha, got {sigma * (params.p - 1.0):.6g} "
            f"vs {params.alpha}"
        )
    if not ell >= sigma:
        raise ValueError(f"need ell >= sigma, got ell = {ell} < sigma = {sigma}")
    if not b > 0.0:
        raise ValueError(f"b must be positive, got {b}")
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t}")
    s = singular_amplitude(params)
    btilde = b * t ** ((sigma - ell) / params.alpha)
    radius = (sigma * btilde / (m * s)) ** (1.0 / (sigma - m))
    value = s * (1.0 - m / sigma) * radius ** (-m)
    return EnvelopeMax(radius=float(radius), value=float(value))
