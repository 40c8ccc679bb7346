"""Characteristics through a stored trajectory and the breaking diagnostics built on them."""

import logging
import math

import numpy as np
from scipy import integrate, interpolate as scipy_interpolate
from scipy.special import comb

from src.config import CharacteristicsSettings, settings
from src.errors import DomainError
from src.models.characteristics import (
    BreakingReport,
    CharPath,
    FitResult,
    KnDomination,
    QIntegralBound,
    RatioBracketDiagnostic,
    SigmaSetDiagnostic,
    SlopeSeries,
)
from src.models.field import GridFunction
from src.models.quadrature import DeltaPolicy
from src.models.solution import SolverConfig, SolverState, Trajectory
from src.operators.singular_integral import calibration_constant, kn_bound
from src.operators.spectral import (
    dispersion_apply,
    interpolate,
    refined_minimum,
    spectral_derivative,
    sup_norm,
)

logger = logging.getLogger(__name__)

MAX_TRACKED_ORDER = 4


def _forcing(u: GridFunction, n: int, alpha: float, dispersion: bool) -> GridFunction:
    """K_n = HΛ^α ∂_x^n u, identically zero when dispersion is switched off."""
    derivative = spectral_derivative(u, n)
    if not dispersion:
        return derivative * 0.0
    return dispersion_apply(derivative, alpha)


def advect(
    trajectory: Trajectory,
    seeds: list[float] | np.ndarray,
    max_order: int | None = None,
    t_max: float | None = None,
) -> list[CharPath]:
    """Integrate dX/dt = u(X, t) from each seed with one RK4 step per snapshot interval.

    u is cubic Hermite in time (snapshot values and stored u_t) and
    trigonometric in space. v_n = ∂_x^n u is sampled at every snapshot for
    n = 0..max_order.
    """
    max_order = settings().characteristics.max_order if max_order is None else max_order
    if max_order > MAX_TRACKED_ORDER:
        raise DomainError(f"v_n tracked up to n = {MAX_TRACKED_ORDER}, got {max_order}")

    snapshots = trajectory.snapshots
    final_time = snapshots[-1].t
    truncated = t_max is not None and t_max > final_time
    end_time = final_time if t_max is None else min(t_max, final_time)

    X = np.asarray(seeds, dtype=float).copy()
    times: list[float] = []
    positions: list[np.ndarray] = []
    samples: dict[int, list[np.ndarray]] = {n: [] for n in range(max_order + 1)}

    def sample(index: int) -> None:
        u = snapshots[index].u
        times.append(snapshots[index].t)
        positions.append(X.copy())
        for n in samples:
            samples[n].append(np.atleast_1d(interpolate(spectral_derivative(u, n), X)))

    sample(0)
    for i in range(len(snapshots) - 1):
        left, right = snapshots[i], snapshots[i + 1]
        if left.t >= end_time:
            break
        t0, t1 = left.t, right.t
        h = t1 - t0

        def velocity(t: float, x: np.ndarray) -> np.ndarray:
            spline = scipy_interpolate.CubicHermiteSpline(
                [t0, t1],
                np.vstack([interpolate(left.u, x), interpolate(right.u, x)]),
                np.vstack([interpolate(left.dudt, x), interpolate(right.dudt, x)]),
                axis=0,
            )
            return spline(t)

        k1 = velocity(t0, X)
        k2 = velocity(t0 + 0.5 * h, X + 0.5 * h * k1)
        k3 = velocity(t0 + 0.5 * h, X + 0.5 * h * k2)
        k4 = velocity(t1, X + h * k3)
        X = X + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        sample(i + 1)

    position_array = np.vstack(positions)
    sample_arrays = {n: np.vstack(values) for n, values in samples.items()}
    paths = []
    for j, x0 in enumerate(np.atleast_1d(seeds)):
        paths.append(
            CharPath(
                x0=float(x0),
                times=list(times),
                positions=position_array[:, j].tolist(),
                vn_samples={n: array[:, j].tolist() for n, array in sample_arrays.items()},
                truncated=truncated,
            )
        )
    logger.debug("Advected %d seeds over %d snapshots", len(paths), len(times))
    return paths


def slope_series(trajectory: Trajectory, paths: list[CharPath] | None = None) -> SlopeSeries:
    """m(t) = min_x u_x(x, t) refined below the grid, and q(t) = m(0)/m(t)."""
    m: list[float] = []
    argmin: list[float] = []
    for state in trajectory.snapshots:
        x, value = refined_minimum(spectral_derivative(state.u, 1))
        argmin.append(x)
        m.append(value)

    m0 = m[0]
    degenerate = any(value >= 0.0 for value in m)
    if degenerate:
        logger.warning("Slope infimum is non-negative at some snapshot; data degenerate")
    q = [m0 / value if value < 0.0 else math.inf for value in m]

    ratios = None
    if paths is not None:
        ratios = {path.x0: path_ratio(path, m0) for path in paths}
    return SlopeSeries(
        times=trajectory.times, m=m, argmin_x=argmin, q=q, r=ratios, degenerate=degenerate
    )


def path_ratio(path: CharPath, m0: float) -> list[float]:
    """r(t) = m(0) / v_1(t; x0)."""
    return [m0 / v if v != 0.0 else math.inf for v in path.series(1)]


def residual_vn(trajectory: Trajectory, path: CharPath, n: int) -> list[float]:
    """dv_n/dt + Σ_{j=1}^n C(n,j) v_j v_{n+1-j} + K_n along the path."""
    if n < 0 or n + 1 not in path.vn_samples:
        raise DomainError(f"path carries orders up to {max(path.vn_samples)}; n={n} needs n+1")
    config = trajectory.config
    times = np.asarray(path.times)
    v = {j: np.asarray(path.series(j)) for j in range(n + 2)}

    residual = np.gradient(v[n], times, edge_order=2)
    for j in range(1, n + 1):
        residual = residual + comb(n, j, exact=True) * v[j] * v[n + 1 - j]

    forcing = [
        interpolate(_forcing(state.u, n, config.alpha, config.dispersion), x)
        for state, x in zip(trajectory.snapshots, path.positions, strict=False)
    ]
    residual = residual + np.asarray(forcing[: times.size])
    return residual.tolist()


def _fit_inverse_slope(times: np.ndarray, m: np.ndarray) -> FitResult:
    slope, intercept = np.polyfit(times, 1.0 / m, 1)
    root = -intercept / slope if slope != 0.0 else math.inf
    return FitResult(
        intercept=float(intercept), slope=float(slope), t_root=float(root), samples=times.size
    )


def slope_monotone(slope: SlopeSeries, start: int = 0, rel_tol: float = 1e-9) -> bool:
    """m(t) non-increasing from index start on."""
    m = np.asarray(slope.m[start:])
    if m.size < 2:
        return True
    return bool(np.all(np.diff(m) <= rel_tol * np.abs(m[1:])))


def crossing_time(trajectory: Trajectory, level: float) -> float | None:
    """First time the grid slope minimum drops below level, interpolated in 1/m."""
    records = trajectory.records
    for previous, current in zip(records, records[1:], strict=False):
        if current.min_slope < level <= previous.min_slope:
            if previous.min_slope >= 0.0:
                return current.t
            y0, y1 = 1.0 / previous.min_slope, 1.0 / current.min_slope
            target = 1.0 / level
            weight = (target - y0) / (y1 - y0) if y1 != y0 else 1.0
            return previous.t + weight * (current.t - previous.t)
    return None


def refinement_agreement(
    coarse: Trajectory, fine: Trajectory, level: float, tolerance: float | None = None
) -> tuple[float | None, float | None, bool]:
    """Crossing times of level in two runs and whether they agree to tolerance."""
    if tolerance is None:
        tolerance = settings().characteristics.refinement_agreement
    t_coarse = crossing_time(coarse, level)
    t_fine = crossing_time(fine, level)
    if t_coarse is None or t_fine is None:
        return t_coarse, t_fine, False
    return t_coarse, t_fine, abs(t_coarse - t_fine) <= tolerance * abs(t_fine)


def breaking_detect(
    trajectory: Trajectory,
    eps: float,
    slope: SlopeSeries | None = None,
    reference: Trajectory | None = None,
    config: CharacteristicsSettings | None = None,
) -> BreakingReport:
    """Classify a run and estimate the breaking time from 1/m(t) ≈ 1/m(0) + t.

    Args:
        trajectory: Finished run.
        eps: The ε of the time bracket [-1/((1+ε)m0), -1/((1-ε)²m0)].
        slope: Slope series of the run; computed when omitted.
        reference: The same run on a twice finer grid. A run that reached
            slope_stop is only classified as breaking when its crossing time
            agrees with the reference run.
        config: Fit and agreement settings; defaults to the global ones.

    Returns:
        BreakingReport with the verdict, T_est, the bracket and the checks
        behind the verdict.

    Raises:
        DomainError: eps outside (0, 1).
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    config = config or settings().characteristics
    slope = slope or slope_series(trajectory)
    solver_config = trajectory.config

    m0 = slope.m[0]
    sup_initial = sup_norm(trajectory.snapshots[0].u)
    sup_max = max(max(r.sup_abs_u for r in trajectory.records), sup_initial)
    if m0 < 0.0:
        T_lower = -1.0 / (m0 * (1.0 + eps))
        T_upper = -1.0 / (m0 * (1.0 - eps) ** 2)
    else:
        T_lower = T_upper = math.inf

    report = {
        "stop_reason": trajectory.stop_reason,
        "T_lower": T_lower,
        "T_upper": T_upper,
        "sup_u_max": sup_max,
        "sup_u_initial": sup_initial,
        "m_initial": m0,
        "m_final": slope.m[-1],
        "nonfinite_at": trajectory.nonfinite_at,
        "eps": eps,
    }
    notes: list[str] = []
    if trajectory.nonfinite_at is not None:
        notes.append(
            f"non-finite coefficients at t={trajectory.nonfinite_at:.6g}; "
            "blow-up signal without a resolved slope crossing"
        )

    if trajectory.stop_reason == "t_end":
        return BreakingReport(verdict="no-breaking-by-t_end", **report)
    if trajectory.stop_reason == "under-resolved" or slope.degenerate:
        if slope.degenerate:
            notes.append("slope infimum non-negative")
        elif trajectory.nonfinite_at is None:
            notes.append("resolution exhausted before slope_stop")
        return BreakingReport(verdict="under-resolved", notes=notes, **report)

    times = np.asarray(slope.times)
    m = np.asarray(slope.m)
    count = times.size
    start = max(0, count - max(3, math.ceil(config.fit_fraction * count)))
    window = np.arange(start, count)
    steep = window[m[window] < config.steep_factor * m0]
    if steep.size >= 3:
        window = steep
    fit = _fit_inverse_slope(times[window], m[window])

    robust_start = max(0, count - max(3, math.ceil(config.robust_fraction * count)))
    robust_fit = _fit_inverse_slope(times[robust_start:], m[robust_start:])
    disagreement = abs(fit.t_root - robust_fit.t_root) / abs(fit.t_root)
    robust = disagreement < config.fit_disagreement
    monotone = slope_monotone(slope, int(window[0]))
    bounded = sup_max < solver_config.sup_growth_limit * sup_initial

    refinement_stable = None
    if reference is not None:
        _, _, refinement_stable = refinement_agreement(
            trajectory, reference, solver_config.slope_stop, config.refinement_agreement
        )

    if not bounded:
        notes.append(f"sup|u| grew to {sup_max:.4g} (limit {solver_config.sup_growth_limit}x)")
    if not robust:
        notes.append(f"fit windows disagree by {disagreement:.2%}")
    if not monotone:
        notes.append("m(t) not monotone near the end")
    if refinement_stable is None:
        notes.append("crossing time not confirmed on a refined grid")
    elif not refinement_stable:
        notes.append("crossing time not stable under grid refinement")

    breaking = bool(bounded and robust and monotone and refinement_stable)
    verdict = "breaking" if breaking else "under-resolved"
    logger.info(
        "Verdict %s: T_est=%.6g bracket [%.6g, %.6g]", verdict, fit.t_root, T_lower, T_upper
    )
    return BreakingReport(
        verdict=verdict,
        T_est=fit.t_root,
        in_bracket=T_lower <= fit.t_root <= T_upper,
        fit_quality=disagreement,
        fit_slope=fit.slope,
        monotone=monotone,
        refinement_stable=refinement_stable,
        notes=notes,
        **report,
    )


def _snapshot_index(trajectory: Trajectory, t: float) -> int:
    times = np.asarray(trajectory.times)
    return int(np.argmin(np.abs(times - t)))


def _k1_ratio(state: SolverState, m: float, eps: float, config: SolverConfig) -> float:
    forcing = _forcing(state.u, 1, config.alpha, config.dispersion)
    return float(np.max(np.abs(forcing.values))) / (eps**2 * m**2)


def k1_smallness(
    trajectory: Trajectory, eps: float, slope: SlopeSeries | None = None
) -> list[float]:
    """max_x |K_1| / (ε² m²) per snapshot; at most 1 in the regime of the lemmas."""
    slope = slope or slope_series(trajectory)
    return [
        _k1_ratio(state, m, eps, trajectory.config)
        for state, m in zip(trajectory.snapshots, slope.m, strict=True)
    ]


def sigma_set_diagnostic(
    trajectory: Trajectory,
    eps: float,
    t1: float,
    t2: float,
    paths: list[CharPath] | None = None,
    slope: SlopeSeries | None = None,
) -> SigmaSetDiagnostic:
    """Check Σ(t2) ⊆ Σ(t1) on Lagrangian seed labels."""
    if t1 > t2:
        raise DomainError(f"t1={t1} must not exceed t2={t2}")
    if paths is None:
        n_seeds = settings().characteristics.n_seeds
        length = trajectory.config.domain_length
        seeds = np.arange(n_seeds) * (length / n_seeds)
        paths = advect(trajectory, seeds, max_order=1)
    slope = slope or slope_series(trajectory)

    i1 = _snapshot_index(trajectory, t1)
    i2 = _snapshot_index(trajectory, t2)
    v1 = np.array([path.series(1) for path in paths])
    in_t1 = v1[:, i1] <= (1.0 - eps) * slope.m[i1]
    in_t2 = v1[:, i2] <= (1.0 - eps) * slope.m[i2]
    escaped = int(np.sum(in_t2 & ~in_t1))

    config = trajectory.config
    ratios = [
        _k1_ratio(trajectory.snapshots[i], slope.m[i], eps, config) for i in (i1, i2)
    ]
    return SigmaSetDiagnostic(
        t1=trajectory.snapshots[i1].t,
        t2=trajectory.snapshots[i2].t,
        nested=escaped == 0,
        violation_measure=escaped / len(paths),
        size_t1=int(np.sum(in_t1)),
        size_t2=int(np.sum(in_t2)),
        k1_ratio=max(ratios),
        k1_small=max(ratios) <= 1.0,
    )


def q_integral_bounds(
    slope: SlopeSeries, eps: float, s: float, t: float | None = None, slack: float = 1e-6
) -> QIntegralBound:
    """∫_0^t q^{-s} dτ against its closed form, at every sample time up to t."""
    if not s > 0.0:
        raise DomainError(f"s must be positive, got {s}")
    times = np.asarray(slope.times)
    q = np.asarray(slope.q)
    if t is not None:
        keep = times <= t + 1e-15
        times, q = times[keep], q[keep]
    m0 = slope.m[0]

    lhs = integrate.cumulative_trapezoid(q ** (-s), times, initial=0.0)
    if s == 1.0:
        rhs = -1.0 / ((1.0 - eps) ** 2 * m0) * (math.log(1.0 / (1.0 - eps)) - np.log(q))
    else:
        rhs = (
            -1.0 / ((1.0 - eps) ** (s + 1.0) * m0) / (1.0 - s)
            * ((1.0 - eps) ** (s - 1.0) - q ** (1.0 - s))
        )
    holds = bool(np.all(lhs <= rhs * (1.0 + slack)))
    positive = rhs > 0.0
    worst = float(np.max(lhs[positive] / rhs[positive])) if np.any(positive) else 0.0
    return QIntegralBound(
        s=s, t=float(times[-1]), lhs=float(lhs[-1]), rhs=float(rhs[-1]), holds=holds,
        worst_ratio=worst,
    )


def ratio_bracket_diagnostic(
    paths: list[CharPath], slope: SlopeSeries, eps: float, slack: float = 1e-6
) -> RatioBracketDiagnostic:
    """q <= r <= q/(1-ε) and the dr/dt bracket on the paths ending in Σ."""
    m0 = slope.m[0]
    q = np.asarray(slope.q)
    times = np.asarray(slope.times)
    worst_sandwich = 0.0
    worst_derivative = 0.0
    counted = 0
    for path in paths:
        v1 = np.asarray(path.series(1))
        if v1[-1] > (1.0 - eps) * slope.m[len(v1) - 1]:
            continue
        counted += 1
        r = m0 / v1
        qs = q[: r.size]
        worst_sandwich = max(
            worst_sandwich, float(np.max(qs / r)), float(np.max(r * (1.0 - eps) / qs))
        )
        drdt = np.diff(r) / np.diff(times[: r.size])
        # (1+ε)m0 <= dr/dt <= (1-ε)m0, expressed as ratios to m0 (m0 < 0)
        ratio = drdt / m0
        worst_derivative = max(
            worst_derivative,
            float(np.max(ratio / (1.0 + eps))) if ratio.size else 0.0,
            float(np.max((1.0 - eps) / ratio)) if ratio.size else 0.0,
        )
    return RatioBracketDiagnostic(
        paths=counted,
        sandwich_holds=worst_sandwich <= 1.0 + slack,
        derivative_holds=worst_derivative <= 1.0 + slack,
        worst_sandwich=worst_sandwich,
        worst_derivative=worst_derivative,
    )


def kn_domination(
    trajectory: Trajectory, n: int, slope: SlopeSeries, policy: DeltaPolicy
) -> KnDomination:
    """sup_x |K_n| (kernel normalisation) against kn_bound at the policy radius."""
    config = trajectory.config
    constant = calibration_constant(config.alpha)
    quarter = 0.25 * config.domain_length
    measured = []
    bounds = []
    for state, q in zip(trajectory.snapshots, slope.q, strict=True):
        forcing = _forcing(state.u, n, config.alpha, config.dispersion)
        measured.append(sup_norm(forcing) / constant)
        delta = min(policy.radius(n, q), quarter)
        bounds.append(
            kn_bound(
                config.alpha,
                delta,
                sup_norm(spectral_derivative(state.u, n)),
                sup_norm(spectral_derivative(state.u, n + 1)),
            )
        )
    violations = sum(1 for a, b in zip(measured, bounds, strict=True) if a > b)
    return KnDomination(
        n=n, times=trajectory.times, measured=measured, bounds=bounds, violations=violations
    )
