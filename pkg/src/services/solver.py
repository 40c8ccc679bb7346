"""Time integration of u_t + HΛ^α u + u u_x = 0 on the torus.

The linear part is diagonal in Fourier space and integrated exactly by
fourth-order exponential time differencing; the nonlinearity -½(u²)_x is
formed pseudospectrally with optional 2/3-rule dealiasing. The φ-function
coefficients are contour averages, which stay accurate at ξ = 0.
"""

import logging
import math
from collections.abc import Callable
from functools import lru_cache

import numpy as np
from scipy import fft

from src.errors import DomainError, NumericOverflowError
from src.models.characteristics import SlopeSeries
from src.models.field import Alpha, GridFunction, as_alpha
from src.models.solution import (
    ConservedDiagnostics,
    EnergyIdentity,
    RefinementEvent,
    SolverConfig,
    SolverState,
    StepRecord,
    Trajectory,
    UxxBoundCheck,
)
from src.operators.spectral import (
    dealias_mask,
    dispersion_symbol,
    high_band_fraction,
    pad,
    sobolev_norm,
    spectral_derivative,
)

logger = logging.getLogger(__name__)

CONTOUR_POINTS = 64
_CONTOUR_BLOCK = 4096


@lru_cache(maxsize=32)
def _operators(
    domain_length: float, n_points: int, alpha: float, dispersion: bool, dealias: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Linear multiplier L_k = -m(ξ_k) and the nonlinear multiplier -½ iξ_k·mask."""
    xi = 2.0 * np.pi * np.arange(n_points // 2 + 1) / domain_length
    if dispersion:
        linear = -dispersion_symbol(xi, alpha)
        linear[-1] = 0.0
    else:
        linear = np.zeros(xi.size, dtype=complex)
    mask = dealias_mask(n_points) if dealias else np.ones(xi.size, dtype=bool)
    mask[-1] = False
    nonlinear = np.where(mask, -0.5j * xi, 0.0)
    for array in (linear, nonlinear):
        array.flags.writeable = False
    return linear, nonlinear


@lru_cache(maxsize=16)
def _etd_coefficients(
    domain_length: float, n_points: int, alpha: float, dispersion: bool, dt: float
) -> tuple[np.ndarray, ...]:
    """E, E2, Q, f1, f2, f3 of ETDRK4 for step dt (dt may be negative)."""
    linear, _ = _operators(domain_length, n_points, alpha, dispersion, True)
    roots = np.exp(2j * np.pi * (np.arange(CONTOUR_POINTS) + 0.5) / CONTOUR_POINTS)
    E = np.exp(dt * linear)
    E2 = np.exp(0.5 * dt * linear)
    Q = np.empty_like(linear)
    f1 = np.empty_like(linear)
    f2 = np.empty_like(linear)
    f3 = np.empty_like(linear)
    for start in range(0, linear.size, _CONTOUR_BLOCK):
        block = slice(start, start + _CONTOUR_BLOCK)
        LR = dt * linear[block, None] + roots[None, :]
        eLR = np.exp(LR)
        Q[block] = dt * np.mean((np.exp(0.5 * LR) - 1.0) / LR, axis=1)
        f1[block] = dt * np.mean((-4.0 - LR + eLR * (4.0 - 3.0 * LR + LR**2)) / LR**3, axis=1)
        f2[block] = dt * np.mean((2.0 + LR + eLR * (LR - 2.0)) / LR**3, axis=1)
        f3[block] = dt * np.mean((-4.0 - 3.0 * LR - LR**2 + eLR * (4.0 - LR)) / LR**3, axis=1)
    coefficients = (E, E2, Q, f1, f2, f3)
    for array in coefficients:
        array.flags.writeable = False
    return coefficients


def _nonlinear(coeffs: np.ndarray, n_points: int, multiplier: np.ndarray) -> np.ndarray:
    values = fft.irfft(coeffs, n=n_points, norm="forward")
    return multiplier * fft.rfft(values * values, norm="forward")


def _advance(
    u: GridFunction,
    dt: float,
    alpha: float,
    dealias: bool,
    dispersion: bool,
    nonlinear: bool,
) -> np.ndarray:
    """One ETDRK4 step on the coefficients of u."""
    n = u.n_points
    E, E2, Q, f1, f2, f3 = _etd_coefficients(u.domain_length, n, alpha, dispersion, dt)
    v = u.coeffs
    if not nonlinear:
        return E * v

    _, multiplier = _operators(u.domain_length, n, alpha, dispersion, dealias)
    Nv = _nonlinear(v, n, multiplier)
    a = E2 * v + Q * Nv
    Na = _nonlinear(a, n, multiplier)
    b = E2 * v + Q * Na
    Nb = _nonlinear(b, n, multiplier)
    c = E2 * a + Q * (2.0 * Nb - Nv)
    Nc = _nonlinear(c, n, multiplier)
    return E * v + f1 * Nv + 2.0 * f2 * (Na + Nb) + f3 * Nc


def rhs(
    u: GridFunction,
    alpha: Alpha | float,
    *,
    dealias: bool = True,
    dispersion: bool = True,
    nonlinear: bool = True,
) -> GridFunction:
    """u_t = -HΛ^α u - ½ (u²)_x."""
    a = as_alpha(alpha).value
    linear, multiplier = _operators(u.domain_length, u.n_points, a, dispersion, dealias)
    coeffs = linear * u.coeffs
    if nonlinear:
        coeffs = coeffs + _nonlinear(u.coeffs, u.n_points, multiplier)
    bad = np.flatnonzero(~np.isfinite(coeffs))
    if bad.size:
        raise NumericOverflowError(f"rhs: non-finite coefficient at mode {bad[0]}", int(bad[0]))
    return u.with_coeffs(coeffs)


def step_etd(
    state: SolverState,
    dt: float,
    alpha: Alpha | float,
    *,
    dealias: bool = True,
    dispersion: bool = True,
    nonlinear: bool = True,
) -> SolverState:
    """Advance one ETDRK4 step. A non-finite result is returned with finite=False."""
    if not dt > 0.0:
        raise DomainError(f"time step must be positive, got {dt}")
    a = as_alpha(alpha).value
    coeffs = _advance(state.u, dt, a, dealias, dispersion, nonlinear)
    return state.model_copy(
        update={
            "u": state.u.with_coeffs(coeffs),
            "t": state.t + dt,
            "step_count": state.step_count + 1,
            "dudt": None,
            "finite": bool(np.all(np.isfinite(coeffs))),
        }
    )


def with_rhs(state: SolverState, config: SolverConfig) -> SolverState:
    """Attach u_t to a state for cubic Hermite interpolation in time."""
    return state.model_copy(update={"dudt": rhs(state.u, config.alpha, **config.switches)})


def adaptive_dt(u: GridFunction, t: float, config: SolverConfig) -> float:
    """min(dt_initial, cfl (1/∥u_x∥∞ ∧ dx/∥u∥∞)), clipped to t_end."""
    limit = config.dt_initial
    if config.nonlinear:
        slope = float(np.max(np.abs(spectral_derivative(u, 1).values)))
        speed = u.max_abs()
        if slope > 0.0:
            limit = min(limit, config.cfl_safety / slope)
        if speed > 0.0:
            limit = min(limit, config.cfl_safety * u.dx / speed)
    return min(limit, config.t_end - t)


class WhithamSolver:
    """Adaptive ETDRK4 integration with grid refinement and breaking stop."""

    def __init__(self, config: SolverConfig):
        self.config = config
        self.alpha = config.exponent

    def step(self, state: SolverState, dt: float) -> SolverState:
        return step_etd(state, dt, self.alpha, **self.config.switches)

    def _record(self, state: SolverState, dt: float) -> StepRecord:
        u = state.u
        return StepRecord(
            t=state.t,
            dt=dt,
            n_points=u.n_points,
            min_slope=float(np.min(spectral_derivative(u, 1).values)),
            sup_abs_u=u.max_abs(),
            l2=u.l2_norm(),
        )

    def run(
        self,
        u0: GridFunction | None = None,
        resume: SolverState | None = None,
        on_checkpoint: Callable[[SolverState, Trajectory], None] | None = None,
        on_step: Callable[[SolverState], None] | None = None,
        history: Trajectory | None = None,
    ) -> Trajectory:
        """Integrate until t_end, a slope_stop crossing or resolution exhaustion.

        Args:
            u0: Initial datum on the configured grid.
            resume: State to continue from instead of u0.
            on_checkpoint: Called with the state and the trajectory so far every
                checkpoint_every steps.
            on_step: Called with every accepted state.
            history: Trajectory up to the resume state, as saved with a checkpoint.
                The run then continues it and returns the same trajectory as an
                uninterrupted run.

        Returns:
            Trajectory with snapshots, per-step records and the stop reason.
        """
        config = self.config
        if history is not None and resume is None:
            raise ValueError("history is only used together with resume")
        if resume is not None:
            state = resume
        elif u0 is not None:
            if u0.n_points != config.n_points or u0.domain_length != config.domain_length:
                raise DomainError(
                    f"initial datum grid ({u0.domain_length}, {u0.n_points}) does not match "
                    f"config ({config.domain_length}, {config.n_points})"
                )
            state = SolverState.initial(u0)
        else:
            raise ValueError("run needs an initial datum or a state to resume from")

        if history is not None:
            if not history.records or history.records[-1].t != state.t:
                raise DomainError(f"checkpoint history does not end at t={state.t}")
            trajectory = history.fork()
        else:
            trajectory = Trajectory(config=config)
            trajectory.append(with_rhs(state, config))
            trajectory.dense_times.append(state.t)
            trajectory.records.append(self._record(state, 0.0))
        drift_warned = False
        horizon = config.t_end * (1.0 - 1e-12)

        logger.info(
            "Run alpha=%s N=%d t=%.6g -> %.6g", config.alpha, state.u.n_points, state.t,
            config.t_end,
        )
        while True:
            if trajectory.records[-1].min_slope < config.slope_stop:
                trajectory.stop_reason = "breaking-detected"
                break
            if state.t >= horizon:
                trajectory.stop_reason = "t_end"
                break

            dt = adaptive_dt(state.u, state.t, config)
            new_state = self.step(state, dt)
            if not new_state.finite:
                logger.warning("Non-finite coefficients at t=%.6g", new_state.t)
                trajectory.nonfinite_at = new_state.t
                trajectory.stop_reason = "under-resolved"
                break

            high_band = high_band_fraction(new_state.u, config.dealias)
            if high_band > config.refine_threshold:
                n_old = new_state.u.n_points
                if 2 * n_old > config.max_points:
                    logger.info(
                        "Resolution exhausted at t=%.6g (N=%d, high band %.2e)",
                        new_state.t, n_old, high_band,
                    )
                    trajectory.stop_reason = "under-resolved"
                    break
                new_state = new_state.model_copy(update={"u": pad(new_state.u, 2 * n_old)})
                trajectory.refinements.append(
                    RefinementEvent(
                        t=new_state.t,
                        step_count=new_state.step_count,
                        from_points=n_old,
                        to_points=2 * n_old,
                        high_band=high_band,
                    )
                )
                logger.info("Refined grid %d -> %d at t=%.6g", n_old, 2 * n_old, new_state.t)

            state = new_state
            record = self._record(state, dt)
            trajectory.records.append(record)
            trajectory.dense_times.append(state.t)
            logger.debug(
                "step %d t=%.6g dt=%.3e min u_x=%.6g", state.step_count, state.t, dt,
                record.min_slope,
            )

            if not drift_warned and state.l2_initial > 0.0:
                drift = abs(record.l2 - state.l2_initial) / state.l2_initial
                if drift > config.l2_drift_tolerance:
                    logger.warning("L2 drift %.3e at t=%.6g", drift, state.t)
                    drift_warned = True

            if state.step_count % config.snapshot_every == 0:
                trajectory.append(with_rhs(state, config))
            if config.checkpoint_every and state.step_count % config.checkpoint_every == 0:
                if on_checkpoint is not None:
                    on_checkpoint(state, trajectory)
            if on_step is not None:
                on_step(state)

        if trajectory.final.t < state.t:
            trajectory.append(with_rhs(state, config))
        logger.info(
            "Stopped (%s) at t=%.6g after %d steps, N=%d",
            trajectory.stop_reason, state.t, state.step_count, state.u.n_points,
        )
        return trajectory


def run(config: SolverConfig, u0: GridFunction) -> Trajectory:
    return WhithamSolver(config).run(u0)


def integrate_fixed(
    u0: GridFunction,
    alpha: Alpha | float,
    dt: float,
    t_end: float,
    *,
    dealias: bool = True,
    dispersion: bool = True,
    nonlinear: bool = True,
) -> SolverState:
    """Equal steps of size <= dt up to t_end, no refinement."""
    steps = max(1, math.ceil(t_end / dt - 1e-9))
    h = t_end / steps
    state = SolverState.initial(u0)
    for _ in range(steps):
        state = step_etd(
            state, h, alpha, dealias=dealias, dispersion=dispersion, nonlinear=nonlinear
        )
    return state


def local_order(
    state: SolverState,
    dt: float,
    alpha: Alpha | float,
    *,
    dealias: bool = True,
    dispersion: bool = True,
    nonlinear: bool = True,
) -> float:
    """Convergence order from one step of dt against two of dt/2 and four of dt/4."""
    switches = {"dealias": dealias, "dispersion": dispersion, "nonlinear": nonlinear}

    def advance(h: float, count: int) -> np.ndarray:
        current = state
        for _ in range(count):
            current = step_etd(current, h, alpha, **switches)
        return np.asarray(current.u.values)

    coarse = advance(dt, 1)
    middle = advance(0.5 * dt, 2)
    fine = advance(0.25 * dt, 4)
    return float(
        np.log2(np.max(np.abs(coarse - middle)) / np.max(np.abs(middle - fine)))
    )


def conserved_diagnostics(state: SolverState) -> ConservedDiagnostics:
    """Relative drift of the L² norm and the mean from their initial values."""
    u = state.u
    if state.l2_initial == 0.0:
        return ConservedDiagnostics(l2_drift=u.l2_norm(), mean_drift=abs(u.mean()))
    scale = max(abs(state.mean_initial), state.l2_initial / math.sqrt(u.domain_length))
    return ConservedDiagnostics(
        l2_drift=abs(u.l2_norm() - state.l2_initial) / state.l2_initial,
        mean_drift=abs(u.mean() - state.mean_initial) / scale,
    )


def _uxx_energy(u: GridFunction) -> float:
    return float(
        u.domain_length * np.sum(u.mode_weights * u.wavenumbers**4 * np.abs(u.coeffs) ** 2)
    )


def energy_identity_check(
    state: SolverState,
    alpha: Alpha | float,
    h: float = 1e-4,
    *,
    dealias: bool = True,
    dispersion: bool = True,
) -> EnergyIdentity:
    """Centered difference of ∥u_xx∥² against -5 ∫ u_x (u_xx)² dx."""
    a = as_alpha(alpha).value
    u = state.u
    forward = u.with_coeffs(_advance(u, h, a, dealias, dispersion, True))
    backward = u.with_coeffs(_advance(u, -h, a, dealias, dispersion, True))
    lhs = (_uxx_energy(forward) - _uxx_energy(backward)) / (2.0 * h)

    # The cubic integrand is exact on the doubled grid.
    fine = pad(u, 2 * u.n_points)
    ux = spectral_derivative(fine, 1).values
    uxx = spectral_derivative(fine, 2).values
    rhs_value = -5.0 * fine.dx * float(np.sum(ux * uxx**2))

    scale = max(abs(lhs), abs(rhs_value))
    residual = abs(lhs - rhs_value) / scale if scale > 0.0 else 0.0
    return EnergyIdentity(lhs=lhs, rhs=rhs_value, residual=residual)


def uxx_bound_check(
    trajectory: Trajectory, slope: SlopeSeries, eps: float, slack: float = 1e-6
) -> UxxBoundCheck:
    """∥u_xx(t)∥ <= ∥φ''∥ ((1-ε) q(t))^{-5/(2(1-ε)²)} at every snapshot."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    exponent = 5.0 / (2.0 * (1.0 - eps) ** 2)
    initial = sobolev_norm(spectral_derivative(trajectory.snapshots[0].u, 2), 0.0)
    norms = [sobolev_norm(spectral_derivative(s.u, 2), 0.0) for s in trajectory.snapshots]
    bounds = [initial * ((1.0 - eps) * q) ** (-exponent) for q in slope.q]
    ratios = [n / b if b > 0.0 else 0.0 for n, b in zip(norms, bounds, strict=True)]
    max_ratio = max(ratios) if ratios else 0.0
    return UxxBoundCheck(
        times=trajectory.times,
        norms=norms,
        bounds=bounds,
        holds=max_ratio <= 1.0 + slack,
        max_ratio=max_ratio,
    )
