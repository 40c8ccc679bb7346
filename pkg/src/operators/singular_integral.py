"""Real-space evaluation of K_n = HΛ^α ∂_x^n u through its singular kernel.

For 0 < α < 1 the kernel form is

    K(x) = ∫ sgn(y) |y|^{-1-α} [f(x) - f(x-y)] dy,   f = ∂_x^n u,

split at radius δ. Near the origin an integration by parts trades the
hypersingular kernel for the integrable |y|^{-α} against f'; away from it
the integrand is smooth and integrated to the half period. On the torus the
periodic field continues past |y| = L/2 and that remainder is added mode by
mode with Fourier-weighted semi-infinite quadrature.

The kernel agrees with the spectral operator up to a negative constant:
HΛ^α f = -c_α K with c_α = α / (2 Γ(1-α) sin(πα/2)).
"""

import logging
import math
import threading
from collections.abc import Callable

import numpy as np
from scipy import integrate, special

from src.config import QuadratureSettings, settings
from src.errors import CalibrationError, DomainError, QuadratureError
from src.models.field import Alpha, GridFunction, as_alpha
from src.models.quadrature import SplitEval
from src.operators.spectral import (
    dispersion_apply,
    interpolate,
    spectral_derivative,
    sup_norm,
)

logger = logging.getLogger(__name__)

# Sign relating the kernel integral to the spectral operator.
KERNEL_ORIENTATION = -1.0

_calibration_cache: dict[float, float] = {}
_tail_cache: dict[tuple[float, float, int], np.ndarray] = {}
_cache_lock = threading.Lock()


def _kernel_alpha(alpha: Alpha | float) -> float:
    a = as_alpha(alpha).value
    if not 0.0 < a < 1.0:
        raise DomainError(f"kernel form requires 0 < alpha < 1, got {a}")
    return a


def _integrate(
    func: Callable[[float], float],
    a: float,
    b: float,
    config: QuadratureSettings,
    **kwargs,
) -> tuple[float, float]:
    """Adaptive quadrature returning (value, abs_error).

    QUADPACK warnings are accepted when the error estimate is still below
    accept_roundoff; anything worse raises QuadratureError.
    """
    result = integrate.quad(
        func,
        a,
        b,
        epsabs=config.tolerance,
        epsrel=config.tolerance,
        limit=config.subdivision_limit,
        full_output=1,
        **kwargs,
    )
    value, error = float(result[0]), float(result[1])
    if len(result) > 3:
        if error > config.accept_roundoff * max(1.0, abs(value)):
            raise QuadratureError(
                f"quadrature on [{a}, {b}] stopped at error {error:.3e}: {result[3]}", error
            )
        logger.debug("Accepted quadrature on [%s, %s] with error %.3e", a, b, error)
    return value, error


def _tail_integrals(alpha: float, domain_length: float, n_points: int) -> np.ndarray:
    """S_k = ∫_{L/2}^∞ y^{-1-α} sin(ξ_k y) dy for the one-sided modes, cached."""
    key = (alpha, domain_length, n_points)
    with _cache_lock:
        cached = _tail_cache.get(key)
    if cached is not None:
        return cached

    config = settings().quadrature
    half = 0.5 * domain_length
    xi = 2.0 * np.pi * np.arange(n_points // 2 + 1) / domain_length
    tails = np.zeros_like(xi)
    for k in range(1, xi.size):
        tails[k], _ = _integrate(
            lambda y: y ** (-1.0 - alpha), half, np.inf, config, weight="sin", wvar=xi[k]
        )
    tails.flags.writeable = False

    with _cache_lock:
        _tail_cache.setdefault(key, tails)
    logger.debug("Cached %d tail integrals for alpha=%s, L=%s", xi.size, alpha, domain_length)
    return tails


def tail_term(f: GridFunction, alpha: float, x: float) -> float:
    """∫_{|y|>L/2} sgn(y)|y|^{-1-α}[f(x) - f(x-y)] dy for the periodic continuation of f."""
    tails = _tail_integrals(alpha, f.domain_length, f.n_points)
    phase = np.exp(1j * f.wavenumbers * x)
    return float(np.real(np.sum(f.mode_weights * f.coeffs * phase * 2j * tails)))


def kernel_apply_direct(
    u: GridFunction,
    alpha: Alpha | float,
    n: int,
    x: float,
    delta: float,
    config: QuadratureSettings | None = None,
) -> SplitEval:
    """Evaluate K_n(x) by the split integral at radius delta."""
    a = _kernel_alpha(alpha)
    config = config or settings().quadrature
    if not delta > 0.0:
        raise DomainError(f"split radius must be positive, got {delta}")
    if delta >= 0.25 * u.domain_length:
        raise DomainError(f"split radius {delta} must be below L/4 = {0.25 * u.domain_length}")

    f = spectral_derivative(u, n)
    fp = spectral_derivative(u, n + 1)
    half = 0.5 * u.domain_length

    boundary = (interpolate(f, x - delta) - interpolate(f, x + delta)) / (a * delta**a)

    # y = s^{1/(1-α)} removes the |y|^{-α} singularity; dy y^{-α} = ds / (1-α)
    power = 1.0 / (1.0 - a)

    def inner_integrand(s: float) -> float:
        y = s**power
        return interpolate(fp, x - y) + interpolate(fp, x + y)

    inner, inner_err = _integrate(inner_integrand, 0.0, delta ** (1.0 - a), config)
    inner *= power / a

    def outer_integrand(y: float) -> float:
        return y ** (-1.0 - a) * (interpolate(f, x + y) - interpolate(f, x - y))

    outer, outer_err = _integrate(outer_integrand, delta, half, config)

    return SplitEval(
        delta=delta,
        boundary_term=boundary,
        inner_term=inner,
        outer_term=outer,
        total=boundary + inner + outer,
        tail_term=tail_term(f, a, x),
        tail_bound=4.0 * sup_norm(f) / (a * half**a),
        abs_error=inner_err * power / a + outer_err,
    )


def closed_form_calibration(alpha: Alpha | float) -> float:
    """c_α = α / (2 Γ(1-α) sin(πα/2))."""
    a = _kernel_alpha(alpha)
    return a / (2.0 * special.gamma(1.0 - a) * math.sin(0.5 * math.pi * a))


def calibration_constant(
    alpha: Alpha | float, config: QuadratureSettings | None = None
) -> float:
    """Positive constant c_α with HΛ^α f = -c_α K f, fitted on single modes.

    Modes k = 1..calibration_modes of cos(kx) on [0, 2π) are evaluated at
    x = π/(2k), where the spectral value is k^α. The least-squares constant
    is accepted when every mode agrees with it to calibration_tolerance.
    """
    a = _kernel_alpha(alpha)
    with _cache_lock:
        if a in _calibration_cache:
            return _calibration_cache[a]

    config = config or settings().quadrature
    length = 2.0 * math.pi
    spectral_values = []
    kernel_values = []
    for k in range(1, config.calibration_modes + 1):
        mode = GridFunction.from_function(
            lambda x, k=k: np.cos(k * x), length, config.calibration_points
        )
        x = 0.5 * math.pi / k
        split = kernel_apply_direct(mode, a, 0, x, config.default_delta, config)
        kernel_values.append(KERNEL_ORIENTATION * split.periodic_total)
        spectral_values.append(interpolate(dispersion_apply(mode, a), x))

    kernel_arr = np.array(kernel_values)
    spectral_arr = np.array(spectral_values)
    constant = float(np.dot(kernel_arr, spectral_arr) / np.dot(kernel_arr, kernel_arr))
    residual = float(np.max(np.abs(constant * kernel_arr - spectral_arr) / np.abs(spectral_arr)))
    if residual > config.calibration_tolerance or constant <= 0.0:
        raise CalibrationError(
            f"kernel constant for alpha={a} inconsistent across modes "
            f"(residual {residual:.3e})",
            residual,
        )

    logger.debug("Calibrated alpha=%s: c=%.12g residual=%.2e", a, constant, residual)
    with _cache_lock:
        return _calibration_cache.setdefault(a, constant)


def calibrated_kernel(
    u: GridFunction,
    alpha: Alpha | float,
    n: int,
    x: float,
    delta: float,
    config: QuadratureSettings | None = None,
) -> float:
    """Kernel path in the spectral normalisation, comparable to HΛ^α ∂_x^n u at x."""
    split = kernel_apply_direct(u, alpha, n, x, delta, config)
    return KERNEL_ORIENTATION * calibration_constant(alpha, config) * split.periodic_total


def kn_bound(alpha: Alpha | float, delta: float, vn_sup: float, vn1_sup: float) -> float:
    """(6/α) δ^{-α} ∥v_n∥∞ + (2/(α(1-α))) δ^{1-α} ∥v_{n+1}∥∞."""
    a = _kernel_alpha(alpha)
    return 6.0 / a * delta ** (-a) * vn_sup + 2.0 / (a * (1.0 - a)) * delta ** (1.0 - a) * vn1_sup


def optimal_delta(alpha: Alpha | float, vn_sup: float, vn1_sup: float) -> float:
    """Radius minimising kn_bound; infinite when ∥v_{n+1}∥∞ vanishes."""
    a = _kernel_alpha(alpha)
    if vn1_sup == 0.0:
        return math.inf
    return 3.0 * a * vn_sup / vn1_sup


def k1_bound_holder(alpha: Alpha | float, delta: float, v1_sup: float, v2_l2: float) -> float:
    """(6/α) δ^{-α} ∥v_1∥∞ + (1/α) √(2/(1-2α)) δ^{1/2-α} ∥v_2∥_{L²}.

    Only defined for α < 1/2.
    """
    a = _kernel_alpha(alpha)
    if a >= 0.5:
        raise DomainError(f"Hölder bound on K1 needs alpha < 1/2, got {a}")
    return (
        6.0 / a * delta ** (-a) * v1_sup
        + math.sqrt(2.0 / (1.0 - 2.0 * a)) / a * delta ** (0.5 - a) * v2_l2
    )
