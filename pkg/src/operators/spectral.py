"""Spectral transforms, derivatives and the dispersion multiplier on the torus.

All operators act on the one-sided coefficients held by GridFunction. The
dispersion operator HΛ^α has symbol m(ξ) = -i sgn(ξ) |ξ|^α, chosen so that
α = 3 is the third derivative.
"""

import logging

import numpy as np
from scipy import optimize

from src.errors import IllConditionedError, NumericOverflowError
from src.models.field import Alpha, GridFunction, as_alpha

logger = logging.getLogger(__name__)

# Complex entries per interpolation block.
_INTERP_BLOCK = 1 << 22


def _check_finite(coeffs: np.ndarray, what: str) -> None:
    bad = np.flatnonzero(~np.isfinite(coeffs))
    if bad.size:
        raise NumericOverflowError(f"{what}: non-finite coefficient at mode {bad[0]}", int(bad[0]))


def dispersion_symbol(xi: np.ndarray, alpha: Alpha | float) -> np.ndarray:
    """Symbol m(ξ) = -i sgn(ξ) |ξ|^α of HΛ^α."""
    a = as_alpha(alpha).value
    xi = np.asarray(xi, dtype=float)
    return -1j * np.sign(xi) * np.abs(xi) ** a


def dispersion_apply(u: GridFunction, alpha: Alpha | float) -> GridFunction:
    """Apply HΛ^α. The Nyquist mode is dropped since the symbol is odd."""
    symbol = dispersion_symbol(u.wavenumbers, alpha)
    symbol[-1] = 0.0
    coeffs = symbol * u.coeffs
    _check_finite(coeffs, "dispersion_apply")
    return u.with_coeffs(coeffs)


def spectral_derivative(u: GridFunction, n: int) -> GridFunction:
    """n-th derivative, coefficients multiplied by (iξ)^n."""
    if n < 0:
        raise ValueError(f"derivative order must be non-negative, got {n}")
    if n == 0:
        return u
    if n > u.n_points // 4:
        amplification = float(u.wavenumbers[-1] ** n)
        raise IllConditionedError(
            f"derivative order {n} exceeds n_points/4 = {u.n_points // 4}; "
            f"round-off amplified by {amplification:.3e}",
            amplification,
        )
    multiplier = (1j * u.wavenumbers) ** n
    if n % 2:
        multiplier[-1] = 0.0
    coeffs = multiplier * u.coeffs
    _check_finite(coeffs, "spectral_derivative")
    return u.with_coeffs(coeffs)


def interpolate(u: GridFunction, x: float | np.ndarray) -> float | np.ndarray:
    """Trigonometric interpolant of u at arbitrary x (scalar or array)."""
    x_arr = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x_arr).ravel()
    weighted = u.mode_weights * u.coeffs
    xi = u.wavenumbers
    out = np.empty(flat.size)
    block = max(1, _INTERP_BLOCK // xi.size)
    for start in range(0, flat.size, block):
        phase = np.exp(1j * np.outer(flat[start : start + block], xi))
        out[start : start + block] = np.real(phase @ weighted)
    if x_arr.ndim == 0:
        return float(out[0])
    return out.reshape(x_arr.shape)


def refined_minimum(u: GridFunction, xatol: float = 1e-10) -> tuple[float, float]:
    """Minimum of the interpolant: grid argmin refined on the two adjacent cells.

    Returns (x_min, u_min) with x_min reduced to [0, L).
    """
    values = u.values
    j = int(np.argmin(values))
    x_grid = float(u.grid[j])
    result = optimize.minimize_scalar(
        lambda x: interpolate(u, x),
        bounds=(x_grid - u.dx, x_grid + u.dx),
        method="bounded",
        options={"xatol": xatol},
    )
    if result.success and result.fun <= values[j]:
        return float(result.x % u.domain_length), float(result.fun)
    return x_grid, float(values[j])


def sup_norm(u: GridFunction) -> float:
    """∥u∥_∞ of the interpolant, with sub-grid refinement at both extremes."""
    if not np.any(u.values):
        return 0.0
    _, low = refined_minimum(u)
    _, neg_high = refined_minimum(-u)
    return max(abs(low), abs(neg_high))


def sobolev_norm(u: GridFunction, s: float) -> float:
    """Inhomogeneous H^s norm, (L Σ (1+ξ²)^s |c_k|²)^{1/2} over all modes."""
    weight = (1.0 + u.wavenumbers**2) ** s
    energy = np.sum(u.mode_weights * weight * np.abs(u.coeffs) ** 2)
    return float(np.sqrt(u.domain_length * energy))


def l2_norm(u: GridFunction) -> float:
    return sobolev_norm(u, 0.0)


def inner_product(u: GridFunction, v: GridFunction) -> float:
    """L² inner product over one period."""
    u.require_same_grid(v)
    return float(
        u.domain_length * np.sum(u.mode_weights * np.real(np.conj(u.coeffs) * v.coeffs))
    )


def dealias_mask(n_points: int) -> np.ndarray:
    """Boolean mask of retained one-sided modes under the 2/3 rule (k <= N/3)."""
    k = np.arange(n_points // 2 + 1)
    return k <= n_points // 3


def active_band(n_points: int, dealias: bool) -> int:
    """Highest mode a run can populate."""
    return n_points // 3 if dealias else n_points // 2


def high_band_fraction(u: GridFunction, dealias: bool = True) -> float:
    """Share of spectral energy in the top third of the active band."""
    k = np.arange(u.n_points // 2 + 1)
    band = active_band(u.n_points, dealias)
    energy = u.mode_weights * np.abs(u.coeffs) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return 0.0
    high = float(np.sum(energy[k > (2 * band) // 3]))
    return high / total


def pad(u: GridFunction, n_points: int) -> GridFunction:
    """Spectral zero-padding onto a finer grid of the same period."""
    if n_points < u.n_points:
        raise ValueError(f"cannot pad {u.n_points} points down to {n_points}")
    if n_points == u.n_points:
        return u
    coeffs = np.zeros(n_points // 2 + 1, dtype=complex)
    coeffs[: u.n_points // 2 + 1] = u.coeffs
    # The old Nyquist cosine becomes an interior mode counted twice.
    coeffs[u.n_points // 2] *= 0.5
    logger.debug("Padded grid %d -> %d", u.n_points, n_points)
    return GridFunction(u.domain_length, n_points, coeffs=coeffs)
