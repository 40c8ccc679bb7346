"""Periodic grid field and dispersion exponent models."""

from collections.abc import Callable
from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import fft

from src.errors import DomainError

MIN_POINTS = 16


class Alpha(BaseModel):
    """Dispersion exponent of HΛ^α."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., gt=0.0, le=3.0, description="Exponent alpha in (0, 3]")

    @property
    def below_one(self) -> bool:
        """Kernel representation of the operator exists."""
        return self.value < 1.0

    @property
    def below_half(self) -> bool:
        """Range of the first breaking theorem and the Hölder K1 bound."""
        return self.value < 0.5

    @property
    def below_third(self) -> bool:
        """Range of the second breaking theorem."""
        return self.value < 1.0 / 3.0

    def __float__(self) -> float:
        return self.value


def as_alpha(alpha: "Alpha | float") -> Alpha:
    """Coerce a plain float into an Alpha, raising DomainError outside (0, 3]."""
    if isinstance(alpha, Alpha):
        return alpha
    value = float(alpha)
    if not np.isfinite(value) or value <= 0.0 or value > 3.0:
        raise DomainError(f"alpha must lie in (0, 3], got {value}")
    return Alpha(value=value)


def _check_grid(domain_length: float, n_points: int) -> None:
    if not domain_length > 0.0 or not np.isfinite(domain_length):
        raise DomainError(f"domain_length must be positive, got {domain_length}")
    if n_points < MIN_POINTS or n_points & (n_points - 1):
        raise DomainError(f"n_points must be a power of two >= {MIN_POINTS}, got {n_points}")


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


class GridFunction:
    """Real L-periodic field on a uniform grid of n_points nodes.

    Holds point values and the one-sided spectral coefficients
    c_k = rfft(values) / N for k = 0..N/2, so that
    u(x) = c_0 + 2 Re sum_{0<k<N/2} c_k e^{i xi_k x} + c_{N/2} cos(xi_{N/2} x).
    Either representation is computed from the other on first access and
    then cached. Instances are immutable.
    """

    def __init__(
        self,
        domain_length: float,
        n_points: int,
        values: np.ndarray | None = None,
        coeffs: np.ndarray | None = None,
    ):
        _check_grid(domain_length, n_points)
        if values is None and coeffs is None:
            raise ValueError("GridFunction needs values or coeffs")

        self.domain_length = float(domain_length)
        self.n_points = int(n_points)
        self._values: np.ndarray | None = None
        self._coeffs: np.ndarray | None = None

        if values is not None:
            values = np.array(values, dtype=float)
            if values.shape != (n_points,):
                raise ValueError(f"values must have shape ({n_points},), got {values.shape}")
            self._values = _frozen(values)
        if coeffs is not None:
            coeffs = np.array(coeffs, dtype=complex)
            if coeffs.shape != (n_points // 2 + 1,):
                raise ValueError(
                    f"coeffs must have shape ({n_points // 2 + 1},), got {coeffs.shape}"
                )
            # Real field: mean and Nyquist coefficients are real.
            coeffs[0] = coeffs[0].real
            coeffs[-1] = coeffs[-1].real
            self._coeffs = _frozen(coeffs)

    # Constructors

    @classmethod
    def from_values(cls, values: np.ndarray, domain_length: float) -> "GridFunction":
        values = np.asarray(values, dtype=float)
        return cls(domain_length, values.size, values=values)

    @classmethod
    def from_coeffs(
        cls, coeffs: np.ndarray, domain_length: float, n_points: int
    ) -> "GridFunction":
        return cls(domain_length, n_points, coeffs=coeffs)

    @classmethod
    def from_function(
        cls, func: Callable[[np.ndarray], np.ndarray], domain_length: float, n_points: int
    ) -> "GridFunction":
        """Sample func on the grid nodes j*L/N."""
        _check_grid(domain_length, n_points)
        x = np.arange(n_points) * (domain_length / n_points)
        return cls(domain_length, n_points, values=np.asarray(func(x), dtype=float))

    @classmethod
    def zeros(cls, domain_length: float, n_points: int) -> "GridFunction":
        return cls(domain_length, n_points, values=np.zeros(n_points))

    # Representations

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = _frozen(fft.irfft(self._coeffs, n=self.n_points, norm="forward"))
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = _frozen(fft.rfft(self._values, norm="forward"))
        return self._coeffs

    @cached_property
    def dx(self) -> float:
        return self.domain_length / self.n_points

    @cached_property
    def grid(self) -> np.ndarray:
        return _frozen(np.arange(self.n_points) * self.dx)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers xi_k = 2 pi k / L for k = 0..N/2."""
        return _frozen(2.0 * np.pi * np.arange(self.n_points // 2 + 1) / self.domain_length)

    @cached_property
    def mode_weights(self) -> np.ndarray:
        """Multiplicity of each one-sided mode in the two-sided sum."""
        weights = np.full(self.n_points // 2 + 1, 2.0)
        weights[0] = 1.0
        weights[-1] = 1.0
        return _frozen(weights)

    # Norms and summaries

    @property
    def is_finite(self) -> bool:
        if self._coeffs is not None:
            return bool(np.all(np.isfinite(self._coeffs)))
        return bool(np.all(np.isfinite(self._values)))

    def l2_norm(self) -> float:
        """Norm in L^2(0, L), from Parseval."""
        energy = np.sum(self.mode_weights * np.abs(self.coeffs) ** 2)
        return float(np.sqrt(self.domain_length * energy))

    def mean(self) -> float:
        return float(self.coeffs[0].real)

    def max_abs(self) -> float:
        """Grid maximum of |u|; see spectral.sup_norm for the refined value."""
        return float(np.max(np.abs(self.values)))

    # Arithmetic

    def require_same_grid(self, other: "GridFunction") -> None:
        if other.n_points != self.n_points or other.domain_length != self.domain_length:
            raise DomainError(
                f"grid mismatch: ({self.domain_length}, {self.n_points}) vs "
                f"({other.domain_length}, {other.n_points})"
            )

    def with_coeffs(self, coeffs: np.ndarray) -> "GridFunction":
        return GridFunction(self.domain_length, self.n_points, coeffs=coeffs)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.domain_length, self.n_points, values=values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self.require_same_grid(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self.require_same_grid(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "GridFunction":
        return self.with_coeffs(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return self.with_coeffs(-self.coeffs)

    def __repr__(self) -> str:
        return f"GridFunction(domain_length={self.domain_length}, n_points={self.n_points})"
