"""Model parameters and the value types shared across the package.

All fixed-point equations are written in the transfer weight
``theta = exp(J / T)``; temperatures are converted once, on the way in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Optional, Union

import numpy as np

__all__ = [
    "BOUNDARY_RTOL",
    "PottsParams",
    "BoundaryLaw",
    "MeasureDescriptor",
    "theta_from_temperature",
    "theta_critical",
    "theta_critical_exact",
    "t_cr",
    "compare_theta",
]

# Relative tolerance for deciding that two transfer weights coincide.
BOUNDARY_RTOL = 1e-12

ThetaLike = Union[float, int, str, Fraction, Decimal]


def _as_exact(value: ThetaLike) -> Optional[Fraction]:
    """Exact rational for decimal literals; ``None`` for binary floats."""
    if isinstance(value, (str, Decimal, Fraction)):
        return Fraction(value)
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return Fraction(int(value))
    return None


@dataclass(frozen=True)
class PottsParams:
    """Ferromagnetic q-state Potts model on the Cayley tree of order k.

    Parameters
    ----------
    q : int
        Number of spin values, at least 2.
    k : int
        Tree order (every vertex has k + 1 neighbours), at least 2.
    theta : float, str, Fraction or Decimal
        Transfer weight ``exp(J/T)``; must exceed 1. A decimal string or a
        ``Fraction`` is kept exactly so that ``theta == theta_c`` can be
        decided without rounding.
    J : float
        Coupling constant, strictly positive. Only used to report
        temperatures.
    """

    q: int
    k: int
    theta: float
    J: float = 1.0
    theta_exact: Optional[Fraction] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        exact = self.theta_exact
        if exact is None:
            exact = _as_exact(self.theta)
        object.__setattr__(self, "theta_exact", exact)
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "J", float(self.J))
        if int(self.q) != self.q or self.q < 2:
            raise ValueError(f"q must be an integer >= 2, got {self.q!r}")
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k!r}")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "k", int(self.k))
        if not self.J > 0:
            raise ValueError(f"J must be positive (ferromagnetic), got {self.J}")
        if not (math.isfinite(self.theta) and self.theta > 1):
            raise ValueError(f"theta must be a finite number > 1, got {self.theta}")

    @classmethod
    def from_temperature(cls, q: int, k: int, J: float, T: float) -> "PottsParams":
        return cls(q=q, k=k, theta=theta_from_temperature(J, T), J=J)

    @property
    def temperature(self) -> float:
        return self.J / math.log(self.theta)

    @property
    def beta_J(self) -> float:
        """``J / T``, the log of the transfer weight."""
        return math.log(self.theta)

    @property
    def theta_c(self) -> float:
        return theta_critical(self.q, self.k)

    def with_theta(self, theta: ThetaLike) -> "PottsParams":
        return PottsParams(self.q, self.k, theta, self.J)


def theta_from_temperature(J: float, T: float) -> float:
    """Transfer weight ``exp(J/T)``. Any real J is accepted here."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    return math.exp(J / T)


def theta_critical_exact(q: int, k: int) -> Fraction:
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    return Fraction(k + q - 1, k - 1)


def theta_critical(q: int, k: int) -> float:
    """Classical non-uniqueness threshold ``(k + q - 1) / (k - 1)``."""
    return float(theta_critical_exact(q, k))


def t_cr(J: float, q: int, k: int) -> float:
    """Temperature at which ``exp(J/T)`` equals ``theta_critical(q, k)``."""
    if not J > 0:
        raise ValueError(f"J must be positive, got {J}")
    return J / math.log1p(q / (k - 1))


def compare_theta(params: PottsParams, other: float, other_exact: Optional[Fraction] = None,
                  rtol: float = BOUNDARY_RTOL) -> int:
    """Three-way comparison of ``params.theta`` against a threshold.

    Exact rational arithmetic is used when both sides are known exactly;
    otherwise values within ``rtol`` (relative) compare equal.
    """
    if other_exact is not None and params.theta_exact is not None:
        return (params.theta_exact > other_exact) - (params.theta_exact < other_exact)
    if abs(params.theta - other) <= rtol * max(abs(other), abs(params.theta)):
        return 0
    return 1 if params.theta > other else -1


@dataclass(frozen=True)
class BoundaryLaw:
    """Positive (q-1)-vector ``z`` of exponentiated normalised fields.

    The last spin value carries the gauge ``h_q = 0``.
    """

    z: tuple

    def __post_init__(self):
        z = tuple(float(v) for v in np.atleast_1d(np.asarray(self.z, dtype=float)))
        if not z:
            raise ValueError("boundary law must have at least one component")
        if not all(math.isfinite(v) and v > 0 for v in z):
            raise ValueError(f"boundary law components must be finite and positive: {z}")
        object.__setattr__(self, "z", z)

    @classmethod
    def from_h(cls, h: Iterable[float]) -> "BoundaryLaw":
        h = np.asarray(list(h), dtype=float)
        if not np.all(np.isfinite(h)):
            raise ValueError(f"fields must be finite: {h}")
        return cls(tuple(np.exp(h)))

    @property
    def h(self) -> np.ndarray:
        return np.log(np.asarray(self.z))

    @property
    def q(self) -> int:
        return len(self.z) + 1

    def extended_fields(self) -> np.ndarray:
        """Length-q field vector ``(h_1, ..., h_{q-1}, 0)``."""
        return np.append(self.h, 0.0)

    def __len__(self):
        return len(self.z)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.z, dtype=dtype)


@dataclass(frozen=True)
class MeasureDescriptor:
    """One translation-invariant splitting Gibbs measure.

    Spins in ``M`` (a subset of ``{1..q}``) carry boundary weight ``zstar``,
    all others weight 1. ``(M, zstar)`` and ``(complement(M), 1/zstar)``
    describe the same measure; see ``enumeration.canonicalize``.
    """

    M: frozenset
    zstar: float
    q: int

    def __post_init__(self):
        M = frozenset(int(i) for i in self.M)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "zstar", float(self.zstar))
        if not (math.isfinite(self.zstar) and self.zstar > 0):
            raise ValueError(f"zstar must be finite and positive, got {self.zstar}")
        if any(i < 1 or i > self.q for i in M):
            raise ValueError(f"M must be a subset of 1..{self.q}, got {sorted(M)}")

    @property
    def m(self) -> int:
        return len(self.M)

    @property
    def is_free(self) -> bool:
        return self.m in (0, self.q) or self.zstar == 1.0

    def extended_fields(self) -> np.ndarray:
        """Length-q fields ``ln(zstar) * 1_M`` (no gauge fixing)."""
        out = np.zeros(self.q)
        out[[i - 1 for i in self.M]] = math.log(self.zstar)
        return out

    def to_record(self, regime: str = "") -> dict:
        return {"M": sorted(self.M), "zstar": self.zstar, "m": self.m, "regime": regime}
