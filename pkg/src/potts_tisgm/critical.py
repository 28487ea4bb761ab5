"""Critical transfer weights ``theta_m`` and temperatures ``T_{c,m}``.

At ``theta_m`` the polynomial ``phi_m`` touches zero: it has a double root
``x_*(m)``, the unique positive zero of

    m * sum_{i=1}^{k-1} i x^{2k-i-1} - (q-m) * sum_{i=1}^{k-1} i x^{i-1}.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List

import numpy as np

from .model import t_cr, theta_critical
from .recursion import bracket_sign_changes, geometric_grid, refine_root

log = logging.getLogger(__name__)

__all__ = [
    "CriticalPoint",
    "tangency_coeffs",
    "x_star",
    "theta_m",
    "theta_m_closed_k2",
    "critical_temperatures",
    "xi",
    "eta",
]


@dataclass(frozen=True)
class CriticalPoint:
    m: int
    x_star: float
    theta_m: float
    T_cm: float


def _check(m: int, q: int, k: int):
    if q < 2 or k < 2:
        raise ValueError(f"need q >= 2 and k >= 2, got q={q}, k={k}")
    if not 1 <= m <= q - 1:
        raise ValueError(f"m must lie in 1..{q - 1}, got {m}")


def tangency_coeffs(m: int, q: int, k: int) -> np.ndarray:
    """Coefficients (highest degree first) of the tangency polynomial."""
    coeffs = np.zeros(2 * k - 1)
    for i in range(1, k):
        coeffs[(2 * k - 2) - (2 * k - i - 1)] += m * i
        coeffs[(2 * k - 2) - (i - 1)] -= (q - m) * i
    return coeffs


@lru_cache(maxsize=None)
def x_star(m: int, q: int, k: int) -> float:
    """Double root of ``phi_m`` at its critical transfer weight."""
    _check(m, q, k)
    c = tangency_coeffs(m, q, k)
    dc = np.polyder(c)
    f = lambda x: np.polyval(c, x)
    df = lambda x: float(np.polyval(dc, x))
    brackets = bracket_sign_changes(f, geometric_grid())
    if len(brackets) != 1:
        # uniqueness is guaranteed by the coefficient sign pattern
        log.warning("tangency polynomial for q=%d k=%d m=%d has %d sign changes on the grid",
                    q, k, m, len(brackets))
        if not brackets:
            raise RuntimeError(f"no positive tangency root for q={q} k={k} m={m}")
    return float(refine_root(lambda x: float(f(x)), df, *brackets[0]))


@lru_cache(maxsize=None)
def theta_m(m: int, q: int, k: int) -> float:
    """Critical transfer weight for subsets of size ``m``."""
    x = x_star(m, q, k)
    return 1.0 + (m * x ** k + q - m) / sum(x ** i for i in range(1, k))


def theta_m_closed_k2(m: int, q: int) -> float:
    """``1 + 2 sqrt(m (q - m))``, exact for the binary tree."""
    _check(m, q, 2)
    return 1.0 + 2.0 * math.sqrt(m * (q - m))


def critical_temperatures(q: int, k: int, J: float = 1.0) -> List[CriticalPoint]:
    """Critical points for ``m = 1 .. floor(q/2)``, ordered by ``m``.

    Raises ``ArithmeticError`` if the transfer weights are not increasing
    in ``m`` or exceed ``theta_critical(q, k)``.
    """
    if not J > 0:
        raise ValueError(f"J must be positive, got {J}")
    points = []
    for m in range(1, q // 2 + 1):
        th = theta_m(m, q, k)
        points.append(CriticalPoint(m, x_star(m, q, k), th, J / math.log(th)))
    thc = theta_critical(q, k)
    for a, b in zip(points, points[1:]):
        if not a.theta_m < b.theta_m:
            raise ArithmeticError(f"theta_{a.m}={a.theta_m} !< theta_{b.m}={b.theta_m}")
    if points[-1].theta_m > thc * (1 + 1e-12):
        raise ArithmeticError(f"theta_{points[-1].m}={points[-1].theta_m} exceeds theta_c={thc}")
    return points


def xi(x, q: int, k: int):
    """Subset size as a function of the tangency root."""
    x = np.asarray(x, dtype=float)
    num = sum(i * x ** (i - 1) for i in range(1, k))
    den = sum(i * (x ** (i - 1) + x ** (2 * k - i - 1)) for i in range(1, k))
    out = q * num / den
    return float(out) if out.ndim == 0 else out


def eta(x, q: int, k: int):
    """Critical transfer weight as a function of the tangency root."""
    x = np.asarray(x, dtype=float)
    out = 1.0 + (xi(x, q, k) * (x ** k - 1.0) + q) / sum(x ** i for i in range(1, k))
    return float(out) if np.ndim(out) == 0 else out


def ordering_holds(q: int, k: int) -> bool:
    """True when ``T_{c,1} > ... > T_{c,[q/2]} >= T_cr`` numerically."""
    try:
        pts = critical_temperatures(q, k)
    except ArithmeticError:
        return False
    temps = [p.T_cm for p in pts]
    return all(a > b for a, b in zip(temps, temps[1:])) and \
        temps[-1] >= t_cr(1.0, q, k) * (1 - 1e-12)
