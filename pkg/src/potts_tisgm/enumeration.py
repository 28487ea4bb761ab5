"""Enumeration and counting of translation-invariant splitting Gibbs measures.

Each measure is named by a ``MeasureDescriptor`` ``(M, z*)``. Because
``(M, z*)`` and ``(M^c, 1/z*)`` give the same measure, every descriptor is
brought to a canonical form with ``|M| <= q/2`` (and ``z* > 1`` when
``|M| = q/2``) before deduplication.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass
from math import comb
from typing import List, Optional

from .critical import theta_m
from .model import (BOUNDARY_RTOL, BoundaryLaw, MeasureDescriptor, PottsParams, compare_theta,
                    theta_critical, theta_critical_exact)
from .recursion import solve_phi, vector_residual

log = logging.getLogger(__name__)

__all__ = [
    "RegimeClassification",
    "EnumerationError",
    "free_descriptor",
    "canonicalize",
    "complement_descriptor",
    "boundary_law_vector",
    "root_to_z",
    "classify_regime",
    "count_tisgm",
    "closed_form_count",
    "enumerate_tisgm",
    "descriptors_to_records",
    "descriptors_to_json",
]

ZSTAR_RTOL = 1e-9
ZSTAR_ATOL = 1e-12
RESIDUAL_TOL = 1e-9


class EnumerationError(RuntimeError):
    """Enumerated measures disagree with the closed-form count."""


@dataclass(frozen=True)
class RegimeClassification:
    """Temperature regime and the number of measures it carries.

    ``regime`` is one of ``unique``, ``between``, ``all_open``,
    ``at_thetac`` or ``at_thetam``. ``m`` is set only for ``between``
    (``theta_m < theta < theta_{m+1}``) and ``at_thetam``.
    """

    regime: str
    count: int
    m: Optional[int] = None

    @property
    def label(self) -> str:
        return f"{self.regime}({self.m})" if self.m is not None else self.regime

    def to_record(self) -> dict:
        return {"regime": self.label, "count": self.count}


def free_descriptor(q: int) -> MeasureDescriptor:
    return MeasureDescriptor(frozenset(), 1.0, q)


def complement_descriptor(d: MeasureDescriptor) -> MeasureDescriptor:
    """``(M, z*) -> (M^c, 1/z*)``; both name the same measure."""
    comp = frozenset(range(1, d.q + 1)) - d.M
    return MeasureDescriptor(comp, 1.0 / d.zstar, d.q)


def canonicalize(d: MeasureDescriptor) -> MeasureDescriptor:
    if d.m in (0, d.q) or d.zstar == 1.0:
        return free_descriptor(d.q)
    twice = 2 * d.m
    if twice > d.q or (twice == d.q and d.zstar < 1.0):
        return complement_descriptor(d)
    return d


def boundary_law_vector(d: MeasureDescriptor, q: Optional[int] = None) -> BoundaryLaw:
    """Gauge-fixed (q-1)-vector for ``d``; spin ``q`` is moved out of ``M``
    by complementing first when necessary."""
    q = d.q if q is None else q
    if q != d.q:
        raise ValueError(f"descriptor has q={d.q}, asked for q={q}")
    if q in d.M:
        d = complement_descriptor(d)
    z = [d.zstar if i in d.M else 1.0 for i in range(1, q)]
    return BoundaryLaw(tuple(z))


def root_to_z(x: float, k: int) -> float:
    if abs(math.log(x)) > 1.0:
        return math.exp(k * math.log(x))
    return x ** k


def _sum_binom(q: int, upto: int) -> int:
    return sum(comb(q, s) for s in range(1, upto + 1))


def closed_form_count(q: int, regime: str, m: Optional[int] = None) -> int:
    """Number of measures in a regime, from the counting theorem."""
    if regime == "unique":
        return 1
    if regime == "between":
        return 1 + 2 * _sum_binom(q, m)
    if regime == "all_open":
        return 2 ** q - 1
    if regime == "at_thetac":
        return 2 ** (q - 1) if q % 2 else 2 ** (q - 1) - comb(q - 1, q // 2)
    if regime == "at_thetam":
        return 1 + comb(q, m) + 2 * _sum_binom(q, m - 1)
    raise ValueError(f"unknown regime {regime!r}")


def classify_regime(params: PottsParams, rtol: float = BOUNDARY_RTOL) -> RegimeClassification:
    q, k = params.q, params.k
    top = q // 2
    thetas = [theta_m(m, q, k) for m in range(1, top + 1)]
    if q % 2 and compare_theta(params.with_theta(thetas[-1]), theta_critical(q, k), rtol=rtol) == 0:
        log.warning("theta_%d coincides with theta_c for odd q=%d, k=%d; review manually",
                    top, q, k)

    def make(regime, m=None):
        return RegimeClassification(regime, closed_form_count(q, regime, m), m)

    if compare_theta(params, theta_critical(q, k), theta_critical_exact(q, k), rtol=rtol) == 0:
        return make("at_thetac")
    for m, th in enumerate(thetas, start=1):
        c = compare_theta(params, th, rtol=rtol)
        if c == 0:
            return make("at_thetam", m)
        if c < 0:
            return make("unique") if m == 1 else make("between", m - 1)
    return make("all_open")


def count_tisgm(params: PottsParams, rtol: float = BOUNDARY_RTOL) -> RegimeClassification:
    """Regime of ``params.theta`` and the exact number of measures there."""
    return classify_regime(params, rtol)


def _same_z(a: float, b: float) -> bool:
    return abs(a - b) <= max(ZSTAR_RTOL * max(abs(a), abs(b)), ZSTAR_ATOL)


def enumerate_tisgm(params: PottsParams, rtol: float = BOUNDARY_RTOL,
                    root_rtol: Optional[float] = None, check: bool = True) -> List[MeasureDescriptor]:
    """All measures at ``params`` as canonical descriptors.

    The free measure comes first, followed by descriptors ordered by subset
    size, then ``z*``, then the sorted subset. Roots equal to 1 (present
    only at ``theta_c``) reproduce the free measure and are skipped.

    Raises
    ------
    EnumerationError
        If the number of descriptors differs from ``count_tisgm`` or an
        expanded boundary law fails the fixed-point residual check.
    """
    q, k = params.q, params.k
    root_rtol = rtol if root_rtol is None else root_rtol
    found = [free_descriptor(q)]
    for m in range(1, q // 2 + 1):
        for x, _mult in solve_phi(m, params, rtol=root_rtol):
            if x == 1.0:
                continue
            z = root_to_z(x, k)
            for subset in itertools.combinations(range(1, q + 1), m):
                d = canonicalize(MeasureDescriptor(frozenset(subset), z, q))
                if not any(e.M == d.M and _same_z(e.zstar, d.zstar) for e in found):
                    found.append(d)
    found.sort(key=lambda d: (d.m, d.zstar, sorted(d.M)))

    if check:
        expected = count_tisgm(params, rtol)
        if len(found) != expected.count:
            raise EnumerationError(
                f"enumerated {len(found)} measures but regime {expected.label} has "
                f"{expected.count} (q={q}, k={k}, theta={params.theta!r})")
        for d in found:
            res = vector_residual(boundary_law_vector(d), params)
            if res > RESIDUAL_TOL * max(1.0, d.zstar):
                raise EnumerationError(f"descriptor {d} has fixed-point residual {res:.3g}")
    return found


def descriptors_to_records(descriptors, regime: str = "") -> List[dict]:
    return [d.to_record(regime) for d in descriptors]


def descriptors_to_json(descriptors, regime: str = "", **dump_kw) -> str:
    return json.dumps(descriptors_to_records(descriptors, regime), **dump_kw)
