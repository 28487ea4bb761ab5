"""Brute-force checks on explicit finite trees.

Nothing here uses the scalar reduction: measures are evaluated by summing
over every spin configuration of a finite ball ``V_n`` of the tree, and
fixed points are searched for in the full (q-1)-dimensional system.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from .enumeration import complement_descriptor
from .model import BoundaryLaw, MeasureDescriptor, PottsParams
from .recursion import _field_map, _rhs

log = logging.getLogger(__name__)

__all__ = [
    "MAX_CONFIGURATIONS",
    "MAX_BOUNDARY_CONFIGURATIONS",
    "SizeGuardError",
    "FiniteTree",
    "HullResult",
    "build_tree",
    "check_size",
    "energy",
    "finite_volume_distribution",
    "finite_volume_probability",
    "partition_function",
    "partition_function_recursive",
    "cylinder_distribution",
    "check_compatibility",
    "root_marginal",
    "verify_complement_identity",
    "multi_start_solver",
    "cluster_laws",
    "hull_extremality_check",
]

MAX_CONFIGURATIONS = 10 ** 8
MAX_BOUNDARY_CONFIGURATIONS = 10 ** 6
_CHUNK = 1 << 20


class SizeGuardError(ValueError):
    """The requested volume is too large for exhaustive summation."""


@dataclass(frozen=True)
class FiniteTree:
    """Ball ``V_n`` of the Cayley tree of order ``k`` around vertex 0.

    Vertices are numbered breadth-first, so ``V_m`` is always the prefix
    ``0 .. sizes[m] - 1``.
    """

    k: int
    n: int
    parent: np.ndarray
    generation: np.ndarray
    successors: Tuple[Tuple[int, ...], ...]
    edges: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    def level(self, m: int) -> np.ndarray:
        """Indices of ``W_m``."""
        return np.flatnonzero(self.generation == m)

    def ball_size(self, m: int) -> int:
        """``|V_m|``."""
        return int(np.count_nonzero(self.generation <= m))


def _level_sizes(k: int, n: int) -> List[int]:
    sizes = [1]
    for m in range(1, n + 1):
        sizes.append(k + 1 if m == 1 else k * sizes[-1])
    return sizes


def check_size(k: int, n: int, q: int):
    """Raise ``SizeGuardError`` unless ``V_n`` is exhaustively summable."""
    sizes = _level_sizes(k, n)
    n_vertices, n_boundary = sum(sizes), sizes[-1]
    if q ** n_vertices > MAX_CONFIGURATIONS or q ** n_boundary > MAX_BOUNDARY_CONFIGURATIONS:
        raise SizeGuardError(
            f"volume too large for exhaustive sums: q={q}, k={k}, n={n}, |V_n|={n_vertices} "
            f"({q}^{n_vertices} configurations, limit {MAX_CONFIGURATIONS}), |W_n|={n_boundary} "
            f"({q}^{n_boundary} boundary configurations, limit {MAX_BOUNDARY_CONFIGURATIONS})")


def build_tree(k: int, n: int, q: Optional[int] = None) -> FiniteTree:
    """Build ``V_n``; if ``q`` is given the size guard is enforced."""
    if k < 2 or n < 0:
        raise ValueError(f"need k >= 2 and n >= 0, got k={k}, n={n}")
    if q is not None:
        check_size(k, n, q)
    parent, generation = [-1], [0]
    successors: List[List[int]] = [[]]
    frontier = [0]
    for m in range(1, n + 1):
        nxt = []
        for x in frontier:
            for _ in range(k + 1 if m == 1 else k):
                y = len(parent)
                parent.append(x)
                generation.append(m)
                successors.append([])
                successors[x].append(y)
                nxt.append(y)
        frontier = nxt
    parent = np.array(parent)
    edges = np.array([(int(p), y) for y, p in enumerate(parent) if p >= 0], dtype=int).reshape(-1, 2)
    return FiniteTree(k, n, parent, np.array(generation), tuple(map(tuple, successors)), edges)


def energy(tree: FiniteTree, sigma: Sequence[int], J: float) -> float:
    """``-J`` times the number of edges of ``V_n`` whose endpoints agree.

    Spins take values ``1..q``.
    """
    sigma = np.asarray(sigma)
    if sigma.shape != (tree.n_vertices,):
        raise ValueError(f"configuration must have {tree.n_vertices} spins")
    agree = np.count_nonzero(sigma[tree.edges[:, 0]] == sigma[tree.edges[:, 1]])
    return -J * agree


def _fields(law, q: int) -> np.ndarray:
    """Length-q boundary field vector from any accepted law type."""
    if isinstance(law, MeasureDescriptor):
        out = law.extended_fields()
    elif isinstance(law, BoundaryLaw):
        out = law.extended_fields()
    else:
        out = np.asarray(law, dtype=float)
        if out.shape == (q - 1,):
            out = np.append(out, 0.0)
    if out.shape != (q,):
        raise ValueError(f"law has {out.shape} fields, expected {q} (or {q - 1})")
    return out


def _configurations(n_vertices: int, q: int, start: int, stop: int) -> np.ndarray:
    """Configurations ``start .. stop-1`` in base-q order, vertex 0 most
    significant; spins are 0-based."""
    idx = np.arange(start, stop, dtype=np.int64)
    powers = q ** np.arange(n_vertices - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] // powers[None, :]) % q).astype(np.int8)


def _log_weights(tree: FiniteTree, fields: np.ndarray, params: PottsParams) -> np.ndarray:
    q = params.q
    check_size(tree.k, tree.n, q)
    nv = tree.n_vertices
    total = q ** nv
    boundary = tree.level(tree.n)
    a, b = tree.edges[:, 0], tree.edges[:, 1]
    out = np.empty(total)
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        c = _configurations(nv, q, start, stop)
        agree = (c[:, a] == c[:, b]).sum(axis=1) if len(a) else np.zeros(stop - start)
        out[start:stop] = params.beta_J * agree + fields[c[:, boundary]].sum(axis=1)
    return out


def finite_volume_distribution(tree: FiniteTree, law, params: PottsParams) -> np.ndarray:
    """Probabilities of all ``q**|V_n|`` configurations, base-q ordered."""
    lw = _log_weights(tree, _fields(law, params.q), params)
    return np.exp(lw - logsumexp(lw))


def finite_volume_probability(tree: FiniteTree, sigma: Sequence[int], law,
                              params: PottsParams) -> float:
    """``mu_n(sigma)`` for one configuration (spins ``1..q``)."""
    sigma = np.asarray(sigma, dtype=np.int64)
    q = params.q
    if sigma.shape != (tree.n_vertices,) or sigma.min() < 1 or sigma.max() > q:
        raise ValueError(f"sigma must assign a value in 1..{q} to each of {tree.n_vertices} vertices")
    fields = _fields(law, q)
    lw_all = _log_weights(tree, fields, params)
    boundary = tree.level(tree.n)
    lw = -params.beta_J * energy(tree, sigma, 1.0) + fields[sigma[boundary] - 1].sum()
    return float(math.exp(lw - logsumexp(lw_all)))


def partition_function(tree: FiniteTree, law, params: PottsParams) -> float:
    """``Z_n`` by summing every configuration."""
    lw = _log_weights(tree, _fields(law, params.q), params)
    return math.fsum(np.exp(lw))


def partition_function_recursive(tree: FiniteTree, law, params: PottsParams) -> float:
    """``Z_n`` by leaf-to-root summation over the tree."""
    q, theta = params.q, params.theta
    fields = _fields(law, q)
    transfer = np.ones((q, q)) + (theta - 1.0) * np.eye(q)
    msg = {}
    for x in range(tree.n_vertices - 1, -1, -1):
        if tree.generation[x] == tree.n:
            msg[x] = np.exp(fields)
        else:
            u = np.ones(q)
            for y in tree.successors[x]:
                u = u * (transfer @ msg.pop(y))
            msg[x] = u
    return float(msg[0].sum())


def cylinder_distribution(law, n: int, params: PottsParams, depth: Optional[int] = None) -> np.ndarray:
    """Distribution of the spins on ``V_depth`` under ``mu_n``
    (``depth`` defaults to ``n - 1``)."""
    depth = n - 1 if depth is None else depth
    if not 0 <= depth <= n:
        raise ValueError(f"depth must lie in 0..{n}, got {depth}")
    tree = build_tree(params.k, n, params.q)
    p = finite_volume_distribution(tree, law, params)
    inner = tree.ball_size(depth)
    return p.reshape(params.q ** inner, -1).sum(axis=1)


def check_compatibility(n: int, law, params: PottsParams) -> float:
    """Largest violation of ``sum_{omega_n} mu_n(sigma v omega_n) = mu_{n-1}(sigma)``."""
    if n < 2:
        raise ValueError("compatibility is checked between volumes n-1 and n with n >= 2")
    marginal = cylinder_distribution(law, n, params, depth=n - 1)
    previous = finite_volume_distribution(build_tree(params.k, n - 1, params.q), law, params)
    return float(np.max(np.abs(marginal - previous)))


def root_marginal(d, n: int, params: PottsParams) -> np.ndarray:
    """Distribution of the root spin under ``mu_n``."""
    return cylinder_distribution(d, n, params, depth=0)


def verify_complement_identity(d: MeasureDescriptor, n: int, params: PottsParams) -> float:
    """Max difference of ``V_{n-1}`` cylinder probabilities between ``d``
    and its complement ``(M^c, 1/z*)``."""
    a = cylinder_distribution(d, n, params)
    b = cylinder_distribution(complement_descriptor(d), n, params)
    return float(np.max(np.abs(a - b)))


# ---------------------------------------------------------------------------
# multi-start solver for the full fixed-point system
# ---------------------------------------------------------------------------

def _jacobian(h: np.ndarray, theta: float, k: int) -> np.ndarray:
    """Jacobian of ``G(h) = h - k F(h)`` for a batch ``h`` of shape (N, d)."""
    z = np.exp(h)
    s = z.sum(axis=1, keepdims=True)
    num = (theta - 1.0) * z + s + 1.0
    d = h.shape[1]
    dF = (z[:, None, :] / num[:, :, None]) - (z / (theta + s))[:, None, :]
    dF = dF + np.einsum("ij,jk->ijk", (theta - 1.0) * z / num, np.eye(d))
    return np.eye(d)[None] - k * dF


def _min_singular(jac: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        sv = np.linalg.svd(np.nan_to_num(jac, nan=0.0, posinf=0.0, neginf=0.0), compute_uv=False)
    return sv[:, -1]


def _newton(h: np.ndarray, theta: float, k: int, roots: Optional[np.ndarray] = None,
            iters: int = 100, tol: float = 1e-12, max_step: float = 1.0,
            shift: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Batched damped Newton on ``G(h) = h - k F(h) = 0``.

    With ``roots`` given, Newton runs on the deflated system
    ``G(h) * prod_r (1/|h - r|^2 + shift)``, which repels iterates from
    solutions already found. Rows keep iterating after ``|G| <= tol``
    until the step stalls, so degenerate roots are still approached to
    ~sqrt(eps). Returns ``(h, converged)``.
    """
    h = h.copy()
    active = np.ones(len(h), dtype=bool)
    for _ in range(iters):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        hi = h[idx]
        g = hi - k * _field_map(hi, theta)
        jac = _jacobian(hi, theta, k)
        det = np.linalg.det(jac)
        jac[~np.isfinite(det) | (np.abs(det) < 1e-300)] = np.eye(hi.shape[1])
        step = np.linalg.solve(jac, g[..., None])[..., 0]
        if roots is not None and len(roots):
            diff = hi[:, None, :] - roots[None, :, :]
            dist2 = np.maximum(np.sum(diff * diff, axis=2), 1e-300)
            m = 1.0 / dist2 + shift
            # gradient of log of the deflation factor
            grad = np.sum((-2.0 / dist2 ** 2 / m)[..., None] * diff, axis=1)
            denom = 1.0 + np.sum(grad * step, axis=1, keepdims=True)
            denom = np.where(np.abs(denom) < 1e-12, 1e-12, denom)
            step = step / denom
        norm = np.max(np.abs(step), axis=1, keepdims=True)
        step = step * np.minimum(1.0, max_step / np.maximum(norm, 1e-300))
        h_new = hi - step
        bad = ~np.all(np.isfinite(h_new), axis=1) | (np.max(np.abs(h_new), axis=1) > 60)
        h[idx] = np.where(bad[:, None], hi, h_new)
        stalled = np.max(np.abs(step), axis=1) <= 1e-15 * (1.0 + np.max(np.abs(hi), axis=1))
        active[idx[bad | stalled]] = False
    g = h - k * _field_map(h, theta)
    converged = np.all(np.isfinite(g), axis=1) & (np.max(np.abs(g), axis=1) <= tol)
    return h, converged


def cluster_laws(z: np.ndarray, rtol: float = 1e-7) -> List[np.ndarray]:
    """Greedy clustering of fixed points; returns one mean per cluster.

    A point joins the first cluster whose seed is within ``rtol``
    (relative, floored at 1) in every coordinate.
    """
    z = np.asarray(z, dtype=float).reshape(len(z), -1) if len(z) else np.empty((0, 1))
    seeds = np.empty((0, z.shape[1]))
    labels = np.empty(len(z), dtype=int)
    for i, row in enumerate(z):
        if len(seeds):
            hit = np.flatnonzero(np.all(np.abs(seeds - row) <= rtol * np.maximum(np.abs(seeds), 1.0),
                                        axis=1))
            if len(hit):
                labels[i] = hit[0]
                continue
        labels[i] = len(seeds)
        seeds = np.vstack([seeds, row])
    return [z[labels == j].mean(axis=0) for j in range(len(seeds))]


def _merge_degenerate(clusters: List[np.ndarray], theta: float, k: int,
                      radius: float = 1e-3) -> List[np.ndarray]:
    """Merge clusters lying within ``radius`` (relative) of a cluster whose
    Jacobian is numerically singular.

    At a degenerate root (e.g. the free law at ``theta_c``) the residual
    vanishes to higher order, so converged iterates scatter by up to
    ~eps**(1/3) and cannot be separated at the regular clustering tolerance.
    """
    if not clusters:
        return clusters
    h = np.log(np.array(clusters))
    # G = h - k F(h) has an O(1) Jacobian, so an absolute threshold is fine
    singular = _min_singular(_jacobian(h, theta, k)) < 1e-4
    merged: List[np.ndarray] = []
    used = np.zeros(len(clusters), dtype=bool)
    z = np.array(clusters)
    for i in np.flatnonzero(singular):
        if used[i]:
            continue
        near = ~used & np.all(np.abs(z - z[i]) <= radius * np.maximum(np.abs(z[i]), 1.0), axis=1)
        used |= near
        merged.append(z[near].mean(axis=0))
    merged.extend(z[j] for j in np.flatnonzero(~used))
    return merged


def _accept(h: np.ndarray, theta: float, k: int) -> np.ndarray:
    z = np.exp(h)
    res = np.max(np.abs(z - _rhs(z, theta, k)), axis=1)
    return res <= 1e-9 * np.maximum(1.0, z.max(axis=1))


def multi_start_solver(params: PottsParams, n_starts: int = 5000, seed: int = 0,
                       damping_steps: int = 200, cluster_rtol: float = 1e-7,
                       max_rounds: int = 20, return_diagnostics: bool = False):
    """Search the full (q-1)-dimensional fixed-point system from random starts.

    Starts are drawn log-uniformly from ``[1e-3, 1e3]^{q-1}``. The first
    round polishes every start with Newton twice: directly, and after
    ``damping_steps`` of the geometrically damped iteration
    ``z <- sqrt(z f(z))``. Damped iteration only reaches attracting fixed
    points and some repelling ones have tiny Newton basins, so further
    rounds rerun Newton from the same starts with all solutions found so
    far deflated, until a round adds nothing new.

    Returns
    -------
    laws : list of BoundaryLaw
        One law per cluster, sorted lexicographically by ``z``.
    diagnostics : dict
        Only when ``return_diagnostics`` is true.
    """
    q, k, theta = params.q, params.k, params.theta
    rng = np.random.default_rng(seed)
    h0 = rng.uniform(math.log(1e-3), math.log(1e3), size=(n_starts, q - 1))

    h_damped = h0.copy()
    for _ in range(damping_steps):
        h_damped = 0.5 * (h_damped + k * _field_map(h_damped, theta))

    attempted = converged = 0
    pool = []
    for start in (h0, h_damped):
        h, ok = _newton(start, theta, k)
        attempted += len(h)
        converged += int(ok.sum())
        pool.append(h[ok & _accept(h, theta, k)])
    h_found = np.concatenate(pool)
    clusters = _merge_degenerate(cluster_laws(np.exp(h_found), cluster_rtol), theta, k)

    rounds = 0
    for rounds in range(1, max_rounds + 1):
        known = np.log(np.array(clusters)) if clusters else np.empty((0, q - 1))
        h, ok = _newton(h0, theta, k, roots=known)
        attempted += len(h)
        converged += int(ok.sum())
        h = h[ok & _accept(h, theta, k)]
        # undeflated polish of the new candidates
        h, ok = _newton(h, theta, k)
        h = h[ok & _accept(h, theta, k)]
        before = len(clusters)
        clusters = _merge_degenerate(
            cluster_laws(np.concatenate([np.array(clusters).reshape(-1, q - 1), np.exp(h)]),
                         cluster_rtol), theta, k)
        if len(clusters) == before:
            break

    laws = sorted((BoundaryLaw(tuple(c)) for c in clusters), key=lambda law: law.z)
    diagnostics = {
        "starts": n_starts,
        "attempted": attempted,
        "converged": converged,
        "dropped": attempted - converged,
        "deflation_rounds": rounds,
        "clusters": len(laws),
    }
    log.debug("multi-start solver %s: %s", params, diagnostics)
    if return_diagnostics:
        return laws, diagnostics
    return laws


# ---------------------------------------------------------------------------
# convex-hull check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HullResult:
    """Outcome for one measure.

    ``is_vertex`` true certifies that the measure's ``V_1`` cylinder
    vector is not a convex combination of the others (hence the measure
    is not a mixture of them). False means only "inconclusive at this
    volume". ``margin`` is the smallest max-norm distance from the
    vector to the hull of the others; ``depth`` records the volume used.
    """

    descriptor: MeasureDescriptor
    is_vertex: bool
    margin: float
    depth: int = field(default=2)


def _hull_distance(target: np.ndarray, others: np.ndarray) -> float:
    """Min over convex weights ``w`` of ``max|others.T @ w - target|``."""
    n_pts, dim = others.shape
    # variables: w (n_pts), t
    c = np.zeros(n_pts + 1)
    c[-1] = 1.0
    A_ub = np.block([[others.T, -np.ones((dim, 1))], [-others.T, -np.ones((dim, 1))]])
    b_ub = np.concatenate([target, -target])
    A_eq = np.concatenate([np.ones(n_pts), [0.0]])[None]
    bounds = [(0, None)] * n_pts + [(0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"hull LP failed (status {res.status}): {res.message}")
    return float(res.fun)


def hull_extremality_check(descriptors: Sequence[MeasureDescriptor], n: int, params: PottsParams,
                           tol: float = 1e-9) -> List[HullResult]:
    """Test each measure's ``V_1`` cylinder vector (computed from ``mu_n``)
    for membership in the convex hull of the others' vectors.

    A positive answer is a sufficient, finite-volume certificate that the
    measure is not a mixture of the others; a negative one is inconclusive.

    Raises
    ------
    RuntimeError
        If the linear program does not solve cleanly.
    """
    if len(descriptors) < 2:
        raise ValueError("need at least two measures")
    vectors = np.array([cylinder_distribution(d, n, params, depth=1) for d in descriptors])
    out = []
    for i, d in enumerate(descriptors):
        others = np.delete(vectors, i, axis=0)
        margin = _hull_distance(vectors[i], others)
        out.append(HullResult(d, margin > tol, margin, n))
    return out
