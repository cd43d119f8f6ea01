"""Calculus on finite connected weighted graphs.

A :class:`Graph` carries a positive vertex measure ``mu`` and symmetric
positive edge weights. Vertex fields are plain 1-d float arrays aligned with
``Graph.vertices``. With the stiffness matrix ``K = D - W`` and
``M = diag(mu)`` the Laplacian is ``-M^{-1} K``, and
``integral(gradient_form(u, v)) == u @ K @ v``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .errors import (
    Disconnected,
    DuplicateEdge,
    DuplicateVertex,
    IncompatibleSource,
    InputError,
    InvalidExponent,
    NonPositiveMeasure,
    NonPositiveWeight,
    SelfLoop,
    UnknownVertex,
)

logger = logging.getLogger(__name__)

#: Above this vertex count Poisson solves switch from a pinned Cholesky
#: factorization to Jacobi-preconditioned conjugate gradients.
DIRECT_SOLVE_LIMIT = 2000
CG_RTOL = 1e-12
COMPATIBILITY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable weighted graph. Build it with :func:`build_graph`."""

    vertices: tuple
    mu: np.ndarray
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    index: dict = field(repr=False)

    def __post_init__(self):
        for arr in (self.mu, self.heads, self.tails, self.weights):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    @cached_property
    def volume(self) -> float:
        return float(math.fsum(self.mu))

    @property
    def edges(self) -> list[tuple[Hashable, Hashable, float]]:
        vs = self.vertices
        return [
            (vs[i], vs[j], float(w))
            for i, j, w in zip(self.heads, self.tails, self.weights)
        ]

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        n = self.n_vertices
        rows = np.concatenate([self.heads, self.tails])
        cols = np.concatenate([self.tails, self.heads])
        data = np.concatenate([self.weights, self.weights])
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """``K = D - W``; symmetric positive semidefinite, kernel = constants."""
        a = self.adjacency
        degree = np.asarray(a.sum(axis=1)).ravel()
        return (sp.diags(degree) - a).tocsr()

    @cached_property
    def _pinned_factor(self):
        # Cholesky of K with the first vertex's row and column removed.
        k = self.stiffness[1:, 1:].toarray()
        return sla.cho_factor(k, lower=True, check_finite=False)

    def field(self, values) -> np.ndarray:
        """Coerce a mapping ``id -> value`` or a sequence to a vertex field."""
        if isinstance(values, dict):
            out = np.zeros(self.n_vertices)
            for key, val in values.items():
                if key not in self.index:
                    raise UnknownVertex(f"unknown vertex {key!r}")
                out[self.index[key]] = val
            return out
        return check_field(self, values)

    def as_dict(self, u) -> dict:
        return {v: float(x) for v, x in zip(self.vertices, u)}

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and np.array_equal(self.mu, other.mu)
            and self.edges == other.edges
        )

    __hash__ = object.__hash__


def build_graph(
    vertex_list: Sequence[Hashable],
    measure_list: Sequence[float],
    weighted_edge_list: Iterable[tuple[Hashable, Hashable, float]],
) -> Graph:
    """Validate raw lists and return a :class:`Graph`.

    Each unordered edge must appear once; ``(a, b, w)`` and ``(b, a, w)``
    together count as a duplicate.
    """
    vertices = tuple(vertex_list)
    if not vertices:
        raise InputError("graph needs at least one vertex")
    mu = np.asarray(measure_list, dtype=float)
    if mu.shape != (len(vertices),):
        raise InputError(
            f"{len(vertices)} vertices but {mu.size} measure values"
        )
    index = {}
    for i, v in enumerate(vertices):
        if v in index:
            raise DuplicateVertex(f"vertex {v!r} declared twice")
        index[v] = i
    for v, m in zip(vertices, mu):
        if not (m > 0 and math.isfinite(m)):
            raise NonPositiveMeasure(f"measure of vertex {v!r} is {m!r}, must be > 0")

    heads, tails, weights = [], [], []
    seen = set()
    for a, b, w in weighted_edge_list:
        for end in (a, b):
            if end not in index:
                raise UnknownVertex(f"edge references unknown vertex {end!r}")
        if a == b:
            raise SelfLoop(f"self-loop at vertex {a!r}")
        w = float(w)
        if not (w > 0 and math.isfinite(w)):
            raise NonPositiveWeight(f"weight of edge ({a!r}, {b!r}) is {w!r}, must be > 0")
        key = frozenset((a, b))
        if key in seen:
            raise DuplicateEdge(f"edge ({a!r}, {b!r}) given more than once")
        seen.add(key)
        heads.append(index[a])
        tails.append(index[b])
        weights.append(w)

    g = Graph(
        vertices=vertices,
        mu=mu.copy(),
        heads=np.asarray(heads, dtype=np.intp),
        tails=np.asarray(tails, dtype=np.intp),
        weights=np.asarray(weights, dtype=float),
        index=index,
    )
    if g.n_vertices > 1:
        ncomp, labels = csgraph.connected_components(g.adjacency, directed=False)
        if ncomp > 1:
            stray = vertices[int(np.flatnonzero(labels != labels[0])[0])]
            raise Disconnected(
                f"graph has {ncomp} connected components; {stray!r} is not "
                f"reachable from {vertices[0]!r}"
            )
    return g


def check_field(g: Graph, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (g.n_vertices,):
        raise InputError(f"field has shape {u.shape}, graph has {g.n_vertices} vertices")
    return u


def laplacian(g: Graph, u) -> np.ndarray:
    """``(Δu)(x) = (1/μ(x)) Σ_{y~x} w_xy (u(y) - u(x))``."""
    u = check_field(g, u)
    i, j = g.heads, g.tails
    t = g.weights * (u[j] - u[i])
    n = g.n_vertices
    return (np.bincount(i, t, n) - np.bincount(j, t, n)) / g.mu


def gradient_form(g: Graph, u, v) -> np.ndarray:
    """Pointwise ``Γ(u, v)``; ``Γ(u, u) = |∇u|²``."""
    u = check_field(g, u)
    v = check_field(g, v)
    i, j = g.heads, g.tails
    t = g.weights * ((u[j] - u[i]) * (v[j] - v[i]))
    n = g.n_vertices
    return (np.bincount(i, t, n) + np.bincount(j, t, n)) / (2.0 * g.mu)


def integrate(g: Graph, u) -> float:
    u = check_field(g, u)
    return float(g.mu @ u)


def mean(g: Graph, u) -> float:
    return integrate(g, u) / g.volume


def dirichlet_energy(g: Graph, u) -> float:
    """``∫ |∇u|² dμ``, evaluated edge-wise."""
    u = check_field(g, u)
    du = u[g.tails] - u[g.heads]
    return float(g.weights @ (du * du))


class Norms(NamedTuple):
    lp: float
    h1: float


def lp_norm(g: Graph, u, p: float = 2.0) -> float:
    if not p >= 1:
        raise InvalidExponent(f"L^p norm needs p >= 1, got {p!r}")
    a = np.abs(check_field(g, u))
    if math.isinf(p):
        return float(a.max())
    return float((g.mu @ a**p) ** (1.0 / p))


def h1_norm(g: Graph, u) -> float:
    u = check_field(g, u)
    return math.sqrt(dirichlet_energy(g, u) + float(g.mu @ (u * u)))


def norms(g: Graph, u, p: float = 2.0) -> Norms:
    """L^p norm and the W^{1,2} norm ``(∫ |∇u|² + u² dμ)^{1/2}``."""
    return Norms(lp_norm(g, u, p), h1_norm(g, u))


def solve_poisson(g: Graph, f, method: str = "auto") -> np.ndarray:
    """Return the unique ``u`` with ``Δu = f`` and ``∫ u dμ = 0``.

    ``method`` is ``"direct"`` (pinned Cholesky), ``"cg"`` or ``"auto"``,
    which picks direct up to :data:`DIRECT_SOLVE_LIMIT` vertices.
    """
    f = check_field(g, f)
    total = float(g.mu @ f)
    scale = float(np.abs(f).max(initial=0.0)) * g.volume
    if abs(total) > COMPATIBILITY_RTOL * scale:
        raise IncompatibleSource(
            f"∫ f dμ = {total:.6g} but a Poisson source must integrate to zero"
        )
    n = g.n_vertices
    if n == 1 or scale == 0.0:
        return np.zeros(n)
    # Strip the roundoff-level incompatibility so the system is consistent.
    b = -g.mu * (f - total / g.volume)
    if method == "auto":
        method = "direct" if n <= DIRECT_SOLVE_LIMIT else "cg"
    if method == "direct":
        u = np.zeros(n)
        u[1:] = sla.cho_solve(g._pinned_factor, b[1:], check_finite=False)
    elif method == "cg":
        u = _cg_solve(g, b)
    else:
        raise ValueError(f"unknown Poisson method {method!r}")
    return u - (g.mu @ u) / g.volume


def _cg_solve(g: Graph, b: np.ndarray) -> np.ndarray:
    k = g.stiffness
    inv_diag = 1.0 / k.diagonal()
    precond = spla.LinearOperator(k.shape, matvec=lambda r: inv_diag * r, dtype=float)
    u, info = spla.cg(k, b, rtol=CG_RTOL, atol=0.0, maxiter=20 * g.n_vertices, M=precond)
    if info != 0:
        logger.warning("conjugate gradients stopped without converging (info=%d)", info)
    return u


def smallest_nonzero_eigenpair(
    g: Graph, rtol: float = 1e-12, max_iter: int = 20000, seed: int = 0
) -> tuple[float, np.ndarray]:
    """Smallest nonzero eigenvalue of ``-Δ`` and a μ-normalized eigenvector.

    Inverse power iteration restricted to μ-mean-zero fields; stops when
    successive Rayleigh quotients agree to ``rtol``.
    """
    n = g.n_vertices
    if n == 1:
        raise Disconnected("a single vertex has no nonzero Laplacian eigenvalue")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x -= (g.mu @ x) / g.volume
    x /= math.sqrt(g.mu @ (x * x))
    rq = _rayleigh(g, x)
    for _ in range(max_iter):
        y = solve_poisson(g, -x)
        y /= math.sqrt(g.mu @ (y * y))
        new_rq = _rayleigh(g, y)
        x = y
        if abs(new_rq - rq) <= rtol * abs(new_rq):
            return new_rq, x
        rq = new_rq
    logger.warning("inverse iteration hit max_iter=%d; eigenvalue may be inexact", max_iter)
    return rq, x


def _rayleigh(g: Graph, x: np.ndarray) -> float:
    return float(x @ (g.stiffness @ x)) / float(g.mu @ (x * x))


def poincare_constant(g: Graph) -> float:
    """``C = 1/λ₂`` so that ``∫u² dμ <= C ∫|∇u|² dμ`` for mean-zero ``u``."""
    lam, _ = smallest_nonzero_eigenpair(g)
    if not lam > 0:
        raise Disconnected("Laplacian has a repeated zero eigenvalue")
    return 1.0 / lam
