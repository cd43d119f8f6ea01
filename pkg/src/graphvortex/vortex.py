"""The non-Abelian vortex system on a graph.

Original unknowns ``(u1, u2)`` solve

    Δu1 = -N λ1 + λ1 (e^{u1/N + (N-1)u2/N} + (N-1) e^{(u1-u2)/N}) + 4π Σ δ_p
    Δu2 =  λ2 (e^{u1/N + (N-1)u2/N} - e^{(u1-u2)/N}) + 4π Σ δ_p

with ``λ1 = m_e²`` and ``λ2 = m_g²``. Subtracting the background field ``u0``
(``Δu0 = -4πn/|V| + 4π Σ δ_p``) leaves the regular unknowns
``v_i = u_i - u0``, which are the critical points of a convex energy.

Throughout, ``a = u0 + v1/N + (N-1) v2/N`` and ``b = (v1 - v2)/N`` are the
two exponent arguments.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp

from . import graph as gr
from .errors import InvalidParams, OverflowGuard, UnknownVertex
from .graph import Graph

FOUR_PI = 4.0 * math.pi
#: Largest exponent argument accepted before raising :class:`OverflowGuard`.
EXP_GUARD = 700.0


@dataclass(frozen=True)
class ModelParams:
    """Group rank ``N`` and the squared masses ``me2 = m_e²``, ``mg2 = m_g²``."""

    N: int
    me2: float
    mg2: float

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 2:
            raise InvalidParams(f"N must be an integer >= 2, got {self.N!r}")
        for name in ("me2", "mg2"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise InvalidParams(f"{name} must be positive and finite, got {val!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "me2", float(self.me2))
        object.__setattr__(self, "mg2", float(self.mg2))


@dataclass(frozen=True)
class VortexSet:
    """Vortex locations with positive integer multiplicities."""

    entries: tuple[tuple[Hashable, int], ...] = ()

    def __post_init__(self):
        folded = Counter()
        order = []
        for vid, mult in self.entries:
            if isinstance(mult, bool) or int(mult) != mult or mult < 1:
                raise InvalidParams(f"multiplicity of {vid!r} must be a positive integer, got {mult!r}")
            if vid not in folded:
                order.append(vid)
            folded[vid] += int(mult)
        object.__setattr__(self, "entries", tuple((v, folded[v]) for v in order))

    @classmethod
    def from_points(cls, points: Iterable[Hashable]) -> "VortexSet":
        """Fold a list of (possibly repeated) vortex vertices."""
        return cls(tuple((p, 1) for p in points))

    @property
    def n(self) -> int:
        return sum(m for _, m in self.entries)

    def validate(self, g: Graph) -> None:
        for vid, _ in self.entries:
            if vid not in g.index:
                raise UnknownVertex(f"vortex at unknown vertex {vid!r}")


@dataclass(frozen=True, eq=False)
class BackgroundField:
    """``u0`` with ``max u0 = 0``; ``gauge`` is the constant added to the
    mean-zero Poisson solution to reach that normalization."""

    u0: np.ndarray
    gauge: float
    n: int


class State(NamedTuple):
    v1: np.ndarray
    v2: np.ndarray

    @classmethod
    def zeros(cls, g: Graph) -> "State":
        return cls(np.zeros(g.n_vertices), np.zeros(g.n_vertices))

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.v1, self.v2])

    @classmethod
    def unstack(cls, x: np.ndarray) -> "State":
        n = x.size // 2
        return cls(x[:n], x[n:])


class Feasibility(NamedTuple):
    feasible: bool
    margin: float
    threshold: float
    volume: float


class IdentityErrors(NamedTuple):
    err1: float
    err2: float


class BoundsReport(NamedTuple):
    sign1_ok: bool
    sign2_ok: bool
    gap_ok: bool
    max_gap: float
    gap_bound: float
    weak_gap_ok: bool
    weak_gap_bound: float


def dirac_field(g: Graph, vx: VortexSet) -> np.ndarray:
    """``Σ_j δ_{p_j}`` with ``δ_p = 1[x = p] / μ(p)``, so it integrates to ``n``."""
    vx.validate(g)
    d = np.zeros(g.n_vertices)
    for vid, mult in vx.entries:
        i = g.index[vid]
        d[i] += mult / g.mu[i]
    return d


def vortex_source(g: Graph, vx: VortexSet) -> np.ndarray:
    return -FOUR_PI * vx.n / g.volume + FOUR_PI * dirac_field(g, vx)


def background_u0(g: Graph, vx: VortexSet, method: str = "auto") -> BackgroundField:
    u = gr.solve_poisson(g, vortex_source(g, vx), method=method)
    gauge = -float(u.max())
    u0 = u + gauge
    u0.setflags(write=False)
    return BackgroundField(u0=u0, gauge=gauge, n=vx.n)


def shift_gauge(bg: BackgroundField, c: float) -> BackgroundField:
    """Same background up to the additive constant ``c`` (breaks ``max u0 = 0``)."""
    u0 = bg.u0 + c
    u0.setflags(write=False)
    return BackgroundField(u0=u0, gauge=bg.gauge + c, n=bg.n)


def threshold(p: ModelParams, n: int) -> float:
    """Volume the graph must strictly exceed for a solution to exist."""
    N = p.N
    return FOUR_PI * n / (N * p.me2) + FOUR_PI * n * (N - 1) / (N * p.mg2)


def is_strictly_above(volume: float, thr: float) -> bool:
    # Exact equality is not attainable in floating point once the threshold
    # went through divisions; treat a few-ulp margin as equality.
    return bool(volume - thr > 8 * np.finfo(float).eps * max(abs(volume), abs(thr)))


def check_feasible(g: Graph, p: ModelParams, n: int) -> Feasibility:
    thr = threshold(p, n)
    vol = g.volume
    return Feasibility(is_strictly_above(vol, thr), vol - thr, thr, vol)


def _guarded_exp(*args: np.ndarray) -> list[np.ndarray]:
    top = max(float(np.max(a, initial=-np.inf)) for a in args)
    if not top <= EXP_GUARD:
        raise OverflowGuard(top, EXP_GUARD)
    return [np.exp(a) for a in args]


def exponent_args(p: ModelParams, bg: BackgroundField, s: State) -> tuple[np.ndarray, np.ndarray]:
    N = p.N
    a = bg.u0 + s.v1 / N + (N - 1) * s.v2 / N
    b = (s.v1 - s.v2) / N
    return a, b


def residual(g: Graph, p: ModelParams, bg: BackgroundField, s: State) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise defect of the regularized system; zero exactly at solutions."""
    N = p.N
    ea, eb = _guarded_exp(*exponent_args(p, bg, s))
    src = FOUR_PI * bg.n / g.volume
    r1 = gr.laplacian(g, s.v1) - p.me2 * (ea + (N - 1) * eb - N) - src
    r2 = gr.laplacian(g, s.v2) - p.mg2 * (ea - eb) - src
    return r1, r2


def _linear_coeffs(g: Graph, p: ModelParams, n: int) -> tuple[float, float]:
    c1 = p.N - FOUR_PI * n / (p.me2 * g.volume)
    c2 = FOUR_PI * n * (p.N - 1) / (p.mg2 * g.volume)
    return c1, c2


def energy(g: Graph, p: ModelParams, bg: BackgroundField, s: State) -> float:
    """The convex functional whose critical points solve the system."""
    N = p.N
    ea, eb = _guarded_exp(*exponent_args(p, bg, s))
    c1, c2 = _linear_coeffs(g, p, bg.n)
    dens = N * ea + N * (N - 1) * eb - c1 * s.v1 + c2 * s.v2
    return (
        gr.dirichlet_energy(g, s.v1) / (2 * p.me2)
        + (N - 1) * gr.dirichlet_energy(g, s.v2) / (2 * p.mg2)
        + float(g.mu @ dens)
    )


def energy_change(g: Graph, p: ModelParams, bg: BackgroundField, s: State, d: State) -> float:
    """``energy(s + d) - energy(s)`` evaluated without cancellation.

    Uses ``expm1`` for the exponentials and the polarized Dirichlet form, so
    decrements far below ``eps * |J|`` are still resolved.
    """
    N = p.N
    a, b = exponent_args(p, bg, s)
    da = d.v1 / N + (N - 1) * d.v2 / N
    db = (d.v1 - d.v2) / N
    ea, eb = _guarded_exp(a, b)
    _guarded_exp(a + da, b + db)
    c1, c2 = _linear_coeffs(g, p, bg.n)

    def quad(v, dv):
        dvv = dv[g.tails] - dv[g.heads]
        vv = v[g.tails] - v[g.heads]
        return float(g.weights @ (dvv * (2 * vv + dvv)))

    dens = N * ea * np.expm1(da) + N * (N - 1) * eb * np.expm1(db) - c1 * d.v1 + c2 * d.v2
    return (
        quad(s.v1, d.v1) / (2 * p.me2)
        + (N - 1) * quad(s.v2, d.v2) / (2 * p.mg2)
        + float(g.mu @ dens)
    )


def energy_gradient(g: Graph, p: ModelParams, bg: BackgroundField, s: State) -> State:
    """Euclidean gradient of the energy with respect to vertex values."""
    r1, r2 = residual(g, p, bg, s)
    return State(-g.mu * r1 / p.me2, -g.mu * (p.N - 1) * r2 / p.mg2)


def energy_hessian(g: Graph, p: ModelParams, bg: BackgroundField, s: State) -> sp.csr_matrix:
    """Hessian on stacked ``[v1; v2]``; symmetric positive definite for N >= 2."""
    N = p.N
    ea, eb = _guarded_exp(*exponent_args(p, bg, s))
    k = g.stiffness
    alpha = g.mu * ea / N
    beta = g.mu * (N - 1) * eb / N
    d11 = alpha + beta
    d12 = (N - 1) * alpha - beta
    d22 = (N - 1) ** 2 * alpha + beta
    return sp.bmat(
        [
            [k / p.me2 + sp.diags(d11), sp.diags(d12)],
            [sp.diags(d12), (N - 1) * k / p.mg2 + sp.diags(d22)],
        ],
        format="csr",
    )


def check_identities(g: Graph, p: ModelParams, bg: BackgroundField, s: State) -> IdentityErrors:
    """Normalized defects of the two integral identities every solution obeys."""
    N = p.N
    n = bg.n
    vol = g.volume
    ea, eb = _guarded_exp(*exponent_args(p, bg, s))
    rhs1 = N * vol - FOUR_PI * n / p.me2 - FOUR_PI * n * (N - 1) / p.mg2
    rhs2 = N * vol - FOUR_PI * n / p.me2 + FOUR_PI * n / p.mg2
    scale = N * vol
    return IdentityErrors(
        abs(N * gr.integrate(g, ea) - rhs1) / scale,
        abs(N * gr.integrate(g, eb) - rhs2) / scale,
    )


def gap_bound(N: int) -> float:
    """``N ln(N/(N-1))``, the sharp bound on ``max (u1 - u2)``."""
    return N * math.log(N / (N - 1))


def check_bounds(g: Graph, p: ModelParams, u1, u2) -> BoundsReport:
    """Strict a priori bounds satisfied by solutions with at least one vortex."""
    u1 = gr.check_field(g, u1)
    u2 = gr.check_field(g, u2)
    gap = u1 - u2
    bound = gap_bound(p.N)
    weak = p.N / (p.N - 1)
    return BoundsReport(
        sign1_ok=bool(np.all(u1 < 0)),
        sign2_ok=bool(np.all(u2 < 0)),
        gap_ok=bool(np.all(gap < bound)),
        max_gap=float(gap.max()),
        gap_bound=bound,
        weak_gap_ok=bool(np.all(gap < weak)),
        weak_gap_bound=weak,
    )


# Equal-coupling reduction: Δv = λ (e^{u0+v} - 1) + 4πn/|V|.

def scalar_residual(g: Graph, lambda1: float, bg: BackgroundField, v) -> np.ndarray:
    v = gr.check_field(g, v)
    (e,) = _guarded_exp(bg.u0 + v)
    return gr.laplacian(g, v) - lambda1 * (e - 1.0) - FOUR_PI * bg.n / g.volume


def scalar_energy_change(g: Graph, lambda1: float, bg: BackgroundField, v, dv) -> float:
    """Increment of ``∫ Γ(v,v)/2 + λ(e^{u0+v} - v) + 4πn v/|V| dμ``."""
    a = bg.u0 + v
    (e,) = _guarded_exp(a)
    _guarded_exp(a + dv)
    dd = dv[g.tails] - dv[g.heads]
    vv = v[g.tails] - v[g.heads]
    quad = float(g.weights @ (dd * (2 * vv + dd))) / 2
    dens = lambda1 * (e * np.expm1(dv) - dv) + FOUR_PI * bg.n / g.volume * dv
    return quad + float(g.mu @ dens)


def scalar_gradient(g: Graph, lambda1: float, bg: BackgroundField, v) -> np.ndarray:
    return -g.mu * scalar_residual(g, lambda1, bg, v)


def scalar_hessian(g: Graph, lambda1: float, bg: BackgroundField, v) -> sp.csr_matrix:
    (e,) = _guarded_exp(bg.u0 + v)
    return (g.stiffness + sp.diags(lambda1 * g.mu * e)).tocsr()
