"""Damped Newton minimization of the vortex energy and of its scalar reduction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse.linalg as spla

from . import graph as gr
from . import vortex as vm
from .errors import Diverged, Infeasible, MaxIterations, OverflowGuard
from .graph import Graph
from .vortex import BackgroundField, ModelParams, State, VortexSet

logger = logging.getLogger(__name__)

#: Mean of v1 below this value is classified as divergence.
DIVERGENCE_MEAN = -1e4
INNER_RTOL = 1e-12
MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-10
    max_iter: int = 200
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    init: Optional[State] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if not 0 < self.armijo_c < 1:
            raise ValueError(f"armijo_c must lie in (0, 1), got {self.armijo_c!r}")
        if not 0 < self.backtrack < 1:
            raise ValueError(f"backtrack must lie in (0, 1), got {self.backtrack!r}")


@dataclass
class Verification:
    bounds: vm.BoundsReport
    identities: vm.IdentityErrors
    feasibility: vm.Feasibility


@dataclass
class Solution:
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    background: BackgroundField
    iterations: int
    final_residual_inf: float
    energy_value: float
    verification: Verification
    decrements: list[float] = field(default_factory=list)


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual_inf: float
    decrements: list[float]


def newton_minimize(
    x0: np.ndarray,
    change: Callable[[np.ndarray, np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    hessian: Callable[[np.ndarray], object],
    residual_inf: Callable[[np.ndarray], float],
    opts: SolveOptions,
    divergence_check: Callable[[np.ndarray], None] = lambda x: None,
) -> NewtonResult:
    """Minimize a smooth convex function with Armijo-damped Newton steps.

    ``change(x, d)`` must return ``f(x + d) - f(x)``; it is used for the
    sufficient-decrease test instead of two absolute function values, which
    keeps the test meaningful close to the minimizer. Iteration stops on
    ``residual_inf(x) <= opts.tol``, followed by one undamped polishing step.
    """
    x = np.array(x0, dtype=float)
    decrements = []
    for it in range(opts.max_iter + 1):
        try:
            res = residual_inf(x)
        except OverflowGuard as exc:
            raise Diverged(str(exc), iterations=it) from exc
        if res <= opts.tol:
            if res > 0:
                x, res = _polish(x, res, gradient, hessian, residual_inf)
            return NewtonResult(x, it, res, decrements)
        if it == opts.max_iter:
            raise MaxIterations(
                f"no convergence after {it} iterations (residual {res:.3e})",
                iterations=it,
                residual=res,
            )
        g = gradient(x)
        d = _newton_direction(hessian(x), g)
        slope = float(g @ d)
        if not slope < 0:
            logger.debug("Newton direction not a descent direction; using -gradient")
            d = -g
            slope = -float(g @ g)

        t = 1.0
        for _ in range(MAX_BACKTRACKS):
            try:
                dj = change(x, t * d)
            except OverflowGuard:
                dj = math.inf
            if dj <= opts.armijo_c * t * slope:
                break
            t *= opts.backtrack
        else:
            raise MaxIterations(
                f"line search stalled at iteration {it} (residual {res:.3e})",
                iterations=it,
                residual=res,
            )
        assert dj < 0, "accepted step must strictly decrease the energy"
        x = x + t * d
        decrements.append(dj)
        divergence_check(x)
    raise AssertionError("unreachable")


def _polish(x, res, gradient, hessian, residual_inf):
    # Near the threshold the energy is flat and a residual just under tol
    # can hide a much larger field error. Kept only if the residual drops.
    try:
        trial = x + _newton_direction(hessian(x), gradient(x))
        trial_res = residual_inf(trial)
    except OverflowGuard:
        return x, res
    if trial_res < res:
        return trial, trial_res
    return x, res


def _newton_direction(h, g: np.ndarray) -> np.ndarray:
    lu = spla.splu(h.tocsc())
    d = lu.solve(-g)
    gnorm = np.linalg.norm(g)
    # One round of iterative refinement keeps the inner residual at roundoff.
    r = -g - h @ d
    if np.linalg.norm(r) > INNER_RTOL * gnorm:
        d = d + lu.solve(r)
    return d


def _mean_check(g: Graph, n: int):
    def check(x):
        m = gr.mean(g, x[:n])
        if m < DIVERGENCE_MEAN:
            raise Diverged(f"mean of the iterate fell to {m:.3e}")

    return check


def solve_vortex(
    g: Graph,
    p: ModelParams,
    vx: VortexSet,
    opts: SolveOptions = SolveOptions(),
    bg: Optional[BackgroundField] = None,
) -> Solution:
    """Unique solution of the vortex system on ``g``.

    Raises :class:`Infeasible` before iterating when the graph volume does
    not strictly exceed the existence threshold.
    """
    feas = vm.check_feasible(g, p, vx.n)
    if not feas.feasible:
        raise Infeasible(feas.volume, feas.threshold)
    if bg is None:
        bg = vm.background_u0(g, vx)
    nv = g.n_vertices
    x0 = State.zeros(g).stacked() if opts.init is None else State(*opts.init).stacked()

    def res_inf(x):
        r1, r2 = vm.residual(g, p, bg, State.unstack(x))
        return max(float(np.abs(r1).max()), float(np.abs(r2).max()))

    result = newton_minimize(
        x0,
        change=lambda x, d: vm.energy_change(g, p, bg, State.unstack(x), State.unstack(d)),
        gradient=lambda x: vm.energy_gradient(g, p, bg, State.unstack(x)).stacked(),
        hessian=lambda x: vm.energy_hessian(g, p, bg, State.unstack(x)),
        residual_inf=res_inf,
        opts=opts,
        divergence_check=_mean_check(g, nv),
    )
    s = State.unstack(result.x)
    u1 = bg.u0 + s.v1
    u2 = bg.u0 + s.v2
    verification = Verification(
        bounds=vm.check_bounds(g, p, u1, u2),
        identities=vm.check_identities(g, p, bg, s),
        feasibility=feas,
    )
    return Solution(
        u1=u1,
        u2=u2,
        v1=s.v1,
        v2=s.v2,
        background=bg,
        iterations=result.iterations,
        final_residual_inf=result.residual_inf,
        energy_value=vm.energy(g, p, bg, s),
        verification=verification,
        decrements=result.decrements,
    )


@dataclass
class ScalarSolution:
    v: np.ndarray
    u: np.ndarray
    background: BackgroundField
    iterations: int
    final_residual_inf: float
    decrements: list[float] = field(default_factory=list)


def scalar_threshold(lambda1: float, n: int) -> float:
    return vm.FOUR_PI * n / lambda1


def solve_scalar_full(
    g: Graph,
    lambda1: float,
    vx: VortexSet,
    opts: SolveOptions = SolveOptions(),
    bg: Optional[BackgroundField] = None,
) -> ScalarSolution:
    """Solve ``Δv = λ(e^{u0+v} - 1) + 4πn/|V|``; see :func:`solve_scalar`."""
    if not lambda1 > 0:
        raise vm.InvalidParams(f"lambda1 must be positive, got {lambda1!r}")
    thr = scalar_threshold(lambda1, vx.n)
    if not vm.is_strictly_above(g.volume, thr):
        raise Infeasible(g.volume, thr)
    if bg is None:
        bg = vm.background_u0(g, vx)
    x0 = np.zeros(g.n_vertices)
    if opts.init is not None:
        x0 = np.asarray(opts.init[0] if isinstance(opts.init, State) else opts.init, dtype=float)

    result = newton_minimize(
        x0,
        change=lambda v, dv: vm.scalar_energy_change(g, lambda1, bg, v, dv),
        gradient=lambda v: vm.scalar_gradient(g, lambda1, bg, v),
        hessian=lambda v: vm.scalar_hessian(g, lambda1, bg, v),
        residual_inf=lambda v: float(np.abs(vm.scalar_residual(g, lambda1, bg, v)).max()),
        opts=opts,
        divergence_check=_mean_check(g, g.n_vertices),
    )
    return ScalarSolution(
        v=result.x,
        u=bg.u0 + result.x,
        background=bg,
        iterations=result.iterations,
        final_residual_inf=result.residual_inf,
        decrements=result.decrements,
    )


def solve_scalar(g: Graph, lambda1: float, vx: VortexSet, opts: SolveOptions = SolveOptions()) -> np.ndarray:
    """Regularized scalar solution ``v``; the original unknown is ``u0 + v``."""
    return solve_scalar_full(g, lambda1, vx, opts).v


@dataclass
class CouplingCheck:
    gap_inf: float
    mismatch_inf: float


def cross_check_equal_coupling(
    g: Graph, p: ModelParams, vx: VortexSet, opts: SolveOptions = SolveOptions()
) -> CouplingCheck:
    """Compare the two-component solver with the scalar one when ``me2 == mg2``."""
    if p.me2 != p.mg2:
        raise vm.InvalidParams("equal-coupling check needs me2 == mg2")
    bg = vm.background_u0(g, vx)
    sol = solve_vortex(g, p, vx, opts, bg=bg)
    scal = solve_scalar_full(g, p.me2, vx, opts, bg=bg)
    return CouplingCheck(
        gap_inf=float(np.abs(sol.u1 - sol.u2).max()),
        mismatch_inf=float(np.abs(sol.u1 - scal.u).max()),
    )
