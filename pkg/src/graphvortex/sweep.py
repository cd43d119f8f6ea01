"""Parameter sweeps toward the existence boundary.

With equal couplings ``me2 = mg2 = λ`` the system is solvable iff
``λ > λ* = 4πn/|V|``. Sweeping ``λ`` down toward ``λ*`` shows the solutions
blowing up: ``min u1`` drops and ``max |u1| + |u2|`` grows without bound.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import graph as gr
from . import vortex as vm
from .errors import VortexError
from .graph import Graph
from .solver import SolveOptions, solve_vortex
from .vortex import ModelParams, VortexSet


def critical_lambda(g: Graph, n: int) -> float:
    """``λ* = 4πn/|V|``: equal-coupling value at which the threshold equals ``|V|``."""
    return vm.FOUR_PI * n / g.volume


def geometric_factors(k_max: int) -> list[float]:
    """``1 + 2^-k`` for ``k = 0..k_max``."""
    return [1.0 + 2.0 ** -k for k in range(k_max + 1)]


@dataclass(frozen=True)
class SweepPlan:
    graph: Graph
    vortices: VortexSet
    N: int
    points: tuple[tuple[float, float], ...]
    options: SolveOptions = SolveOptions()

    @classmethod
    def from_factors(cls, g: Graph, vx: VortexSet, N: int, factors: Sequence[float],
                     options: SolveOptions = SolveOptions()) -> "SweepPlan":
        lam_star = critical_lambda(g, vx.n)
        pts = tuple((f * lam_star, f * lam_star) for f in factors)
        return cls(g, vx, N, pts, options)


@dataclass
class SweepRecord:
    me2: float
    mg2: float
    threshold: float
    margin: float
    converged: bool
    status: str
    iterations: Optional[int] = None
    residual_inf: Optional[float] = None
    min_u1: Optional[float] = None
    mean_v1: Optional[float] = None
    mean_v2: Optional[float] = None
    max_abs_sum: Optional[float] = None
    identity_err1: Optional[float] = None
    identity_err2: Optional[float] = None
    bounds_ok: Optional[bool] = None
    message: str = ""


@dataclass
class SweepReport:
    N: int
    n: int
    volume: float
    records: list[SweepRecord] = field(default_factory=list)

    def converged_records(self) -> list[SweepRecord]:
        return [r for r in self.records if r.converged]

    @property
    def monotone_blowup(self) -> bool:
        """True when, over the converged points in schedule order, ``min u1``
        strictly decreases and ``max |u1|+|u2|`` strictly increases."""
        recs = self.converged_records()
        return all(
            b.min_u1 < a.min_u1 and b.max_abs_sum > a.max_abs_sum
            for a, b in zip(recs, recs[1:])
        )

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "n": self.n,
            "volume": self.volume,
            "monotone_blowup": self.monotone_blowup,
            "records": [asdict(r) for r in self.records],
        }


def solve_point(plan: SweepPlan, me2: float, mg2: float) -> SweepRecord:
    g, vx = plan.graph, plan.vortices
    try:
        p = ModelParams(plan.N, me2, mg2)
    except VortexError as exc:
        return SweepRecord(me2, mg2, math.nan, math.nan, False, type(exc).__name__, message=str(exc))
    feas = vm.check_feasible(g, p, vx.n)
    rec = SweepRecord(me2, mg2, feas.threshold, feas.margin, False, "")
    try:
        sol = solve_vortex(g, p, vx, replace(plan.options, init=None))
    except VortexError as exc:
        rec.status = type(exc).__name__
        rec.message = str(exc)
        return rec
    b = sol.verification.bounds
    rec.converged = True
    rec.status = "Converged"
    rec.iterations = sol.iterations
    rec.residual_inf = sol.final_residual_inf
    rec.min_u1 = float(sol.u1.min())
    rec.mean_v1 = gr.mean(g, sol.v1)
    rec.mean_v2 = gr.mean(g, sol.v2)
    rec.max_abs_sum = float((np.abs(sol.u1) + np.abs(sol.u2)).max())
    rec.identity_err1, rec.identity_err2 = sol.verification.identities
    rec.bounds_ok = b.sign1_ok and b.sign2_ok and b.gap_ok
    return rec


def run_sweep(plan: SweepPlan, workers: int = 1) -> SweepReport:
    """Solve every schedule point from the zero state.

    Points are independent; with ``workers > 1`` they run on a thread pool
    and the report still lists them in schedule order. Failures are recorded
    per point and never abort the sweep.
    """
    report = SweepReport(plan.N, plan.vortices.n, plan.graph.volume)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            report.records = list(pool.map(lambda pt: solve_point(plan, *pt), plan.points))
    else:
        report.records = [solve_point(plan, *pt) for pt in plan.points]
    return report
