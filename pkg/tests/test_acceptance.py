"""Acceptance criteria, one test each.

Run ``pytest tests/test_acceptance.py``; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import io
import itertools
import json
import math

import numpy as np
import pytest

from graphvortex import (
    ModelParams,
    SolveOptions,
    State,
    SweepPlan,
    VortexSet,
    background_u0,
    build_graph,
    check_feasible,
    cross_check_equal_coupling,
    energy,
    energy_gradient,
    energy_hessian,
    format_graph,
    generate,
    gradient_form,
    integrate,
    laplacian,
    parse_graph,
    poincare_constant,
    residual,
    run_sweep,
    solve_poisson,
    solve_vortex,
)
from graphvortex import formats
from graphvortex import vortex as vm
from graphvortex.cli import main
from graphvortex.generators import KINDS
from graphvortex.graph import dirichlet_energy, smallest_nonzero_eigenpair

from conftest import FOUR_PI, random_graph, random_instance

acceptance = pytest.mark.acceptance


def converged_instances():
    """25 random feasible instances: margins 10%..10x, N in {2,3,5}."""
    out = []
    margins = np.geomspace(0.1, 10.0, 25)
    for k, m in enumerate(margins):
        g, p, vx = random_instance(100 + k, N=(2, 3, 5)[k % 3], margin=float(m), max_size=120)
        out.append((g, p, vx, solve_vortex(g, p, vx)))
    return out


@pytest.fixture(scope="module")
def solved():
    return converged_instances()


@acceptance(1, "calculus identities on 50 random graphs")
def test_calculus_identities(record_property):
    worst_zero = worst_parts = 0.0
    for seed in range(50):
        g = random_graph(seed, 5, 200)
        rng = np.random.default_rng(seed)
        u, v = rng.standard_normal((2, g.n_vertices))
        lap = laplacian(g, u)
        worst_zero = max(worst_zero, abs(integrate(g, lap)) / np.abs(g.mu * lap).sum())
        lhs = integrate(g, gradient_form(g, u, v))
        rhs = -integrate(g, v * lap)
        scale = math.sqrt(dirichlet_energy(g, u) * dirichlet_energy(g, v))
        worst_parts = max(worst_parts, abs(lhs - rhs) / scale)
    record_property("max_rel_zero_integral", f"{worst_zero:.2e}")
    record_property("max_rel_by_parts", f"{worst_parts:.2e}")
    assert worst_zero <= 1e-12
    assert worst_parts <= 1e-12


@acceptance(2, "Poincare inequality and tightness")
def test_poincare(record_property):
    worst_eq = 0.0
    for seed in range(10):
        g = random_graph(200 + seed, 5, 200)
        c = poincare_constant(g)
        rng = np.random.default_rng(seed)
        for _ in range(100):
            u = rng.standard_normal(g.n_vertices)
            u -= integrate(g, u) / g.volume
            assert integrate(g, u * u) <= c * dirichlet_energy(g, u)
        _, x = smallest_nonzero_eigenpair(g)
        lhs, rhs = integrate(g, x * x), c * dirichlet_energy(g, x)
        worst_eq = max(worst_eq, abs(lhs - rhs) / lhs)
    record_property("max_rel_equality_gap", f"{worst_eq:.2e}")
    assert worst_eq <= 1e-9


@acceptance(3, "background field residual, gauge and gauge independence")
def test_background(record_property):
    worst_res = worst_gauge = 0.0
    for seed in range(6):
        g, p, vx = random_instance(300 + seed, N=(2, 3, 5)[seed % 3], max_size=120)
        bg = background_u0(g, vx)
        src = vm.vortex_source(g, vx)
        worst_res = max(worst_res, np.abs(laplacian(g, bg.u0) - src).max() / np.abs(src).max())
        assert bg.u0.max() == 0.0
        a = solve_vortex(g, p, vx, bg=bg)
        b = solve_vortex(g, p, vx, bg=vm.shift_gauge(bg, -2.5))
        worst_gauge = max(worst_gauge, np.abs(a.u1 - b.u1).max(), np.abs(a.u2 - b.u2).max())
    record_property("max_rel_residual", f"{worst_res:.2e}")
    record_property("max_gauge_diff", f"{worst_gauge:.2e}")
    assert worst_res <= 1e-10
    assert worst_gauge <= 1e-9


@acceptance(4, "gradient and Hessian of the energy")
def test_derivatives(record_property):
    worst_g = worst_h = 0.0
    for N in (2, 3, 5):
        g, p, vx = random_instance(400 + N, N=N, max_size=15)
        bg = background_u0(g, vx)
        rng = np.random.default_rng(N)
        for _ in range(3):
            s = State(rng.uniform(-2, 2, g.n_vertices), rng.uniform(-2, 2, g.n_vertices))
            x = s.stacked()
            an = energy_gradient(g, p, bg, s).stacked()
            fd = np.empty_like(x)
            for k in range(x.size):
                e = np.zeros_like(x)
                e[k] = 1e-6
                fd[k] = (energy(g, p, bg, State.unstack(x + e)) - energy(g, p, bg, State.unstack(x - e))) / 2e-6
            worst_g = max(worst_g, np.abs(fd - an).max() / np.abs(an).max())
            hess = energy_hessian(g, p, bg, s)
            z = rng.standard_normal(x.size)
            dg = (
                energy_gradient(g, p, bg, State.unstack(x + 1e-5 * z)).stacked()
                - energy_gradient(g, p, bg, State.unstack(x - 1e-5 * z)).stacked()
            ) / 2e-5
            hz = hess @ z
            worst_h = max(worst_h, np.abs(dg - hz).max() / np.abs(hz).max())
        for _ in range(100):
            s = State(rng.uniform(-5, 5, g.n_vertices), rng.uniform(-5, 5, g.n_vertices))
            z = rng.standard_normal(2 * g.n_vertices)
            assert z @ (energy_hessian(g, p, bg, s) @ z) > 0
    record_property("max_rel_gradient_err", f"{worst_g:.2e}")
    record_property("max_rel_hessian_err", f"{worst_h:.2e}")
    assert worst_g <= 1e-6
    assert worst_h <= 1e-5


@acceptance(5, "n = 0 gives the zero solution")
def test_trivial_case():
    for seed, N in zip(range(6), itertools.cycle((2, 3, 5))):
        g = random_graph(500 + seed, 5, 100)
        sol = solve_vortex(g, ModelParams(N, 0.3 + seed, 2.0), VortexSet())
        assert np.abs(sol.u1).max() <= 1e-10
        assert np.abs(sol.u2).max() <= 1e-10


@acceptance(6, "convergence on 25 random feasible instances")
def test_sufficiency(solved, record_property):
    iters = [sol.iterations for *_, sol in solved]
    res = [sol.final_residual_inf for *_, sol in solved]
    record_property("max_iterations", max(iters))
    record_property("max_residual", f"{max(res):.2e}")
    assert max(iters) <= 200
    assert max(res) <= 1e-9
    for g, p, vx, sol in solved:
        r1, r2 = residual(g, p, sol.background, State(sol.v1, sol.v2))
        assert max(np.abs(r1).max(), np.abs(r2).max()) <= 1e-9


@acceptance(7, "infeasible at and below the threshold; CLI exit 2")
def test_necessity(tmp_path):
    unit = build_graph(["a"], [1.0], [])
    assert not check_feasible(unit, ModelParams(2, FOUR_PI, FOUR_PI), 1).feasible
    rng = np.random.default_rng(7)
    for _ in range(200):
        vol = float(rng.uniform(0.5, 50))
        g = build_graph(["a"], [vol], [])
        N, n = int(rng.choice([2, 3, 5])), int(rng.integers(1, 6))
        ratio = float(rng.uniform(0.2, 5))
        exact = vm.threshold(ModelParams(N, 1.0, ratio), n) / vol
        for shrink in (1.0, 0.9, 0.5):
            assert not check_feasible(g, ModelParams(N, exact * shrink, exact * shrink * ratio), n).feasible
    graph = tmp_path / "g"
    graph.write_text("vertex a 1\nvertex b 1\nedge a b 1\n")
    vort = tmp_path / "v"
    vort.write_text("vortex a 1\n")
    half = repr(FOUR_PI / 2)  # threshold exactly |V| = 2
    for cmd in ("check", "solve"):
        argv = [cmd, "-g", str(graph), "-v", str(vort), "--N", "2", "--me2", half, "--mg2", half]
        assert main(argv, out=io.StringIO()) == 2


@acceptance(8, "sign and gap bounds at every vertex")
def test_bounds(solved, record_property):
    worst = -math.inf
    for g, p, vx, sol in solved:
        assert vx.n >= 1
        assert np.all(sol.u1 < 0) and np.all(sol.u2 < 0)
        bound = p.N * math.log(p.N / (p.N - 1))
        assert np.all(sol.u1 - sol.u2 < bound)
        b = sol.verification.bounds
        assert b.sign1_ok and b.sign2_ok and b.gap_ok
        worst = max(worst, float((sol.u1 - sol.u2).max()) - bound)
    record_property("max_gap_minus_bound", f"{worst:.3f}")


@acceptance(9, "integral identities at every converged solution")
def test_identities(solved, record_property):
    worst = max(max(sol.verification.identities) for *_, sol in solved)
    record_property("max_identity_err", f"{worst:.2e}")
    assert worst <= 1e-7


@acceptance(10, "uniqueness from 10 random starts")
def test_uniqueness(record_property):
    worst = 0.0
    for k in range(4):
        g, p, vx = random_instance(600 + k, N=(2, 3, 5, 2)[k], max_size=80)
        rng = np.random.default_rng(k)
        sols = []
        for _ in range(10):
            init = State(rng.uniform(-5, 5, g.n_vertices), rng.uniform(-5, 5, g.n_vertices))
            sols.append(solve_vortex(g, p, vx, SolveOptions(init=init)))
        for a, b in itertools.combinations(sols, 2):
            worst = max(worst, np.abs(a.u1 - b.u1).max(), np.abs(a.u2 - b.u2).max())
    record_property("max_pairwise_diff", f"{worst:.2e}")
    assert worst <= 1e-8


@acceptance(11, "equal-coupling reduction to the scalar equation")
def test_equal_coupling(record_property):
    worst_gap = worst_mis = 0.0
    for k in range(6):
        g, p, vx = random_instance(700 + k, N=(2, 3, 5)[k % 3], max_size=100)
        lam = FOUR_PI * vx.n / g.volume * (1.1 + k)
        chk = cross_check_equal_coupling(g, ModelParams(p.N, lam, lam), vx)
        worst_gap = max(worst_gap, chk.gap_inf)
        worst_mis = max(worst_mis, chk.mismatch_inf)
    record_property("max_gap", f"{worst_gap:.2e}")
    record_property("max_mismatch", f"{worst_mis:.2e}")
    assert worst_gap <= 1e-8
    assert worst_mis <= 1e-8


@acceptance(12, "blow-up trend toward the boundary")
def test_blowup(record_property):
    g = generate("random-connected", 40, seed=12, mu_range=(0.1, 10), weight_range=(0.1, 10))
    vx = VortexSet.from_points(["0", "5", "17"])
    for N in (2, 3, 5):
        report = run_sweep(SweepPlan.from_factors(g, vx, N, [1.5, 1.2, 1.05, 1.01]))
        recs = report.records
        assert all(r.converged for r in recs)
        mins = [r.min_u1 for r in recs]
        sums = [r.max_abs_sum for r in recs]
        assert all(b < a for a, b in zip(mins, mins[1:]))
        assert all(b > a for a, b in zip(sums, sums[1:]))
    record_property("min_u1", ", ".join(f"{m:.3f}" for m in mins))


@acceptance(13, "file and report round trips")
def test_round_trips():
    for kind, size, seed in itertools.product(KINDS, (3, 7, 16), (0, 1)):
        for ranges in ({}, dict(mu_range=(0.1, 10), weight_range=(0.1, 10))):
            g = generate(kind, size, seed, **ranges)
            back = parse_graph(format_graph(g))
            assert back == g
            assert back.mu.tobytes() == g.mu.tobytes()
            assert back.weights.tobytes() == g.weights.tobytes()
    g, p, vx = random_instance(13, N=3)
    sol = solve_vortex(g, p, vx)
    doc = formats.solve_report(g, p, vx, check_feasible(g, p, vx.n), sol)
    back = json.loads(formats.dumps(doc))
    for key, arr in (("u0", sol.background.u0), ("u1", sol.u1), ("u2", sol.u2)):
        assert np.array([back[key][v] for v in g.vertices]).tobytes() == arr.tobytes()
    for key in ("volume", "threshold", "margin", "residual_inf", "energy"):
        assert back[key] == doc[key]
    assert back["checks"] == doc["checks"]
