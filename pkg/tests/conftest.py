import math

import numpy as np
import pytest

from graphvortex import ModelParams, VortexSet, build_graph, generate, threshold

FOUR_PI = 4 * math.pi

_acceptance_lines = []


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    status = "PASS" if call.excinfo is None else "FAIL"
    _acceptance_lines.append((number, title, status, item))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, item in sorted(_acceptance_lines, key=lambda t: t[0]):
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        terminalreporter.write_line(f"{status}  AC{number:>2}  {title}" + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def k2():
    return build_graph(["a", "b"], [1.0, 1.0], [("a", "b", 1.0)])


@pytest.fixture
def k3():
    return build_graph(["a", "b", "c"], [1.0, 2.0, 0.5], [("a", "b", 1.0), ("b", "c", 2.0), ("a", "c", 0.5)])


def random_graph(seed, lo=5, hi=200):
    rng = np.random.default_rng(seed)
    size = int(rng.integers(lo, hi + 1))
    return generate("random-connected", size, seed=seed, mu_range=(0.1, 10), weight_range=(0.1, 10))


def random_instance(seed, N=None, margin=None, max_size=60):
    """Random feasible instance with |V| = (1 + margin) * threshold."""
    rng = np.random.default_rng(10_000 + seed)
    g = random_graph(seed, 5, max_size)
    N = int(rng.choice([2, 3, 5])) if N is None else N
    nv = int(rng.integers(1, 5))
    vx = VortexSet.from_points([g.vertices[i] for i in rng.integers(g.n_vertices, size=nv)])
    if margin is None:
        margin = float(np.exp(rng.uniform(math.log(0.1), math.log(10.0))))
    ratio = float(np.exp(rng.uniform(math.log(0.25), math.log(4.0))))
    scale = threshold(ModelParams(N, 1.0, ratio), vx.n) * (1 + margin) / g.volume
    return g, ModelParams(N, scale, scale * ratio), vx
