"""Deterministic graph generators."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import InvalidKind, InvalidSize
from .graph import Graph, build_graph

KINDS = ("path", "cycle", "complete", "grid", "random-connected")


def _pairs(kind: str, size: int, rng: np.random.Generator, extra_edges: Optional[int]):
    if kind == "path":
        return [str(i) for i in range(size)], [(i, i + 1) for i in range(size - 1)]
    if kind == "cycle":
        if size < 3:
            raise InvalidSize("a cycle needs at least 3 vertices")
        return [str(i) for i in range(size)], [(i, (i + 1) % size) for i in range(size)]
    if kind == "complete":
        return [str(i) for i in range(size)], [(i, j) for i in range(size) for j in range(i + 1, size)]
    if kind == "grid":
        ids = [f"{r}_{c}" for r in range(size) for c in range(size)]
        pairs = []
        for r in range(size):
            for c in range(size):
                k = r * size + c
                if c + 1 < size:
                    pairs.append((k, k + 1))
                if r + 1 < size:
                    pairs.append((k, k + size))
        return ids, pairs
    # random-connected: random spanning tree, then extra random edges
    order = rng.permutation(size)
    pairs = [(int(order[rng.integers(i)]), int(order[i])) for i in range(1, size)]
    present = {frozenset(e) for e in pairs}
    target = size if extra_edges is None else extra_edges
    max_new = size * (size - 1) // 2 - len(pairs)
    target = min(target, max_new)
    added = 0
    while added < target:
        i, j = (int(x) for x in rng.integers(size, size=2))
        key = frozenset((i, j))
        if i == j or key in present:
            continue
        present.add(key)
        pairs.append((i, j))
        added += 1
    return [str(i) for i in range(size)], pairs


def generate(
    kind: str,
    size: int,
    seed: int = 0,
    *,
    mu: float = 1.0,
    weight: float = 1.0,
    mu_range: Optional[tuple[float, float]] = None,
    weight_range: Optional[tuple[float, float]] = None,
    extra_edges: Optional[int] = None,
) -> Graph:
    """Build a connected graph of the given ``kind``.

    ``size`` is the vertex count, except for ``grid`` where it is the side
    length. Measures and weights default to the constants ``mu`` and
    ``weight``; passing ``mu_range``/``weight_range`` draws them uniformly
    instead. Output depends only on the arguments.
    """
    if kind not in KINDS:
        raise InvalidKind(f"unknown graph kind {kind!r}; choose from {', '.join(KINDS)}")
    if isinstance(size, bool) or int(size) != size or size < 2:
        raise InvalidSize(f"size must be an integer >= 2, got {size!r}")
    size = int(size)
    rng = np.random.default_rng(seed)
    ids, pairs = _pairs(kind, size, rng, extra_edges)
    n = len(ids)
    mus = rng.uniform(*mu_range, size=n) if mu_range else np.full(n, float(mu))
    ws = rng.uniform(*weight_range, size=len(pairs)) if weight_range else np.full(len(pairs), float(weight))
    return build_graph(ids, mus, [(ids[i], ids[j], w) for (i, j), w in zip(pairs, ws)])
