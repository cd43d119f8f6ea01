"""Plain-text graph and vortex files, and JSON solve reports.

Graph file::

    # comment
    vertex a 1.0
    vertex b 2.5e-1
    edge a b 1

Vortex file::

    vortex a        # multiplicity 1
    vortex b 3

Floats are written with ``repr``, the shortest string that reads back to the
identical binary64 value, so write/parse round trips are exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import (
    DuplicateEdge,
    DuplicateVertex,
    InputError,
    NonPositiveMeasure,
    NonPositiveWeight,
    ParseError,
    SelfLoop,
    UnknownVertex,
)
from .graph import Graph, build_graph
from .vortex import VortexSet

Source = Union[str, Iterable[str]]


def _lines(source: Source):
    if isinstance(source, str):
        source = source.splitlines()
    for lineno, raw in enumerate(source, start=1):
        body = raw.split("#", 1)[0]
        tokens = []
        col = 0
        for tok in body.split():
            col = body.index(tok, col)
            tokens.append((tok, col + 1))
            col += len(tok)
        if tokens:
            yield lineno, tokens


def _real(tok: str, col: int, lineno: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"{what} {tok!r} is not a real number", line=lineno, column=col) from None


def _arity(tokens, lineno, expected, usage):
    if len(tokens) not in expected:
        col = tokens[max(expected)][1] if len(tokens) > max(expected) else tokens[-1][1]
        raise ParseError(f"expected '{usage}'", line=lineno, column=col)


def parse_graph(source: Source) -> Graph:
    """Parse graph-file text (a string or an iterable of lines)."""
    vertices, mus, seen_v = [], [], {}
    edges, seen_e = [], {}
    for lineno, tokens in _lines(source):
        kw = tokens[0][0]
        if kw == "vertex":
            _arity(tokens, lineno, (3,), "vertex <id> <mu>")
            (vid, vcol), (tok, col) = tokens[1], tokens[2]
            if vid in seen_v:
                raise DuplicateVertex(f"vertex {vid!r} already declared on line {seen_v[vid]}",
                                      line=lineno, column=vcol)
            mu = _real(tok, col, lineno, "measure")
            if not (mu > 0 and math.isfinite(mu)):
                raise NonPositiveMeasure(f"measure of {vid!r} must be > 0, got {tok}",
                                         line=lineno, column=col)
            seen_v[vid] = lineno
            vertices.append(vid)
            mus.append(mu)
        elif kw == "edge":
            _arity(tokens, lineno, (4,), "edge <id1> <id2> <weight>")
            (a, acol), (b, bcol), (tok, col) = tokens[1], tokens[2], tokens[3]
            if a == b:
                raise SelfLoop(f"self-loop at vertex {a!r}", line=lineno, column=bcol)
            w = _real(tok, col, lineno, "weight")
            if not (w > 0 and math.isfinite(w)):
                raise NonPositiveWeight(f"weight of ({a}, {b}) must be > 0, got {tok}",
                                        line=lineno, column=col)
            key = frozenset((a, b))
            if key in seen_e:
                raise DuplicateEdge(f"edge ({a}, {b}) already given on line {seen_e[key]}",
                                    line=lineno, column=acol)
            seen_e[key] = lineno
            edges.append((lineno, acol, bcol, a, b, w))
        else:
            raise ParseError(f"unknown directive {kw!r}", line=lineno, column=tokens[0][1])
    for lineno, acol, bcol, a, b, _ in edges:
        for end, col in ((a, acol), (b, bcol)):
            if end not in seen_v:
                raise UnknownVertex(f"edge references undeclared vertex {end!r}",
                                    line=lineno, column=col)
    if not vertices:
        raise ParseError("graph file declares no vertices", line=1)
    return build_graph(vertices, mus, [(a, b, w) for *_, a, b, w in edges])


def format_graph(g: Graph) -> str:
    lines = [f"vertex {v} {float(m)!r}" for v, m in zip(g.vertices, g.mu)]
    lines += [f"edge {a} {b} {w!r}" for a, b, w in g.edges]
    return "\n".join(lines) + "\n"


def parse_vortices(source: Source, g: Graph) -> VortexSet:
    entries = []
    for lineno, tokens in _lines(source):
        kw, kcol = tokens[0]
        if kw != "vortex":
            raise ParseError(f"unknown directive {kw!r}", line=lineno, column=kcol)
        _arity(tokens, lineno, (2, 3), "vortex <vertex-id> [multiplicity]")
        vid, vcol = tokens[1]
        if vid not in g.index:
            raise UnknownVertex(f"vortex at undeclared vertex {vid!r}", line=lineno, column=vcol)
        mult = 1
        if len(tokens) == 3:
            tok, col = tokens[2]
            try:
                mult = int(tok)
            except ValueError:
                raise ParseError(f"multiplicity {tok!r} is not an integer", line=lineno, column=col) from None
            if mult < 1:
                raise ParseError(f"multiplicity must be >= 1, got {mult}", line=lineno, column=col)
        entries.append((vid, mult))
    return VortexSet(tuple(entries))


def format_vortices(vx: VortexSet) -> str:
    return "".join(f"vortex {v} {m}\n" for v, m in vx.entries)


def load_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh)


def load_vortices(path, g: Graph) -> VortexSet:
    with open(path, encoding="utf-8") as fh:
        return parse_vortices(fh, g)


def save_graph(g: Graph, path) -> None:
    Path(path).write_text(format_graph(g), encoding="utf-8")


# Reports

def _num(x) -> Optional[float]:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def field_map(g: Graph, u) -> dict:
    return {str(v): float(x) for v, x in zip(g.vertices, np.asarray(u))}


def solve_report(g: Graph, p, vx: VortexSet, feas, solution=None) -> dict:
    """Machine-readable document for one vortex solve (or failed attempt)."""
    doc = {
        "params": {"N": p.N, "me2": p.me2, "mg2": p.mg2, "n": vx.n},
        "volume": g.volume,
        "threshold": feas.threshold,
        "margin": feas.margin,
        "feasible": bool(feas.feasible),
        "converged": solution is not None,
        "iterations": None,
        "residual_inf": None,
        "energy": None,
        "u0": None,
        "u1": None,
        "u2": None,
        "checks": None,
    }
    if solution is not None:
        b = solution.verification.bounds
        ident = solution.verification.identities
        doc.update(
            iterations=solution.iterations,
            residual_inf=_num(solution.final_residual_inf),
            energy=_num(solution.energy_value),
            u0=field_map(g, solution.background.u0),
            u1=field_map(g, solution.u1),
            u2=field_map(g, solution.u2),
            checks={
                "sign1_ok": b.sign1_ok,
                "sign2_ok": b.sign2_ok,
                "gap_ok": b.gap_ok,
                "max_gap": b.max_gap,
                "gap_bound": b.gap_bound,
                "weak_gap_ok": b.weak_gap_ok,
                "identity_err1": ident.err1,
                "identity_err2": ident.err2,
            },
        )
    return doc


def dumps(doc: dict) -> str:
    # json writes floats via repr: shortest round-trip representation.
    return json.dumps(doc, indent=2, allow_nan=False)


def loads(text: str) -> dict:
    return json.loads(text)


def check_report_fields(doc: dict) -> None:
    missing = [k for k in REPORT_FIELDS if k not in doc]
    if missing:
        raise InputError(f"report lacks fields {missing}")


REPORT_FIELDS = (
    "params", "volume", "threshold", "margin", "feasible", "converged",
    "iterations", "residual_inf", "energy", "u0", "u1", "u2", "checks",
)
