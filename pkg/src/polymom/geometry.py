"""Polytope representation, validation, and generic direction sampling.

A polytope is stored by its vertex list plus optional per-vertex tangent
cone data (simple polytopes) and/or an explicit triangulation (index lists
into the vertex array, no new vertices). Automatic triangulation is
provided for d=2 only; in higher dimension the caller must supply cones or
simplices.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .errors import InputError
from .numeric import EXACT, FLOAT, scalar_from_json, scalar_to_json

# Smallest prime >= 10^6; default denominator for rational direction sampling.
DEFAULT_DENOMINATOR = 1000003


@dataclass(frozen=True)
class TangentCone:
    """Edge data of the tangent cone at one vertex of a simple polytope."""

    vertex: int
    edges: tuple
    det: object  # |det| of the edge matrix, positive

    def recompute_det(self):
        return abs(linalg.det_exact([list(col) for col in zip(*self.edges)]))


@dataclass(frozen=True)
class Polytope:
    dim: int
    vertices: tuple
    cones: tuple | None = None
    simplices: tuple | None = None

    @property
    def n_vertices(self):
        return len(self.vertices)


@dataclass(frozen=True)
class Direction:
    """A direction vector; rational samples carry their denominator."""

    coords: tuple
    denominator: int | None = None


def dot(u, v):
    total = 0
    for a, b in zip(u, v):
        total = total + a * b
    return total


def _sub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def simplex_cones(vertices, simplex):
    """Tangent cones of a single simplex, one per vertex.

    ``simplex`` is a (d+1)-tuple of indices into ``vertices``. At vertex v
    the edges are u - v over the other vertices; |det| is the same for all
    of them and must be nonzero.
    """
    pts = [vertices[i] for i in simplex]
    d = len(pts[0])
    if len(simplex) != d + 1:
        raise InputError(f"simplex {simplex} must have {d + 1} vertices")
    cones = []
    for i, vi in enumerate(simplex):
        edges = tuple(_sub(pts[j], pts[i]) for j in range(len(pts)) if j != i)
        det = abs(linalg.det_exact([list(col) for col in zip(*edges)]))
        if det == 0:
            raise InputError(f"degenerate simplex {simplex}")
        cones.append(TangentCone(vertex=vi, edges=edges, det=det))
    return cones


def _cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _angular_order(vertices):
    """Indices of 2-d points sorted counterclockwise around their centroid."""
    n = len(vertices)
    cx = sum((v[0] for v in vertices), Fraction(0)) / n
    cy = sum((v[1] for v in vertices), Fraction(0)) / n
    c = (cx, cy)

    def half(i):
        x, y = vertices[i][0] - cx, vertices[i][1] - cy
        return 0 if (y > 0 or (y == 0 and x > 0)) else 1

    def cmp(i, j):
        hi, hj = half(i), half(j)
        if hi != hj:
            return -1 if hi < hj else 1
        cr = _cross2(c, vertices[i], vertices[j])
        if cr > 0:
            return -1
        if cr < 0:
            return 1
        return 0

    return sorted(range(n), key=functools.cmp_to_key(cmp))


def fan_triangulate_2d(p: Polytope):
    """Fan triangulation of a convex polygon: N-2 triangles sharing vertex 0.

    Vertices may be listed in any order; they are sorted angularly around
    the centroid and checked for strict convexity first.
    """
    if p.dim != 2:
        raise InputError("fan triangulation requires dim 2")
    n = p.n_vertices
    if n < 3:
        raise InputError("need at least 3 vertices")
    order = _angular_order(p.vertices)
    for k in range(n):
        a, b, c = (
            p.vertices[order[k]],
            p.vertices[order[(k + 1) % n]],
            p.vertices[order[(k + 2) % n]],
        )
        cr = _cross2(a, b, c)
        if cr == 0:
            raise InputError("collinear vertex triple: zero-area triangle")
        if cr < 0:
            raise InputError("vertices are not in convex position")
    start = order.index(0)
    cyc = order[start:] + order[:start]
    return tuple((0, cyc[k], cyc[k + 1]) for k in range(1, n - 1))


def polygon_cones(p: Polytope):
    """Tangent cones of a convex polygon: the two incident edge vectors."""
    order = _angular_order(p.vertices)
    n = len(order)
    cones = []
    for k, idx in enumerate(order):
        prev_v = p.vertices[order[(k - 1) % n]]
        next_v = p.vertices[order[(k + 1) % n]]
        v = p.vertices[idx]
        edges = (_sub(prev_v, v), _sub(next_v, v))
        det = abs(linalg.det_exact([list(col) for col in zip(*edges)]))
        if det == 0:
            raise InputError("degenerate polygon corner")
        cones.append(TangentCone(vertex=idx, edges=edges, det=det))
    cones.sort(key=lambda c: c.vertex)
    return tuple(cones)


def validate_polytope(p: Polytope):
    """Check all structural invariants; returns a list of findings
    (empty iff valid)."""
    findings = []
    d = p.dim
    if len(set(map(tuple, p.vertices))) != p.n_vertices:
        findings.append("duplicate vertex")
    if p.n_vertices < d + 1:
        findings.append(f"fewer than {d + 1} vertices")
    for v in p.vertices:
        if len(v) != d:
            findings.append(f"vertex {v} has wrong dimension")
    if p.cones is not None:
        seen = set()
        for cone in p.cones:
            if not 0 <= cone.vertex < p.n_vertices:
                findings.append(f"cone references missing vertex {cone.vertex}")
                continue
            seen.add(cone.vertex)
            if len(cone.edges) != d:
                findings.append(f"cone at vertex {cone.vertex}: expected {d} edges")
                continue
            det = cone.recompute_det()
            if det == 0:
                findings.append(f"degenerate cone at vertex {cone.vertex}")
                continue
            if isinstance(cone.det, float):
                ok = abs(float(det) - cone.det) <= 1e-12 * max(1.0, abs(cone.det))
            else:
                ok = det == cone.det
            if not ok:
                findings.append(
                    f"cone at vertex {cone.vertex}: stored det {cone.det} != {det}"
                )
        if len(seen) != p.n_vertices:
            findings.append("cones missing for some vertices")
    if p.simplices is not None:
        for s in p.simplices:
            if len(set(s)) != d + 1 or any(not 0 <= i < p.n_vertices for i in s):
                findings.append(f"bad simplex index list {s}")
                continue
            pts = [p.vertices[i] for i in s]
            m = [list(_sub(pts[j], pts[0])) for j in range(1, d + 1)]
            if linalg.det_exact(m) == 0:
                findings.append(f"zero-volume simplex {s}")
    return findings


def simplex_volume(vertices, simplex):
    pts = [vertices[i] for i in simplex]
    d = len(pts[0])
    m = [list(_sub(pts[j], pts[0])) for j in range(1, d + 1)]
    det = linalg.det_exact(m)
    from math import factorial

    return abs(det) / factorial(d)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def sample_generic_direction(dim, r=DEFAULT_DENOMINATOR, rng=None, mode=EXACT):
    """Draw z uniformly from {0, 1/r, ..., (r-1)/r}^dim with r prime.

    Genericity is not certified here; the inverse pipeline detects bad
    directions downstream (rank instability) and resamples.
    """
    if rng is None:
        raise InputError("an explicit rng is required for reproducibility")
    if r < 2 or not _is_prime(r):
        raise InputError(f"denominator {r} must be a prime >= 2")
    draws = [rng.randrange(r) for _ in range(dim)]
    if mode == FLOAT:
        coords = tuple(k / r for k in draws)
    else:
        coords = tuple(Fraction(k, r) for k in draws)
    return Direction(coords=coords, denominator=r)


def check_distinct_projections(p: Polytope, z) -> bool:
    """True iff all vertex projections <v, z> are pairwise distinct.

    Test-harness helper: the inverse pipeline never sees the vertex set.
    """
    coords = z.coords if isinstance(z, Direction) else tuple(z)
    projections = [dot(v, coords) for v in p.vertices]
    return len(set(projections)) == len(projections)


def polytope_to_json(p: Polytope) -> dict:
    doc = {
        "dim": p.dim,
        "vertices": [[scalar_to_json(x) for x in v] for v in p.vertices],
    }
    if p.cones is not None:
        doc["cones"] = [
            {
                "vertex": c.vertex,
                "edges": [[scalar_to_json(x) for x in e] for e in c.edges],
            }
            for c in p.cones
        ]
    if p.simplices is not None:
        doc["simplices"] = [list(s) for s in p.simplices]
    return doc


def polytope_from_json(doc, mode=EXACT) -> Polytope:
    try:
        d = int(doc["dim"])
        vertices = tuple(
            tuple(scalar_from_json(x, mode) for x in v) for v in doc["vertices"]
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad polytope document: {exc}") from None
    cones = None
    if doc.get("cones") is not None:
        cones = []
        for c in doc["cones"]:
            edges = tuple(tuple(scalar_from_json(x, mode) for x in e) for e in c["edges"])
            det = abs(linalg.det_exact([list(col) for col in zip(*edges)]))
            if mode == FLOAT:
                det = float(det)
            cones.append(TangentCone(vertex=int(c["vertex"]), edges=edges, det=det))
        cones = tuple(cones)
    simplices = None
    if doc.get("simplices") is not None:
        simplices = tuple(tuple(int(i) for i in s) for s in doc["simplices"])
    return Polytope(dim=d, vertices=vertices, cones=cones, simplices=simplices)


def load_polytope(path, mode=EXACT) -> Polytope:
    with open(path) as fh:
        return polytope_from_json(json.load(fh), mode)


def save_polytope(p: Polytope, path):
    with open(path, "w") as fh:
        json.dump(polytope_to_json(p), fh, indent=2, sort_keys=True)
        fh.write("\n")


def polytope_to_float(p: Polytope) -> Polytope:
    """Float-mode copy of an exact polytope."""
    verts = tuple(tuple(float(x) for x in v) for v in p.vertices)
    cones = None
    if p.cones is not None:
        cones = tuple(
            TangentCone(
                vertex=c.vertex,
                edges=tuple(tuple(float(x) for x in e) for e in c.edges),
                det=float(c.det),
            )
            for c in p.cones
        )
    return Polytope(dim=p.dim, vertices=verts, cones=cones, simplices=p.simplices)
