"""Shared fixtures: reference polytopes and random rational corpora."""

from fractions import Fraction
from random import Random

import pytest

from polymom.geometry import (
    Polytope,
    TangentCone,
    fan_triangulate_2d,
    polygon_cones,
)
from polymom.numeric import MultiPoly


def frac(num, den=1):
    return Fraction(num, den)


def unit_triangle():
    p = Polytope(
        dim=2,
        vertices=((frac(0), frac(0)), (frac(1), frac(0)), (frac(0), frac(1))),
    )
    return Polytope(
        dim=2,
        vertices=p.vertices,
        cones=polygon_cones(p),
        simplices=fan_triangulate_2d(p),
    )


def unit_square():
    p = Polytope(
        dim=2,
        vertices=(
            (frac(0), frac(0)),
            (frac(1), frac(0)),
            (frac(1), frac(1)),
            (frac(0), frac(1)),
        ),
    )
    return Polytope(
        dim=2,
        vertices=p.vertices,
        cones=polygon_cones(p),
        simplices=fan_triangulate_2d(p),
    )


def unit_cube():
    import itertools

    verts = tuple(
        tuple(frac(b) for b in bits) for bits in itertools.product((0, 1), repeat=3)
    )
    cones = []
    for i, v in enumerate(verts):
        edges = []
        for t in range(3):
            e = [frac(0)] * 3
            e[t] = frac(1) if v[t] == 0 else frac(-1)
            edges.append(tuple(e))
        cones.append(TangentCone(vertex=i, edges=tuple(edges), det=frac(1)))
    # staircase triangulation along the vertex orderings
    simplices = _box_simplices(verts)
    return Polytope(dim=3, vertices=verts, cones=tuple(cones), simplices=simplices)


def _box_simplices(verts):
    """Triangulation of a combinatorial box given its 8 vertices listed in
    itertools.product bit order: 6 simplices, one per coordinate order."""
    import itertools

    index = {bits: i for i, bits in enumerate(itertools.product((0, 1), repeat=3))}
    simplices = []
    for perm in itertools.permutations(range(3)):
        bits = [0, 0, 0]
        chain = [index[tuple(bits)]]
        for axis in perm:
            bits[axis] = 1
            chain.append(index[tuple(bits)])
        simplices.append(tuple(chain))
    return tuple(simplices)


def square_pyramid():
    """Apex over the unit square: the apex tangent cone has 4 edges, so the
    polytope is not simple."""
    verts = (
        (frac(0), frac(0), frac(0)),
        (frac(1), frac(0), frac(0)),
        (frac(1), frac(1), frac(0)),
        (frac(0), frac(1), frac(0)),
        (frac(1, 2), frac(1, 2), frac(1)),
    )
    return Polytope(dim=3, vertices=verts, simplices=((0, 1, 2, 4), (0, 2, 3, 4)))


def _cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _convex_hull_2d(points):
    """Andrew monotone chain over exact rationals; returns hull vertices in
    counterclockwise order."""
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross2(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross2(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def random_polygon(rng: Random, max_vertices=8):
    """Random convex polygon with rational coordinates (|num| <= 100,
    den <= 10) and 3..max_vertices vertices."""
    while True:
        k = rng.randint(5, 11)
        pts = {
            (
                Fraction(rng.randint(-60, 60), rng.randint(1, 10)),
                Fraction(rng.randint(-60, 60), rng.randint(1, 10)),
            )
            for _ in range(k)
        }
        hull = _convex_hull_2d(list(pts))
        if 3 <= len(hull) <= max_vertices:
            verts = tuple(hull)
            p = Polytope(dim=2, vertices=verts)
            return Polytope(
                dim=2,
                vertices=verts,
                cones=polygon_cones(p),
                simplices=fan_triangulate_2d(p),
            )


def _det3(a, b, c):
    return (
        a[0] * (b[1] * c[2] - b[2] * c[1])
        - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
    )


def _rand_coord(rng, lo=-20, hi=20, dmax=4):
    return Fraction(rng.randint(lo, hi), rng.randint(1, dmax))


def random_tetrahedron(rng: Random):
    while True:
        pts = [tuple(_rand_coord(rng) for _ in range(3)) for _ in range(4)]
        e = [tuple(pts[j][t] - pts[0][t] for t in range(3)) for j in range(1, 4)]
        if _det3(*e) != 0:
            verts = tuple(pts)
            return Polytope(dim=3, vertices=verts, simplices=((0, 1, 2, 3),))


def random_parallelepiped(rng: Random):
    """v0 + {0,1}-combinations of three independent edges; simple with
    identical cones up to sign, triangulated staircase-style."""
    import itertools

    while True:
        v0 = tuple(_rand_coord(rng, -10, 10, 2) for _ in range(3))
        edges = [tuple(_rand_coord(rng, -8, 8, 2) for _ in range(3)) for _ in range(3)]
        if _det3(*edges) == 0:
            continue
        verts = []
        for bits in itertools.product((0, 1), repeat=3):
            verts.append(
                tuple(
                    v0[t] + sum(b * e[t] for b, e in zip(bits, edges))
                    for t in range(3)
                )
            )
        if len(set(verts)) != 8:
            continue
        if any(abs(x.numerator) > 100 or x.denominator > 100 for v in verts for x in v):
            continue
        verts = tuple(verts)
        det = abs(_det3(*edges))
        cones = []
        for i, bits in enumerate(itertools.product((0, 1), repeat=3)):
            cone_edges = tuple(
                tuple(-e[t] if b else e[t] for t in range(3))
                for b, e in zip(bits, edges)
            )
            cones.append(TangentCone(vertex=i, edges=cone_edges, det=det))
        return Polytope(
            dim=3,
            vertices=verts,
            cones=tuple(cones),
            simplices=_box_simplices(verts),
        )


def random_prism(rng: Random):
    """Triangle swept along an off-plane vector: 6 vertices, simple."""
    while True:
        tri = [tuple(_rand_coord(rng, -12, 12, 2) for _ in range(3)) for _ in range(3)]
        w = tuple(_rand_coord(rng, -8, 8, 2) for _ in range(3))
        e1 = tuple(tri[1][t] - tri[0][t] for t in range(3))
        e2 = tuple(tri[2][t] - tri[0][t] for t in range(3))
        if _det3(e1, e2, w) == 0:
            continue
        top = [tuple(v[t] + w[t] for t in range(3)) for v in tri]
        verts = tuple(tri + top)
        if len(set(verts)) != 6:
            continue
        if any(abs(x.numerator) > 100 or x.denominator > 100 for v in verts for x in v):
            continue
        cones = []
        for i in range(3):
            a, b = tri[(i + 1) % 3], tri[(i + 2) % 3]
            cones.append(
                TangentCone(
                    vertex=i,
                    edges=(
                        tuple(a[t] - tri[i][t] for t in range(3)),
                        tuple(b[t] - tri[i][t] for t in range(3)),
                        w,
                    ),
                    det=abs(
                        _det3(
                            tuple(a[t] - tri[i][t] for t in range(3)),
                            tuple(b[t] - tri[i][t] for t in range(3)),
                            w,
                        )
                    ),
                )
            )
        neg_w = tuple(-x for x in w)
        for i in range(3):
            a, b = top[(i + 1) % 3], top[(i + 2) % 3]
            cones.append(
                TangentCone(
                    vertex=3 + i,
                    edges=(
                        tuple(a[t] - top[i][t] for t in range(3)),
                        tuple(b[t] - top[i][t] for t in range(3)),
                        neg_w,
                    ),
                    det=abs(
                        _det3(
                            tuple(a[t] - top[i][t] for t in range(3)),
                            tuple(b[t] - top[i][t] for t in range(3)),
                            neg_w,
                        )
                    ),
                )
            )
        simplices = ((0, 1, 2, 5), (0, 1, 5, 4), (0, 4, 5, 3))
        return Polytope(
            dim=3, vertices=verts, cones=tuple(cones), simplices=simplices
        )


def random_simple_polytope(rng: Random):
    kind = rng.choice(("polygon", "polygon", "tet", "box", "prism"))
    if kind == "polygon":
        return random_polygon(rng)
    if kind == "tet":
        return random_tetrahedron(rng)
    if kind == "box":
        return random_parallelepiped(rng)
    return random_prism(rng)


def random_density(rng: Random, dim, degree, polytope=None):
    """Random polynomial of exactly the requested degree; when a polytope is
    given, the constant term is shifted so the density is strictly positive
    on its vertices."""
    terms = {}
    for exp in _exponents_up_to(dim, degree):
        if rng.random() < 0.5 and sum(exp) not in (0, degree):
            continue
        terms[exp] = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    terms[(0,) * dim] = Fraction(rng.randint(1, 6))
    if not any(sum(e) == degree and c != 0 for e, c in terms.items()):
        exp = [0] * dim
        exp[rng.randrange(dim)] = degree
        terms[tuple(exp)] = Fraction(rng.randint(1, 3))
    rho = MultiPoly(dim, terms)
    if polytope is not None:
        low = min(rho.evaluate(v) for v in polytope.vertices)
        if low <= 0:
            shift = 1 - low
            rho = rho + MultiPoly.constant(dim, shift)
    assert rho.degree == degree
    return rho


def _exponents_up_to(dim, degree):
    if dim == 0:
        yield ()
        return
    for first in range(degree + 1):
        for rest in _exponents_up_to(dim - 1, degree - first):
            yield (first,) + rest


@pytest.fixture
def rng():
    return Random(20240809)


@pytest.fixture(scope="session")
def corpus():
    """The 100-polytope corpus used by the acceptance criteria."""
    r = Random(1234)
    return [random_simple_polytope(r) for _ in range(100)]
