"""Polytope structure, triangulation, and direction sampling."""

import json
from fractions import Fraction
from random import Random

import pytest

from conftest import random_polygon, unit_cube, unit_square, unit_triangle
from polymom.errors import InputError
from polymom.geometry import (
    Polytope,
    TangentCone,
    check_distinct_projections,
    fan_triangulate_2d,
    polytope_from_json,
    polytope_to_json,
    sample_generic_direction,
    simplex_cones,
    simplex_volume,
    validate_polytope,
)

F = Fraction


class TestValidate:
    def test_valid_square(self):
        assert validate_polytope(unit_square()) == []

    def test_duplicate_vertex(self):
        p = Polytope(dim=2, vertices=((F(0), F(0)), (F(1), F(0)), (F(0), F(0))))
        assert any("duplicate vertex" in f for f in validate_polytope(p))

    def test_degenerate_cone(self):
        cones = (
            TangentCone(vertex=0, edges=((F(1), F(0)), (F(2), F(0))), det=F(0)),
        )
        p = Polytope(
            dim=2,
            vertices=((F(0), F(0)), (F(1), F(0)), (F(0), F(1))),
            cones=cones,
        )
        findings = validate_polytope(p)
        assert any("degenerate cone" in f for f in findings)

    def test_too_few_vertices(self):
        p = Polytope(dim=2, vertices=((F(0), F(0)), (F(1), F(0))))
        assert any("fewer than" in f for f in validate_polytope(p))

    def test_wrong_stored_det(self):
        cones = (
            TangentCone(vertex=0, edges=((F(1), F(0)), (F(0), F(1))), det=F(7)),
        )
        p = Polytope(
            dim=2,
            vertices=((F(0), F(0)), (F(1), F(0)), (F(0), F(1))),
            cones=cones,
        )
        assert any("stored det" in f for f in validate_polytope(p))

    def test_bad_simplex(self):
        p = Polytope(
            dim=2,
            vertices=((F(0), F(0)), (F(1), F(0)), (F(0), F(1))),
            simplices=((0, 1, 1),),
        )
        assert any("bad simplex" in f for f in validate_polytope(p))


class TestFanTriangulation:
    def test_square(self):
        p = Polytope(
            dim=2,
            vertices=((F(0), F(0)), (F(1), F(0)), (F(1), F(1)), (F(0), F(1))),
        )
        assert fan_triangulate_2d(p) == ((0, 1, 2), (0, 2, 3))

    def test_triangle_is_itself(self):
        p = Polytope(dim=2, vertices=((F(0), F(0)), (F(1), F(0)), (F(0), F(1))))
        assert fan_triangulate_2d(p) == ((0, 1, 2),)

    def test_pentagon_area_matches_shoelace(self):
        verts = (
            (F(0), F(0)),
            (F(2), F(0)),
            (F(3), F(2)),
            (F(1), F(3)),
            (F(-1), F(1)),
        )
        p = Polytope(dim=2, vertices=verts)
        tri = fan_triangulate_2d(p)
        assert len(tri) == 3
        total = sum(simplex_volume(verts, s) for s in tri)
        # shoelace formula as the independent oracle
        shoelace = (
            sum(
                verts[i][0] * verts[(i + 1) % 5][1]
                - verts[(i + 1) % 5][0] * verts[i][1]
                for i in range(5)
            )
            / 2
        )
        assert total == abs(shoelace)

    def test_scrambled_vertex_order(self):
        verts = ((F(1), F(1)), (F(0), F(0)), (F(0), F(1)), (F(1), F(0)))
        p = Polytope(dim=2, vertices=verts)
        tri = fan_triangulate_2d(p)
        total = sum(simplex_volume(verts, s) for s in tri)
        assert total == 1

    def test_collinear_triple_rejected(self):
        p = Polytope(
            dim=2,
            vertices=((F(0), F(0)), (F(1), F(0)), (F(2), F(0)), (F(0), F(1))),
        )
        with pytest.raises(InputError, match="collinear"):
            fan_triangulate_2d(p)

    def test_non_convex_rejected(self):
        p = Polytope(
            dim=2,
            vertices=(
                (F(0), F(0)),
                (F(4), F(0)),
                (F(4), F(4)),
                (F(2), F(1)),  # interior dent
            ),
        )
        with pytest.raises(InputError, match="convex"):
            fan_triangulate_2d(p)

    def test_random_polygons_tile_exactly(self, rng):
        for _ in range(10):
            p = random_polygon(rng)
            total = sum(simplex_volume(p.vertices, s) for s in p.simplices)
            n = p.n_vertices
            shoelace = (
                sum(
                    p.vertices[i][0] * p.vertices[(i + 1) % n][1]
                    - p.vertices[(i + 1) % n][0] * p.vertices[i][1]
                    for i in range(n)
                )
                / 2
            )
            # vertices are already in hull (counterclockwise) order
            assert total == abs(shoelace)


class TestSimplexCones:
    def test_unit_triangle_all_vertices(self):
        verts = ((F(0), F(0)), (F(1), F(0)), (F(0), F(1)))
        cones = simplex_cones(verts, (0, 1, 2))
        by_vertex = {c.vertex: c for c in cones}
        assert by_vertex[0].edges == ((F(1), F(0)), (F(0), F(1)))
        assert by_vertex[0].det == 1
        assert by_vertex[1].edges == ((F(-1), F(0)), (F(-1), F(1)))
        assert by_vertex[1].det == 1
        assert by_vertex[2].edges == ((F(0), F(-1)), (F(1), F(-1)))
        assert by_vertex[2].det == 1

    def test_det_equal_across_vertices(self, rng):
        from conftest import random_tetrahedron

        for _ in range(10):
            t = random_tetrahedron(rng)
            dets = {c.det for c in simplex_cones(t.vertices, t.simplices[0])}
            assert len(dets) == 1
            for c in simplex_cones(t.vertices, t.simplices[0]):
                assert c.recompute_det() == c.det

    def test_degenerate_simplex(self):
        verts = ((F(0), F(0)), (F(1), F(0)), (F(2), F(0)))
        with pytest.raises(InputError, match="degenerate"):
            simplex_cones(verts, (0, 1, 2))


class TestDirectionSampling:
    def test_enumeration_uniform_at_small_r(self):
        counts = {}
        rng = Random(3)
        for _ in range(8000):
            d = sample_generic_direction(2, 2, rng)
            counts[d.coords] = counts.get(d.coords, 0) + 1
        assert len(counts) == 4
        assert all(abs(c - 2000) < 250 for c in counts.values())

    def test_denominator_r(self):
        d = sample_generic_direction(3, 10007, Random(5))
        assert d.denominator == 10007
        for x in d.coords:
            assert 0 <= x < 1
            assert x.denominator in (1, 10007)

    def test_seed_pin(self):
        # regression pin recorded on first run
        d = sample_generic_direction(2, 10007, Random(1234))
        assert d.coords == (F(7220, 10007), F(1914, 10007))

    def test_r_must_be_prime(self):
        with pytest.raises(InputError, match="prime"):
            sample_generic_direction(2, 10, Random(0))

    def test_float_mode(self):
        d = sample_generic_direction(2, 10007, Random(1234), mode="float")
        assert d.coords == (7220 / 10007, 1914 / 10007)


class TestDistinctProjections:
    def test_collision(self):
        assert not check_distinct_projections(unit_triangle(), (F(1), F(0)))

    def test_distinct(self):
        assert check_distinct_projections(unit_triangle(), (F(1), F(2)))

    def test_zero_direction(self):
        assert not check_distinct_projections(unit_triangle(), (F(0), F(0)))


class TestJsonRoundTrip:
    def test_polytope_round_trip(self, tmp_path):
        for p in (unit_triangle(), unit_square(), unit_cube()):
            doc = polytope_to_json(p)
            text = json.dumps(doc)
            back = polytope_from_json(json.loads(text))
            assert back == p

    def test_scalars_as_strings_and_numbers(self):
        doc = {
            "dim": 2,
            "vertices": [["0", 0], ["1/2", 1], [0.5, "2"]],
        }
        p = polytope_from_json(doc)
        assert p.vertices[1] == (F(1, 2), F(1))
        assert p.vertices[2] == (F(1, 2), F(2))

    def test_bad_document(self):
        with pytest.raises(InputError):
            polytope_from_json({"vertices": [[0, 0]]})

    def test_float_mode_load(self):
        doc = {"dim": 2, "vertices": [["0", "0"], ["1", "0"], ["0", "1"]]}
        p = polytope_from_json(doc, mode="float")
        assert p.vertices[2] == (0.0, 1.0)
