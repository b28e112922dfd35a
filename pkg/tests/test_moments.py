"""Forward moments: vertex-cone route vs barycentric integration."""

import json
from fractions import Fraction
from random import Random

import pytest

from conftest import (
    random_density,
    random_polygon,
    random_tetrahedron,
    square_pyramid,
    unit_cube,
    unit_square,
    unit_triangle,
)
from polymom.errors import DenominatorVanishes, InputError, InsufficientMoments
from polymom.geometry import Polytope, sample_generic_direction
from polymom.moments import (
    MomentSequence,
    PolytopeMomentOracle,
    add_noise,
    axial_moment_brion,
    axial_moment_brion_density,
    axial_moment_direct,
    axial_moments_brion,
    axial_moments_brion_density,
    axial_moments_direct,
    companion_identity_residual,
    moment_sequence,
    moments_from_json,
    moments_to_csv,
    moments_to_json,
    monomial_moment,
    monomial_moments_of_degree,
    scaled_moment_vector,
    vertex_side_scaled_entry,
)
from polymom.numeric import poly_parse

F = Fraction


class TestDirectIntegration:
    def test_triangle_area(self):
        assert axial_moment_direct(unit_triangle(), (F(1), F(0)), 0) == F(1, 2)

    def test_triangle_x_squared(self):
        # integral of x^2 over the unit triangle: int_0^1 x^2 (1-x) dx = 1/12
        assert axial_moment_direct(unit_triangle(), (F(1), F(0)), 2) == F(1, 12)

    def test_square_density_x(self):
        rho = poly_parse("x1", 2)
        # int over [0,1]^2 of x * x dA = 1/3
        assert axial_moment_direct(unit_square(), (F(1), F(0)), 1, rho) == F(1, 3)
        # j=0: int x dA = 1/2
        assert axial_moment_direct(unit_square(), (F(1), F(0)), 0, rho) == F(1, 2)

    def test_cube_volume(self):
        assert axial_moment_direct(unit_cube(), (F(1), F(2), F(3)), 0) == 1

    def test_pyramid_volume(self):
        assert axial_moment_direct(square_pyramid(), (F(1), F(2), F(3)), 0) == F(1, 3)


class TestBrion:
    def test_triangle_moments(self):
        tri = unit_triangle()
        z = (F(1), F(2))
        # D = (1/2, -1, 1/2) at projections (0, 1, 2)
        assert axial_moment_brion(tri, z, 0) == F(1, 2)
        assert axial_moment_brion(tri, z, 1) == F(1, 2)
        assert axial_moments_brion(tri, z, 3)[2] == F(7, 12)

    def test_square_area(self):
        # D = (1/2, -1/2, -1/2, 1/2) at projections (0, 1, 2, 3)
        assert axial_moment_brion(unit_square(), (F(1), F(2)), 0) == 1

    def test_denominator_vanishes(self):
        with pytest.raises(DenominatorVanishes):
            axial_moment_brion(unit_square(), (F(1), F(0)), 0)

    def test_triangulated_route_matches_cone_route(self):
        tri = unit_triangle()
        no_cones = Polytope(dim=2, vertices=tri.vertices, simplices=tri.simplices)
        z = (F(3), F(7))
        for j in range(5):
            assert axial_moment_brion(no_cones, z, j) == axial_moment_brion(tri, z, j)


class TestBrionDensity:
    def test_constant_density_reduces_to_uniform(self):
        tri = unit_triangle()
        z = (F(1), F(2))
        rho = poly_parse("1", 2)
        assert axial_moment_brion_density(tri, z, 1, rho) == F(1, 2)

    def test_square_density_x1(self):
        rho = poly_parse("x1", 2)
        got = axial_moment_brion_density(unit_square(), (F(1), F(3)), 0, rho)
        assert got == F(1, 2)

    def test_triangle_density_sum(self):
        rho = poly_parse("x1 + x2", 2)
        got = axial_moment_brion_density(unit_triangle(), (F(1), F(2)), 0, rho)
        assert got == F(1, 3)

    def test_against_direct_small_corpus(self, rng):
        # 25 random simplices here; the acceptance suite runs the full 200
        for _ in range(25):
            if rng.random() < 0.5:
                p = random_polygon(rng, max_vertices=3)
            else:
                p = random_tetrahedron(rng)
            deg = rng.randint(0, 2)
            rho = random_density(rng, p.dim, deg) if deg else None
            while True:
                z = sample_generic_direction(p.dim, 1009, rng).coords
                try:
                    brion = axial_moments_brion_density(p, z, 9, rho)
                    break
                except DenominatorVanishes:
                    continue
            direct = axial_moments_direct(p, z, 9, rho)
            assert brion == direct

    def test_vanished_term_stays_exact(self):
        # a density piece contributing exactly zero must not inject floats
        tri = Polytope(
            dim=2,
            vertices=((F(-1), F(0)), (F(1), F(0)), (F(0), F(1))),
            simplices=((0, 1, 2),),
        )
        rho = poly_parse("1 + x1", 2)  # int x1 dA = 0 by symmetry
        out = axial_moments_brion_density(tri, (F(1), F(3)), 3, rho)
        assert all(isinstance(m, Fraction) for m in out)
        assert out == axial_moments_direct(tri, (F(1), F(3)), 3, rho)


class TestCompanionIdentities:
    def test_square_examples(self):
        sq = unit_square()
        z = (F(1), F(2))
        assert companion_identity_residual(sq, z, 0) == 0
        assert companion_identity_residual(sq, z, 1) == 0

    def test_triangle_examples(self):
        tri = unit_triangle()
        z = (F(1), F(2))
        assert companion_identity_residual(tri, z, 0) == 0
        assert companion_identity_residual(tri, z, 1) == 0

    def test_density_range(self, rng):
        tri = unit_triangle()
        rho = random_density(rng, 2, 2)
        z = (F(3), F(5))
        for j in range(2 + 2):
            assert companion_identity_residual(tri, z, j, rho) == 0

    def test_out_of_range_rejected(self):
        with pytest.raises(InputError):
            companion_identity_residual(unit_triangle(), (F(1), F(2)), 2)


class TestScaledMomentVector:
    def test_triangle_c_vector(self):
        ms = moment_sequence(unit_triangle(), (F(1), F(2)), 7)
        sv = scaled_moment_vector(ms, 6)
        assert sv.c == (0, 0, 1, 3, 7, 15, 31)

    def test_density_leading_zeros(self):
        rho = poly_parse("x1", 2)
        ms = moment_sequence(unit_triangle(), (F(1), F(2)), 4, rho)
        sv = scaled_moment_vector(ms, 5)
        assert sv.c[:3] == (0, 0, 0)
        assert len(sv.c) == 6

    def test_zero_moments_give_zero_c(self):
        ms = MomentSequence(
            dim=2, direction=(F(1), F(1)), density_degree=0, mode="exact",
            moments=(F(0),) * 5,
        )
        assert all(x == 0 for x in scaled_moment_vector(ms, 6).c)

    def test_insufficient(self):
        ms = moment_sequence(unit_triangle(), (F(1), F(2)), 2)
        with pytest.raises(InsufficientMoments):
            scaled_moment_vector(ms, 6)

    def test_vandermonde_residual(self, rng):
        # row-wise matrix identity: sum_i x_i^k D_i = c_{k+1} for k <= 2N
        for _ in range(5):
            p = random_polygon(rng)
            n = p.n_vertices
            while True:
                z = sample_generic_direction(2, 1009, rng).coords
                try:
                    ms = moment_sequence(p, z, 2 * n + 1)
                    break
                except DenominatorVanishes:
                    continue
            c = scaled_moment_vector(ms, 2 * n).c
            for k in range(2 * n + 1):
                assert vertex_side_scaled_entry(p, z, k) == c[k]


class TestMonomialMoments:
    def test_square_first_moment(self):
        assert monomial_moment(unit_square(), (1, 0)) == F(1, 2)

    def test_square_area(self):
        assert monomial_moment(unit_square(), (0, 0)) == 1

    def test_triangle_xy(self):
        assert monomial_moment(unit_triangle(), (1, 1)) == F(1, 24)

    def test_z_independence(self):
        tri = unit_triangle()
        a = monomial_moment(tri, (2, 1), z=(F(1), F(3)))
        b = monomial_moment(tri, (2, 1), z=(F(2), F(5)))
        assert a == b

    def test_against_direct_integration(self, rng):
        # fold the monomial into the density and integrate directly
        for _ in range(4):
            p = random_polygon(rng, max_vertices=5)
            for q in range(4):
                got = monomial_moments_of_degree(p, q)
                for m, val in got.items():
                    mono = poly_parse(
                        " ".join(f"x{i+1}^{e}" for i, e in enumerate(m) if e) or "1",
                        p.dim,
                    )
                    assert val == axial_moment_direct(p, (F(1), F(0)), 0, mono), m

    def test_density_folding(self):
        rho = poly_parse("1 + x2", 2)
        got = monomial_moment(unit_square(), (1, 0), rho)
        # int x (1 + y) dA over the unit square = 1/2 + 1/4
        assert got == F(3, 4)


class TestNoise:
    def _ms(self):
        return moment_sequence(
            unit_square(), (0.25, 0.75), 5, mode="float"
        )

    def test_zero_noise_identity(self):
        ms = self._ms()
        assert add_noise(ms, 0.0, Random(1)).moments == ms.moments

    def test_relative_bound(self):
        ms = self._ms()
        noisy = add_noise(ms, 1e-9, Random(1))
        for a, b in zip(noisy.moments, ms.moments):
            assert abs(a - b) <= 1e-9 * abs(b)

    def test_seed_pin(self):
        ms = MomentSequence(
            dim=2, direction=(1.0, 2.0), density_degree=0, mode="float",
            moments=(1.0, 0.5, 0.25),
        )
        out = add_noise(ms, 1e-6, Random(2024))
        assert out.moments == (
            0.9999999401814369, 0.5000002282642915, 0.2499999018756792,
        )

    def test_exact_mode_rejected(self):
        ms = moment_sequence(unit_square(), (F(1), F(3)), 3)
        with pytest.raises(InputError):
            add_noise(ms, 1e-9, Random(1))


class TestRoutesAndFiles:
    def test_both_route_agreement(self):
        ms = moment_sequence(unit_triangle(), (F(1), F(2)), 5, route="both")
        assert ms.moments[0] == F(1, 2)

    def test_json_round_trip(self, tmp_path):
        ms = moment_sequence(unit_triangle(), (F(1), F(2)), 5)
        doc = moments_to_json(ms)
        back = moments_from_json(json.loads(json.dumps(doc)))
        assert back == ms

    def test_csv_export(self, tmp_path):
        ms = moment_sequence(unit_triangle(), (F(1), F(2)), 3)
        path = tmp_path / "m.csv"
        moments_to_csv(ms, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "index,value"
        assert lines[1] == "0,1/2"

    def test_oracle_counts_distinct_measurements(self):
        oracle = PolytopeMomentOracle(unit_triangle())
        z = (F(1), F(2))
        oracle.moment(z, 0)
        oracle.moment(z, 0)
        oracle.moment(z, 1)
        assert oracle.unique_count == 2

    def test_noisy_oracle_is_consistent(self):
        oracle = PolytopeMomentOracle(
            unit_square(), mode="float", noise=1e-6, rng=Random(7)
        )
        z = (0.25, 0.75)
        assert oracle.moment(z, 3) == oracle.moment(z, 3)


class TestPyramidForward:
    def test_triangulated_brion_matches_direct(self):
        pyr = square_pyramid()
        z = (F(2), F(3), F(5))
        for j in range(6):
            assert axial_moment_brion(pyr, z, j) == axial_moment_direct(pyr, z, j)
