"""Axial moments of polytopes: vertex-cone formulas and an independent
barycentric-integration oracle.

Two routes compute mu_j(z) = integral over P of <x,z>^j rho(x) dx:

* ``brion``: the vertex sum mu_j = j! (-1)^d / (j+d)! * sum_v <v,z>^{j+d}
  D_v(z) with D_v(z) = |det K_v| / prod_k <w_k(v), z>, extended to
  polynomial densities by applying rho(d/dz) per homogeneous piece, and to
  non-simple polytopes by accumulating D-tilde over a triangulation.
* ``direct``: exact simplex-by-simplex integration through barycentric
  coordinates (Dirichlet's formula), independent of every vertex formula.

All computations are mode-agnostic: exact inputs stay exact, float inputs
produce floats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from random import Random

from .errors import (
    DenominatorVanishes,
    InputError,
    InsufficientMoments,
    OracleDisagreement,
)
from .geometry import (
    Direction,
    Polytope,
    dot,
    fan_triangulate_2d,
    polytope_to_float,
    sample_generic_direction,
    simplex_cones,
)
from .numeric import (
    EXACT,
    FLOAT,
    Jet,
    MultiPoly,
    derivative_jet,
    exact_div,
    extract_diff,
    falling,
    jet_variables,
    mfactorial,
    scalar_from_json,
    scalar_to_json,
)
from . import linalg


def _direction_coords(z):
    return z.coords if isinstance(z, Direction) else tuple(z)


def _integerize(coords):
    """Clear the common denominator of a rational direction.

    The axial moment mu_j is homogeneous of degree j in z, so it can be
    evaluated at the integer vector q*z (keeping every intermediate rational
    small) and rescaled by q**-j afterwards. Float directions pass through.
    """
    from math import lcm

    q = 1
    for x in coords:
        if isinstance(x, Fraction):
            q = lcm(q, x.denominator)
        elif not isinstance(x, int):
            return coords, 1
    if q == 1:
        return coords, 1
    return tuple(int(x * q) for x in coords), q


def triangulation_of(p: Polytope):
    """The simplex list used for triangulated evaluation.

    Explicit simplices win; otherwise d=2 polygons are fan-triangulated and
    a (d+1)-vertex polytope is its own simplex.
    """
    if p.simplices is not None:
        return p.simplices
    if p.dim == 2:
        return fan_triangulate_2d(p)
    if p.n_vertices == p.dim + 1:
        return (tuple(range(p.dim + 1)),)
    raise InputError(
        "polytope needs cones or an explicit triangulation in dimension "
        f"{p.dim} with {p.n_vertices} vertices"
    )


def _is_zero(value):
    if isinstance(value, Jet):
        return value.value() == 0
    return value == 0


def _cone_weight(cone, z):
    """D_v(z) for one simple cone; raises when a denominator vanishes."""
    denom = None
    for w in cone.edges:
        s = dot(w, z)
        if _is_zero(s):
            edge = tuple(w)
            raise DenominatorVanishes(cone.vertex, edge)
        denom = s if denom is None else denom * s
    return cone.det / denom


def vertex_weight_terms(p: Polytope, z):
    """Pairs (<v,z>, D-tilde_v(z)) per vertex of P.

    ``z`` may hold scalars or jets. Simple-cone data is preferred; without
    it the weights are accumulated over a triangulation (the D-tilde of the
    non-simple case).
    """
    coords = _direction_coords(z)
    if p.cones is not None:
        out = []
        for cone in p.cones:
            proj = dot(p.vertices[cone.vertex], coords)
            out.append((proj, _cone_weight(cone, coords)))
        return out
    weights = {}
    for simplex in triangulation_of(p):
        for cone in simplex_cones(p.vertices, simplex):
            w = _cone_weight(cone, coords)
            if cone.vertex in weights:
                weights[cone.vertex] = weights[cone.vertex] + w
            else:
                weights[cone.vertex] = w
    return [
        (dot(p.vertices[i], coords), weights[i]) for i in sorted(weights)
    ]


def _descale(moments, q):
    """Undo the degree-j homogeneity scaling of a moment batch."""
    if q == 1:
        return moments
    acc = 1
    out = []
    for j, m in enumerate(moments):
        out.append(exact_div(m, acc) if j else m)
        acc *= q
    return out


def axial_moments_brion(p: Polytope, z, count: int):
    """Moments mu_0 .. mu_{count-1} for uniform density via the vertex sum."""
    d = p.dim
    coords, q = _integerize(_direction_coords(z))
    terms = vertex_weight_terms(p, coords)
    sign = (-1) ** d
    powers = [proj**d * w for proj, w in terms]
    projs = [proj for proj, _ in terms]
    out = []
    for j in range(count):
        total = 0
        for t in powers:
            total = total + t
        out.append(exact_div(sign * total, falling(j + d, d)))
        if j + 1 < count:
            powers = [t * proj for t, proj in zip(powers, projs)]
    return _descale(out, q)


def axial_moment_brion(p: Polytope, z, j: int):
    """mu_j(z) for uniform density; equals the direct oracle exactly."""
    return axial_moments_brion(p, z, j + 1)[j]


def _density_parts(rho: MultiPoly):
    if rho is None:
        return None
    if rho.is_zero():
        return {}
    return rho.homogeneous_parts()


def axial_moments_brion_density(p: Polytope, z, count: int, rho: MultiPoly | None):
    """Moments for polynomial density rho via the differentiated vertex sum.

    Each homogeneous piece rho_s contributes
    j! (-1)^d / (j+d+s)! * [rho_s(d/dz) sum_v <v,z>^{j+d+s} D_v(z)](z);
    the jets realize the operator numerically at the evaluation point.
    """
    if rho is None or rho.is_constant():
        scale = 1 if rho is None else rho.constant_value()
        return [scale * m for m in axial_moments_brion(p, z, count)]
    d = p.dim
    coords, q = _integerize(_direction_coords(z))
    sign = (-1) ** d
    out = [0] * count
    for s, piece in _density_parts(rho).items():
        if s == 0:
            c0 = piece.constant_value()
            for j, m in enumerate(axial_moments_brion(p, coords, count)):
                out[j] = out[j] + c0 * m
            continue
        jets = jet_variables(coords, s)
        terms = vertex_weight_terms(p, jets)
        powers = [proj ** (d + s) * w for proj, w in terms]
        projs = [proj for proj, _ in terms]
        for j in range(count):
            total = None
            for t in powers:
                total = t if total is None else total + t
            val = extract_diff(piece, total)
            out[j] = out[j] + exact_div(sign * val, falling(j + d + s, d + s))
            if j + 1 < count:
                powers = [t * proj for t, proj in zip(powers, projs)]
    return _descale(out, q)


def axial_moment_brion_density(p: Polytope, z, j: int, rho: MultiPoly | None):
    return axial_moments_brion_density(p, z, j + 1, rho)[j]


def _lambda_coordinate_polys(pts, n_lambda):
    """x_t as linear polynomials in the barycentric variables."""
    d = len(pts[0])
    out = []
    for t in range(d):
        terms = {}
        for i in range(n_lambda):
            exp = [0] * n_lambda
            exp[i] = 1
            if pts[i][t] != 0:
                terms[tuple(exp)] = pts[i][t]
        out.append(MultiPoly(n_lambda, terms))
    return out


def _substitute_density(rho, coord_polys, n_lambda):
    if rho is None:
        return MultiPoly.constant(n_lambda, Fraction(1))
    # cache powers of the coordinate polynomials
    max_exp = [0] * len(coord_polys)
    for exp in rho.terms:
        for t, e in enumerate(exp):
            max_exp[t] = max(max_exp[t], e)
    powers = []
    for t, poly in enumerate(coord_polys):
        plist = [MultiPoly.constant(n_lambda, Fraction(1))]
        for _ in range(max_exp[t]):
            plist.append(plist[-1] * poly)
        powers.append(plist)
    total = MultiPoly(n_lambda, {})
    for exp, coef in rho.terms.items():
        term = MultiPoly.constant(n_lambda, coef)
        for t, e in enumerate(exp):
            if e:
                term = term * powers[t][e]
        total = total + term
    return total


def _dirichlet_integral(poly: MultiPoly, d: int):
    """Integral over the standard d-simplex of a polynomial in the d+1
    barycentric coordinates, per the Dirichlet formula
    integral of prod lambda_i^{a_i} = prod a_i! / (d + sum a_i)!."""
    total = 0
    for exp, coef in poly.terms.items():
        total = total + coef * Fraction(mfactorial(exp), factorial(d + sum(exp)))
    return total


def axial_moments_direct(p: Polytope, z, count: int, rho: MultiPoly | None = None):
    """Ground-truth moments by barycentric integration over a triangulation."""
    d = p.dim
    coords, q = _integerize(_direction_coords(z))
    n_lambda = d + 1
    out = [0] * count
    for simplex in triangulation_of(p):
        pts = [p.vertices[i] for i in simplex]
        edges = [[pts[j][t] - pts[0][t] for t in range(d)] for j in range(1, d + 1)]
        vol_factor = abs(linalg.det_exact(edges))
        if vol_factor == 0:
            raise InputError(f"degenerate simplex {simplex}")
        lin_terms = {}
        for i in range(n_lambda):
            exp = [0] * n_lambda
            exp[i] = 1
            c = dot(pts[i], coords)
            if c != 0:
                lin_terms[tuple(exp)] = c
        lin = MultiPoly(n_lambda, lin_terms)
        coord_polys = _lambda_coordinate_polys(pts, n_lambda)
        cur = _substitute_density(rho, coord_polys, n_lambda)
        for j in range(count):
            out[j] = out[j] + vol_factor * _dirichlet_integral(cur, d)
            if j + 1 < count:
                cur = cur * lin
    out = _descale(out, q)
    if p.vertices and isinstance(p.vertices[0][0], float):
        return [float(x) for x in out]
    return out


def axial_moment_direct(p: Polytope, z, j: int, rho: MultiPoly | None = None):
    return axial_moments_direct(p, z, j + 1, rho)[j]


def vertex_side_scaled_entry(p: Polytope, z, k: int, rho: MultiPoly | None = None):
    """Entry c_{k+1} of the scaled moment vector computed from the vertex
    side of the matrix identity: sum_s falling(k, deg-s) *
    [rho_s(d/dz) sum_v <v,z>^{k-deg+s} D_v(z)](z)."""
    coords, q = _integerize(_direction_coords(z))
    deg = 0 if rho is None else rho.degree
    # every term is homogeneous of degree k - d - deg in z
    hom = k - p.dim - deg
    unscale = Fraction(1, q**hom) if hom >= 0 else Fraction(q ** (-hom))
    if rho is None or rho.is_constant():
        scale = 1 if rho is None else rho.constant_value()
        terms = vertex_weight_terms(p, coords)
        total = 0
        for proj, w in terms:
            total = total + proj**k * w
        return scale * total * unscale
    total = 0
    for s, piece in _density_parts(rho).items():
        e = k - deg + s
        if e < 0:
            continue  # falling factorial vanishes
        fac = falling(k, deg - s)
        if fac == 0:
            continue
        if s == 0:
            inner = 0
            for proj, w in vertex_weight_terms(p, coords):
                inner = inner + proj**e * w
            total = total + piece.constant_value() * fac * inner
        else:
            jets = jet_variables(coords, s)
            inner = None
            for proj, w in vertex_weight_terms(p, jets):
                t = proj**e * w
                inner = t if inner is None else inner + t
            total = total + fac * extract_diff(piece, inner)
    return total * unscale


def companion_identity_residual(p: Polytope, z, j: int, rho: MultiPoly | None = None):
    """The low-order vanishing sums; exactly zero for 0 <= j < d + deg(rho)."""
    deg = 0 if rho is None else rho.degree
    if not 0 <= j <= p.dim + deg - 1:
        raise InputError(f"companion identity index {j} outside 0..{p.dim + deg - 1}")
    return vertex_side_scaled_entry(p, z, j, rho)


@dataclass(frozen=True)
class MomentSequence:
    """mu_0..mu_K along one direction, with the metadata the inverse
    pipeline needs."""

    dim: int
    direction: tuple
    density_degree: int
    mode: str
    moments: tuple

    def __len__(self):
        return len(self.moments)


@dataclass(frozen=True)
class ScaledMomentVector:
    """The vector c with d + deg leading zeros and scaled moments after:
    c_{j+d+deg+1} = (-1)^d (j+d+deg)!/j! mu_j."""

    c: tuple
    dim: int
    density_degree: int


def scaled_moment_vector(ms: MomentSequence, k: int) -> ScaledMomentVector:
    """c_1 .. c_{k+1} from a moment sequence."""
    lead = ms.dim + ms.density_degree
    needed = k + 1 - lead
    if needed > len(ms.moments):
        raise InsufficientMoments(
            f"need {needed} moments for k={k}, have {len(ms.moments)}"
        )
    sign = (-1) ** ms.dim
    c = [0] * min(lead, k + 1)
    for j in range(max(0, needed)):
        c.append(sign * falling(j + lead, lead) * ms.moments[j])
    return ScaledMomentVector(c=tuple(c), dim=ms.dim, density_degree=ms.density_degree)


def moment_sequence(
    p: Polytope,
    z,
    count: int,
    rho: MultiPoly | None = None,
    mode: str = EXACT,
    route: str = "brion",
) -> MomentSequence:
    coords = _direction_coords(z)
    if route == "brion":
        moments = axial_moments_brion_density(p, coords, count, rho)
    elif route == "direct":
        moments = axial_moments_direct(p, coords, count, rho)
    elif route == "both":
        brion = axial_moments_brion_density(p, coords, count, rho)
        direct = axial_moments_direct(p, coords, count, rho)
        for j, (a, b) in enumerate(zip(brion, direct)):
            if not _moments_close(a, b, mode):
                raise OracleDisagreement(f"brion and direct disagree at j={j}: {a} vs {b}")
        moments = direct
    else:
        raise InputError(f"unknown route {route!r}")
    return MomentSequence(
        dim=p.dim,
        direction=coords,
        density_degree=0 if rho is None else rho.degree,
        mode=mode,
        moments=tuple(moments),
    )


def _moments_close(a, b, mode):
    if mode == EXACT:
        return a == b
    scale = max(1.0, abs(float(a)), abs(float(b)))
    return abs(float(a) - float(b)) <= 1e-9 * scale


def add_noise(ms: MomentSequence, eps_rel: float, rng) -> MomentSequence:
    """Multiply each moment by (1 + delta), delta uniform in [-eps, eps]."""
    if ms.mode != FLOAT:
        raise InputError("noise injection requires float mode")
    noisy = tuple(m * (1.0 + rng.uniform(-eps_rel, eps_rel)) for m in ms.moments)
    return MomentSequence(
        dim=ms.dim,
        direction=ms.direction,
        density_degree=ms.density_degree,
        mode=ms.mode,
        moments=noisy,
    )


def moments_to_json(ms: MomentSequence) -> dict:
    return {
        "dim": ms.dim,
        "direction": [scalar_to_json(x) for x in ms.direction],
        "density_degree": ms.density_degree,
        "mode": ms.mode,
        "moments": [scalar_to_json(m) for m in ms.moments],
    }


def moments_from_json(doc) -> MomentSequence:
    try:
        mode = doc.get("mode", EXACT)
        return MomentSequence(
            dim=int(doc["dim"]),
            direction=tuple(scalar_from_json(x, mode) for x in doc["direction"]),
            density_degree=int(doc.get("density_degree", 0)),
            mode=mode,
            moments=tuple(scalar_from_json(m, mode) for m in doc["moments"]),
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad moment document: {exc}") from None


def save_moments(ms: MomentSequence, path):
    with open(path, "w") as fh:
        json.dump(moments_to_json(ms), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_moments(path) -> MomentSequence:
    with open(path) as fh:
        return moments_from_json(json.load(fh))


def moments_to_csv(ms: MomentSequence, path):
    with open(path, "w") as fh:
        fh.write("index,value\n")
        for j, m in enumerate(ms.moments):
            fh.write(f"{j},{scalar_to_json(m)}\n")


def axial_moment_jet(p: Polytope, z, j: int, order: int, rho: MultiPoly | None = None) -> Jet:
    """Jet (truncated Taylor expansion in z) of the map z -> mu_j(z)."""
    coords, q = _integerize(_direction_coords(z))
    jet = _axial_moment_jet_at(p, coords, j, order, rho)
    if q == 1:
        return jet
    # mu_j is homogeneous of degree j: Taylor coefficients at z = k/q are
    # those at k scaled by q^(|m| - j)
    coeffs = {}
    for exp, val in jet.coeffs.items():
        hom = sum(exp) - j
        factor = Fraction(q**hom) if hom >= 0 else Fraction(1, q ** (-hom))
        coeffs[exp] = val * factor
    return Jet(jet.dim, jet.order, coeffs)


def _axial_moment_jet_at(p: Polytope, coords, j: int, order: int,
                         rho: MultiPoly | None = None) -> Jet:
    d = p.dim
    sign = (-1) ** d
    if rho is None or rho.is_constant():
        scale = 1 if rho is None else rho.constant_value()
        jets = jet_variables(coords, order)
        total = None
        for proj, w in vertex_weight_terms(p, jets):
            t = proj ** (j + d) * w
            total = t if total is None else total + t
        jet = total * sign / falling(j + d, d)
        return jet if scale == 1 else jet * scale
    result = None
    for s, piece in _density_parts(rho).items():
        jets = jet_variables(coords, order + s)
        total = None
        for proj, w in vertex_weight_terms(p, jets):
            t = proj ** (j + d + s) * w
            total = t if total is None else total + t
        contrib = derivative_jet(piece, total) * (
            sign * Fraction(1, falling(j + d + s, d + s))
        )
        result = contrib if result is None else result + contrib
    return result


_MONOMIAL_SAMPLE_PRIME = 4999


def monomial_moments_of_degree(
    p: Polytope, q: int, rho: MultiPoly | None = None, z=None, rng=None
):
    """All monomial moments mu_m = integral of x^m rho dx with |m| = q.

    Uses |m|! mu_m = d^m/dz^m mu_{|m|}(z): one order-q jet of mu_q at an
    internally sampled generic z serves every m of that total degree.
    """
    if rng is None:
        rng = Random(20240615 + q)
    attempts = 0
    while True:
        if z is not None:
            coords = _direction_coords(z)
        else:
            coords = sample_generic_direction(
                p.dim, r=_MONOMIAL_SAMPLE_PRIME, rng=rng
            ).coords
        try:
            jet = axial_moment_jet(p, coords, q, q, rho)
            break
        except DenominatorVanishes:
            if z is not None:
                raise
            attempts += 1
            if attempts > 32:
                raise
    fq = factorial(q)
    out = {}
    for exp in _exponents_of_degree(p.dim, q):
        out[exp] = jet.coefficient(exp) * Fraction(mfactorial(exp), fq)
    return out


def _exponents_of_degree(dim, q):
    if dim == 1:
        yield (q,)
        return
    for first in range(q + 1):
        for rest in _exponents_of_degree(dim - 1, q - first):
            yield (first,) + rest


def monomial_moment(p: Polytope, m, rho: MultiPoly | None = None, z=None, rng=None):
    """integral over P of x^m rho(x) dx, via the derivative relation
    |m|! mu_m = d^m mu_{|m|}(z)."""
    m = tuple(m)
    q = sum(m)
    return monomial_moments_of_degree(p, q, rho, z=z, rng=rng)[m]


class PolytopeMomentOracle:
    """On-demand axial moments of a known polytope.

    Counts distinct measurements (z, j) so the inverse pipeline's moment
    budget can be audited. Noise, when enabled (float mode only), is drawn
    once per distinct measurement and cached, so repeated queries are
    consistent.
    """

    def __init__(
        self,
        polytope: Polytope,
        density: MultiPoly | None = None,
        mode: str = EXACT,
        route: str = "brion",
        noise: float = 0.0,
        rng=None,
    ):
        if mode == FLOAT:
            polytope = polytope_to_float(polytope)
            density = density.to_float() if density is not None else None
        elif noise:
            raise InputError("noise requires float mode")
        self.polytope = polytope
        self.density = density
        self.mode = mode
        self.route = route
        self.noise = noise
        self.rng = rng
        self._values = {}
        self._requested = set()

    @property
    def dim(self):
        return self.polytope.dim

    @property
    def density_degree(self):
        return 0 if self.density is None else self.density.degree

    @property
    def unique_count(self):
        """Number of distinct measurements (z, j) actually requested."""
        return len(self._requested)

    def _ensure(self, coords, count):
        if (coords, count - 1) in self._values:
            return
        if self.route == "direct":
            batch = axial_moments_direct(self.polytope, coords, count, self.density)
        else:
            batch = axial_moments_brion_density(
                self.polytope, coords, count, self.density
            )
        for j, value in enumerate(batch):
            key = (coords, j)
            if key in self._values:
                continue  # keep the noise drawn the first time
            if self.noise:
                value = value * (1.0 + self.rng.uniform(-self.noise, self.noise))
            self._values[key] = value

    def moment(self, z, j: int):
        coords = _direction_coords(z)
        key = (coords, j)
        if key not in self._values:
            self._ensure(coords, j + 1)
        self._requested.add(key)
        return self._values[key]

    def sequence(self, z, count: int) -> MomentSequence:
        coords = _direction_coords(z)
        self._ensure(coords, count)
        moments = tuple(self.moment(coords, j) for j in range(count))
        return MomentSequence(
            dim=self.dim,
            direction=coords,
            density_degree=self.density_degree,
            mode=self.mode,
            moments=moments,
        )


class SequenceMomentOracle:
    """Oracle over pre-baked moment sequences (one per stated direction)."""

    def __init__(self, sequences):
        if not sequences:
            raise InputError("no moment sequences supplied")
        self.sequences = {tuple(ms.direction): ms for ms in sequences}
        first = sequences[0]
        self.dim = first.dim
        self.density_degree = first.density_degree
        self.mode = first.mode
        self._used = set()

    @property
    def directions(self):
        return list(self.sequences)

    @property
    def unique_count(self):
        return len(self._used)

    def moment(self, z, j: int):
        coords = _direction_coords(z)
        ms = self.sequences.get(coords)
        if ms is None:
            raise InputError(f"no moments supplied for direction {coords}")
        if j >= len(ms.moments):
            raise InsufficientMoments(
                f"direction {coords}: moment index {j} beyond supplied {len(ms.moments)}"
            )
        self._used.add((coords, j))
        return ms.moments[j]

    def sequence(self, z, count: int) -> MomentSequence:
        coords = _direction_coords(z)
        moments = tuple(self.moment(coords, j) for j in range(count))
        return MomentSequence(
            dim=self.dim,
            direction=coords,
            density_degree=self.density_degree,
            mode=self.mode,
            moments=moments,
        )
