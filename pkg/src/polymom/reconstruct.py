"""Full vertex reconstruction from axial moments.

The pipeline recovers projections of the vertex set in d independent
directions, matches projections across directions through combined
directions z_1 + beta z_i (a pair (j, k) matches when the combined Prony
polynomial vanishes at x_j + beta y_k), and solves a d x d linear system
per vertex. A frugal variant uses only d+1 directions at the price of
enumerating all candidate index tuples.

Moment consumption is audited through the oracle: with no retries the main
pipeline draws exactly (2d-1)(2N+1-d) distinct measurements for uniform
density (the per-direction count scales with the density degree).
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from random import Random

import numpy as np

from . import linalg
from .config import RunConfig
from .errors import (
    AmbiguousMatching,
    DenominatorVanishes,
    InputError,
    IrrationalRoot,
    MatchingFailure,
    NonGenericDirection,
    OracleDisagreement,
    RankInstability,
)
from .geometry import Polytope, sample_generic_direction
from .moments import MomentSequence, axial_moments_direct, triangulation_of
from .numeric import EXACT, FLOAT
from .prony import (
    ProjectionSet,
    PronyPolynomial,
    moments_needed,
    projections_from_moments,
    prony_polynomial_from_sequence,
)


@dataclass
class Provenance:
    """Bookkeeping for one reconstruction run."""

    directions: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    moment_count: int = 0
    retries: int = 0
    residual_max: float = 0.0
    self_check_moments: int = 0
    self_check_residual: float | None = None


@dataclass(frozen=True)
class VertexSet:
    """The reconstructed vertices (sorted lexicographically)."""

    dim: int
    vertices: tuple
    provenance: Provenance = field(compare=False, default_factory=Provenance)


def sequence_from_oracle(oracle, coords, n_for_hankel: int,
                         oversample: int = 0) -> MomentSequence:
    """Pull exactly the moments one Hankel solve at size
    m = mult*n + 1 + oversample needs."""
    need = moments_needed(
        oracle.dim, n_for_hankel, oracle.density_degree, oversample
    )
    if hasattr(oracle, "sequence"):
        return oracle.sequence(coords, need)
    moments = tuple(oracle.moment(coords, j) for j in range(need))
    return MomentSequence(
        dim=oracle.dim,
        direction=tuple(coords),
        density_degree=oracle.density_degree,
        mode=oracle.mode,
        moments=moments,
    )


def match_projections(x1, xi, beta, pz: PronyPolynomial, mode=EXACT,
                      match_tol=1e-6, alpha=1):
    """Pair each x_j in x1 with the unique y_k in xi such that
    p_z(alpha x_j + beta y_k) = 0 (exactly, or within match_tol in float
    mode). Raises AmbiguousMatching unless the pairing is a bijection."""
    n = len(x1)
    if len(xi) != n:
        raise InputError("projection sets of unequal size")
    pairing = []
    for j, xj in enumerate(x1):
        hits = []
        for k, yk in enumerate(xi):
            val = pz.eval(alpha * xj + beta * yk)
            if (val == 0) if mode == EXACT else (abs(val) < match_tol):
                hits.append(k)
        if len(hits) != 1:
            raise AmbiguousMatching(
                f"projection {xj} matched {len(hits)} candidates with beta={beta}"
            )
        pairing.append(hits[0])
    if len(set(pairing)) != n:
        raise AmbiguousMatching(f"pairing is not a bijection with beta={beta}")
    return tuple(pairing)


def _beta_sequence(mode, rng):
    if mode == EXACT:
        beta = 0
        while True:
            beta += 1
            yield Fraction(beta)
    else:
        while True:
            yield rng.randint(1, 499) / rng.randint(1, 31)


def choose_beta(x1, xi, poly_for_beta, max_trials, mode=EXACT, rng=None,
                match_tol=1e-6):
    """First beta from the trial sequence that yields an unambiguous
    matching (alpha is fixed to 1). Combined directions that fail rank
    detection count as failed trials. Returns (beta, pairing, failed_trials).
    """
    if rng is None:
        rng = Random(0)
    failures = 0
    trials = 0
    for beta in _beta_sequence(mode, rng):
        if trials >= max_trials:
            break
        trials += 1
        try:
            pz = poly_for_beta(beta)
        except (NonGenericDirection, DenominatorVanishes):
            failures += 1
            continue
        try:
            pairing = match_projections(x1, xi, beta, pz, mode, match_tol)
            return beta, pairing, failures
        except AmbiguousMatching:
            failures += 1
    raise MatchingFailure(
        f"no unambiguous matching in {trials} trials; base directions suspect"
    )


def assemble_vertices(direction_rows, matched_tuples, mode=EXACT):
    """Solve Z v = (x(z_1), ..., x(z_d)) for each matched projection tuple."""
    if mode == EXACT:
        return [
            tuple(linalg.solve_exact([list(r) for r in direction_rows], list(t)))
            for t in matched_tuples
        ]
    z = np.array(direction_rows, dtype=float)
    if abs(np.linalg.det(z)) < 1e-12 * max(1.0, np.max(np.abs(z)) ** len(z)):
        raise InputError("singular direction matrix")
    return [tuple(float(x) for x in np.linalg.solve(z, np.array(t, dtype=float)))
            for t in matched_tuples]


def _independent(rows, mode):
    if mode == EXACT:
        return linalg.rank_exact([list(r) for r in rows]) == len(rows)
    # float assembly solves against this matrix, so demand good conditioning
    a = np.array(rows, dtype=float)
    s = np.linalg.svd(a, compute_uv=False)
    return s.size and s[-1] > 1e-1 * s[0]


class _Pipeline:
    """Shared state for one reconstruction run against one oracle."""

    def __init__(self, oracle, nmax, config: RunConfig | None, rng):
        self.oracle = oracle
        self.nmax = nmax
        self.config = (config or RunConfig(mode=oracle.mode)).validate(nmax)
        if self.config.mode != oracle.mode:
            raise InputError(
                f"config mode {self.config.mode} != oracle mode {oracle.mode}"
            )
        self.rng = rng if rng is not None else Random(self.config.seed)
        self.prov = Provenance()
        self.oversample = (
            self.config.float_oversample if self.config.mode == FLOAT else 0
        )

    def sample_direction(self):
        return sample_generic_direction(
            self.oracle.dim, self.config.denominator, self.rng, self.config.mode
        ).coords

    def projections_at(self, coords, n_for_hankel) -> ProjectionSet:
        ms = sequence_from_oracle(
            self.oracle, coords, n_for_hankel, self.oversample
        )
        cfg = self.config
        # the separation guard exists to bound noise amplification
        # (~ noise / gap^2), so its width scales with the noise level;
        # cfg.separation_tol is calibrated at 1e-9 relative noise
        sep = cfg.separation_tol * (max(cfg.noise, 1e-15) / 1e-9) ** 0.5
        sep = min(max(sep, 1e-9), cfg.separation_tol)
        return projections_from_moments(
            ms, n_for_hankel, cfg.rank_tol, cfg.real_tol, cfg.cluster_tol,
            sep, self.oversample,
        )

    def poly_at(self, coords, n_for_hankel) -> PronyPolynomial:
        ms = sequence_from_oracle(
            self.oracle, coords, n_for_hankel, self.oversample
        )
        return prony_polynomial_from_sequence(
            ms, n_for_hankel, self.config.rank_tol, self.oversample
        )

    def acquire_first(self):
        # IrrationalRoot counts as a bad direction here: a cone pole can
        # leave a confluent kernel polynomial with irrational roots even
        # for a rational polytope
        last_error = None
        for _ in range(self.config.direction_retries):
            coords = self.sample_direction()
            try:
                proj = self.projections_at(coords, self.nmax)
                return coords, proj
            except (NonGenericDirection, DenominatorVanishes,
                    IrrationalRoot) as exc:
                last_error = exc
                self.prov.retries += 1
        raise RankInstability(
            f"no usable first direction after {self.config.direction_retries} "
            f"retries; last error: {last_error}"
        )

    def acquire_direction(self, existing, n_expected):
        """A fresh direction, linearly independent of ``existing``, whose
        Prony solve reports ``n_expected`` vertices.

        A full-rank Hankel at the expected size means an earlier direction
        undercounted (silent projection collision); the same direction is
        re-probed at nmax and, if it reveals more vertices, returned so the
        caller can restart from it.
        """
        from .errors import FullRankHankel

        last_error = None
        for _ in range(self.config.direction_retries):
            coords = self.sample_direction()
            if not _independent(list(existing) + [coords], self.config.mode):
                self.prov.retries += 1
                continue
            try:
                proj = self.projections_at(coords, n_expected)
            except FullRankHankel as exc:
                last_error = exc
                self.prov.retries += 1
                if n_expected < self.nmax:
                    try:
                        proj = self.projections_at(coords, self.nmax)
                    except (NonGenericDirection, DenominatorVanishes,
                            IrrationalRoot):
                        continue
                    if proj.n > n_expected:
                        return coords, proj
                continue
            except (NonGenericDirection, DenominatorVanishes,
                    IrrationalRoot) as exc:
                last_error = exc
                self.prov.retries += 1
                continue
            if proj.n != n_expected:
                self.prov.retries += 1
                continue
            return coords, proj
        raise RankInstability(
            f"no usable direction after {self.config.direction_retries} retries; "
            f"last error: {last_error}"
        )


def _inferred_polytope(dim, vertices, simplices=None) -> Polytope | None:
    p = Polytope(dim=dim, vertices=tuple(vertices), simplices=simplices)
    try:
        triangulation_of(p)
    except InputError:
        return None
    return p


def _projection_residual(pipeline: _Pipeline, vertices, coords):
    """Triangulation-free consistency check on a held-out direction.

    Recovers the direction's projections from fresh moments through the
    normal Hankel solve and compares them with the projections predicted
    from the reconstructed vertices. Returns a relative residual, or None
    when the direction is unusable."""
    n = len(vertices)
    try:
        ps = pipeline.projections_at(coords, n)
    except (NonGenericDirection, DenominatorVanishes, IrrationalRoot):
        return None
    if ps.n != n:
        # the held-out direction itself misbehaved; try another one
        return None
    predicted = sorted(
        sum(a * b for a, b in zip(v, coords)) for v in vertices
    )
    if len(set(predicted)) != n:
        return None
    if pipeline.config.mode == EXACT:
        return 0.0 if list(ps.values) == predicted else 1.0
    spread = 1.0 + float(predicted[-1]) - float(predicted[0])
    return max(
        abs(float(a) - float(b)) for a, b in zip(predicted, ps.values)
    ) / spread


def _self_check(pipeline: _Pipeline, vertices, simplices=None):
    """Verify the reconstruction against the oracle on one held-out
    direction: forward integration when a triangulation of the result is
    available, the Hankel annihilation property otherwise."""
    oracle = pipeline.oracle
    prov = pipeline.prov
    recon = _inferred_polytope(oracle.dim, vertices, simplices)
    count = 2 * len(vertices) + 1 - oracle.dim
    before = oracle.unique_count
    # good reconstructions sit many orders below bad ones on either
    # statistic; the threshold splits the gap
    tol = max(1e-6, 1e3 * pipeline.config.noise)
    for _ in range(pipeline.config.direction_retries):
        coords = pipeline.sample_direction()
        if recon is None:
            residual = _projection_residual(pipeline, vertices, coords)
            if residual is None:
                continue
            prov.self_check_residual = residual
            if (residual != 0.0) if pipeline.config.mode == EXACT else (
                residual > tol
            ):
                raise OracleDisagreement(
                    f"self-check residual {residual:.3e} above {tol:.1e}: "
                    "the reconstruction is inconsistent with the moments"
                )
            break
        try:
            ours = axial_moments_direct(
                recon, coords, count, getattr(oracle, "density", None)
            )
        except (DenominatorVanishes, InputError):
            continue
        theirs = [oracle.moment(coords, j) for j in range(count)]
        if pipeline.config.mode == EXACT:
            if list(ours) != list(theirs):
                raise OracleDisagreement(
                    "self-check failed: reconstructed moments differ from oracle"
                )
            prov.self_check_residual = 0.0
        else:
            residual = max(
                abs(float(a) - float(b)) / max(1.0, abs(float(b)))
                for a, b in zip(ours, theirs)
            )
            prov.self_check_residual = residual
            if residual > tol:
                raise OracleDisagreement(
                    f"self-check residual {residual:.3e} above {tol:.1e}: "
                    "the reconstruction is inconsistent with the moments "
                    "(a vertex may sit below the rank threshold)"
                )
        break
    else:
        warnings.warn(
            "self-check inconclusive: no usable held-out direction",
            stacklevel=2,
        )
    prov.self_check_moments = oracle.unique_count - before


def _sorted_vertex_tuple(vertices):
    return tuple(sorted(tuple(v) for v in vertices))


def reconstruct(
    oracle,
    nmax: int,
    config: RunConfig | None = None,
    rng=None,
    self_check: bool = False,
    self_check_simplices=None,
) -> VertexSet:
    """Recover the full vertex set from the moment oracle.

    Uses d base directions plus d-1 combined directions (2d-1 in total).
    ``nmax`` is an upper bound on the vertex count; the actual N is read off
    the Hankel rank of the first direction.
    """
    pipe = _Pipeline(oracle, nmax, config, rng)
    d = oracle.dim
    prov = pipe.prov
    mult = oracle.density_degree + 1

    z1, proj1 = pipe.acquire_first()
    n = proj1.n
    base = [(z1, proj1)]
    while len(base) < d:
        coords, proj = pipe.acquire_direction([b[0] for b in base], n)
        if proj.n > n:
            # the earlier directions undercounted: restart from this one
            base = [(coords, proj)]
            n = proj.n
            prov.retries += 1
            continue
        base.append((coords, proj))

    prov.directions = [b[0] for b in base]
    prov.ranks = [b[1].rank for b in base]
    x1 = base[0][1].values
    max_trials = pipe.config.beta_trials or n**3 + 1

    matched = []
    for i in range(1, d):
        entry = base[i]
        for _ in range(pipe.config.direction_retries):
            zi, proj_i = entry

            def poly_for_beta(beta, _zi=zi):
                coords = tuple(a + beta * b for a, b in zip(z1, _zi))
                pz = pipe.poly_at(coords, n)
                if pz.degree != mult * n:
                    raise RankInstability(
                        f"combined direction rank {pz.degree} != {mult * n}"
                    )
                return pz

            try:
                beta, pairing, failures = choose_beta(
                    x1,
                    proj_i.values,
                    poly_for_beta,
                    max_trials,
                    pipe.config.mode,
                    pipe.rng,
                    pipe.config.match_tol,
                )
                prov.retries += failures
                matched.append((zi, proj_i.values, beta, pairing))
                break
            except MatchingFailure:
                prov.retries += max_trials
                entry = pipe.acquire_direction(
                    [z1] + [m[0] for m in matched], n
                )
        else:
            raise MatchingFailure(
                f"matching failed for direction {i} after retries"
            )

    prov.betas = [m[2] for m in matched]
    prov.directions = [z1] + [m[0] for m in matched]

    rows = [z1] + [m[0] for m in matched]
    tuples = []
    for idx in range(n):
        t = [x1[idx]]
        for _, xi, _, pairing in matched:
            t.append(xi[pairing[idx]])
        tuples.append(tuple(t))
    verts = assemble_vertices(rows, tuples, pipe.config.mode)
    if len(set(map(tuple, verts))) != n:
        raise RankInstability("reconstructed vertices are not distinct")
    prov.moment_count = oracle.unique_count

    if self_check:
        _self_check(pipe, verts, self_check_simplices)

    return VertexSet(dim=d, vertices=_sorted_vertex_tuple(verts), provenance=prov)


def _alpha_sequence(dim, mode, rng):
    """Coefficient tuples (1, q, q^2, ...) for the d+1-direction variant."""
    if mode == EXACT:
        q = 0
        while True:
            q += 1
            yield tuple(Fraction(q) ** k for k in range(dim))
    else:
        while True:
            yield tuple(
                1.0 if k == 0 else rng.randint(1, 499) / rng.randint(1, 31)
                for k in range(dim)
            )


FRUGAL_GUARD = 10**6


def match_frugal_d_plus_1(
    oracle,
    nmax: int,
    config: RunConfig | None = None,
    rng=None,
) -> VertexSet:
    """Reconstruction from only d+1 directions in general position.

    All N^d candidate index tuples are tested against the Prony polynomial
    of a single combined direction sum_j alpha_j z_j; with generic alphas
    exactly the true vertex tuples survive.
    """
    pipe = _Pipeline(oracle, nmax, config, rng)
    d = oracle.dim
    prov = pipe.prov
    mult = oracle.density_degree + 1

    z1, proj1 = pipe.acquire_first()
    n = proj1.n
    base = [(z1, proj1)]
    while len(base) < d:
        coords, proj = pipe.acquire_direction([b[0] for b in base], n)
        if proj.n > n:
            base = [(coords, proj)]
            n = proj.n
            prov.retries += 1
            continue
        base.append((coords, proj))
    if comb(n, d) > FRUGAL_GUARD or n**d > 4 * FRUGAL_GUARD:
        raise InputError(
            f"candidate tuple count C({n},{d}) exceeds the guard {FRUGAL_GUARD}"
        )

    prov.directions = [b[0] for b in base]
    prov.ranks = [b[1].rank for b in base]
    values = [b[1].values for b in base]
    max_trials = pipe.config.beta_trials or n**3 + 1

    accepted = None
    trials = 0
    for alphas in _alpha_sequence(d, pipe.config.mode, pipe.rng):
        if trials >= max_trials:
            break
        trials += 1
        coords = tuple(
            sum((a * z[t] for a, z in zip(alphas, prov.directions)),
                0 if pipe.config.mode == FLOAT else Fraction(0))
            for t in range(d)
        )
        try:
            pz = pipe.poly_at(coords, n)
            if pz.degree != mult * n:
                raise RankInstability("combined direction rank deficient")
        except (NonGenericDirection, DenominatorVanishes):
            prov.retries += 1
            continue
        hits = []
        for combo in itertools.product(range(n), repeat=d):
            s = sum(
                (a * vals[k] for a, vals, k in zip(alphas, values, combo)),
                0 if pipe.config.mode == FLOAT else Fraction(0),
            )
            val = pz.eval(s)
            ok = (val == 0) if pipe.config.mode == EXACT else (
                abs(val) < pipe.config.match_tol
            )
            if ok:
                hits.append(combo)
        counts_ok = len(hits) == n and all(
            sorted(h[j] for h in hits) == list(range(n)) for j in range(d)
        )
        if counts_ok:
            accepted = hits
            prov.betas = [list(alphas)]
            break
        prov.retries += 1
    if accepted is None:
        raise MatchingFailure(
            f"frugal matching found no consistent tuple set in {trials} trials"
        )

    rows = list(prov.directions)
    tuples = [tuple(values[j][combo[j]] for j in range(d)) for combo in accepted]
    verts = assemble_vertices(rows, tuples, pipe.config.mode)
    if len(set(map(tuple, verts))) != n:
        raise RankInstability("reconstructed vertices are not distinct")
    prov.moment_count = oracle.unique_count
    return VertexSet(dim=d, vertices=_sorted_vertex_tuple(verts), provenance=prov)


def _derive_beta(z, z1, zi, mode):
    """beta with z = z1 + beta * zi, or None."""
    beta = None
    for t in range(len(z)):
        if zi[t] != 0:
            beta = (z[t] - z1[t]) / zi[t]
            break
    if beta is None:
        return None
    for a, b, c in zip(z, z1, zi):
        lhs, rhs = a, b + beta * c
        if mode == EXACT:
            if lhs != rhs:
                return None
        elif abs(float(lhs) - float(rhs)) > 1e-9 * max(1.0, abs(float(lhs))):
            return None
    return beta


def reconstruct_from_sequences(
    sequences, nmax: int, config: RunConfig | None = None
) -> VertexSet:
    """Reconstruction from pre-baked per-direction moment sequences.

    The first d linearly independent stated directions become the base;
    every remaining sequence must be a combined direction z_1 + beta z_i
    for some base index i, from which the matching proceeds exactly as in
    the adaptive pipeline.
    """
    from .moments import SequenceMomentOracle

    oracle = SequenceMomentOracle(sequences)
    d = oracle.dim
    config = (config or RunConfig(mode=oracle.mode)).validate(nmax)
    if config.mode != oracle.mode:
        raise InputError(f"config mode {config.mode} != file mode {oracle.mode}")
    mult = oracle.density_degree + 1
    prov = Provenance()

    base = []
    combined = []
    for coords in oracle.directions:
        if len(base) < d and _independent([b for b in base] + [coords], config.mode):
            base.append(coords)
        else:
            combined.append(coords)
    if len(base) < d:
        raise InputError(
            f"moment files supply only {len(base)} independent directions, need {d}"
        )

    def projections_at(coords, n_for_hankel):
        ms = sequence_from_oracle(oracle, coords, n_for_hankel)
        return projections_from_moments(
            ms, n_for_hankel, config.rank_tol, config.real_tol, config.cluster_tol
        )

    projs = [projections_at(coords, nmax) for coords in base]
    counts = {p.n for p in projs}
    if len(counts) != 1:
        raise RankInstability(
            f"directions disagree on the vertex count: {sorted(counts)}"
        )
    n = counts.pop()
    prov.directions = list(base)
    prov.ranks = [p.rank for p in projs]
    x1 = projs[0].values

    matched = []
    for i in range(1, d):
        zi = base[i]
        pairing = None
        last_error = None
        for coords in combined:
            beta = _derive_beta(coords, base[0], zi, config.mode)
            if beta is None:
                continue
            try:
                ms = sequence_from_oracle(oracle, coords, n)
                pz = prony_polynomial_from_sequence(ms, n, config.rank_tol)
                if pz.degree != mult * n:
                    raise RankInstability("combined direction rank deficient")
                pairing = match_projections(
                    x1, projs[i].values, beta, pz, config.mode, config.match_tol
                )
                matched.append((zi, projs[i].values, beta, pairing))
                break
            except (NonGenericDirection, AmbiguousMatching, DenominatorVanishes) as exc:
                last_error = exc
                prov.retries += 1
        if pairing is None:
            raise MatchingFailure(
                f"no supplied combined direction matches base direction {i}"
                + (f"; last error: {last_error}" if last_error else "")
            )

    prov.betas = [m[2] for m in matched]
    rows = [base[0]] + [m[0] for m in matched]
    tuples = []
    for idx in range(n):
        t = [x1[idx]]
        for _, xi, _, pairing in matched:
            t.append(xi[pairing[idx]])
        tuples.append(tuple(t))
    verts = assemble_vertices(rows, tuples, config.mode)
    if len(set(map(tuple, verts))) != n:
        raise RankInstability("reconstructed vertices are not distinct")
    prov.moment_count = oracle.unique_count
    return VertexSet(dim=d, vertices=_sorted_vertex_tuple(verts), provenance=prov)


def reconstruction_error(truth: Polytope, result: VertexSet):
    """Max per-coordinate deviation under the nearest-vertex bijection.

    Exact recovery reports 0; a vertex-count mismatch or a non-bijective
    nearest-neighbor assignment reports infinity.
    """
    a = [tuple(float(x) for x in v) for v in truth.vertices]
    b = [tuple(float(x) for x in v) for v in result.vertices]
    if len(a) != len(b):
        return float("inf")
    used = set()
    worst = 0.0
    for vb in b:
        dists = [max(abs(xa - xb) for xa, xb in zip(va, vb)) for va in a]
        best = min(range(len(a)), key=lambda i: dists[i])
        if best in used:
            return float("inf")
        used.add(best)
        worst = max(worst, dists[best])
    return worst
