"""Hankel-kernel (Prony) recovery of vertex projections from scaled moments.

Steps 1-3 of the reconstruction algorithm: build the square Hankel matrix
from the scaled moment vector, find its rank and the minimal kernel vector,
and read the projections off the roots of the resulting monic polynomial.
With a polynomial density of degree D, every projection appears as a root
of multiplicity D+1 and the rank is (D+1) N.

Exact mode uses fraction-free elimination and certified rational root
extraction; float mode uses SVD rank detection with a relative threshold
and companion-matrix eigenvalues with root clustering.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg
from .errors import (
    FullRankHankel,
    InsufficientMoments,
    IrrationalRoot,
    MultiplicityMismatch,
    RankInstability,
    RankNotDivisible,
)
from .moments import MomentSequence, scaled_moment_vector
from .numeric import EXACT, FLOAT

DEFAULT_RANK_TOL = 1e-8
DEFAULT_REAL_TOL = 1e-7
DEFAULT_CLUSTER_TOL = 1e-6
# float-mode guard: projections closer than this fraction of the spread are
# treated as a collision (the direction is resampled)
DEFAULT_SEPARATION_TOL = 5e-2


@dataclass(frozen=True)
class HankelSystem:
    """The m x m Hankel matrix H[i][j] = c_{i+j+1} over exact rationals or
    floats."""

    m: int
    rows: tuple
    mode: str

    def leading(self, size: int) -> "HankelSystem":
        rows = tuple(row[:size] for row in self.rows[:size])
        return HankelSystem(m=size, rows=rows, mode=self.mode)


def build_hankel(c, m: int) -> HankelSystem:
    """H[i][j] = c_{i+j+1} (c given as the list c_1, c_2, ...)."""
    if len(c) < 2 * m - 1:
        raise InsufficientMoments(f"need {2 * m - 1} scaled entries, have {len(c)}")
    mode = FLOAT if any(isinstance(x, float) for x in c[: 2 * m - 1]) else EXACT
    rows = tuple(tuple(c[i + j] for j in range(m)) for i in range(m))
    return HankelSystem(m=m, rows=rows, mode=mode)


def _svd_rank(rows, rank_tol):
    a = np.array(rows, dtype=float)
    sigma = np.linalg.svd(a, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0, sigma
    return int(np.sum(sigma > rank_tol * sigma[0])), sigma


def rank_and_kernel(h: HankelSystem, rank_tol: float = DEFAULT_RANK_TOL):
    """Rank and a kernel basis.

    Exact: fraction-free Gaussian elimination; the basis vectors satisfy
    H v = 0 exactly. Float: singular values above rank_tol * sigma_max
    count toward the rank, and the trailing right singular vectors span
    the kernel.
    """
    if h.mode == EXACT:
        rank = linalg.rank_exact([list(r) for r in h.rows])
        basis = linalg.kernel_basis([list(r) for r in h.rows])
        return rank, basis
    a = np.array(h.rows, dtype=float)
    rank, _ = _svd_rank(h.rows, rank_tol)
    _, _, vh = np.linalg.svd(a)
    return rank, [vh[i] for i in range(rank, h.m)]


@dataclass(frozen=True)
class PronyPolynomial:
    """Monic polynomial t^M + a_{M-1} t^{M-1} + ... + a_0 from the minimal
    kernel vector.

    ``scale`` records the float-mode node rescaling: the stored coefficients
    are those of the polynomial in t/scale, so ``eval`` and ``roots_float``
    transparently work in original coordinates.
    """

    coeffs: tuple
    multiplicity: int = 1
    scale: object = 1

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def full_coeffs(self):
        """Lowest-first coefficient list including the leading 1."""
        return list(self.coeffs) + [_one_like(self.coeffs)]

    def eval(self, t):
        x = t / self.scale if self.scale != 1 else t
        total = _one_like(self.coeffs)
        for a in reversed(self.coeffs):
            total = total * x + a
        return total


def _one_like(coeffs):
    if any(isinstance(a, float) for a in coeffs):
        return 1.0
    return Fraction(1)


def minimal_kernel_vector(
    h: HankelSystem, rank_tol: float = DEFAULT_RANK_TOL, multiplicity: int = 1,
    scale=1,
) -> PronyPolynomial:
    """The unique kernel vector (a_0, ..., a_{M-1}, 1, 0, ..., 0) with
    minimal M; M equals the rank for moment data from a polytope."""
    if h.mode == EXACT:
        ech = linalg.bareiss_echelon([list(r) for r in h.rows])
        rank = ech.rank
        if rank == h.m:
            raise FullRankHankel(
                f"Hankel matrix of size {h.m} has full rank; request more moments"
            )
        free = next(col for col in range(h.m) if col not in ech.pivots)
        if free != rank:
            raise RankInstability(
                f"minimal kernel vector at position {free} but rank {rank}"
            )
        v = linalg.kernel_vector_for_column(ech, free)
        return PronyPolynomial(
            coeffs=tuple(v[:free]), multiplicity=multiplicity, scale=scale
        )
    rank, _ = _svd_rank(h.rows, rank_tol)
    if rank == h.m:
        raise FullRankHankel(
            f"Hankel matrix of size {h.m} has full numerical rank; "
            "request more moments"
        )
    a = np.array(h.rows, dtype=float)
    _, _, vh = np.linalg.svd(a)
    null_basis = vh[rank:].T  # columns span the numerical kernel
    # combine kernel vectors into the shape (a_0..a_{rank-1}, 1, 0, ..., 0):
    # constrain entries rank..m-1 to the pattern (1, 0, ..., 0)
    pattern = np.zeros(h.m - rank)
    pattern[0] = 1.0
    sol, *_ = np.linalg.lstsq(null_basis[rank:, :], pattern, rcond=None)
    v = null_basis @ sol
    if abs(v[rank]) < 1e-10:
        raise RankInstability(
            "float kernel vector has a vanishing monic coefficient"
        )
    v = v / v[rank]
    return PronyPolynomial(
        coeffs=tuple(float(x) for x in v[:rank]),
        multiplicity=multiplicity,
        scale=scale,
    )


# ---------------------------------------------------------------------------
# univariate polynomial helpers (lowest-first rational coefficient lists)


def poly_eval(coeffs, x):
    total = 0
    for a in reversed(coeffs):
        total = total * x + a
    return total


def poly_derivative(coeffs):
    return [k * coeffs[k] for k in range(1, len(coeffs))]


def _poly_trim(coeffs):
    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    return c


def poly_divmod(num, den):
    """Exact polynomial division over the rationals."""
    num = [Fraction(x) for x in num]
    den = _poly_trim([Fraction(x) for x in den])
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(0, len(num) - len(den) + 1)
    r = list(num)
    dn = len(den) - 1
    lead = den[-1]
    for k in range(len(r) - 1 - dn, -1, -1):
        coef = r[k + dn] / lead
        if coef == 0:
            continue
        q[k] = coef
        for i, dcoef in enumerate(den):
            r[k + i] -= coef * dcoef
    return q, _poly_trim(r)


def poly_gcd(a, b):
    """Monic gcd over the rationals (Euclid with monic normalization)."""
    a = _poly_trim([Fraction(x) for x in a])
    b = _poly_trim([Fraction(x) for x in b])
    while b:
        _, r = poly_divmod(a, b)
        a, b = b, _poly_trim(r)
    if not a:
        return []
    lead = a[-1]
    return [x / lead for x in a]


def poly_nth_root(coeffs, n: int):
    """Exact n-th root of a monic rational polynomial, or None.

    Works through the reversed power series: if q = root exists, the
    series identity A' B = n A B' determines it coefficient by
    coefficient; the result is verified by re-powering.
    """
    c = _poly_trim([Fraction(x) for x in coeffs])
    if not c or c[-1] != 1:
        return None
    deg = len(c) - 1
    if deg % n:
        return None
    half = deg // n
    a = list(reversed(c))  # a[0] = 1: the reversed series
    b = [Fraction(0)] * (half + 1)
    b[0] = Fraction(1)
    for k in range(1, half + 1):
        s = k * a[k] if k < len(a) else Fraction(0)
        for i in range(1, k):
            ai = a[i] if i < len(a) else Fraction(0)
            s += i * ai * b[k - i] - n * i * b[i] * a[k - i]
        b[k] = s / (n * k)
    root = list(reversed(b))  # monic, degree half
    # verify
    check = [Fraction(1)]
    for _ in range(n):
        check = _poly_mul(check, root)
    if _poly_trim(check) != c:
        return None
    return root


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


_PROBE_DIGITS = (1, 3, 6, 9, 12, 15, 18, 24, 30, 38, 45)


def _newton_rational_root(coeffs, dcoeffs, seed, max_iter=48):
    """Polish a float seed to an exact rational root, or None.

    Newton iteration in exact rational arithmetic with denominator capping;
    candidate roots are probed via continued-fraction rounding and verified
    by exact evaluation.
    """
    x = Fraction(seed).limit_denominator(10**17)
    for _ in range(max_iter):
        for digits in _PROBE_DIGITS:
            cand = x.limit_denominator(10**digits)
            if poly_eval(coeffs, cand) == 0:
                return cand
        fx = poly_eval(coeffs, x)
        if fx == 0:
            return x
        dfx = poly_eval(dcoeffs, x)
        if dfx == 0:
            return None
        x = (x - fx / dfx).limit_denominator(10**100)
    return None


def _float_root_seeds(coeffs):
    """Approximate roots of a rational polynomial, as floats."""
    c = _poly_trim(coeffs)
    if len(c) <= 1:
        return []
    mx = max(abs(x) for x in c)
    arr = np.array([float(x / mx) for x in reversed(c)], dtype=float)
    return [complex(r) for r in np.roots(arr)]


def _rational_roots_squarefree(coeffs):
    """All rational roots of a squarefree rational polynomial.

    Each confirmed root is deflated exactly and the remaining polynomial is
    re-seeded, so clustered roots cannot shadow each other in the float
    seeding stage.
    """
    roots = set()
    work = [Fraction(x) for x in coeffs]
    while len(work) > 1:
        dwork = poly_derivative(work)
        found = None
        for seed in _float_root_seeds(work):
            if abs(seed.imag) > 0.5:
                continue
            r = _newton_rational_root(work, dwork, seed.real)
            if r is not None and r not in roots:
                q, rem = poly_divmod(work, [-r, Fraction(1)])
                if not rem:
                    found = r
                    work = q
                    break
        if found is None:
            break
        roots.add(found)
    return roots


def roots_exact(p: PronyPolynomial) -> dict:
    """Rational roots with multiplicities; raises IrrationalRoot unless the
    multiplicities sum to the degree."""
    if p.scale != 1:
        raise IrrationalRoot("exact root extraction on a float-scaled polynomial")
    full = [Fraction(a) for a in p.full_coeffs()]
    degree = len(full) - 1
    if degree == 0:
        return {}
    # zero roots come off as a power of t
    k0 = 0
    while full[k0] == 0:
        k0 += 1
    work = full[k0:]
    result = {}
    if k0:
        result[Fraction(0)] = k0
    if len(work) > 1:
        candidates = None
        if p.multiplicity > 1 and (len(work) - 1) % p.multiplicity == 0:
            root_poly = poly_nth_root(work, p.multiplicity)
            if root_poly is not None:
                candidates = _rational_roots_squarefree(root_poly)
        if candidates is None:
            sf, _ = poly_divmod(work, poly_gcd(work, poly_derivative(work)))
            candidates = _rational_roots_squarefree(sf)
        # exact deflation gives the certified multiplicity of each root
        for root in candidates:
            mult = 0
            current = work
            while True:
                q, r = poly_divmod(current, [-root, Fraction(1)])
                if r:
                    break
                mult += 1
                current = q
            if mult:
                result[root] = mult
    total = sum(result.values())
    if total != degree:
        raise IrrationalRoot(
            f"found rational roots of total multiplicity {total} < degree {degree}"
        )
    return result


def roots_float(
    p: PronyPolynomial,
    real_tol: float = DEFAULT_REAL_TOL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
):
    """Real roots with multiplicities via companion-matrix eigenvalues.

    Roots with |imag| <= real_tol are kept; nearby roots merge into one
    cluster whose multiplicity is the cluster size. Large residuals attach
    a warning, not an error.
    """
    if p.degree == 0:
        return []
    arr = np.array([1.0] + [float(a) for a in reversed(p.coeffs)], dtype=float)
    raw = np.roots(arr)
    real = sorted(r.real for r in raw if abs(r.imag) <= real_tol)
    if not real:
        return []
    span = cluster_tol * (1.0 + max(abs(r) for r in real))
    clusters = []
    for r in real:
        if clusters and r - clusters[-1][-1] <= span:
            clusters[-1].append(r)
        else:
            clusters.append([r])
    scale = float(p.scale)
    full = [float(a) for a in p.coeffs] + [1.0]
    dfull = poly_derivative(full)
    out = []
    for group in clusters:
        center = sum(group) / len(group)
        if len(group) == 1:
            # simple roots take a cheap Newton polish
            for _ in range(2):
                dp = poly_eval(dfull, center)
                if dp == 0.0:
                    break
                center -= poly_eval(full, center) / dp
        out.append((float(center * scale), len(group)))
    residual = max(abs(p.eval(root)) for root, _ in out)
    if residual > 1e-5:
        warnings.warn(
            f"large root residual {residual:.3e} in float root extraction",
            stacklevel=2,
        )
    return out


@dataclass(frozen=True)
class ProjectionSet:
    """Recovered projections <v, z> for one direction."""

    direction: tuple
    values: tuple
    n: int
    poly: PronyPolynomial = field(compare=False)
    rank: int = field(compare=False, default=0)


def _refine_nodes_float(c, nodes, iterations=6):
    """Gauss-Newton refinement of Prony nodes against the scaled moments.

    Fits c_k ~ sum_v w_v x_v^k jointly in (w, x) under relative weighting
    (the measurement noise is multiplicative); a few iterations push the
    node error down to the noise floor. Uniform-density model only.
    """
    x = np.array(nodes, dtype=float)
    cvec = np.array([float(v) for v in c], dtype=float)
    k = np.arange(len(cvec))
    n = len(x)
    floor = 1e-6 * max(1.0, np.max(np.abs(cvec)))
    weights = 1.0 / np.maximum(np.abs(cvec), floor)

    def residual_norm(xs):
        powers = xs[None, :] ** k[:, None]
        w, *_ = np.linalg.lstsq(weights[:, None] * powers, weights * cvec,
                                rcond=None)
        return w, np.linalg.norm(weights * (powers @ w - cvec))

    w, best = residual_norm(x)
    for _ in range(iterations):
        powers = x[None, :] ** k[:, None]  # (K+1, n)
        resid = powers @ w - cvec
        dpow = np.zeros_like(powers)
        dpow[1:, :] = k[1:, None] * x[None, :] ** (k[1:, None] - 1)
        jac = np.hstack([powers, dpow * w[None, :]])
        try:
            step, *_ = np.linalg.lstsq(weights[:, None] * jac,
                                       -weights * resid, rcond=None)
        except np.linalg.LinAlgError:
            break
        x_new = x + step[n:]
        if not np.all(np.isfinite(x_new)):
            break
        w_new, norm_new = residual_norm(x_new)
        if norm_new <= best:
            x, w, best = x_new, w_new, norm_new
        else:
            break
        if np.linalg.norm(step[n:]) < 1e-15:
            break
    return [float(v) for v in x]


def _estimate_scale(c):
    """Node-magnitude estimate from consecutive scaled-moment ratios, used
    to balance the float Hankel matrix before SVD."""
    ratios = []
    for a, b in zip(c, c[1:]):
        if a != 0 and b != 0:
            ratios.append(abs(float(b) / float(a)))
    if not ratios:
        return 1.0
    s = max(ratios[len(ratios) // 2 :])
    if 0.95 <= s <= 1.05:
        return 1.0
    return min(max(s, 1e-9), 1e9)


def hankel_size(nmax: int, density_degree: int, oversample: int = 0) -> int:
    return (density_degree + 1) * nmax + 1 + oversample


def moments_needed(dim: int, nmax: int, density_degree: int,
                   oversample: int = 0) -> int:
    """Moment count one Hankel solve consumes (the leading d + deg scaled
    entries are structural zeros, not measurements)."""
    m = hankel_size(nmax, density_degree, oversample)
    return 2 * m - 1 - (dim + density_degree)


def prony_polynomial_from_sequence(
    ms: MomentSequence,
    nmax: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    oversample: int = 0,
) -> PronyPolynomial:
    """Hankel rank detection plus the minimal kernel vector, without root
    extraction (enough for cross-direction matching).

    Raises FullRankHankel when nmax is too small, RankInstability when the
    rank differs between sizes m-1 and m, RankNotDivisible when the rank is
    incompatible with the density degree.
    """
    mult = ms.density_degree + 1
    m = hankel_size(nmax, ms.density_degree, oversample)
    need = 2 * m - 1 - (ms.dim + ms.density_degree)
    if len(ms.moments) < need:
        raise InsufficientMoments(
            f"need {need} moments for nmax={nmax} (m={m}), have {len(ms.moments)}"
        )
    c = list(scaled_moment_vector(ms, 2 * m - 2).c)
    scale = 1
    if ms.mode == FLOAT:
        scale = _estimate_scale(c)
        if scale != 1:
            acc = 1.0
            for k in range(1, len(c)):
                acc *= scale
                c[k] = c[k] / acc
    h = build_hankel(c, m)
    prev = h.leading(m - 1)
    if h.mode == EXACT:
        rank_m = linalg.rank_exact([list(r) for r in h.rows])
        rank_prev = linalg.rank_exact([list(r) for r in prev.rows])
    else:
        rank_m, _ = _svd_rank(h.rows, rank_tol)
        rank_prev, _ = _svd_rank(prev.rows, rank_tol)
    if rank_m == m:
        raise FullRankHankel(
            f"Hankel rank {rank_m} is full at m={m}; nmax={nmax} too small"
        )
    if rank_m != rank_prev:
        raise RankInstability(
            f"rank {rank_prev} at m={m - 1} but {rank_m} at m={m}; "
            "direction suspect or nmax too small"
        )
    if rank_m % mult:
        raise RankNotDivisible(
            f"rank {rank_m} not divisible by multiplicity {mult}"
        )
    poly = minimal_kernel_vector(h, rank_tol, multiplicity=mult, scale=scale)
    if poly.degree != rank_m:
        raise RankInstability(
            f"minimal kernel vector degree {poly.degree} != rank {rank_m}"
        )
    return poly


def projections_from_moments(
    ms: MomentSequence,
    nmax: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    real_tol: float = DEFAULT_REAL_TOL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
    separation_tol: float = DEFAULT_SEPARATION_TOL,
    oversample: int = 0,
) -> ProjectionSet:
    """Projections of the vertex set onto ms.direction.

    The number of vertices is recovered as rank/(density_degree + 1); every
    root of the minimal kernel polynomial must carry multiplicity exactly
    density_degree + 1. In float mode, projections separated by less than
    ``separation_tol`` of the spread are intrinsically ill-conditioned and
    reported as a collision so the caller can resample.
    """
    mult = ms.density_degree + 1
    poly = prony_polynomial_from_sequence(ms, nmax, rank_tol, oversample)
    rank = poly.degree
    if ms.mode == EXACT:
        root_map = roots_exact(poly)
        bad = {r: k for r, k in root_map.items() if k != mult}
        if bad:
            raise MultiplicityMismatch(
                f"roots with multiplicity != {mult}: {bad}; direction not generic"
            )
        values = tuple(sorted(root_map))
    else:
        # triple and higher roots splay under noise; widen the cluster window
        eff_cluster = cluster_tol if mult == 1 else max(cluster_tol, 10 ** (-12 / mult))
        clusters = roots_float(poly, real_tol, eff_cluster)
        bad = [(r, k) for r, k in clusters if k != mult]
        if bad:
            raise MultiplicityMismatch(
                f"root clusters with size != {mult}: {bad}; direction not generic"
            )
        values = tuple(sorted(r for r, _ in clusters))
        if mult == 1 and len(values) == rank:
            # polish the nodes against the data (normalized coordinates)
            m = hankel_size(nmax, 0, oversample)
            c = list(scaled_moment_vector(ms, 2 * m - 2).c)
            s = float(poly.scale)
            if s != 1.0:
                acc = 1.0
                for kk in range(1, len(c)):
                    acc *= s
                    c[kk] = c[kk] / acc
            refined = _refine_nodes_float(c, [v / s for v in values])
            values = tuple(sorted(float(r * s) for r in refined))
        if len(values) >= 2:
            spread = 1.0 + values[-1] - values[0]
            gap = min(b - a for a, b in zip(values, values[1:]))
            if gap < separation_tol * spread:
                raise MultiplicityMismatch(
                    f"projections nearly collide (gap {gap:.3e}); resample"
                )
    n = rank // mult
    if len(values) != n:
        raise MultiplicityMismatch(
            f"{len(values)} distinct projections but rank/{mult} = {n}"
        )
    return ProjectionSet(
        direction=ms.direction, values=values, n=n, poly=poly, rank=rank
    )
