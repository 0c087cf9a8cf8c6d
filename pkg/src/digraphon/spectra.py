"""Complex spectra with algebraic multiplicities, and Hausdorff diagnostics.

Eigenvalues come from LAPACK's dense non-symmetric solver (balancing, then
Hessenberg reduction, then implicitly shifted QR with deflation); conjugate
symmetry of real-matrix spectra is re-enforced exactly on top of it. Floating
eigenvalue lists are turned into (value, multiplicity) pairs by single-linkage
clustering at an explicit tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .digraph import Digraph
from .errors import IsolationError, NumericalError
from .stepkernel import StepKernel


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Multiset of complex eigenvalues as (value, multiplicity) pairs.

    includes_zero_spectral_point records whether 0 belongs to the spectrum
    even when it is not listed among the points (for integral operators it
    always does; for a finite digraph it does only when 0 is an eigenvalue).
    """

    points: tuple[tuple[complex, int], ...]
    includes_zero_spectral_point: bool = False

    def __post_init__(self):
        pts = tuple((complex(v), int(m)) for v, m in self.points)
        if any(m < 1 for _, m in pts):
            raise ValueError("multiplicities must be positive")
        object.__setattr__(self, "points", pts)

    def point_set(self, include_zero: bool | None = None) -> np.ndarray:
        """Distinct spectral points as a complex array (optionally forcing 0 in)."""
        vals = [v for v, _ in self.points]
        if include_zero is None:
            include_zero = self.includes_zero_spectral_point
        if include_zero and not any(v == 0 for v in vals):
            vals.append(0j)
        return np.asarray(vals, dtype=np.complex128)

    def power_sum(self, ell: int) -> complex:
        """Sum of mult * value^ell over the listed points."""
        return sum(m * v**ell for v, m in self.points) if self.points else 0j

    @property
    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.points)

    def multiplicity_at(self, lam: complex, tol: float = 1e-9) -> int:
        for v, m in self.points:
            if abs(v - lam) <= tol:
                return m
        return 0


@dataclass(frozen=True)
class MultiplicityLedger:
    """Eigenvalue mass found inside an epsilon ball around a target point."""

    target: complex
    epsilon: float
    matched_mass: int
    expected: int

    @property
    def matched(self) -> bool:
        return self.matched_mass == self.expected


def default_cluster_tol(n: int, max_abs: float) -> float:
    """Default clustering radius for an n x n matrix with entries up to max_abs."""
    return max(1e-7, 1e-8 * n * max_abs)


def _pair_conjugates(vals: np.ndarray) -> np.ndarray:
    """Force the eigenvalue list of a real matrix to be exactly conjugate-closed.

    Eigenvalues with positive and negative imaginary parts are matched in
    sorted order and each pair is replaced by avg(re) +- avg(|im|) i; any
    unmatched leftover is made real.
    """
    reals = [v for v in vals if v.imag == 0.0]
    pos = sorted((v for v in vals if v.imag > 0.0), key=lambda z: (z.real, z.imag))
    neg = sorted((v for v in vals if v.imag < 0.0), key=lambda z: (z.real, -z.imag))
    out = [complex(v.real, 0.0) for v in reals]
    for p, q in zip(pos, neg):
        re = 0.5 * (p.real + q.real)
        im = 0.5 * (p.imag - q.imag)
        out.append(complex(re, im))
        out.append(complex(re, -im))
    for extra in pos[len(neg):] + neg[len(pos):]:
        out.append(complex(extra.real, 0.0))
    out.sort(key=lambda z: (z.real, z.imag))
    return np.asarray(out, dtype=np.complex128)


def eigenvalues(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a real square matrix, with multiplicity, conjugate-closed.

    The returned array is sorted by (real, imaginary) part and satisfies the
    trace identities sum(lam^p) = Tr(M^p) up to the solver's accuracy.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError("matrix must be square and non-empty")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    try:
        vals = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed to converge: {exc}") from exc
    vals = _pair_conjugates(vals)
    residual = abs(vals.sum() - np.trace(a))
    scale = max(1.0, float(np.max(np.abs(a))))
    if residual > 1e-6 * a.shape[0] * scale:
        raise NumericalError(
            f"eigenvalue sum deviates from the trace by {residual:.3e}"
        )
    return vals


def cluster_multiplicities(points, tol: float) -> Spectrum:
    """Single-linkage clustering of eigenvalues into (centroid, mass) pairs.

    Clusters are merged until all centroids are pairwise further apart than
    tol; each centroid is the mean of its member values (with repetition).
    """
    if tol <= 0:
        raise ValueError("clustering tolerance must be positive")
    pts = np.asarray(points, dtype=np.complex128).ravel()
    if pts.size == 0:
        return Spectrum(())
    centroids = pts.copy()
    weights = np.ones(pts.size, dtype=np.int64)
    while centroids.size > 1:
        d = np.abs(centroids[:, None] - centroids[None, :])
        np.fill_diagonal(d, np.inf)
        close = d <= tol
        if not close.any():
            break
        # one union-find round over all currently-close pairs
        parent = np.arange(centroids.size)

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, j in zip(*np.nonzero(close)):
            if i < j:
                ri, rj = find(int(i)), find(int(j))
                if ri != rj:
                    parent[rj] = ri
        roots = np.asarray([find(int(i)) for i in range(centroids.size)])
        new_centroids = []
        new_weights = []
        for r in np.unique(roots):
            members = roots == r
            wsum = int(weights[members].sum())
            new_centroids.append(complex((centroids[members] * weights[members]).sum() / wsum))
            new_weights.append(wsum)
        centroids = np.asarray(new_centroids, dtype=np.complex128)
        weights = np.asarray(new_weights, dtype=np.int64)
    order = np.lexsort((centroids.imag, centroids.real))
    pts_out = tuple((complex(centroids[i]), int(weights[i])) for i in order)
    return Spectrum(pts_out)


def digraph_spectrum(g: Digraph, tol: float | None = None) -> Spectrum:
    """Clustered spectrum of the adjacency matrix of a digraph."""
    vals = eigenvalues(g.adj.astype(np.float64))
    if tol is None:
        tol = default_cluster_tol(g.n, 1.0)
    spec = cluster_multiplicities(vals, tol)
    has_zero = any(abs(v) <= tol for v, _ in spec.points)
    return replace(spec, includes_zero_spectral_point=has_zero)


def normalized_spectrum(g: Digraph, tol: float | None = None) -> Spectrum:
    """Spectrum of the adjacency matrix divided by the vertex count."""
    vals = eigenvalues(g.adj.astype(np.float64)) / g.n
    if tol is None:
        tol = default_cluster_tol(g.n, 1.0 / g.n)
    spec = cluster_multiplicities(vals, tol)
    has_zero = any(abs(v) <= tol for v, _ in spec.points)
    return replace(spec, includes_zero_spectral_point=has_zero)


def step_spectrum(w: StepKernel, tol: float | None = None) -> Spectrum:
    """Nonzero spectrum of the integral operator of a step kernel.

    On block functions the operator acts as B with B[i, j] = values[i, j] *
    measures[j]; its nonzero eigenvalues (with algebraic multiplicity) are
    exactly the operator's. The zero spectral point is always present for the
    operator and is carried by the flag, not by the point list.
    """
    b = w.values * w.measures[None, :]
    vals = eigenvalues(b)
    if tol is None:
        tol = default_cluster_tol(w.k, max(float(np.max(np.abs(b))), 1e-30))
    spec = cluster_multiplicities(vals, tol)
    nonzero = tuple((v, m) for v, m in spec.points if abs(v) > tol)
    return Spectrum(nonzero, includes_zero_spectral_point=True)


def hausdorff_distance(x, y) -> float:
    """Hausdorff distance between two non-empty finite sets of complex points."""
    xa = np.asarray(x, dtype=np.complex128).ravel()
    ya = np.asarray(y, dtype=np.complex128).ravel()
    if xa.size == 0 or ya.size == 0:
        raise ValueError("hausdorff_distance requires non-empty point sets")
    d = np.abs(xa[:, None] - ya[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def check_isolation(limit: Spectrum, lam: complex, epsilon: float) -> None:
    """Raise IsolationError unless B_{2 eps}(lam) meets the limit spectrum only at lam."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if abs(lam) <= epsilon:
        raise ValueError("epsilon must be smaller than |lambda|")
    for v, _ in limit.points:
        if v != lam and abs(v - lam) < 2 * epsilon:
            raise IsolationError(
                f"spectral point {v} lies within 2*epsilon of target {lam}"
            )
    if limit.includes_zero_spectral_point and abs(lam) < 2 * epsilon:
        raise IsolationError(f"zero spectral point lies within 2*epsilon of target {lam}")


def multiplicity_match(
    limit: Spectrum, observed: Spectrum, lam: complex, epsilon: float
) -> MultiplicityLedger:
    """Ledger of observed eigenvalue mass inside B_eps(lam) vs the limit multiplicity.

    lam must be one of the nonzero points of the limit spectrum and epsilon
    must isolate it: no other limit point (including 0 when present) may lie
    within 2*epsilon.
    """
    lam = complex(lam)
    match_tol = 1e-9 * max(1.0, abs(lam))
    target = None
    expected = 0
    for v, m in limit.points:
        if abs(v - lam) <= match_tol:
            target, expected = v, m
            break
    if target is None or target == 0:
        raise ValueError(f"{lam} is not a nonzero point of the limit spectrum")
    check_isolation(limit, target, epsilon)
    matched = sum(m for v, m in observed.points if abs(v - target) < epsilon)
    return MultiplicityLedger(target, float(epsilon), int(matched), int(expected))


def singular_moment_bound(g: Digraph) -> bool:
    """True when sum of mult * |lam|^2 over the spectrum is at most n^2."""
    spec = digraph_spectrum(g)
    moment = sum(m * abs(v) ** 2 for v, m in spec.points)
    return moment <= g.n**2


# ---------------------------------------------------------------------------
# serialization


def spectrum_to_csv(spec: Spectrum) -> str:
    """CSV rows re,im,mult; a zero spectral point not listed among the points
    is flagged by a trailing row with mult=0."""
    lines = ["re,im,mult"]
    has_explicit_zero = False
    for v, m in spec.points:
        if v == 0:
            has_explicit_zero = True
        lines.append(f"{v.real:.17g},{v.imag:.17g},{m}")
    if spec.includes_zero_spectral_point and not has_explicit_zero:
        lines.append("0,0,0")
    return "\n".join(lines) + "\n"


def spectrum_from_csv(text: str) -> Spectrum:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "re,im,mult":
        raise ValueError("spectrum CSV must start with the header 're,im,mult'")
    points = []
    zero_flag = False
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 3:
            raise ValueError(f"malformed spectrum row: {ln!r}")
        re, im, mult = float(parts[0]), float(parts[1]), int(parts[2])
        value = complex(re, im)
        if mult == 0:
            zero_flag = True
        else:
            points.append((value, mult))
            if value == 0:
                zero_flag = True
    return Spectrum(tuple(points), includes_zero_spectral_point=zero_flag)
