"""Finite digraphs: constructions, random models, and exact density counts.

Vertices are 0..n-1 and adjacency is stored densely (int8), so memory is
O(n^2); the intended scale is a few thousand vertices. All counts are exact
integers, all sampling is reproducible from an explicit seed (numpy PCG64).
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .errors import BudgetError, GenerationError

if TYPE_CHECKING:
    from .stepkernel import BidirectedStepPair, StepDigraphon

# Traces and homomorphism counts are certified exact under int64 only while
# the a-priori bound n^ell stays below this; beyond it we refuse rather than
# risk a silent wrap.
_INT64_SAFE = 2**62

# Cap (in elements) on intermediate tensors of einsum contractions.
_EINSUM_MEM = 1 << 26


@dataclass(frozen=True, eq=False)
class Digraph:
    """Loop-free digraph over a dense 0/1 adjacency matrix.

    adj[i, j] = 1 encodes an edge i -> j. Antiparallel pairs (both i -> j
    and j -> i) are rejected unless allow_bidirected is set.
    """

    adj: np.ndarray
    allow_bidirected: bool = False

    def __post_init__(self):
        a = np.asarray(self.adj)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError("adjacency must be a non-empty square matrix")
        if not (((a == 0) | (a == 1)).all()):
            raise ValueError("adjacency entries must be 0 or 1")
        a = a.astype(np.int8)
        if np.trace(a, dtype=np.int64) != 0:
            raise ValueError("loops are not allowed (diagonal must be zero)")
        if not self.allow_bidirected and np.any((a & a.T) != 0):
            raise ValueError(
                "antiparallel edge pair present; construct with allow_bidirected=True"
            )
        a.setflags(write=False)
        object.__setattr__(self, "adj", a)
        object.__setattr__(self, "allow_bidirected", bool(self.allow_bidirected))

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.adj.sum(dtype=np.int64))

    def edges(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(self.adj)
        return list(zip(ii.tolist(), jj.tolist()))


@dataclass(frozen=True, eq=False)
class UndirectedRegularGraph:
    """Simple undirected regular graph (symmetric 0/1 adjacency, zero diagonal)."""

    adj: np.ndarray
    degree: int

    def __post_init__(self):
        a = np.asarray(self.adj)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise ValueError("adjacency must be square with at least 2 vertices")
        if a.shape[0] % 2 != 0:
            raise ValueError("vertex count must be even")
        if not (((a == 0) | (a == 1)).all()):
            raise ValueError("adjacency entries must be 0 or 1")
        a = a.astype(np.int8)
        if np.any(a != a.T):
            raise ValueError("adjacency must be symmetric")
        if np.trace(a, dtype=np.int64) != 0:
            raise ValueError("loops are not allowed")
        if np.any(a.sum(axis=1, dtype=np.int64) != self.degree):
            raise ValueError(f"every row must sum to degree={self.degree}")
        a.setflags(write=False)
        object.__setattr__(self, "adj", a)
        object.__setattr__(self, "degree", int(self.degree))

    @property
    def n2(self) -> int:
        return self.adj.shape[0]


class SampledDensity(NamedTuple):
    """Monte-Carlo homomorphism-density estimate with its standard error."""

    estimate: float
    stderr: float
    samples: int


# ---------------------------------------------------------------------------
# constructions


def cycle_digraph(ell: int) -> Digraph:
    """Cyclically oriented cycle on ell vertices (edges i -> i+1 mod ell).

    ell = 2 yields the two-vertex digraph with both directions present,
    constructed with allow_bidirected=True.
    """
    if ell < 2:
        raise ValueError("cycle length must be at least 2")
    adj = np.zeros((ell, ell), dtype=np.int8)
    idx = np.arange(ell)
    adj[idx, (idx + 1) % ell] = 1
    return Digraph(adj, allow_bidirected=(ell == 2))


def empty_digraph(n: int, allow_bidirected: bool = False) -> Digraph:
    """Digraph on n vertices with no edges."""
    if n < 1:
        raise ValueError("vertex count must be positive")
    return Digraph(np.zeros((n, n), dtype=np.int8), allow_bidirected=allow_bidirected)


def complete_bidirected_digraph(n: int) -> Digraph:
    """Digraph with both directions present between every pair of vertices."""
    if n < 1:
        raise ValueError("vertex count must be positive")
    adj = np.ones((n, n), dtype=np.int8) - np.eye(n, dtype=np.int8)
    return Digraph(adj, allow_bidirected=True)


# ---------------------------------------------------------------------------
# exact counting


def trace_power(g: Digraph, ell: int) -> int:
    """Tr(A^ell): the number of closed walks of length ell, exactly.

    Computed in int64; raises OverflowError when the a-priori bound n^ell on
    the result leaves the certified integer range instead of wrapping.
    """
    if ell < 1:
        raise ValueError("power must be at least 1")
    if g.n**ell >= _INT64_SAFE:
        raise OverflowError(
            f"n^ell = {g.n}^{ell} exceeds the exact integer range of trace_power"
        )
    power = np.linalg.matrix_power(g.adj.astype(np.int64), ell)
    return int(np.trace(power))


def hom_count(h: Digraph, g: Digraph) -> int:
    """Number of maps V(H) -> V(G) that carry every edge of H to an edge of G."""
    if h.n > 6:
        raise BudgetError(
            "pattern has more than 6 vertices; use hom_density_sampled instead"
        )
    if g.n**h.n >= _INT64_SAFE:
        raise BudgetError(
            "|G|^|H| exceeds the exact integer range; use hom_density_sampled instead"
        )
    edge_list = h.edges()
    if not edge_list:
        return g.n**h.n
    letters = "abcdefgh"
    spec = ",".join(letters[u] + letters[v] for u, v in edge_list) + "->"
    a64 = g.adj.astype(np.int64)
    count = int(np.einsum(spec, *([a64] * len(edge_list)), optimize=("greedy", _EINSUM_MEM)))
    touched = {u for uv in edge_list for u in uv}
    return count * g.n ** (h.n - len(touched))


def hom_density(h: Digraph, g: Digraph) -> float:
    """t(H, G): fraction of uniform maps V(H) -> V(G) that are homomorphisms."""
    return hom_count(h, g) / g.n**h.n


def hom_density_sampled(h: Digraph, g: Digraph, samples: int, seed: int) -> SampledDensity:
    """Unbiased Monte-Carlo estimate of hom_density with its standard error."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    edge_list = h.edges()
    hits = 0
    remaining = samples
    chunk = 100_000
    while remaining > 0:
        c = min(remaining, chunk)
        x = rng.integers(0, g.n, size=(c, h.n))
        ok = np.ones(c, dtype=bool)
        for u, v in edge_list:
            ok &= g.adj[x[:, u], x[:, v]] == 1
        hits += int(ok.sum())
        remaining -= c
    p = hits / samples
    return SampledDensity(p, math.sqrt(p * (1.0 - p) / samples), samples)


def automorphism_count(h: Digraph) -> int:
    """|Aut(H)| by permutation enumeration (patterns up to 8 vertices)."""
    if h.n > 8:
        raise BudgetError("automorphism enumeration limited to 8 vertices")
    a = h.adj
    count = 0
    for p in permutations(range(h.n)):
        perm = np.asarray(p)
        if np.array_equal(a[np.ix_(perm, perm)], a):
            count += 1
    return count


def subgraph_density(h: Digraph, g: Digraph) -> float:
    """d(H, G): probability that |H| random vertices of G induce a copy of H.

    Returns 0 when |H| > |G|. Exact: every |H|-subset of V(G) is tested for
    isomorphism against the permuted copies of H.
    """
    m = h.n
    if m > 5:
        raise BudgetError("induced-density enumeration limited to patterns on 5 vertices")
    if m > g.n:
        return 0.0
    total = math.comb(g.n, m)
    if total * m * m > 2 * 10**8:
        raise BudgetError("subset enumeration budget exceeded")

    ah = h.adj
    targets = set()
    for p in permutations(range(m)):
        code = 0
        for i in range(m):
            for j in range(m):
                code = (code << 1) | int(ah[p[i], p[j]])
        targets.add(code)

    rows = [int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little") for row in g.adj]
    count = 0
    for s in combinations(range(g.n), m):
        code = 0
        for a_ in s:
            ra = rows[a_]
            for b_ in s:
                code = (code << 1) | ((ra >> b_) & 1)
        if code in targets:
            count += 1
    return count / total


# ---------------------------------------------------------------------------
# random models


def sample_w_random(w: "StepDigraphon", n: int, seed: int) -> Digraph:
    """n-vertex random digraph driven by a step digraphon.

    Each vertex draws a block label with the block measures as probabilities;
    each unordered pair {i, j} independently receives the edge i -> j with
    probability W(x_i, x_j), the edge j -> i with probability W(x_j, x_i),
    and no edge otherwise. Deterministic given the seed.
    """
    from .stepkernel import StepDigraphon

    if not isinstance(w, StepDigraphon):
        raise TypeError("sample_w_random requires a StepDigraphon")
    if n < 1:
        raise ValueError("sample size must be positive")
    rng = np.random.default_rng(seed)
    labels = rng.choice(w.k, size=n, p=w.measures)
    prob = w.values[labels[:, None], labels[None, :]]
    iu, ju = np.triu_indices(n, k=1)
    u = rng.random(iu.size)
    p = prob[iu, ju]
    q = prob[ju, iu]
    fwd = u < p
    bwd = (~fwd) & (u < p + q)
    adj = np.zeros((n, n), dtype=np.int8)
    adj[iu[fwd], ju[fwd]] = 1
    adj[ju[bwd], iu[bwd]] = 1
    return Digraph(adj, allow_bidirected=False)


def sample_bidirected_random(p: "BidirectedStepPair", n: int, seed: int) -> Digraph:
    """n-vertex random digraph in which antiparallel pairs are allowed.

    Per unordered pair: both directions with probability W1(x_i, x_j),
    only i -> j with probability W2(x_i, x_j), only j -> i with probability
    W2(x_j, x_i), and no edge otherwise.
    """
    from .stepkernel import BidirectedStepPair

    if not isinstance(p, BidirectedStepPair):
        raise TypeError("sample_bidirected_random requires a BidirectedStepPair")
    if n < 1:
        raise ValueError("sample size must be positive")
    rng = np.random.default_rng(seed)
    labels = rng.choice(p.k, size=n, p=p.measures)
    w1 = p.w1[labels[:, None], labels[None, :]]
    w2 = p.w2[labels[:, None], labels[None, :]]
    iu, ju = np.triu_indices(n, k=1)
    u = rng.random(iu.size)
    both = u < w1[iu, ju]
    t1 = w1[iu, ju] + w2[iu, ju]
    fwd = (~both) & (u < t1)
    bwd = (~both) & (~fwd) & (u < t1 + w2[ju, iu])
    adj = np.zeros((n, n), dtype=np.int8)
    adj[iu[both], ju[both]] = 1
    adj[ju[both], iu[both]] = 1
    adj[iu[fwd], ju[fwd]] = 1
    adj[ju[bwd], iu[bwd]] = 1
    return Digraph(adj, allow_bidirected=True)


def _has_suitable(edges: set, potential: dict) -> bool:
    # True when the leftover stubs can still be paired into some new edge.
    if not potential:
        return True
    nodes = list(potential)
    for s1 in nodes:
        for s2 in nodes:
            if s1 == s2:
                break
            a, b = (s2, s1) if s1 > s2 else (s1, s2)
            if (a, b) not in edges:
                return True
    return False


def _try_pairing(n: int, degree: int, rng: np.random.Generator, max_rounds: int = 1000):
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), degree)
    for _ in range(max_rounds):
        if stubs.size == 0:
            return edges
        rng.shuffle(stubs)
        failed: dict[int, int] = defaultdict(int)
        it = iter(stubs.tolist())
        for s1, s2 in zip(it, it):
            if s1 > s2:
                s1, s2 = s2, s1
            if s1 != s2 and (s1, s2) not in edges:
                edges.add((s1, s2))
            else:
                failed[s1] += 1
                failed[s2] += 1
        if not _has_suitable(edges, failed):
            return None
        stubs = np.array([v for v, c in failed.items() for _ in range(c)], dtype=np.int64)
    return None


def random_regular_graph(
    n2: int, degree: int, seed: int, max_restarts: int = 10_000
) -> UndirectedRegularGraph:
    """Random simple degree-regular graph on n2 vertices via stub pairing.

    Pairs stubs uniformly and re-draws only the stubs whose pair would create
    a loop or multi-edge, restarting from scratch when no valid pairing of the
    leftovers exists. Approximately uniform over regular graphs; regularity
    itself is always exact. Deterministic given the seed.
    """
    if n2 < 2 or n2 % 2 != 0:
        raise ValueError("vertex count must be a positive even integer")
    if not 1 <= degree < n2:
        raise ValueError("degree must satisfy 1 <= degree < n2")
    if (n2 * degree) % 2 != 0:
        raise ValueError("n2 * degree must be even")
    rng = np.random.default_rng(seed)
    for _ in range(max_restarts):
        edges = _try_pairing(n2, degree, rng)
        if edges is None:
            continue
        adj = np.zeros((n2, n2), dtype=np.int8)
        for u, v in edges:
            adj[u, v] = 1
            adj[v, u] = 1
        return UndirectedRegularGraph(adj, degree)
    raise GenerationError(
        f"no simple {degree}-regular graph on {n2} vertices found in {max_restarts} restarts"
    )


# ---------------------------------------------------------------------------
# double covers of regular graphs


def bidirected_double_cover(a: UndirectedRegularGraph) -> Digraph:
    """Digraph on two copies of V(A) whose adjacency is [[0, A], [A, 0]].

    Every edge of A becomes an antiparallel pair between the copies, so the
    spectrum is {+lam, -lam} over the eigenvalues lam of A.
    """
    z = np.zeros_like(a.adj)
    return Digraph(np.block([[z, a.adj], [a.adj, z]]), allow_bidirected=True)


def oneway_double_cover(a: UndirectedRegularGraph) -> Digraph:
    """Digraph on two copies of V(A) with adjacency [[0, A], [J - A, 0]].

    Edges run from the first copy to the second along A and return along the
    complement (J is all ones), so no antiparallel pair ever occurs.
    """
    z = np.zeros_like(a.adj)
    comp = np.ones_like(a.adj) - a.adj
    return Digraph(np.block([[z, a.adj], [comp, z]]), allow_bidirected=False)


# ---------------------------------------------------------------------------
# serialization


def digraph_to_json(g: Digraph) -> dict:
    """JSON-ready dict: {"n", "allow_bidirected", "edges"} with 0-based indices."""
    return {
        "n": g.n,
        "allow_bidirected": g.allow_bidirected,
        "edges": [[int(i), int(j)] for i, j in sorted(g.edges())],
    }


def digraph_from_json(obj: dict) -> Digraph:
    if not isinstance(obj, dict):
        raise ValueError("digraph JSON must be an object")
    for key in ("n", "allow_bidirected", "edges"):
        if key not in obj:
            raise ValueError(f"digraph JSON missing key {key!r}")
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise ValueError("digraph JSON field 'n' must be a positive integer")
    adj = np.zeros((n, n), dtype=np.int8)
    for e in obj["edges"]:
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise ValueError("each edge must be a pair [i, j]")
        i, j = e
        if not (isinstance(i, int) and isinstance(j, int) and 0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge {e!r} out of range for n={n}")
        adj[i, j] = 1
    return Digraph(adj, allow_bidirected=bool(obj["allow_bidirected"]))


def digraph_to_edgelist(g: Digraph) -> str:
    """Plain-text edge list with a '# n=<n> bidirected=<0|1>' header line."""
    lines = [f"# n={g.n} bidirected={1 if g.allow_bidirected else 0}"]
    lines.extend(f"{i} {j}" for i, j in sorted(g.edges()))
    return "\n".join(lines) + "\n"


def digraph_from_edgelist(text: str) -> Digraph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    n = bidirected = None
    body_start = 0
    for i, ln in enumerate(lines):
        if not ln.startswith("#"):
            body_start = i
            break
        body_start = i + 1
        header = dict(part.split("=", 1) for part in ln[1:].split() if "=" in part)
        if "n" in header and "bidirected" in header:
            try:
                n = int(header["n"])
                bidirected = bool(int(header["bidirected"]))
            except ValueError as exc:
                raise ValueError(f"malformed edge-list header: {ln!r}") from exc
    if n is None:
        raise ValueError("edge list requires a '# n=<n> bidirected=<0|1>' header")
    adj = np.zeros((n, n), dtype=np.int8)
    for ln in lines[body_start:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {ln!r}")
        i, j = int(parts[0]), int(parts[1])
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge {i} {j} out of range for n={n}")
        adj[i, j] = 1
    return Digraph(adj, allow_bidirected=bidirected)
