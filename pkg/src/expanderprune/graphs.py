"""Bipartite layer graphs and their expansion diagnostics.

A network layer with weight matrix W and prune mask M becomes a
bipartite graph whose biadjacency holds |w| (weighted mode) or a 0/1
support indicator (unweighted mode).  From that graph we compute:

* the top two singular values sigma1 >= sigma2, which are the two
  largest adjacency eigenvalues of the bipartite graph,
* degree statistics (average, max, min positive, isolated count),
* alpha2, the second-smallest normalized-Laplacian eigenvalue,
* two-sided Cheeger bounds h^2/2 <= alpha2 <= 2h on the edge Cheeger
  constant h,
* the normalized spectral gaps

      delta_R = (2*sqrt(d_avg - 1) - lambda2) / lambda2      (unweighted)
      delta_S = (2*sqrt(lambda1 - 1) - lambda2) / lambda2

  whose positivity is the Ramanujan-style expansion criterion.

Exact brute-force Cheeger constants (vertex and edge) are provided for
small graphs so every spectral bound can be validated against subset
enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGraphError, DomainError, ShapeError, SizeError
from .linalg import as_dense_matrix, bipartite_adjacency, top_two_singular_values

WEIGHTED = "weighted"
UNWEIGHTED = "unweighted"
MODES = (WEIGHTED, UNWEIGHTED)

# lambda2 below this is treated as zero: the gap is +inf, not a division blowup.
LAMBDA2_FLOOR = 1e-10

_BRUTE_FORCE_CAP = 20


@dataclass(frozen=True)
class BipartiteGraph:
    """Non-negative biadjacency plus the mode it was built in."""

    biadjacency: np.ndarray
    mode: str
    degenerate: bool  # True iff the graph has no edges

    @property
    def left_size(self) -> int:
        return self.biadjacency.shape[0]

    @property
    def right_size(self) -> int:
        return self.biadjacency.shape[1]

    def adjacency(self) -> np.ndarray:
        """Full (m+n) x (m+n) symmetric adjacency [[0, B], [B^T, 0]]."""
        return bipartite_adjacency(self.biadjacency)


@dataclass(frozen=True)
class DegreeStats:
    d_avg: float
    d_max: float
    d_min: float  # smallest positive degree; 0.0 if every vertex is isolated
    isolated_count: int


@dataclass(frozen=True)
class SpectralReport:
    """Expansion summary of one layer graph.

    delta_r is None in weighted mode (its average-degree form is only
    meaningful for 0/1 graphs).  Gaps are +inf when lambda2 vanishes and
    -1 when the graph is too sparse for the radical term (d_avg < 1,
    resp. lambda1 < 1).
    """

    mode: str
    lambda1: float
    lambda2: float
    d_avg: float
    alpha2: float
    delta_r: float | None
    delta_s: float
    cheeger_lower: float
    cheeger_upper: float
    ramanujan: bool

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "d_avg": self.d_avg,
            "alpha2": self.alpha2,
            "delta_r": self.delta_r,
            "delta_s": self.delta_s,
            "cheeger_lower": self.cheeger_lower,
            "cheeger_upper": self.cheeger_upper,
            "ramanujan": self.ramanujan,
        }


def build_bipartite(W, mask=None, mode: str = WEIGHTED) -> BipartiteGraph:
    """Layer graph of a weight matrix under a prune mask.

    Weighted mode stores |w| for every kept entry; unweighted mode
    stores 1 wherever a kept entry is nonzero.
    """
    W = as_dense_matrix(W)
    if mask is None:
        mask = np.ones(W.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != W.shape:
        raise ShapeError(f"mask shape {mask.shape} != weight shape {W.shape}")
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}")
    if mode == WEIGHTED:
        biadj = np.abs(W) * mask
    else:
        biadj = ((W != 0) & mask).astype(np.float64)
    return BipartiteGraph(biadj, mode, degenerate=not biadj.any())


def degree_stats(g: BipartiteGraph) -> DegreeStats:
    """Degree summary over all left and right vertices.

    Weighted graphs use weighted degrees (row/column sums).  Isolated
    vertices count toward d_avg but are excluded from d_min.
    """
    B = g.biadjacency
    degrees = np.concatenate([B.sum(axis=1), B.sum(axis=0)])
    isolated = int(np.count_nonzero(degrees == 0))
    positive = degrees[degrees > 0]
    return DegreeStats(
        d_avg=float(degrees.mean()),
        d_max=float(degrees.max()),
        d_min=float(positive.min()) if positive.size else 0.0,
        isolated_count=isolated,
    )


def _gap(base: float, lambda2: float) -> float:
    """(2*sqrt(base - 1) - lambda2) / lambda2 with the degenerate branches.

    lambda2 ~ 0 means the graph is as spread out as possible: +inf.
    base < 1 means the graph is too sparse for the radical: the radical
    term is taken as 0 and the gap collapses to -1.
    """
    if lambda2 < LAMBDA2_FLOOR:
        return math.inf
    radicand = base - 1.0
    radical = 2.0 * math.sqrt(radicand) if radicand > 0.0 else 0.0
    return (radical - lambda2) / lambda2


def _assemble_report(mode: str, lambda1: float, lambda2: float,
                     d_avg: float, alpha2: float) -> SpectralReport:
    lower, upper = cheeger_bounds(alpha2)
    delta_s = _gap(lambda1, lambda2)
    if mode == UNWEIGHTED:
        delta_r = _gap(d_avg, lambda2)
        ramanujan = delta_r >= 0.0
    else:
        delta_r = None
        ramanujan = delta_s >= 0.0
    return SpectralReport(
        mode=mode,
        lambda1=lambda1,
        lambda2=lambda2,
        d_avg=d_avg,
        alpha2=alpha2,
        delta_r=delta_r,
        delta_s=delta_s,
        cheeger_lower=lower,
        cheeger_upper=upper,
        ramanujan=ramanujan,
    )


def spectral_gaps(g: BipartiteGraph) -> SpectralReport:
    """Full spectral report of a layer graph (lambda1 = sigma1(B) etc.)."""
    if g.degenerate:
        raise DegenerateGraphError("graph has no edges")
    s1, s2, _ = top_two_singular_values(g.biadjacency)
    stats = degree_stats(g)
    alpha2 = normalized_laplacian_alpha2(g)
    return _assemble_report(g.mode, s1, s2, stats.d_avg, alpha2)


def normalized_laplacian_eigenvalues(adjacency: np.ndarray) -> np.ndarray:
    """Ascending spectrum of I - D^{-1/2} A D^{-1/2}.

    Isolated vertices are removed first (their degree has no inverse
    square root).  Requires at least 2 surviving vertices.
    """
    A = as_dense_matrix(adjacency)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"adjacency is not square: shape {A.shape}")
    deg = A.sum(axis=1)
    keep = deg > 0
    if int(keep.sum()) < 2:
        raise DegenerateGraphError("fewer than 2 non-isolated vertices")
    A = A[np.ix_(keep, keep)]
    inv_sqrt = 1.0 / np.sqrt(deg[keep])
    L = np.eye(A.shape[0]) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    eigs = np.linalg.eigvalsh(L)
    return np.clip(eigs, 0.0, 2.0)


def normalized_laplacian_alpha2(g: BipartiteGraph) -> float:
    """Second-smallest normalized-Laplacian eigenvalue of the layer graph."""
    return float(normalized_laplacian_eigenvalues(g.adjacency())[1])


def cheeger_bounds(alpha2: float) -> tuple[float, float]:
    """Two-sided bounds (alpha2/2, sqrt(2*alpha2)) on the edge Cheeger constant."""
    if not -1e-12 <= alpha2 <= 2.0 + 1e-12:
        raise DomainError(f"alpha2 = {alpha2} outside [0, 2]")
    alpha2 = min(max(alpha2, 0.0), 2.0)
    return alpha2 / 2.0, math.sqrt(2.0 * alpha2)


def _subset_scan(adjacency: np.ndarray, boundary_fn) -> float:
    """Minimum of boundary_fn(X)/|X| over non-empty X with |X| <= |V|/2.

    Subsets are enumerated in chunks so even the 20-vertex cap stays
    within a few megabytes of working memory.
    """
    A = as_dense_matrix(adjacency)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"adjacency is not square: shape {A.shape}")
    n = A.shape[0]
    if n > _BRUTE_FORCE_CAP:
        raise SizeError(f"brute force capped at {_BRUTE_FORCE_CAP} vertices, got {n}")
    adj = (A != 0).astype(np.float64)
    np.fill_diagonal(adj, 0.0)
    shifts = np.arange(n, dtype=np.uint32)[None, :]
    best = math.inf
    chunk = 1 << 16
    for start in range(1, 1 << n, chunk):
        subsets = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint32)
        # member[s, v] = 1 if vertex v lies in subset s
        member = ((subsets[:, None] >> shifts) & 1).astype(np.float64)
        sizes = member.sum(axis=1)
        eligible = sizes <= n // 2
        if not eligible.any():
            continue
        member = member[eligible]
        ratios = boundary_fn(adj, member) / sizes[eligible]
        best = min(best, float(ratios.min()))
    return best


def edge_cheeger_bruteforce(adjacency) -> float:
    """Exact edge Cheeger constant min |boundary edges| / |X| over |X| <= |V|/2.

    Exponential subset enumeration; inputs are capped at 20 vertices.
    Edges are counted unweighted (any nonzero entry is one edge).
    """

    def edge_boundary(adj, member):
        # edges from X to its complement: sum over v in X of neighbors outside X
        return ((member @ adj) * (1.0 - member)).sum(axis=1)

    return _subset_scan(adjacency, edge_boundary)


def vertex_cheeger_bruteforce(adjacency) -> float:
    """Exact vertex Cheeger constant min |outer vertex boundary| / |X|."""

    def vertex_boundary(adj, member):
        touched = (member @ adj) > 0  # vertex u has a neighbor inside X
        return (touched & (member == 0)).sum(axis=1)

    return _subset_scan(adjacency, vertex_boundary)


def edge_conductance_bruteforce(adjacency) -> float:
    """Exact conductance min |boundary edges| / min(vol X, vol X-complement).

    This volume-normalized edge Cheeger constant is the quantity the
    discrete Cheeger-Buser inequality bounds through alpha2:
    h^2/2 <= alpha2 <= 2h.  (The vertex-count-normalized constant of
    edge_cheeger_bruteforce does not satisfy that sandwich on irregular
    graphs; K5 is a counterexample.)
    """
    A = as_dense_matrix(adjacency)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"adjacency is not square: shape {A.shape}")
    n = A.shape[0]
    if n > _BRUTE_FORCE_CAP:
        raise SizeError(f"brute force capped at {_BRUTE_FORCE_CAP} vertices, got {n}")
    adj = (A != 0).astype(np.float64)
    np.fill_diagonal(adj, 0.0)
    degrees = adj.sum(axis=1)
    total_volume = float(degrees.sum())
    if total_volume == 0.0:
        raise DegenerateGraphError("graph has no edges")
    shifts = np.arange(n, dtype=np.uint32)[None, :]
    best = math.inf
    chunk = 1 << 16
    # X and its complement share a boundary and the denominator takes the
    # smaller volume, so scanning |X| <= |V|/2 covers every partition.
    for start in range(1, 1 << n, chunk):
        subsets = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint32)
        member = ((subsets[:, None] >> shifts) & 1).astype(np.float64)
        eligible = member.sum(axis=1) <= n // 2
        if not eligible.any():
            continue
        member = member[eligible]
        volumes = member @ degrees
        denom = np.minimum(volumes, total_volume - volumes)
        usable = denom > 0
        if not usable.any():
            continue
        member = member[usable]
        boundary = ((member @ adj) * (1.0 - member)).sum(axis=1)
        ratios = boundary / denom[usable]
        best = min(best, float(ratios.min()))
    return best
