"""Time-unrolled layer chains as block tridiagonal Toeplitz graphs.

Unfolding a recurrent layer over k sequence steps stacks k+1 copies of
the layer's vertex set; consecutive copies are joined by the same m x m
block B.  The resulting adjacency

    A = [[0, B, 0, ...],
         [B^T, 0, B, ...],
         ...,
         [..., B^T, 0]]

is block tridiagonal Toeplitz and bipartite (layers are 2-colorable by
parity).  For symmetric B its spectrum has the closed form
{2 * eig_i(B) * cos(pi * j / (k + 2))} over i = 1..m, j = 1..k+1, which
the numerical eigensolver cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, SizeError
from .graphs import SpectralReport, UNWEIGHTED, WEIGHTED, _assemble_report, normalized_laplacian_eigenvalues
from .linalg import SYMMETRY_ATOL, as_dense_matrix, sym_eigenvalues

_UNROLLED_DIM_CAP = 4096


@dataclass(frozen=True)
class UnrolledSpec:
    """Block B of one layer and the number of unrolling steps k."""

    B: np.ndarray
    k: int

    def __post_init__(self):
        B = as_dense_matrix(self.B)
        if B.shape[0] != B.shape[1]:
            raise ShapeError(f"block must be square, got shape {B.shape}")
        object.__setattr__(self, "B", B)
        if self.k < 1:
            raise DomainError(f"k must be >= 1, got {self.k}")

    @property
    def m(self) -> int:
        return self.B.shape[0]

    @property
    def dim(self) -> int:
        return (self.k + 1) * self.m


def build_unrolled(spec: UnrolledSpec) -> np.ndarray:
    """Dense (k+1)m x (k+1)m unrolled adjacency; symmetric by construction."""
    if spec.dim > _UNROLLED_DIM_CAP:
        raise SizeError(f"unrolled dimension {spec.dim} exceeds cap {_UNROLLED_DIM_CAP}")
    m, k = spec.m, spec.k
    A = np.zeros((spec.dim, spec.dim))
    for i in range(k):
        A[i * m:(i + 1) * m, (i + 1) * m:(i + 2) * m] = spec.B
        A[(i + 1) * m:(i + 2) * m, i * m:(i + 1) * m] = spec.B.T
    return A


def closed_form_spectrum(spec: UnrolledSpec) -> np.ndarray:
    """Exact unrolled spectrum for symmetric B, sorted descending.

    Raises DomainError when B is not symmetric (the closed form only
    holds in the symmetric case).
    """
    if np.max(np.abs(spec.B - spec.B.T)) > SYMMETRY_ATOL:
        raise DomainError("closed-form spectrum requires a symmetric block")
    block_eigs = sym_eigenvalues(spec.B)
    j = np.arange(1, spec.k + 2)
    cosines = np.cos(math.pi * j / (spec.k + 2))
    values = (2.0 * block_eigs[:, None] * cosines[None, :]).ravel()
    return np.sort(values)[::-1].copy()


def unrolled_gap_report(spec: UnrolledSpec, mode: str = WEIGHTED) -> SpectralReport:
    """Spectral report of the unrolled graph.

    The block is taken as |B| (weighted) or its support indicator
    (unweighted); lambda1 and lambda2 come from the numerical spectrum
    of the unrolled adjacency.  With k = 1 this coincides with the
    layerwise report of B itself.
    """
    if mode not in (WEIGHTED, UNWEIGHTED):
        raise DomainError(f"unknown mode {mode!r}")
    block = np.abs(spec.B) if mode == WEIGHTED else (spec.B != 0).astype(np.float64)
    A = build_unrolled(UnrolledSpec(block, spec.k))
    if not A.any():
        raise DomainError("unrolled graph has no edges")
    eigs = sym_eigenvalues(A)
    lambda1 = float(eigs[0])
    # Bipartite spectrum is symmetric about 0; a lone +/- pair plays the
    # role of sigma2 = 0, hence the clamp.
    lambda2 = max(float(eigs[1]), 0.0)
    d_avg = float(A.sum(axis=1).mean())
    alpha2 = float(normalized_laplacian_eigenvalues(A)[1])
    return _assemble_report(mode, lambda1, lambda2, d_avg, alpha2)
