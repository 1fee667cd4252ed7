"""Generalized PCA on a triple (X, Q, D).

Q is an inner product on variables (p x p PSD), D a diagonal nonnegative
weighting of samples.  Row scores u_i maximize u^T D X Q X^T D u under
u^T D u = 1; axes v_i maximize v^T Q X^T D X Q v under v^T Q v = 1.  Both
come from one eigendecomposition of the n x n matrix
D^(1/2) X Q X^T D^(1/2), which is the cheap side when p >> n.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import LinalgError, as_matrix, clamp_psd_values, sym_eigen

RANK_TOL_REL = 1e-12


@dataclass(frozen=True)
class GpcaResult:
    """Scores, axes and spectrum of one generalized PCA.

    row_scores:       n x k, columns normalized u^T D u = 1
    row_coordinates:  n x k, row_scores scaled by sqrt(eigenvalue)
    axes:             p x k, columns normalized v^T Q v = 1
    eigenvalues:      objective values, descending
    variance_fractions: eigenvalue_i over the total positive spectrum
    """

    row_scores: np.ndarray
    row_coordinates: np.ndarray
    axes: np.ndarray
    eigenvalues: np.ndarray
    variance_fractions: np.ndarray

    @property
    def k(self) -> int:
        return self.eigenvalues.size


def _spectral_parts(q, p: int):
    """Return (basis, weights) when q carries a cached spectral form."""
    from .family import FamilyPoint
    from .kernels import VariableKernel

    if q is None:
        return None
    if isinstance(q, VariableKernel):
        if q.dim != p:
            raise LinalgError(f"kernel is {q.dim}x{q.dim} but data has {p} variables")
        return q.eigen.vectors, q.eigen.values
    if isinstance(q, FamilyPoint):
        if q.basis.shape[0] != p:
            raise LinalgError(
                f"family inner product is {q.basis.shape[0]}-dimensional but data has {p} variables"
            )
        return q.basis, q.spectral_weights
    return None


def solve_from_cross(cross: np.ndarray, x: np.ndarray, d_vec, k) -> GpcaResult:
    """Finish a gPCA given the n x n cross product D^(1/2) X Q X^T D^(1/2).

    Shared by :func:`gpca` and the smoothing-family fast path, which builds
    the cross product from a cached rotation of the data.
    """
    n = x.shape[0]
    eig = sym_eigen(cross)
    values = clamp_psd_values(eig.values, "gPCA cross-product")
    total = float(values.sum())
    if total <= 0:
        raise LinalgError("data has no variance under the given inner products")

    rank = int(np.sum(values > RANK_TOL_REL * values[0]))
    if k is None:
        k = min(n - 1 if n > 1 else 1, 10, rank)
    if k < 1:
        raise LinalgError(f"k must be >= 1, got {k}")
    if k > rank:
        warnings.warn(
            f"requested k={k} exceeds numerical rank {rank}; truncating", stacklevel=2
        )
        k = rank

    lam = values[:k]
    u_tilde = eig.vectors[:, :k]
    if d_vec is None:
        u = u_tilde
    else:
        inv_sqrt = np.zeros_like(d_vec)
        pos = d_vec > 0
        inv_sqrt[pos] = 1.0 / np.sqrt(d_vec[pos])
        u = inv_sqrt[:, None] * u_tilde

    coords = u * np.sqrt(lam)
    # v_i = X^T D u_i / sqrt(lam_i) lands in the Q-metric unit sphere.
    if d_vec is None:
        axes = x.T @ u / np.sqrt(lam)
    else:
        axes = x.T @ (d_vec[:, None] * u) / np.sqrt(lam)

    return GpcaResult(
        row_scores=u,
        row_coordinates=coords,
        axes=axes,
        eigenvalues=lam,
        variance_fractions=lam / total,
    )


def gpca(x, q=None, d=None, k: int = None) -> GpcaResult:
    """Generalized PCA of the triple (x, q, d).

    ``q`` may be a plain PSD matrix, a VariableKernel / FamilyPoint (their
    cached spectral form is used directly), or None for the identity.
    ``d`` is a vector of nonnegative sample weights (None = identity).
    ``k`` defaults to min(n - 1, 10) and is truncated to the numerical rank
    with a warning when it exceeds it.  No centering happens here; callers
    center under whatever weighting their analysis requires.
    """
    x = as_matrix(x, "data matrix")
    n, p = x.shape

    if d is None:
        d_vec = None
        xd = x
    else:
        d_vec = np.asarray(d, dtype=float)
        if d_vec.shape != (n,):
            raise LinalgError(f"sample weights must have length {n}")
        if np.any(d_vec < 0) or not np.all(np.isfinite(d_vec)):
            raise LinalgError("sample weights must be finite and nonnegative")
        xd = np.sqrt(d_vec)[:, None] * x

    spectral = _spectral_parts(q, p)
    if spectral is not None:
        basis, weights = spectral
        rotated = xd @ basis
        cross = (rotated * weights) @ rotated.T
    elif q is None:
        cross = xd @ xd.T
    else:
        qm = as_matrix(q, "variable inner product")
        if qm.shape != (p, p):
            raise LinalgError(f"variable inner product must be {p}x{p}, got {qm.shape}")
        cross = xd @ qm @ xd.T

    return solve_from_cross(cross, x, d_vec, k)


def align_signs(reference: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Per-column sign flips making ``target`` agree with ``reference``."""
    k = min(reference.shape[1], target.shape[1])
    flips = np.ones(target.shape[1])
    for i in range(k):
        if float(reference[:, i] @ target[:, i]) < 0:
            flips[i] = -1.0
    return flips
