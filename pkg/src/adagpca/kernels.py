"""Variable-similarity kernels from trees or squared Euclidean distances.

Every constructor returns a trace-normalized PSD kernel (tr Q = p) together
with its cached eigendecomposition, which downstream modules reuse so the
O(p^3) factorization happens exactly once per kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import LinalgError, SymEigen, as_matrix, clamp_psd_values, sym_eigen
from .trees import PhyloTree


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class VariableKernel:
    """p x p similarity kernel over variables.

    ``matrix`` is symmetric PSD with trace p; ``eigen`` is its (clamped)
    eigendecomposition; ``names`` carries the variable order when known.
    """

    matrix: np.ndarray
    eigen: SymEigen
    names: tuple = None
    trace_normalized: bool = True

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _finalize(q: np.ndarray, names, context: str) -> VariableKernel:
    q = (q + q.T) / 2.0
    trace = float(np.trace(q))
    if trace <= 0:
        raise KernelError(
            f"{context}: kernel has no strictly positive eigenvalue (trace {trace})"
        )
    p = q.shape[0]
    q = q * (p / trace)
    eig = sym_eigen(q)
    try:
        values = clamp_psd_values(eig.values, context)
    except LinalgError as exc:
        raise KernelError(str(exc)) from None
    if not np.any(values > 0):
        raise KernelError(f"{context}: kernel has no strictly positive eigenvalue")
    return VariableKernel(
        matrix=q,
        eigen=SymEigen(vectors=eig.vectors, values=values),
        names=tuple(names) if names is not None else None,
    )


def tree_to_kernel(tree: PhyloTree, names=None) -> VariableKernel:
    """Shared-ancestry kernel of a tree, trace-normalized.

    Entry (i, j) is s_i + s_j - delta_ij, with s the root-to-leaf path
    lengths and delta the patristic leaf distances; this equals twice the
    shared root-path length, so the matrix is PSD by construction.  Variable
    order is the tree's leaf order, or ``names`` when a subset/reordering is
    requested (dropping leaves leaves the shared-ancestry geometry of the
    remaining ones untouched).
    """
    if tree.n_leaves < 2:
        raise KernelError(f"need at least 2 leaves to build a kernel, got {tree.n_leaves}")
    raw = 2.0 * tree.shared_path_lengths()
    leaf_names = tree.leaf_names()
    if names is None:
        return _finalize(raw, leaf_names, "tree kernel")
    index = {nm: j for j, nm in enumerate(leaf_names)}
    missing = [nm for nm in names if nm not in index]
    if missing:
        raise KernelError(f"names not found among tree leaves: {missing[:5]}")
    if len(names) < 2:
        raise KernelError(f"need at least 2 leaves to build a kernel, got {len(names)}")
    order = [index[nm] for nm in names]
    return _finalize(raw[np.ix_(order, order)], list(names), "tree kernel")


def distances_to_kernel(delta, weights=None, names=None) -> VariableKernel:
    """Kernel from squared Euclidean distances via weighted double centering.

    Computes P_w (-delta/2) P_w^T with P_w = I - 1 w^T (uniform w by
    default), then trace-normalizes.  Rejects inputs whose centered matrix
    has a meaningfully negative eigenvalue, i.e. non-Euclidean distances.
    """
    delta = as_matrix(delta, "distance matrix")
    p = delta.shape[0]
    if delta.shape[0] != delta.shape[1]:
        raise KernelError(f"distance matrix must be square, got shape {delta.shape}")
    if np.abs(delta - delta.T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(delta).max()):
        raise KernelError("distance matrix must be symmetric")
    if np.any(delta < 0):
        raise KernelError("distance matrix must be nonnegative")
    if np.abs(np.diag(delta)).max(initial=0.0) > 1e-12 * max(1.0, np.abs(delta).max()):
        raise KernelError("distance matrix must have a zero diagonal")
    if weights is None:
        w = np.full(p, 1.0 / p)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (p,):
            raise KernelError(f"weights must have length {p}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-8:
            raise KernelError("weights must be nonnegative and sum to 1")
    centering = np.eye(p) - np.outer(np.ones(p), w)
    gram = centering @ (-delta / 2.0) @ centering.T
    try:
        return _finalize(gram, names, "double-centered kernel")
    except KernelError as exc:
        if "not positive semidefinite" in str(exc):
            raise KernelError(f"distances not Euclidean: {exc}") from None
        raise


def kernel_from_matrix(q, names=None) -> VariableKernel:
    """Wrap a user-supplied similarity matrix (e.g. loaded from CSV)."""
    q = as_matrix(q, "kernel matrix")
    if q.shape[0] != q.shape[1]:
        raise KernelError(f"kernel matrix must be square, got shape {q.shape}")
    if np.abs(q - q.T).max(initial=0.0) > 1e-8 * max(1.0, np.abs(q).max()):
        raise KernelError("kernel matrix must be symmetric")
    return _finalize(q, names, "kernel matrix")


def check_kernel(q) -> dict:
    """Diagnostic report for a candidate kernel; never raises on bad values."""
    q = as_matrix(q, "kernel matrix")
    if q.shape[0] != q.shape[1]:
        raise KernelError(f"kernel matrix must be square, got shape {q.shape}")
    scale = max(1.0, float(np.abs(q).max()))
    symmetric = bool(np.abs(q - q.T).max(initial=0.0) <= 1e-10 * scale)
    eig = sym_eigen(q)
    return {
        "min_eigenvalue": float(eig.values.min()),
        "trace": float(np.trace(q)),
        "symmetric": symmetric,
    }
