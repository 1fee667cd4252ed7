"""Dense symmetric linear algebra shared by every other module.

Matrices are plain float64 numpy arrays in C (row-major) order.  The
eigendecomposition helpers fix eigenvector signs deterministically so that
downstream ordinations are reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Eigenvalues of a nominally PSD matrix in [-NEG_CLAMP_REL * lam_max, 0) are
# treated as rounding noise and clamped to zero; anything below is an error.
NEG_CLAMP_REL = 1e-10


class LinalgError(ValueError):
    pass


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting NaN/Inf entries."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise LinalgError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError(f"{name} contains non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit dimension check."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise LinalgError(
            f"dimension mismatch: ({a.shape[0]}x{a.shape[1]}) @ ({b.shape[0]}x{b.shape[1]})"
        )
    return a @ b


@dataclass(frozen=True)
class SymEigen:
    """Eigendecomposition of a symmetric matrix.

    ``vectors`` holds orthonormal eigenvectors in columns, ``values`` the
    matching eigenvalues sorted in descending order.
    """

    vectors: np.ndarray
    values: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.size

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # Convention: the entry of largest magnitude in each column is positive;
    # argmax takes the earliest index on ties.
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigen(a) -> SymEigen:
    """Symmetric eigendecomposition with deterministic ordering and signs.

    The input is symmetrized as (a + a.T) / 2 before decomposition, values
    come back sorted descending and eigenvector signs follow the
    largest-magnitude-entry-positive convention.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {a.shape}")
    sym = (a + a.T) / 2.0
    try:
        values, vectors = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        resid = float(np.abs(sym - sym.T).max())
        raise LinalgError(f"eigendecomposition failed to converge (asym residual {resid:.3e})") from exc
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    return SymEigen(vectors=np.ascontiguousarray(vectors), values=values)


def clamp_psd_values(values: np.ndarray, context: str = "matrix") -> np.ndarray:
    """Zero out tiny negative eigenvalues of a nominally PSD spectrum.

    Values in [-NEG_CLAMP_REL * lam_max, 0) become 0; anything more negative
    raises, since the input was not PSD to begin with.
    """
    values = np.asarray(values, dtype=float)
    lam_max = float(values.max(initial=0.0))
    floor = -NEG_CLAMP_REL * max(lam_max, 0.0)
    if np.any(values < floor):
        worst = float(values.min())
        raise LinalgError(
            f"{context} is not positive semidefinite: eigenvalue {worst:.6e} "
            f"below clamp threshold {floor:.6e}"
        )
    out = values.copy()
    out[out < 0] = 0.0
    return out


def psd_function(eigen: SymEigen, fn) -> np.ndarray:
    """Apply ``fn`` to the spectrum and rebuild the matrix.

    Implements spectral maps such as square roots and the smoothing family:
    returns V diag(fn(lam)) V^T with negative rounding noise clamped first.
    """
    values = clamp_psd_values(eigen.values, "spectral-map input")
    mapped = np.asarray([fn(v) for v in values], dtype=float)
    bad = np.flatnonzero(~np.isfinite(mapped))
    if bad.size:
        j = int(bad[0])
        raise LinalgError(
            f"spectral map produced a non-finite value at eigenvalue {values[j]!r} (index {j})"
        )
    out = (eigen.vectors * mapped) @ eigen.vectors.T
    return (out + out.T) / 2.0
