"""The one-parameter family of kernel-smoothed gPCAs and its automatic
selection by maximum marginal likelihood.

For a trace-normalized kernel Q = V diag(lam) V^T, the family member at
r in [0, 1] rescales the spectrum to f(lam, r) = lam / (r lam + 1 - r):
r = 0 reproduces the kernel itself (DPCoA metric), r = 1 flattens every
positive eigenvalue (standard PCA on the kernel's range).  The data model
x_i ~ N(0, sigma^2 (r Q + (1 - r) I)) profiles out sigma^2 in closed form,
leaving a cheap one-dimensional likelihood in r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gpca import GpcaResult, solve_from_cross
from .kernels import VariableKernel
from .linalg import SymEigen, as_matrix

# Numerically-zero kernel eigenvalues would send log(r lam + 1 - r) to
# -inf as r -> 1; they are floored inside likelihood computations only.
LIKELIHOOD_EIGENVALUE_FLOOR = 1e-8
PROFILE_GRID_POINTS = 201
REFINE_TOL = 1e-6
FLAT_PROFILE_REL = 1e-9


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class FamilyPoint:
    """One member of the smoothing family, kept in spectral form.

    ``spectral_weights`` are f(lam_j, r) rescaled to sum to p so members at
    different r are trace-comparable; ``basis`` is the kernel eigenbasis.
    The dense matrix is only materialized on request.
    """

    r: float
    spectral_weights: np.ndarray
    basis: np.ndarray

    def matrix(self) -> np.ndarray:
        out = (self.basis * self.spectral_weights) @ self.basis.T
        return (out + out.T) / 2.0

    def apply(self, m: np.ndarray) -> np.ndarray:
        """S @ m without forming the p x p matrix."""
        return self.basis @ (self.spectral_weights[:, None] * (self.basis.T @ m))


@dataclass(frozen=True)
class FamilyFit:
    """Selected smoothing level and the variance split behind it."""

    r_hat: float
    sigma2_hat: float
    signal_var: float  # r_hat * sigma2_hat
    noise_var: float  # (1 - r_hat) * sigma2_hat
    profile_trace: tuple = None  # ((r, loglik), ...) over the search grid


@dataclass(frozen=True)
class AdaptiveResult:
    fit: FamilyFit
    point: FamilyPoint
    ordination: GpcaResult
    variable_scores: np.ndarray  # S(r_hat) @ axes


def _raw_weights(values: np.ndarray, r: float) -> np.ndarray:
    num = values.copy()
    den = r * values + (1.0 - r)
    out = np.zeros_like(values)
    pos = values > 0
    out[pos] = num[pos] / den[pos]  # f(0, r) = 0 by continuity, incl. r = 1
    return out


def family_inner_product(kernel_eigen: SymEigen, r: float) -> FamilyPoint:
    """Family member at ``r`` built from a kernel eigendecomposition."""
    if not (0.0 <= r <= 1.0):
        raise FamilyError(f"r must lie in [0, 1], got {r}")
    values = np.asarray(kernel_eigen.values, dtype=float)
    if np.any(values < 0):
        raise FamilyError("kernel eigenvalues must be nonnegative (clamp first)")
    w = _raw_weights(values, r)
    total = w.sum()
    if total <= 0:
        raise FamilyError("kernel has no positive eigenvalue")
    w = w * (values.size / total)
    return FamilyPoint(r=float(r), spectral_weights=w, basis=kernel_eigen.vectors)


def rotated_square_sums(x_centered: np.ndarray, kernel_eigen: SymEigen):
    """Per-eigendirection sums of squares t_j of the rotated data X V."""
    rotated = x_centered @ kernel_eigen.vectors
    return (rotated**2).sum(axis=0)


def profile_sigma2(rotated_sq_sums, lambdas, r: float, n: int) -> float:
    """Closed-form maximizer of the total variance at fixed ``r``."""
    t = np.asarray(rotated_sq_sums, dtype=float)
    lam = np.maximum(np.asarray(lambdas, dtype=float), LIKELIHOOD_EIGENVALUE_FLOOR)
    if np.any(t < 0):
        raise FamilyError("rotated square sums must be nonnegative")
    if not np.any(t > 0):
        raise FamilyError("degenerate (zero) data")
    den = r * lam + (1.0 - r)
    if np.any(den <= 0):
        raise FamilyError(f"nonpositive spectral denominator at r={r}")
    p = t.size
    return float((t / den).sum() / (n * p))


def profile_loglik(rotated_sq_sums, lambdas, r: float, n: int) -> float:
    """Marginal log likelihood at ``r`` with sigma^2 profiled out.

    Up to the additive constant dropped throughout:
      -(n/2) sum_j log(r lam_j + 1 - r) - (n p / 2) log sigma2*(r) - n p / 2
    """
    t = np.asarray(rotated_sq_sums, dtype=float)
    lam = np.maximum(np.asarray(lambdas, dtype=float), LIKELIHOOD_EIGENVALUE_FLOOR)
    s2 = profile_sigma2(t, lam, r, n)
    den = r * lam + (1.0 - r)
    p = t.size
    return float(-(n / 2.0) * np.log(den).sum() - (n * p / 2.0) * np.log(s2) - n * p / 2.0)


def _golden_section_max(fn, lo: float, hi: float, tol: float):
    best = [None, -np.inf]

    def f(r):
        v = fn(r)
        if v > best[1]:
            best[0], best[1] = r, v
        return v

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return best[0], best[1]


def fit_r(x_centered, kernel: VariableKernel, grid_points: int = PROFILE_GRID_POINTS) -> FamilyFit:
    """Maximize the profiled marginal likelihood of r over [0, 1].

    A coarse grid locates the basin, golden-section refinement narrows it to
    |dr| <= 1e-6.  A flat profile (uninformative structure, e.g. Q = I) ties
    off to r = 1, i.e. no smoothing.
    """
    x_centered = as_matrix(x_centered, "centered data")
    n = x_centered.shape[0]
    t = rotated_square_sums(x_centered, kernel.eigen)
    lam = kernel.eigen.values

    grid = np.linspace(0.0, 1.0, grid_points)
    values = np.array([profile_loglik(t, lam, r, n) for r in grid])
    vmax, vmin = float(values.max()), float(values.min())
    if (vmax - vmin) < FLAT_PROFILE_REL * max(1.0, abs(vmax)):
        r_hat = 1.0
    else:
        i = int(np.argmax(values))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid_points - 1)]
        r_hat, v_ref = _golden_section_max(
            lambda r: profile_loglik(t, lam, r, n), lo, hi, REFINE_TOL
        )
        if values[i] > v_ref:
            r_hat = float(grid[i])
    s2 = profile_sigma2(t, lam, r_hat, n)
    return FamilyFit(
        r_hat=float(r_hat),
        sigma2_hat=s2,
        signal_var=float(r_hat * s2),
        noise_var=float((1.0 - r_hat) * s2),
        profile_trace=tuple((float(r), float(v)) for r, v in zip(grid, values)),
    )


def center_columns(x) -> np.ndarray:
    x = as_matrix(x, "data matrix")
    return x - x.mean(axis=0, keepdims=True)


def _ordinate(x_centered, rotated, kernel, r, k):
    point = family_inner_product(kernel.eigen, r)
    cross = (rotated * point.spectral_weights) @ rotated.T
    ordination = solve_from_cross(cross, x_centered, None, k)
    # variable scores = S @ axes, done in the eigenbasis to stay O(p^2 k)
    proj = rotated.T @ ordination.row_scores / np.sqrt(ordination.eigenvalues)
    variable_scores = point.basis @ (point.spectral_weights[:, None] * proj)
    return point, ordination, variable_scores


def adaptive_gpca(x, kernel: VariableKernel, k: int = None, r_override: float = None) -> AdaptiveResult:
    """Full pipeline: center, select r by marginal likelihood (unless
    overridden), run gPCA on (X, S(r), I) and attach smoothed variable
    scores S(r) @ axes."""
    x = as_matrix(x, "data matrix")
    if x.shape[1] != kernel.dim:
        raise FamilyError(
            f"data has {x.shape[1]} variables but kernel is {kernel.dim}x{kernel.dim}"
        )
    xc = center_columns(x)
    rotated = xc @ kernel.eigen.vectors
    n = xc.shape[0]
    t = (rotated**2).sum(axis=0)
    if r_override is None:
        fit = fit_r(xc, kernel)
    else:
        if not (0.0 <= r_override <= 1.0):
            raise FamilyError(f"r must lie in [0, 1], got {r_override}")
        s2 = profile_sigma2(t, kernel.eigen.values, r_override, n)
        fit = FamilyFit(
            r_hat=float(r_override),
            sigma2_hat=s2,
            signal_var=float(r_override * s2),
            noise_var=float((1.0 - r_override) * s2),
            profile_trace=None,
        )
    point, ordination, variable_scores = _ordinate(xc, rotated, kernel, fit.r_hat, k)
    return AdaptiveResult(fit=fit, point=point, ordination=ordination, variable_scores=variable_scores)


def family_grid(x, kernel: VariableKernel, r_values, k: int = None) -> list:
    """Ordinations over a grid of r values with axes sign-aligned between
    consecutive members so slider transitions stay visually continuous."""
    r_values = [float(r) for r in r_values]
    if not r_values:
        raise FamilyError("r_values must be nonempty")
    if sorted(r_values) != r_values:
        raise FamilyError("r_values must be sorted ascending")
    for r in r_values:
        if not (0.0 <= r <= 1.0):
            raise FamilyError(f"r must lie in [0, 1], got {r}")

    x = as_matrix(x, "data matrix")
    if x.shape[1] != kernel.dim:
        raise FamilyError(
            f"data has {x.shape[1]} variables but kernel is {kernel.dim}x{kernel.dim}"
        )
    xc = center_columns(x)
    rotated = xc @ kernel.eigen.vectors
    n = xc.shape[0]
    t = (rotated**2).sum(axis=0)

    results = []
    prev_axes = None
    for r in r_values:
        s2 = profile_sigma2(t, kernel.eigen.values, r, n)
        fit = FamilyFit(
            r_hat=r,
            sigma2_hat=s2,
            signal_var=float(r * s2),
            noise_var=float((1.0 - r) * s2),
            profile_trace=None,
        )
        point, ordination, variable_scores = _ordinate(xc, rotated, kernel, r, k)
        if prev_axes is not None:
            kk = min(prev_axes.shape[1], ordination.axes.shape[1])
            flips = np.ones(ordination.axes.shape[1])
            for i in range(kk):
                if float(prev_axes[:, i] @ ordination.axes[:, i]) < 0:
                    flips[i] = -1.0
            if np.any(flips < 0):
                ordination = GpcaResult(
                    row_scores=ordination.row_scores * flips,
                    row_coordinates=ordination.row_coordinates * flips,
                    axes=ordination.axes * flips,
                    eigenvalues=ordination.eigenvalues,
                    variance_fractions=ordination.variance_fractions,
                )
                variable_scores = variable_scores * flips
        prev_axes = ordination.axes
        results.append(
            AdaptiveResult(fit=fit, point=point, ordination=ordination, variable_scores=variable_scores)
        )
    return results
