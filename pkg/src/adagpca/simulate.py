"""Seeded simulation harness comparing PCA, kernel gPCA and the adaptive
pipeline on rank-one-plus-noise data with tree-structured axes.

Two generators: mode A draws the true axis from the span of the kernel's
top eigenvectors (the span size controls smoothness on the tree); mode B
uses normalized clade indicator vectors.  Replicates are scored by the
absolute correlation between the true and estimated first axis / first
score vector, where each method's "estimated axis" is the variable cloud
it would plot: v for PCA, Q v for kernel gPCA, S(r_hat) v for the adaptive
fit.

All randomness flows through a counter-based Philox stream keyed by
splitmix64(master_seed, replicate); normal deviates use Box-Muller, so
runs are bit-reproducible for a fixed configuration.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .family import adaptive_gpca
from .gpca import gpca
from .kernels import VariableKernel, tree_to_kernel
from .linalg import SymEigen
from .trees import PhyloTree, _deep_recursion

_MASK64 = (1 << 64) - 1

RNG_DESCRIPTION = "philox4x64 keyed by splitmix64(master_seed, replicate); Box-Muller normals"


class SimError(ValueError):
    pass


def splitmix64(seed: int, i: int) -> int:
    """Stateless per-replicate seed derivation (i-th splitmix64 output)."""
    z = (seed + (i + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def normal_deviates(gen: np.random.Generator, shape) -> np.ndarray:
    """Box-Muller normals from Philox uniforms (platform-stable)."""
    count = int(np.prod(shape)) if shape else 1
    half = (count + 1) // 2
    u1 = 1.0 - gen.random(half)  # (0, 1]: keeps the log finite
    u2 = gen.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:count]
    return z.reshape(shape)


# -- generators -------------------------------------------------------------


def random_tree(p: int, seed: int) -> PhyloTree:
    """Random binary topology by recursive uniform splitting of the leaf
    set, with Uniform(0, 1) branch lengths; deterministic per seed."""
    if p < 2:
        raise SimError(f"need at least 2 leaves, got {p}")
    gen = _stream(seed)
    parents, lengths, names = [None], [0.0], [None]

    def grow(parent: int, size: int, offset: int):
        idx = len(parents)
        parents.append(parent)
        lengths.append(float(gen.random()))
        names.append(None)
        if size == 1:
            names[idx] = f"t{offset + 1}"
            return
        left = int(gen.integers(1, size))
        grow(idx, left, offset)
        grow(idx, size - left, offset + left)

    with _deep_recursion(p):
        left = int(gen.integers(1, p))
        grow(0, left, 0)
        grow(0, p - left, left)
    return PhyloTree(parents=parents, lengths=lengths, names=names)


@dataclass(frozen=True)
class SimDraw:
    x: np.ndarray
    u_true: np.ndarray
    v_true: np.ndarray


def simulate_a(q_eigen: SymEigen, n: int, m: int, sigma: float, seed: int) -> SimDraw:
    """Rank-one data u v^T + noise with v drawn from the span of the top
    ``m`` kernel eigenvectors (small m = smooth axis)."""
    p = q_eigen.dim
    if not (1 <= m <= p):
        raise SimError(f"m must be in [1, {p}], got {m}")
    gen = _stream(seed)
    u = normal_deviates(gen, (n,))
    z = normal_deviates(gen, (m,))
    v = q_eigen.vectors[:, :m] @ z
    noise = sigma * normal_deviates(gen, (n, p))
    return SimDraw(x=np.outer(u, v) + noise, u_true=u, v_true=v)


def simulate_b(tree: PhyloTree, branch: int, n: int, sigma: float, seed: int) -> SimDraw:
    """Rank-one data whose true axis is the unit-normalized indicator of
    the leaves descending from ``branch`` (a node index)."""
    if not (0 <= branch < len(tree.parents)):
        raise SimError(f"branch index {branch} out of range")
    member = tree.descendant_leaves(branch)
    if not member:
        raise SimError(f"branch {branch} has no leaf descendants")
    p = tree.n_leaves
    v = np.zeros(p)
    v[member] = 1.0
    v /= math.sqrt(len(member))
    gen = _stream(seed)
    u = normal_deviates(gen, (n,))
    noise = sigma * normal_deviates(gen, (n, p))
    return SimDraw(x=np.outer(u, v) + noise, u_true=u, v_true=v)


# -- comparison -------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    mode: str  # "A" or "B"
    p: int = 100
    n: int = 50
    sigmas: tuple = (0.0, 0.5, 1.0, 2.0)
    m_values: tuple = (1, 4, 16, 100)  # mode A
    branch_min: int = 50  # mode B
    branch_max: int = 200
    replicates: int = 20
    master_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("A", "B"):
            raise SimError(f"mode must be 'A' or 'B', got {self.mode!r}")
        if self.mode == "A":
            for m in self.m_values:
                if not (1 <= m <= self.p):
                    raise SimError(f"m={m} outside [1, p={self.p}]")
        if self.replicates < 1:
            raise SimError("replicates must be >= 1")


METHODS = ("pca", "gpca_kernel", "adaptive")

CSV_COLUMNS = ("mode", "m_or_branch_size", "sigma", "replicate", "method", "axis_corr", "score_corr")


@dataclass(frozen=True)
class SimOutcome:
    config: SimConfig
    rows: tuple  # per-replicate, per-method dict rows in CSV_COLUMNS order
    aggregate: tuple  # per-cell, per-method means and standard errors
    failures: tuple
    rng: str = RNG_DESCRIPTION


def _abs_corr(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0:
        return 0.0
    return abs(float(a @ b) / denom)


def _fit_methods(x: np.ndarray, kernel: VariableKernel, draw: SimDraw) -> dict:
    xc = x - x.mean(axis=0)
    out = {}

    plain = gpca(xc, None, None, 1)
    out["pca"] = (
        _abs_corr(draw.v_true, plain.axes[:, 0]),
        _abs_corr(draw.u_true, plain.row_scores[:, 0]),
    )

    smooth = gpca(xc, kernel, None, 1)
    kernel_cloud = kernel.matrix @ smooth.axes[:, 0]
    out["gpca_kernel"] = (
        _abs_corr(draw.v_true, kernel_cloud),
        _abs_corr(draw.u_true, smooth.row_scores[:, 0]),
    )

    adaptive = adaptive_gpca(x, kernel, k=1)
    out["adaptive"] = (
        _abs_corr(draw.v_true, adaptive.variable_scores[:, 0]),
        _abs_corr(draw.u_true, adaptive.ordination.row_scores[:, 0]),
    )
    return out


def eligible_branches(tree: PhyloTree, low: int, high: int) -> list:
    """Node indices whose leaf-descendant count lies in [low, high]."""
    out = []
    for node in range(len(tree.parents)):
        size = len(tree.descendant_leaves(node))
        if low <= size <= high:
            out.append((node, size))
    return out


def run_comparison(config: SimConfig) -> SimOutcome:
    """Run every (cell, replicate, method) combination of the config.

    A failed replicate is recorded with empty correlation fields instead of
    aborting the sweep.  Identical configs produce bit-identical outcomes.
    """
    tree = random_tree(config.p, config.master_seed)
    kernel = tree_to_kernel(tree)

    if config.mode == "A":
        cells = [(m, m) for m in config.m_values]  # (cell key, m)
    else:
        branches = eligible_branches(tree, config.branch_min, config.branch_max)
        if not branches:
            raise SimError(
                f"no branch has between {config.branch_min} and {config.branch_max} leaf descendants"
            )
        cells = [(size, node) for node, size in branches]

    rows = []
    failures = []
    for cell_key, cell_param in cells:
        for sigma in config.sigmas:
            for rep in range(config.replicates):
                seed = splitmix64(config.master_seed, rep)
                try:
                    if config.mode == "A":
                        draw = simulate_a(kernel.eigen, config.n, cell_param, sigma, seed)
                    else:
                        draw = simulate_b(tree, cell_param, config.n, sigma, seed)
                    scores = _fit_methods(draw.x, kernel, draw)
                except Exception as exc:  # noqa: BLE001 - record, don't abort
                    failures.append(
                        {"m_or_branch_size": cell_key, "sigma": sigma, "replicate": rep, "error": str(exc)}
                    )
                    for method in METHODS:
                        rows.append(
                            {
                                "mode": config.mode,
                                "m_or_branch_size": cell_key,
                                "sigma": sigma,
                                "replicate": rep,
                                "method": method,
                                "axis_corr": None,
                                "score_corr": None,
                            }
                        )
                    continue
                for method in METHODS:
                    axis_corr, score_corr = scores[method]
                    rows.append(
                        {
                            "mode": config.mode,
                            "m_or_branch_size": cell_key,
                            "sigma": sigma,
                            "replicate": rep,
                            "method": method,
                            "axis_corr": axis_corr,
                            "score_corr": score_corr,
                        }
                    )

    aggregate = aggregate_rows(rows)
    return SimOutcome(config=config, rows=tuple(rows), aggregate=tuple(aggregate), failures=tuple(failures))


def aggregate_rows(rows) -> list:
    """Means and standard errors per (mode, cell, sigma, method)."""
    groups = {}
    for row in rows:
        key = (row["mode"], row["m_or_branch_size"], row["sigma"], row["method"])
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], METHODS.index(k[3]))):
        bucket = groups[key]
        axis = np.array([r["axis_corr"] for r in bucket if r["axis_corr"] is not None])
        score = np.array([r["score_corr"] for r in bucket if r["score_corr"] is not None])
        n_ok = axis.size

        def _mean(v):
            return float(v.mean()) if v.size else None

        def _se(v):
            return float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else None

        out.append(
            {
                "mode": key[0],
                "m_or_branch_size": key[1],
                "sigma": key[2],
                "method": key[3],
                "mean_axis_corr": _mean(axis),
                "se_axis_corr": _se(axis),
                "mean_score_corr": _mean(score),
                "se_score_corr": _se(score),
                "n_ok": n_ok,
                "n_failed": len(bucket) - n_ok,
            }
        )
    return out


def _csv_text(fieldnames, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fieldnames})
    return buf.getvalue()


def tidy_csv(outcome: SimOutcome) -> str:
    return _csv_text(CSV_COLUMNS, [{k: r[k] for k in CSV_COLUMNS} for r in outcome.rows])


def aggregate_csv(outcome: SimOutcome) -> str:
    fields = (
        "mode",
        "m_or_branch_size",
        "sigma",
        "method",
        "mean_axis_corr",
        "se_axis_corr",
        "mean_score_corr",
        "se_score_corr",
        "n_ok",
        "n_failed",
    )
    return _csv_text(fields, outcome.aggregate)
