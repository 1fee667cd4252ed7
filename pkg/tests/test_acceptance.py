"""Acceptance suite: every criterion runs at its stated tolerance and
prints one PASS/FAIL line (run with ``pytest -s tests/test_acceptance.py``
to watch them stream)."""

import time

import numpy as np
import pytest

from adagpca import dataio
from adagpca.dpcoa import count_table, dpcoa_equivalence_report
from adagpca.family import (
    adaptive_gpca,
    family_grid,
    fit_r,
    profile_loglik,
    profile_sigma2,
    rotated_square_sums,
)
from adagpca.gpca import align_signs, gpca
from adagpca.kernels import kernel_from_matrix, tree_to_kernel
from adagpca.linalg import sym_eigen
from adagpca.simulate import (
    SimConfig,
    normal_deviates,
    random_tree,
    run_comparison,
    splitmix64,
)


def _report(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"{status}: {name}{suffix}", flush=True)
    assert ok, f"{name}{suffix}"


def random_pd(rng, p, ridge=0.4):
    b = rng.standard_normal((p, p))
    return b @ b.T + ridge * np.eye(p)


def test_smoothed_triple_score_equivalence():
    """gpca(XS, S^-1, I) vs the pipeline's gpca(X, S, I): scores match up
    to per-axis sign and one global scale; axes after S-premultiplication."""
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    worst_scores, worst_axes = 0.0, 0.0
    for trial in range(20):
        n, p, k = 10, 15, 4
        kern = kernel_from_matrix(random_pd(rng, p))
        x = rng.standard_normal((n, p))
        r = float(rng.choice([0.2, 0.5, 0.8]))
        res = adaptive_gpca(x, kern, k=k, r_override=r)
        s = res.point.matrix()
        xc = x - x.mean(axis=0)
        other = gpca(xc @ s, np.linalg.inv(s), None, k)

        flips = align_signs(res.ordination.row_scores, other.row_scores)
        aligned = other.row_scores * flips
        # one global scale, estimated from the dominant column
        scale = (aligned[:, 0] @ res.ordination.row_scores[:, 0]) / (aligned[:, 0] @ aligned[:, 0])
        ref = np.abs(res.ordination.row_scores).max()
        worst_scores = max(worst_scores, np.abs(res.ordination.row_scores - aligned * scale).max() / ref)

        transformed = s @ res.ordination.axes
        aligned_axes = other.axes * flips
        ref_a = np.abs(transformed).max()
        worst_axes = max(worst_axes, np.abs(transformed - aligned_axes * scale).max() / ref_a)
    elapsed = time.perf_counter() - start
    ok = worst_scores < 1e-8 and worst_axes < 1e-8 and elapsed < 10.0
    _report(
        "smoothed-triple equivalence (20 instances)",
        ok,
        f"score err {worst_scores:.2e}, axis err {worst_axes:.2e}, {elapsed:.1f}s",
    )


def test_dpcoa_two_route_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(2002)
    worst_samples, worst_species = 0.0, 0.0
    for trial in range(20):
        n, p = 6, 9
        counts = rng.poisson(3.0, (n, p)).astype(float) + (rng.random((n, p)) < 0.2)
        counts[counts.sum(axis=1) == 0, 0] = 1.0
        zero_cols = np.flatnonzero(counts.sum(axis=0) == 0)
        counts[0, zero_cols] = 1.0
        pts = rng.standard_normal((p, 4))
        delta = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        report = dpcoa_equivalence_report(counts, delta, k=3)
        worst_samples = max(worst_samples, report["max_sample_score_gap"])
        worst_species = max(worst_species, report["max_species_score_gap"])
    elapsed = time.perf_counter() - start
    ok = worst_samples < 1e-8 and worst_species < 1e-8 and elapsed < 10.0
    _report(
        "DPCoA stepwise/gPCA equivalence (20 tables)",
        ok,
        f"sample gap {worst_samples:.2e}, species gap {worst_species:.2e}, {elapsed:.1f}s",
    )


def test_family_endpoint_recovery():
    rng = np.random.default_rng(3003)
    worst = 1.0
    for trial in range(10):
        n, p, k = 12, 9, 2
        kern = kernel_from_matrix(random_pd(rng, p))
        x = rng.standard_normal((n, p))
        xc = x - x.mean(axis=0)

        at_one = adaptive_gpca(x, kern, k=k, r_override=1.0)
        u, s, vt = np.linalg.svd(xc, full_matrices=False)
        for i in range(k):
            c = abs(np.corrcoef(at_one.ordination.row_scores[:, i], u[:, i])[0, 1])
            worst = min(worst, c)

        at_zero = adaptive_gpca(x, kern, k=k, r_override=0.0)
        plain = gpca(xc, kern.matrix, None, k)
        for i in range(k):
            c = abs(np.corrcoef(at_zero.ordination.row_scores[:, i], plain.row_scores[:, i])[0, 1])
            worst = min(worst, c)
    ok = worst > 1 - 1e-10
    _report("endpoint recovery r=1 -> PCA, r=0 -> kernel gPCA", ok, f"min |corr| {worst:.12f}")


def test_profile_likelihood_correctness():
    rng = np.random.default_rng(4004)
    worst = 0.0
    for trial in range(50):
        p = int(rng.integers(3, 9))
        n = int(rng.integers(4, 14))
        kern = kernel_from_matrix(random_pd(rng, p))
        x = rng.standard_normal((n, p))
        t = rotated_square_sums(x, kern.eigen)
        lam = kern.eigen.values
        r = float(rng.uniform(0, 1))
        s2 = profile_sigma2(t, lam, r, n)
        cov = r * s2 * kern.matrix + (1 - r) * s2 * np.eye(p)
        sign, logdet = np.linalg.slogdet(cov)
        quad = float((x.T * np.linalg.solve(cov, x.T)).sum())
        direct = -(n / 2.0) * logdet - 0.5 * quad
        worst = max(worst, abs(profile_loglik(t, lam, r, n) - direct))

    # optimizer vs brute force on a fresh instance
    kern = kernel_from_matrix(random_pd(rng, 10))
    root = (kern.eigen.vectors * np.sqrt(0.6 * kern.eigen.values + 0.4)) @ kern.eigen.vectors.T
    x = rng.standard_normal((60, 10)) @ root
    xc = x - x.mean(axis=0)
    fit = fit_r(xc, kern)
    t = rotated_square_sums(xc, kern.eigen)
    grid = np.arange(0.0, 1.0 + 1e-12, 1e-3)
    vals = [profile_loglik(t, kern.eigen.values, r, 60) for r in grid]
    brute = float(grid[int(np.argmax(vals))])
    gap = abs(fit.r_hat - brute)
    ok = worst < 1e-10 and gap <= 2e-3
    _report(
        "profile likelihood equals direct evaluation; optimizer matches brute grid",
        ok,
        f"max |diff| {worst:.2e}, optimizer gap {gap:.2e}",
    )


def test_model_recovery_of_smoothing_level():
    start = time.perf_counter()
    true_r, n, p = 0.7, 200, 50
    tree = random_tree(p, seed=777)
    kern = tree_to_kernel(tree)
    lam = kern.eigen.values
    v = kern.eigen.vectors
    hats = []
    for rep in range(20):
        gen = np.random.Generator(np.random.Philox(key=splitmix64(555, rep)))
        signal = normal_deviates(gen, (n, p)) * np.sqrt(true_r * lam)
        mu = signal @ v.T
        x = mu + np.sqrt(1 - true_r) * normal_deviates(gen, (n, p))
        hats.append(fit_r(x - x.mean(axis=0), kern).r_hat)
    mean_hat = float(np.mean(hats))
    elapsed = time.perf_counter() - start
    ok = abs(mean_hat - true_r) <= 0.1 and elapsed < 120.0
    _report(
        "model recovery of r (true 0.7, 20 replicates)",
        ok,
        f"mean r_hat {mean_hat:.3f}, {elapsed:.1f}s",
    )


def test_simulation_a_orderings():
    config = SimConfig(
        mode="A", p=100, n=50, sigmas=(0.0,), m_values=(1, 4), replicates=20, master_seed=11
    )
    outcome = run_comparison(config)
    cells = {(row["m_or_branch_size"], row["method"]): row for row in outcome.aggregate}
    pca_m1 = cells[(1, "pca")]["mean_axis_corr"]
    ada_m1 = cells[(1, "adaptive")]["mean_axis_corr"]
    pca_m4 = cells[(4, "pca")]["mean_axis_corr"]
    ada_m4 = cells[(4, "adaptive")]["mean_axis_corr"]
    kernel_m4 = cells[(4, "gpca_kernel")]["mean_axis_corr"]
    ok = (
        pca_m1 > 0.999
        and ada_m1 > 0.999
        and pca_m4 > 0.999
        and ada_m4 > 0.999
        and kernel_m4 < ada_m4
    )
    _report(
        "simulation A noiseless orderings",
        ok,
        f"pca {pca_m1:.4f}/{pca_m4:.4f}, adaptive {ada_m1:.4f}/{ada_m4:.4f}, kernel@m4 {kernel_m4:.4f}",
    )


def test_simulation_b_adaptive_dominates():
    start = time.perf_counter()
    config = SimConfig(
        mode="B",
        p=300,
        n=50,
        sigmas=(1.0, 2.0),
        branch_min=50,
        branch_max=200,
        replicates=20,
        master_seed=13,
    )
    outcome = run_comparison(config)
    details = []
    ok = len(outcome.failures) == 0
    for sigma in (1.0, 2.0):
        means = {}
        for method in ("pca", "gpca_kernel", "adaptive"):
            vals = [
                row["axis_corr"]
                for row in outcome.rows
                if row["sigma"] == sigma and row["method"] == method and row["axis_corr"] is not None
            ]
            means[method] = float(np.mean(vals))
        floor = max(means["pca"], means["gpca_kernel"]) - 0.02
        ok = ok and means["adaptive"] >= floor
        details.append(
            f"sigma={sigma:g}: adaptive {means['adaptive']:.4f} vs max(other) {max(means['pca'], means['gpca_kernel']):.4f}"
        )
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 600.0
    _report("simulation B adaptive dominance", ok, "; ".join(details) + f", {elapsed:.0f}s")


def test_numerical_core():
    rng = np.random.default_rng(5005)
    a = rng.standard_normal((50, 50))
    a = (a + a.T) / 2.0
    e = sym_eigen(a)
    recon = np.linalg.norm(e.reconstruct() - a) / np.linalg.norm(a)
    ortho = np.abs(e.vectors.T @ e.vectors - np.eye(50)).max()
    ok = recon <= 1e-10 and ortho <= 1e-10
    _report("numerical core 50x50 eigendecomposition", ok, f"recon {recon:.2e}, ortho {ortho:.2e}")


def test_scale_fidelity(tmp_path):
    n, p = 162, 2000
    tree = random_tree(p, seed=99)
    gen = np.random.Generator(np.random.Philox(key=42))
    x = normal_deviates(gen, (n, p))

    start = time.perf_counter()
    kern = tree_to_kernel(tree)
    fitted = adaptive_gpca(x, kern, k=2)
    rs = [i / 100 for i in range(101)]
    members = family_grid(x, kern, rs, k=2)
    sample_ids = [f"s{i}" for i in range(n)]
    variable_names = list(kern.names)
    entries = [
        dataio.grid_entry(r, m, sample_ids, variable_names) for r, m in zip(rs, members)
    ]
    doc = dataio.document_for_result(
        fitted,
        method="adaptive-gpca-grid",
        sample_ids=sample_ids,
        variable_names=variable_names,
        grid=entries,
    )
    dataio.write_ordination(tmp_path / "grid.json", doc)
    elapsed = time.perf_counter() - start
    ok = elapsed < 60.0 and len(doc["grid"]) == 101
    _report("scale fidelity n=162, p=2000 fit + 101-point grid", ok, f"{elapsed:.1f}s")
