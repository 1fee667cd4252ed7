"""Command-line entry points.

Exit codes follow the usual convention: 0 success, 1 internal error,
2 invalid input (bad flags, malformed or misaligned files).
Every artifact gets a ``<name>.manifest.json`` sidecar recording the
command line, input digests, seed and wall time.
"""

from __future__ import annotations

import os

import click
import numpy as np

from . import dataio, plots
from .dpcoa import DpcoaError, count_table, dpcoa_stepwise
from .family import FamilyError, adaptive_gpca, family_grid
from .gpca import gpca
from .kernels import (
    KernelError,
    distances_to_kernel,
    kernel_from_matrix,
    tree_to_kernel,
)
from .linalg import LinalgError
from .manifest import ManifestTimer
from .simulate import (
    RNG_DESCRIPTION,
    SimConfig,
    SimError,
    aggregate_csv,
    run_comparison,
    tidy_csv,
)
from .trees import NewickError, TreeError, parse_newick

_INPUT_ERRORS = (
    dataio.DataError,
    KernelError,
    FamilyError,
    DpcoaError,
    SimError,
    LinalgError,
    NewickError,
    TreeError,
    OSError,
)


class InputError(click.ClickException):
    exit_code = 2


@click.group()
def main():
    """Kernel-smoothed generalized PCA toolkit."""


# -- shared loading ----------------------------------------------------------


def _load_tree(path):
    with open(path, encoding="utf-8") as fh:
        return parse_newick(fh.read())


def _prepare_data(data_path, transpose, min_prevalence, transform, log_const, standardize):
    bundle = dataio.load_bundle(
        data_path,
        transpose=transpose,
        min_prevalence=min_prevalence,
        transform=transform,
        log_const=log_const,
        standardize=standardize,
    )
    return bundle.x


def _load_aligned(
    data_path,
    transpose,
    min_prevalence,
    transform,
    log_const,
    standardize,
    tree_path,
    distances_path,
    kernel_path,
    prune,
    metadata_path,
):
    """Load everything, align variable orders, and build the kernel."""
    sources = [s for s in (tree_path, distances_path, kernel_path) if s]
    if len(sources) != 1:
        raise InputError("provide exactly one kernel source: --tree, --distances or --kernel")
    tree_text = None
    if tree_path:
        with open(tree_path, encoding="utf-8") as fh:
            tree_text = fh.read()
    distances = dataio.read_matrix(distances_path) if distances_path else None
    bundle = dataio.load_bundle(
        data_path,
        tree_text=tree_text,
        distances=distances,
        metadata=_load_metadata(metadata_path),
        transpose=transpose,
        min_prevalence=min_prevalence,
        transform=transform,
        log_const=log_const,
        standardize=standardize,
        prune=prune,
    )
    if tree_path:
        kernel = tree_to_kernel(bundle.tree, names=bundle.shared_names)
    elif distances_path:
        kernel = distances_to_kernel(bundle.distances.values, names=bundle.distances.col_names)
    else:
        aligned = dataio.align_to_names(bundle.x, dataio.read_matrix(kernel_path), "kernel")
        kernel = kernel_from_matrix(aligned.values, names=aligned.col_names)
    return bundle, kernel


def _parse_r_grid(spec: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise InputError(f"malformed r grid {spec!r}; expected start:end:step")
    try:
        start, end, step = (float(v) for v in parts)
    except ValueError:
        raise InputError(f"malformed r grid {spec!r}; expected numeric start:end:step") from None
    if not (0.0 <= start <= end <= 1.0) or step <= 0:
        raise InputError(f"r grid {spec!r} must satisfy 0 <= start <= end <= 1 with step > 0")
    count = int(np.floor((end - start) / step + 1e-9)) + 1
    values = [min(round(start + i * step, 12), 1.0) for i in range(count)]
    if values[-1] < end - 1e-9:
        values.append(end)
    return values


def _add_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return wrap


_data_options = [
    click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False)),
    click.option("--transpose", is_flag=True, help="Data file stores variables as rows."),
    click.option(
        "--min-prevalence",
        default=0.0,
        show_default=True,
        help="Drop variables observed in fewer than this fraction of samples (applied before any transform).",
    ),
    click.option("--transform", type=click.Choice(["none", "started-log"]), default="none", show_default=True),
    click.option("--log-const", default=1.0, show_default=True, help="Constant c of log(x + c)."),
    click.option("--standardize", is_flag=True, help="Scale columns to unit variance after the transform."),
]

_kernel_options = [
    click.option("--tree", "tree_path", type=click.Path(exists=True, dir_okay=False)),
    click.option("--distances", "distances_path", type=click.Path(exists=True, dir_okay=False)),
    click.option("--kernel", "kernel_path", type=click.Path(exists=True, dir_okay=False)),
    click.option("--prune", is_flag=True, help="Restrict to variables shared between data and tree."),
]


def _load_metadata(metadata_path):
    return dataio.read_metadata(metadata_path) if metadata_path else None


def _maybe_plot(plot_path, doc, color_by=None):
    if plot_path:
        plots.save_figure(plots.ordination_figure(doc, color_by=color_by), plot_path)


# -- commands ----------------------------------------------------------------


@main.command("kernel")
@click.option("--tree", "tree_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--distances", "distances_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def cmd_kernel(tree_path, distances_path, out_path):
    """Build a trace-normalized variable kernel and write it as CSV."""
    if bool(tree_path) == bool(distances_path):
        raise InputError("provide exactly one of --tree or --distances")
    timer = ManifestTimer()
    try:
        if tree_path:
            timer.add_input(tree_path)
            tree = _load_tree(tree_path)
            kernel = tree_to_kernel(tree)
        else:
            timer.add_input(distances_path)
            dist = dataio.read_matrix(distances_path)
            kernel = distances_to_kernel(dist.values, names=dist.col_names)
        names = list(kernel.names)
        dataio.write_matrix(
            out_path,
            dataio.NamedMatrix(values=kernel.matrix, row_names=tuple(names), col_names=tuple(names)),
        )
        timer.write(out_path)
    except _INPUT_ERRORS as exc:
        raise InputError(str(exc)) from exc
    click.echo(f"wrote {kernel.dim}x{kernel.dim} kernel to {out_path}")


@main.command("fit")
@_add_options(_data_options)
@_add_options(_kernel_options)
@click.option("--k", default=2, show_default=True, help="Number of ordination axes.")
@click.option("--r", "r_override", type=float, default=None, help="Fix the smoothing level instead of fitting it.")
@click.option("--metadata", "metadata_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), help="Also render a biplot PNG.")
@click.option("--color-by", default=None, help="Metadata column for coloring the plot.")
def cmd_fit(
    data_path,
    transpose,
    min_prevalence,
    transform,
    log_const,
    standardize,
    tree_path,
    distances_path,
    kernel_path,
    prune,
    k,
    r_override,
    metadata_path,
    out_path,
    plot_path,
    color_by,
):
    """Fit the smoothing level by marginal likelihood and ordinate."""
    timer = ManifestTimer()
    try:
        for p in (data_path, tree_path, distances_path, kernel_path, metadata_path):
            timer.add_input(p)
        bundle, kernel = _load_aligned(
            data_path, transpose, min_prevalence, transform, log_const, standardize,
            tree_path, distances_path, kernel_path, prune, metadata_path,
        )
        result = adaptive_gpca(bundle.x.values, kernel, k=k, r_override=r_override)
        doc = dataio.document_for_result(
            result,
            method="adaptive-gpca",
            sample_ids=bundle.x.row_names,
            variable_names=bundle.x.col_names,
            metadata=bundle.metadata,
        )
        dataio.write_ordination(out_path, doc)
        timer.write(out_path)
        _maybe_plot(plot_path, doc, color_by)
    except _INPUT_ERRORS as exc:
        raise InputError(str(exc)) from exc
    click.echo(f"r = {result.fit.r_hat:.6g}, sigma2 = {result.fit.sigma2_hat:.6g} -> {out_path}")


@main.command("grid")
@_add_options(_data_options)
@_add_options(_kernel_options)
@click.option("--r-grid", "r_grid", default="0:1:0.01", show_default=True, help="start:end:step over [0, 1].")
@click.option("--k", default=2, show_default=True)
@click.option("--metadata", "metadata_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--top-loadings", "top_loadings", type=int, default=None,
              help="Keep only this many highest-loading variables in each grid entry (full set stays at top level).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), help="Also render the profile-likelihood PNG.")
def cmd_grid(
    data_path,
    transpose,
    min_prevalence,
    transform,
    log_const,
    standardize,
    tree_path,
    distances_path,
    kernel_path,
    prune,
    r_grid,
    k,
    metadata_path,
    top_loadings,
    out_path,
    plot_path,
):
    """Precompute the whole family of ordinations for the explorer."""
    r_values = _parse_r_grid(r_grid)
    timer = ManifestTimer()
    try:
        for p in (data_path, tree_path, distances_path, kernel_path, metadata_path):
            timer.add_input(p)
        bundle, kernel = _load_aligned(
            data_path, transpose, min_prevalence, transform, log_const, standardize,
            tree_path, distances_path, kernel_path, prune, metadata_path,
        )
        data, metadata = bundle.x, bundle.metadata

        fitted = adaptive_gpca(data.values, kernel, k=k)
        members = family_grid(data.values, kernel, r_values, k=k)

        subset = None
        if top_loadings is not None and top_loadings < len(data.col_names):
            magnitude = np.abs(fitted.variable_scores).max(axis=1)
            subset = np.sort(np.argsort(magnitude)[::-1][:top_loadings])
        entries = [
            dataio.grid_entry(r, member, data.row_names, data.col_names, metadata, subset)
            for r, member in zip(r_values, members)
        ]
        doc = dataio.document_for_result(
            fitted,
            method="adaptive-gpca-grid",
            sample_ids=data.row_names,
            variable_names=data.col_names,
            metadata=metadata,
            grid=entries,
        )
        dataio.write_ordination(out_path, doc)
        timer.write(out_path)
        if plot_path and fitted.fit.profile_trace:
            plots.save_figure(
                plots.profile_figure(fitted.fit.profile_trace, fitted.fit.r_hat), plot_path
            )
    except _INPUT_ERRORS as exc:
        raise InputError(str(exc)) from exc
    click.echo(f"wrote {len(r_values)}-point grid (r_hat = {fitted.fit.r_hat:.6g}) to {out_path}")


@main.command("pca")
@_add_options(_data_options)
@click.option("--k", default=2, show_default=True)
@click.option("--metadata", "metadata_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False))
@click.option("--color-by", default=None)
def cmd_pca(
    data_path,
    transpose,
    min_prevalence,
    transform,
    log_const,
    standardize,
    k,
    metadata_path,
    out_path,
    plot_path,
    color_by,
):
    """Plain PCA (identity inner products) with the same I/O conventions."""
    timer = ManifestTimer()
    try:
        timer.add_input(data_path)
        timer.add_input(metadata_path)
        data = _prepare_data(data_path, transpose, min_prevalence, transform, log_const, standardize)
        centered = data.values - data.values.mean(axis=0)
        result = gpca(centered, None, None, k)
        doc = dataio.document_for_result(
            result,
            method="pca",
            sample_ids=data.row_names,
            variable_names=data.col_names,
            metadata=_load_metadata(metadata_path),
        )
        dataio.write_ordination(out_path, doc)
        timer.write(out_path)
        _maybe_plot(plot_path, doc, color_by)
    except _INPUT_ERRORS as exc:
        raise InputError(str(exc)) from exc
    click.echo(f"wrote {result.k}-axis PCA to {out_path}")


@main.command("dpcoa")
@click.option("--counts", "counts_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--distances", "distances_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", default=2, show_default=True)
@click.option("--metadata", "metadata_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False))
@click.option("--color-by", default=None)
def cmd_dpcoa(counts_path, distances_path, k, metadata_path, out_path, plot_path, color_by):
    """Double principal coordinates analysis of a count table."""
    timer = ManifestTimer()
    try:
        for p in (counts_path, distances_path, metadata_path):
            timer.add_input(p)
        counts = dataio.read_matrix(counts_path)
        dist = dataio.align_to_names(counts, dataio.read_matrix(distances_path), "distances")
        table = count_table(counts.values)
        result = dpcoa_stepwise(table, dist.values, k)
        doc = dataio.document_for_result(
            result,
            method="dpcoa",
            sample_ids=counts.row_names,
            variable_names=counts.col_names,
            metadata=_load_metadata(metadata_path),
        )
        dataio.write_ordination(out_path, doc)
        timer.write(out_path)
        _maybe_plot(plot_path, doc, color_by)
    except _INPUT_ERRORS as exc:
        raise InputError(str(exc)) from exc
    click.echo(f"wrote DPCoA ordination to {out_path}")


@main.command("sim")
@click.option("--mode", type=click.Choice(["A", "B"]), required=True)
@click.option("--p", default=100, show_default=True)
@click.option("--n", default=50, show_default=True)
@click.option("--sigma", "sigmas", multiple=True, type=float, help="Repeatable; defaults to 0 0.5 1 2.")
@click.option("--m", "m_values", multiple=True, type=int, help="Mode A axis spans; defaults to 1 4 16 100.")
@click.option("--branch-min", default=50, show_default=True)
@click.option("--branch-max", default=200, show_default=True)
@click.option("--replicates", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", "out_dir", required=True, type=click.Path(file_okay=False))
def cmd_sim(mode, p, n, sigmas, m_values, branch_min, branch_max, replicates, seed, out_dir):
    """Method-comparison simulations; emits tidy + aggregate CSV and figures."""
    timer = ManifestTimer(seed=seed, rng=RNG_DESCRIPTION)
    try:
        config = SimConfig(
            mode=mode,
            p=p,
            n=n,
            sigmas=tuple(sigmas) if sigmas else (0.0, 0.5, 1.0, 2.0),
            m_values=tuple(m_values) if m_values else tuple(m for m in (1, 4, 16, 100) if m <= p),
            branch_min=branch_min,
            branch_max=branch_max,
            replicates=replicates,
            master_seed=seed,
        )
        outcome = run_comparison(config)
        os.makedirs(out_dir, exist_ok=True)
        results_path = os.path.join(out_dir, "results.csv")
        with open(results_path, "w", encoding="utf-8") as fh:
            fh.write(tidy_csv(outcome))
        aggregate_path = os.path.join(out_dir, "aggregate.csv")
        with open(aggregate_path, "w", encoding="utf-8") as fh:
            fh.write(aggregate_csv(outcome))
        plots.save_figure(
            plots.sim_figure(list(outcome.aggregate), "mean_axis_corr"),
            os.path.join(out_dir, "axis_corr.png"),
        )
        plots.save_figure(
            plots.sim_figure(list(outcome.aggregate), "mean_score_corr"),
            os.path.join(out_dir, "score_corr.png"),
        )
        timer.write(results_path)
    except _INPUT_ERRORS as exc:
        raise InputError(str(exc)) from exc
    click.echo(
        f"mode {mode}: {len(outcome.rows)} rows, {len(outcome.failures)} failures -> {out_dir}"
    )


@main.command("serve")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--static", "static_dir", type=click.Path(file_okay=False), default=None,
              help="Directory with explorer assets (defaults to the bundled placeholder).")
def cmd_serve(input_path, host, port, static_dir):
    """Serve a precomputed grid to the browser explorer (read-only)."""
    from .server import OrdinationServer

    try:
        server = OrdinationServer.from_file(input_path, static_dir=static_dir)
    except _INPUT_ERRORS as exc:
        raise InputError(str(exc)) from exc
    click.echo(f"serving {input_path} on http://{host}:{port}/ (Ctrl-C to stop)")
    server.serve_forever(host, port)


if __name__ == "__main__":
    main()
