"""Delimited matrix I/O, the started-log transform, dataset assembly and
the ordination JSON document shared by the CLI, server and explorer.

Matrices travel as CSV/TSV with row and column headers.  Ordinations are
serialized as a versioned JSON document; floats are written with Python's
shortest round-trip repr, so write -> read -> write is byte-stable.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .dpcoa import DpcoaResult
from .family import AdaptiveResult
from .gpca import GpcaResult
from .trees import PhyloTree

SCHEMA_VERSION = 1


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class NamedMatrix:
    values: np.ndarray
    row_names: tuple
    col_names: tuple

    @property
    def shape(self):
        return self.values.shape

    def transposed(self) -> "NamedMatrix":
        return NamedMatrix(
            values=self.values.T.copy(), row_names=self.col_names, col_names=self.row_names
        )


def _sniff_delimiter(first_line: str) -> str:
    return "\t" if "\t" in first_line else ","


def read_matrix(path, transpose: bool = False) -> NamedMatrix:
    """Read a headered numeric matrix from CSV/TSV.

    The first row holds column names (the corner cell is optional), the
    first column row names.  Ragged rows, non-numeric or NaN cells and
    duplicate names are rejected with the offending row/column named.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    if not lines:
        raise DataError(f"{path}: empty matrix file")
    delim = _sniff_delimiter(lines[0])
    rows = list(csv.reader(lines, delimiter=delim))

    header = [c.strip() for c in rows[0]]
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: matrix has a header but no data rows")
    if header and header[0] == "":
        col_names = header[1:]  # explicit (empty) corner cell
    elif len(body[0]) == len(header):
        col_names = header[1:]  # named corner cell
    elif len(body[0]) == len(header) + 1:
        col_names = header  # corner cell omitted entirely
    else:
        raise DataError(
            f"{path}: header has {len(header)} cells but row 2 has {len(body[0])}"
        )
    width = len(col_names)
    if width < 1:
        raise DataError(f"{path}: matrix has no data columns")

    row_names = []
    values = np.empty((len(body), width))
    for i, row in enumerate(body):
        if len(row) != width + 1:
            raise DataError(
                f"{path}: row {i + 2} has {len(row)} cells, expected {width + 1} (ragged rows)"
            )
        row_names.append(row[0].strip())
        for j, cell in enumerate(row[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} at row {i + 2}, column {col_names[j]!r}"
                ) from None
            if math.isnan(v) or math.isinf(v):
                raise DataError(
                    f"{path}: non-finite cell at row {i + 2}, column {col_names[j]!r}"
                )
            values[i, j] = v

    for kind, names in (("row", row_names), ("column", col_names)):
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DataError(f"{path}: duplicate {kind} names: {dupes}")
        if any(n == "" for n in names):
            raise DataError(f"{path}: empty {kind} name")

    out = NamedMatrix(values=values, row_names=tuple(row_names), col_names=tuple(col_names))
    return out.transposed() if transpose else out


def write_matrix(path, matrix: NamedMatrix, delimiter: str = ",") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow([""] + list(matrix.col_names))
        for name, row in zip(matrix.row_names, matrix.values):
            writer.writerow([name] + [repr(float(v)) for v in row])


def started_log(x, c: float = 1.0) -> np.ndarray:
    """Elementwise log(x + c) for nonnegative data; c defaults to 1 so
    zero counts map to zero."""
    if c <= 0:
        raise DataError(f"started-log constant must be positive, got {c}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DataError("started-log input must be nonnegative")
    return np.log(arr + c)


def read_metadata(path) -> dict:
    """Sample metadata CSV keyed by the first column; numeric columns are
    coerced to float, everything else stays a string."""
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    if not lines:
        raise DataError(f"{path}: empty metadata file")
    delim = _sniff_delimiter(lines[0])
    rows = list(csv.reader(lines, delimiter=delim))
    header = [c.strip() for c in rows[0]]
    if len(header) < 2:
        raise DataError(f"{path}: metadata needs an id column plus at least one value column")
    columns = header[1:]
    table = {}
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise DataError(f"{path}: metadata row {i + 2} has {len(row)} cells, expected {len(header)}")
        table[row[0].strip()] = {col: cell.strip() for col, cell in zip(columns, row[1:])}
    # column-wise numeric coercion when every value parses
    for col in columns:
        vals = [table[k][col] for k in table]
        try:
            floats = [float(v) for v in vals]
        except ValueError:
            continue
        for k, f in zip(table, floats):
            table[k][col] = f
    return {"columns": columns, "rows": table}


@dataclass(frozen=True)
class DatasetBundle:
    """A data matrix aligned to its variable-structure source.

    When a tree is present, the columns of ``x`` have been reordered to the
    tree's leaf order (``shared_names``); a distance matrix, when present,
    has been reindexed to the same variable order.
    """

    x: NamedMatrix
    tree: PhyloTree = None
    distances: NamedMatrix = None
    metadata: dict = None
    shared_names: tuple = None


def load_bundle(
    data_path,
    *,
    tree_text: str = None,
    distances: NamedMatrix = None,
    metadata: dict = None,
    transpose: bool = False,
    min_prevalence: float = 0.0,
    transform: str = None,
    log_const: float = 1.0,
    standardize: bool = False,
    prune: bool = False,
) -> DatasetBundle:
    """Read, filter, transform and align a dataset in one pass.

    The prevalence filter runs on the raw values (presence means > 0),
    before any transform.  Alignment errors name the offending variables.
    """
    from .trees import parse_newick

    data = read_matrix(data_path, transpose=transpose)
    data = filter_by_prevalence(data, min_prevalence)
    values = data.values
    if transform in ("started-log", "started_log"):
        values = started_log(values, log_const)
    elif transform not in (None, "none"):
        raise DataError(f"unknown transform {transform!r}")
    if standardize:
        values = standardize_columns(values)
    data = NamedMatrix(values=values, row_names=data.row_names, col_names=data.col_names)

    tree = None
    shared = tuple(data.col_names)
    if tree_text is not None:
        tree = parse_newick(tree_text)
        data, shared_list = align_to_tree(data, tree, prune=prune)
        shared = tuple(shared_list)
    aligned_distances = None
    if distances is not None:
        aligned_distances = align_to_names(data, distances, "distances")
    return DatasetBundle(
        x=data, tree=tree, distances=aligned_distances, metadata=metadata, shared_names=shared
    )


def align_to_tree(data: NamedMatrix, tree: PhyloTree, prune: bool = False):
    """Reorder data columns to the tree's leaf order, matching by name.

    By default the variable sets must agree exactly.  With ``prune`` the
    analysis restricts to the intersection: extra data columns are dropped
    and the kernel is later built on the shared leaves only (removing
    leaves does not disturb the shared-ancestry geometry of the rest).
    Returns (reordered data, leaf names used).
    """
    data_names = list(data.col_names)
    leaf_names = tree.leaf_names()
    data_set, leaf_set = set(data_names), set(leaf_names)
    if not prune:
        missing_in_tree = sorted(data_set - leaf_set)
        missing_in_data = sorted(leaf_set - data_set)
        if missing_in_tree or missing_in_data:
            raise DataError(
                "variable names do not match tree leaves "
                f"(data-only: {missing_in_tree[:5]}, tree-only: {missing_in_data[:5]}); "
                "use pruning to restrict to the shared set"
            )
        shared = leaf_names
    else:
        shared = [nm for nm in leaf_names if nm in data_set]
        if len(shared) < 2:
            raise DataError("fewer than 2 variables shared between data and tree")
    index = {nm: j for j, nm in enumerate(data_names)}
    order = [index[nm] for nm in shared]
    reordered = NamedMatrix(
        values=data.values[:, order], row_names=data.row_names, col_names=tuple(shared)
    )
    return reordered, shared


def align_to_names(data: NamedMatrix, other: NamedMatrix, what: str) -> NamedMatrix:
    """Reorder a square named matrix (distances / kernel) to the data's
    column order."""
    if set(other.row_names) != set(other.col_names):
        raise DataError(f"{what}: row and column names differ")
    if set(other.col_names) != set(data.col_names):
        only_data = sorted(set(data.col_names) - set(other.col_names))
        only_other = sorted(set(other.col_names) - set(data.col_names))
        raise DataError(
            f"{what}: variable names do not match the data "
            f"(data-only: {only_data[:5]}, {what}-only: {only_other[:5]})"
        )
    index = {nm: j for j, nm in enumerate(other.col_names)}
    row_index = {nm: j for j, nm in enumerate(other.row_names)}
    cols = [index[nm] for nm in data.col_names]
    rows = [row_index[nm] for nm in data.col_names]
    return NamedMatrix(
        values=other.values[np.ix_(rows, cols)],
        row_names=data.col_names,
        col_names=data.col_names,
    )


def filter_by_prevalence(data: NamedMatrix, min_prevalence: float) -> NamedMatrix:
    """Keep variables observed (value > 0) in at least the given fraction
    of samples; 0 keeps everything."""
    if min_prevalence <= 0:
        return data
    frac = (data.values > 0).mean(axis=0)
    keep = np.flatnonzero(frac >= min_prevalence)
    if keep.size < 2:
        raise DataError(
            f"prevalence filter at {min_prevalence} leaves {keep.size} variables; need at least 2"
        )
    return NamedMatrix(
        values=data.values[:, keep],
        row_names=data.row_names,
        col_names=tuple(data.col_names[j] for j in keep),
    )


def standardize_columns(values: np.ndarray) -> np.ndarray:
    sd = values.std(axis=0, ddof=1)
    sd[sd == 0] = 1.0
    return (values - values.mean(axis=0)) / sd


# -- ordination JSON --------------------------------------------------------


def _coords_list(matrix: np.ndarray) -> list:
    return [[float(v) for v in row] for row in np.atleast_2d(matrix)]


def _sample_entries(ids, coords, metadata=None) -> list:
    out = []
    meta_rows = (metadata or {}).get("rows", {})
    for sid, row in zip(ids, coords):
        entry = {"id": str(sid), "coords": [float(v) for v in row]}
        entry["metadata"] = meta_rows.get(str(sid), {})
        out.append(entry)
    return out


def _variable_entries(names, coords) -> list:
    return [
        {"name": str(nm), "coords": [float(v) for v in row]} for nm, row in zip(names, coords)
    ]


def ordination_document(
    *,
    method: str,
    sample_ids,
    variable_names,
    sample_coords,
    variable_coords,
    eigenvalues,
    variance_fractions,
    r: float = None,
    sigma2: float = None,
    profile_trace=None,
    grid=None,
    metadata=None,
) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "method": method,
        "r": None if r is None else float(r),
        "sigma2": None if sigma2 is None else float(sigma2),
        "eigenvalues": [float(v) for v in eigenvalues],
        "variance_fractions": [float(v) for v in variance_fractions],
        "samples": _sample_entries(sample_ids, sample_coords, metadata),
        "variables": _variable_entries(variable_names, variable_coords),
        "profile_trace": None
        if profile_trace is None
        else [[float(r_), float(ll)] for r_, ll in profile_trace],
        "grid": grid,
    }
    return doc


def grid_entry(r, result: AdaptiveResult, sample_ids, variable_names, metadata=None, variable_subset=None):
    ord_ = result.ordination
    var_names = list(variable_names)
    var_coords = result.variable_scores
    if variable_subset is not None:
        var_names = [var_names[j] for j in variable_subset]
        var_coords = var_coords[variable_subset, :]
    return {
        "r": float(r),
        "eigenvalues": [float(v) for v in ord_.eigenvalues],
        "variance_fractions": [float(v) for v in ord_.variance_fractions],
        "samples": _sample_entries(sample_ids, ord_.row_coordinates, metadata),
        "variables": _variable_entries(var_names, var_coords),
    }


def document_for_result(result, *, method, sample_ids, variable_names, metadata=None, grid=None):
    """Build the ordination document for any of the result types."""
    if isinstance(result, AdaptiveResult):
        fit = result.fit
        return ordination_document(
            method=method,
            sample_ids=sample_ids,
            variable_names=variable_names,
            sample_coords=result.ordination.row_coordinates,
            variable_coords=result.variable_scores,
            eigenvalues=result.ordination.eigenvalues,
            variance_fractions=result.ordination.variance_fractions,
            r=fit.r_hat,
            sigma2=fit.sigma2_hat,
            profile_trace=fit.profile_trace,
            grid=grid,
            metadata=metadata,
        )
    if isinstance(result, DpcoaResult):
        return ordination_document(
            method=method,
            sample_ids=sample_ids,
            variable_names=variable_names,
            sample_coords=result.sample_scores,
            variable_coords=result.species_scores,
            eigenvalues=result.eigenvalues,
            variance_fractions=result.variance_fractions,
            grid=grid,
            metadata=metadata,
        )
    if isinstance(result, GpcaResult):
        return ordination_document(
            method=method,
            sample_ids=sample_ids,
            variable_names=variable_names,
            sample_coords=result.row_coordinates,
            variable_coords=result.axes,
            eigenvalues=result.eigenvalues,
            variance_fractions=result.variance_fractions,
            grid=grid,
            metadata=metadata,
        )
    raise DataError(f"cannot serialize result of type {type(result).__name__}")


def write_ordination(path, doc: dict) -> None:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DataError("document is missing the schema_version stamp")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_ordination(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DataError(
            f"unsupported ordination schema_version {doc.get('schema_version')!r}"
        )
    return doc
