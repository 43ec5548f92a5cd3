"""Reference solutions and evaluation metrics.

The finite-difference Poisson solver stands in for a full FEM pipeline at
desk scale.  It solves -lap(p) = f with Dirichlet data on an axis-aligned
grid masked to the analytic domain; stencil arms that cross the boundary are
shortened to the exact intersection point (Shortley-Weller), which keeps
second-order global accuracy on curved boundaries such as the disk.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage
import scipy.sparse
import scipy.sparse.linalg


class OracleError(ArithmeticError):
    pass


@dataclass
class ReferenceField:
    nodes: np.ndarray
    values: np.ndarray
    provenance: str = "fd-oracle"

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.nodes.shape[0] != self.values.shape[0] or self.nodes.shape[0] < 1:
            raise ValueError("nodes/values must be non-empty and equal length")


def rel_l2(pred, ref):
    """||pred - ref|| / ||ref|| over all nodes and channels jointly."""
    pred = np.asarray(pred, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if pred.shape != ref.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {ref.shape}")
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise ValueError("reference field has zero norm")
    return float(np.linalg.norm(pred - ref) / denom)


class DiskSolution:
    """Closed-form pressure on a disk with constant forcing and zero rim."""

    def __init__(self, radius=1.0, f=10.0, center=(0.0, 0.0)):
        self.radius = float(radius)
        self.f = float(f)
        self.center = np.asarray(center, dtype=np.float64)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        r2 = (pts[:, 0] - self.center[0]) ** 2 + (pts[:, 1] - self.center[1]) ** 2
        return (self.f / 4.0) * (self.radius**2 - r2)

    def reference(self, nodes):
        return ReferenceField(nodes, self(np.asarray(nodes)), provenance="analytic")


def analytic_disk_solution(radius=1.0, f=10.0, center=(0.0, 0.0)):
    return DiskSolution(radius, f, center)


def _grid_axes(geom, h):
    x0, y0, x1, y1 = geom.bounding_box()
    nx = round((x1 - x0) / h)
    ny = round((y1 - y0) / h)
    if abs(nx * h - (x1 - x0)) > 1e-9 * geom.scale() or nx < 2:
        raise OracleError(f"step {h} does not tile the bounding box width")
    if abs(ny * h - (y1 - y0)) > 1e-9 * geom.scale() or ny < 2:
        raise OracleError(f"step {h} does not tile the bounding box height")
    xs = x0 + np.arange(nx + 1) * h
    ys = y0 + np.arange(ny + 1) * h
    return xs, ys


def grid_interior_nodes(geom, h):
    """Grid nodes strictly inside the domain, row-major in (y, x)."""
    xs, ys = _grid_axes(geom, h)
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    mask = geom.contains(pts, strict=True).reshape(Y.shape)
    return xs, ys, mask


def square_boundary_nodes(geom, h):
    """Perimeter grid nodes of an axis-aligned polygonal domain, deduplicated.

    These are exactly the Dirichlet points the masked solver will query when
    every boundary piece lies on a grid line, and they double as the joint
    GP evaluation set when generating realizations.
    """
    xs, ys, mask = grid_interior_nodes(geom, h)
    nodes = []
    seen = set()
    for iy in range(mask.shape[0]):
        for ix in range(mask.shape[1]):
            if not mask[iy, ix]:
                continue
            for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
                jy, jx = iy + dy, ix + dx
                if not (0 <= jy < mask.shape[0] and 0 <= jx < mask.shape[1]):
                    raise OracleError(
                        "boundary node falls off the grid; domain edges must "
                        "lie on grid lines"
                    )
                if not mask[jy, jx] and (jy, jx) not in seen:
                    seen.add((jy, jx))
                    nodes.append((float(xs[jx]), float(ys[jy])))
    return np.array(sorted(nodes))


def fd_poisson_solve(geom, h, f, g, return_info=False):
    """Solve -lap(p) = f on the masked grid with Dirichlet data g.

    f is a scalar or callable over (n, 2) points; g is a callable over (n, 2)
    boundary points (evaluated at the exact intersection of each cut stencil
    arm with the analytic boundary).  Returns a ReferenceField over the
    strictly interior grid nodes.
    """
    xs, ys, mask = grid_interior_nodes(geom, h)
    ny, nx = mask.shape
    labels, ncomp = scipy.ndimage.label(
        mask, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    )
    if ncomp != 1:
        raise OracleError(f"in-domain mask has {ncomp} connected components")

    idx = -np.ones(mask.shape, dtype=np.int64)
    order = np.argwhere(mask)  # (iy, ix) row-major
    for k, (iy, ix) in enumerate(order):
        idx[iy, ix] = k
    n = order.shape[0]

    # per-node arms: (neg-x, pos-x, neg-y, pos-y)
    dirs = ((0, -1), (0, 1), (-1, 0), (1, 0))
    arm = np.full((n, 4), h)
    nb = -np.ones((n, 4), dtype=np.int64)
    bval = np.zeros((n, 4))
    cut_pts = []
    cut_where = []
    for k, (iy, ix) in enumerate(order):
        p = (xs[ix], ys[iy])
        for d, (dy, dx) in enumerate(dirs):
            jy, jx = iy + dy, ix + dx
            if 0 <= jy < ny and 0 <= jx < nx and mask[jy, jx]:
                nb[k, d] = idx[jy, jx]
            else:
                q = (xs[ix] + dx * h, ys[iy] + dy * h)
                t, hit = geom.first_exit(np.array(p), np.array(q))
                arm[k, d] = t * h
                cut_pts.append(hit)
                cut_where.append((k, d))
    if cut_pts:
        gvals = np.asarray(g(np.array(cut_pts)), dtype=np.float64)
        for (k, d), gv in zip(cut_where, gvals):
            bval[k, d] = gv

    rows, cols, data = [], [], []
    rhs = np.zeros(n)
    pts = np.stack([xs[order[:, 1]], ys[order[:, 0]]], axis=1)
    rhs += f(pts) if callable(f) else float(f)

    for axis in (0, 1):  # x-axis arms (0,1), y-axis arms (2,3)
        a = arm[:, 2 * axis]
        b = arm[:, 2 * axis + 1]
        rows.extend(range(n))
        cols.extend(range(n))
        data.extend(2.0 / (a * b))
        for side, armlen in ((2 * axis, a), (2 * axis + 1, b)):
            coef = 2.0 / (armlen * (a + b))
            inside = nb[:, side] >= 0
            rows.extend(np.nonzero(inside)[0])
            cols.extend(nb[inside, side])
            data.extend(-coef[inside])
            rhs[~inside] += coef[~inside] * bval[~inside, side]

    A = scipy.sparse.csr_matrix(
        (np.array(data), (np.array(rows), np.array(cols))), shape=(n, n)
    )
    u = scipy.sparse.linalg.spsolve(A, rhs)
    resid = np.linalg.norm(A @ u - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(u).all() or resid > 1e-10:
        raise OracleError(f"linear solve failed (relative residual {resid:.3e})")

    ref = ReferenceField(pts, u, provenance="fd-oracle")
    if return_info:
        return ref, {"residual": float(resid), "unknowns": n, "h": h}
    return ref


@dataclass
class EvalReport:
    ids: list
    rel: list
    mean: float
    std: float
    hist_edges: list
    hist_counts: list
    best_id: int
    worst_id: int
    mae_nodes: np.ndarray | None = None
    mae: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def evaluate(pred_fn, ids, references):
    """Relative-L2 report of pred_fn over the given realization ids.

    pred_fn(rid, nodes) returns model values (n, c) at the reference nodes.
    """
    rel = []
    fields = []
    for rid in ids:
        if rid not in references:
            raise OracleError(f"missing reference for realization {rid}")
        ref = references[rid]
        pred = np.asarray(pred_fn(rid, ref.nodes), dtype=np.float64)
        if pred.ndim == 1:
            pred = pred[:, None]
        rel.append(rel_l2(pred, ref.values))
        fields.append(np.abs(pred - ref.values).mean(axis=1))
    rel_arr = np.array(rel)
    mean = float(rel_arr.mean())
    std = float(rel_arr.std())  # population convention
    top = max(1.0, float(np.ceil(rel_arr.max() * 100.0)))
    edges = np.arange(0.0, top + 1.0) / 100.0
    counts, _ = np.histogram(rel_arr, bins=edges)
    best = ids[int(np.argmin(rel_arr))]
    worst = ids[int(np.argmax(rel_arr))]

    mae_nodes = mae = None
    shapes = {references[r].nodes.shape for r in ids}
    if len(shapes) == 1:
        node_sets = [references[r].nodes for r in ids]
        if all(np.array_equal(node_sets[0], s) for s in node_sets[1:]):
            mae_nodes = node_sets[0]
            mae = np.mean(np.stack(fields), axis=0)

    return EvalReport(
        ids=list(ids),
        rel=[float(r) for r in rel],
        mean=mean,
        std=std,
        hist_edges=[float(e) for e in edges],
        hist_counts=[int(c) for c in counts],
        best_id=int(best),
        worst_id=int(worst),
        mae_nodes=mae_nodes,
        mae=mae,
    )


def format_error_line(mean, std):
    return f"{100.0 * mean:.2f}% ± {100.0 * std:.2f}%"


def write_eval_report(report, out_dir, prefix="eval"):
    """CSV per-realization errors + histogram, JSON summary, MAE field CSV."""
    out_dir = str(out_dir)
    paths = {}

    p = f"{out_dir}/{prefix}_errors.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["realization_id", "rel_l2"])
        for rid, r in zip(report.ids, report.rel):
            w.writerow([rid, repr(r)])
    paths["errors"] = p

    p = f"{out_dir}/{prefix}_histogram.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "count"])
        for i, c in enumerate(report.hist_counts):
            w.writerow(
                [repr(report.hist_edges[i]), repr(report.hist_edges[i + 1]), c]
            )
    paths["histogram"] = p

    p = f"{out_dir}/{prefix}_summary.json"
    with open(p, "w") as fh:
        json.dump(
            {
                "format": "dconet-eval",
                "version": 1,
                "count": len(report.ids),
                "mean_rel_l2": report.mean,
                "std_rel_l2": report.std,
                "best_id": report.best_id,
                "worst_id": report.worst_id,
                **report.extra,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    paths["summary"] = p

    if report.mae is not None:
        p = f"{out_dir}/{prefix}_mae_field.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "mae"])
            for (x, y), e in zip(report.mae_nodes, report.mae):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(e))])
        paths["mae_field"] = p
    return paths


def read_eval_report(out_dir, prefix="eval"):
    """Round-trip reader for the eval CSV/JSON outputs."""
    with open(f"{out_dir}/{prefix}_errors.csv", newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    ids = [int(r[0]) for r in rows]
    rel = [float(r[1]) for r in rows]
    with open(f"{out_dir}/{prefix}_summary.json") as fh:
        summary = json.load(fh)
    if summary.get("format") != "dconet-eval" or summary.get("version") != 1:
        raise ValueError("unknown eval report format/version")
    with open(f"{out_dir}/{prefix}_histogram.csv", newline="") as fh:
        hrows = list(csv.reader(fh))[1:]
    edges = [float(r[0]) for r in hrows] + [float(hrows[-1][1])]
    counts = [int(r[2]) for r in hrows]
    return EvalReport(
        ids=ids,
        rel=rel,
        mean=summary["mean_rel_l2"],
        std=summary["std_rel_l2"],
        hist_edges=edges,
        hist_counts=counts,
        best_id=summary["best_id"],
        worst_id=summary["worst_id"],
    )
