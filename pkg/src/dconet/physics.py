"""Physics-informed loss assembly for the Darcy and plane-stress problems.

Each loss term is a mean of squares over the points of one realization, so
magnitudes do not depend on how many collocation or boundary points were
sampled.  The weighted total is recorded on the tape, and the per-term values
are reported in a :class:`LossBreakdown` whose bookkeeping identity
(total == sum of weighted terms) holds to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DARCY_WEIGHTS = {"pde": 1.0, "bc_hole": 500.0, "bc_outer": 500.0}
PLATE_WEIGHTS = {
    "pde": 1e-5,
    "bc_hole": 1.0,
    "bc_left": 1.0,
    "bc_right": 1.0,
    "bc_topbot": 1.0,
}


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    material: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("darcy", "plate"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        defaults = {"darcy": {"f": 10.0}, "plate": {"E": 1.0, "mu": 0.3}}[self.kind]
        mat = dict(defaults)
        mat.update(self.material)
        object.__setattr__(self, "material", mat)
        w = dict(DARCY_WEIGHTS if self.kind == "darcy" else PLATE_WEIGHTS)
        w.update(self.weights)
        object.__setattr__(self, "weights", w)
        if any(v <= 0.0 for v in self.weights.values()):
            raise ValueError("loss weights must be positive")
        if self.kind == "plate" and not 0.0 < self.material["mu"] < 0.5:
            raise ValueError("Poisson ratio must lie in (0, 0.5)")

    @property
    def outputs(self):
        return 1 if self.kind == "darcy" else 2


@dataclass
class LossBreakdown:
    total: float
    terms: dict
    weights: dict

    def weighted_sum(self):
        return sum(self.weights[k] * v for k, v in self.terms.items())


def darcy_residual(tape, j, f=10.0):
    """Pointwise residual of -lap(p) = f with unit permeability: dxx+dyy+f."""
    return tape.add(tape.add(j.dxx, j.dyy), tape.const(np.float64(f)))


def plate_residuals(tape, ju, jv, E, mu):
    """Plane-stress equilibrium residuals for displacement jets (u, v)."""
    c0 = E / (1.0 - mu * mu)
    a = (1.0 - mu) / 2.0
    b = (1.0 + mu) / 2.0
    r1 = tape.scale(
        tape.add(tape.add(ju.dxx, tape.scale(ju.dyy, a)), tape.scale(jv.dxy, b)),
        c0,
    )
    r2 = tape.scale(
        tape.add(tape.add(jv.dyy, tape.scale(jv.dxx, a)), tape.scale(ju.dxy, b)),
        c0,
    )
    return r1, r2


def _mse_node(tape, pred, target):
    """mean((pred - target)^2); target None means zero."""
    if target is None:
        return tape.mean(tape.square(pred))
    return tape.mean(tape.square(tape.sub(pred, tape.const(target))))


def darcy_realization_terms(tape, spec, jets, bc_preds, bc_targets):
    """Loss terms of one realization.

    jets: model jets at the interior collocation points (one channel).
    bc_preds: tag -> prediction node at that tag's boundary points.
    bc_targets: tag -> target array or None (zero Dirichlet).
    """
    for tag, node in bc_preds.items():
        if tape.value(node).shape[0] == 0:
            raise ValueError(f"empty point set for boundary term {tag}")
    r = darcy_residual(tape, jets[0], spec.material["f"])
    terms = {"pde": tape.mean(tape.square(r))}
    if "HOLE" in bc_preds:
        terms["bc_hole"] = _mse_node(tape, bc_preds["HOLE"], bc_targets.get("HOLE"))
    terms["bc_outer"] = _mse_node(tape, bc_preds["OUTER"], bc_targets.get("OUTER"))
    return terms


def plate_realization_terms(tape, spec, jets, bc_jets, bc_targets):
    """Loss terms of one plate realization.

    jets: (ju, jv) at interior points; bc_jets: tag -> (ju, jv) jets at that
    tag's boundary points (value channel used for Dirichlet tags, first
    derivatives for the traction-free top/bottom edge).
    """
    E, mu = spec.material["E"], spec.material["mu"]
    r1, r2 = plate_residuals(tape, jets[0], jets[1], E, mu)
    terms = {"pde": tape.mean(tape.add(tape.square(r1), tape.square(r2)))}

    def dirichlet(tag):
        ju, jv = bc_jets[tag]
        tgt = bc_targets.get(tag)
        du = ju.val if tgt is None else tape.sub(ju.val, tape.const(tgt[:, 0]))
        dv = jv.val if tgt is None else tape.sub(jv.val, tape.const(tgt[:, 1]))
        return tape.mean(tape.add(tape.square(du), tape.square(dv)))

    terms["bc_hole"] = dirichlet("HOLE")
    terms["bc_left"] = dirichlet("LEFT")
    terms["bc_right"] = dirichlet("RIGHT")

    ju, jv = bc_jets["TOPBOT"]
    shear = tape.scale(tape.add(ju.dy, jv.dx), 0.5)
    terms["bc_topbot"] = tape.mean(
        tape.add(tape.square(jv.dy), tape.square(shear))
    )
    return terms


def combine_terms(tape, per_realization, weights):
    """Batch-average each term, then form the weighted total on the tape.

    Returns (total_node, breakdown).  Terms are averaged over realizations in
    list order; the total accumulates weighted terms in the key order of the
    first realization's dict, so results are deterministic.
    """
    if not per_realization:
        raise ValueError("no realizations in batch")
    names = list(per_realization[0].keys())
    n = len(per_realization)
    term_nodes = {}
    for name in names:
        acc = per_realization[0][name]
        for d in per_realization[1:]:
            acc = tape.add(acc, d[name])
        term_nodes[name] = tape.scale(acc, 1.0 / n) if n > 1 else acc
    total = None
    for name in names:
        w = tape.scale(term_nodes[name], weights[name])
        total = w if total is None else tape.add(total, w)
    breakdown = LossBreakdown(
        total=float(tape.value(total)),
        terms={k: float(tape.value(v)) for k, v in term_nodes.items()},
        weights={k: float(weights[k]) for k in names},
    )
    return total, breakdown


def data_driven_loss(tape, preds, targets):
    """Mean squared error over nodes and channels jointly."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, None]
    if len(preds) != targets.shape[1]:
        raise ValueError(
            f"{len(preds)} prediction channels vs {targets.shape[1]} targets"
        )
    diffs = []
    for k, p in enumerate(preds):
        if tape.value(p).shape[0] != targets.shape[0]:
            raise ValueError("prediction/reference length mismatch")
        diffs.append(tape.sub(p, tape.const(targets[:, k])))
    staged = diffs[0] if len(diffs) == 1 else tape.concat(diffs, axis=0)
    return tape.mean(tape.square(staged))
