"""Ensemble fusion: probability averaging and per-region binary STAPLE."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .regions import REGIONS, extract_region, reconstruct_labels
from .volume import BinaryMask, LabelVolume, RegionProbVolume

_EPS = 1e-7


class PriorKind(Enum):
    MeanOfMasks = "mean_of_masks"
    Fixed = "fixed"


@dataclass(frozen=True)
class StapleParams:
    max_iters: int = 100
    tol: float = 1e-6
    init_sensitivity: float = 0.99
    init_specificity: float = 0.99
    prior: PriorKind = PriorKind.MeanOfMasks
    fixed_prior: Optional[float] = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValidationError("tol must be > 0")
        for p in (self.init_sensitivity, self.init_specificity):
            if not 0.0 < p < 1.0:
                raise ValidationError("init probabilities must lie in (0, 1)")
        if self.prior is PriorKind.Fixed:
            if self.fixed_prior is None or not 0.0 < self.fixed_prior < 1.0:
                raise ValidationError("fixed prior must lie in (0, 1)")


@dataclass(frozen=True)
class StapleResult:
    consensus: BinaryMask
    weights: np.ndarray  # per-voxel posterior in [0, 1], shape = dims
    rater_performance: list  # (sensitivity, specificity) per input
    iterations_run: int
    converged: bool


def average_fusion(maps: Sequence[RegionProbVolume]):
    """Channelwise mean of the probability maps, binarized at >= 0.5 and
    reconstructed into a label volume."""
    if not maps:
        raise ValidationError("average_fusion needs at least one probability map")
    geometry = maps[0].geometry
    for m in maps[1:]:
        geometry.require_compatible(m.geometry)
    mean = np.mean([m.channels.astype(np.float64) for m in maps], axis=0)
    fused = RegionProbVolume(geometry, mean.astype(np.float32))
    masks = [BinaryMask(geometry, fused.channels[c] >= 0.5) for c in range(3)]
    labels = reconstruct_labels(*masks)
    return fused, labels


def staple_binary(masks: Sequence[BinaryMask], params: StapleParams = StapleParams()) -> StapleResult:
    """EM estimation of per-rater sensitivity/specificity and the per-voxel
    posterior of the latent true mask.

    E-step accumulates in the log domain so products over many raters stay
    stable on full-size volumes.
    """
    if len(masks) < 2:
        raise ValidationError("staple_binary needs at least 2 masks")
    geometry = masks[0].geometry
    for m in masks[1:]:
        geometry.require_compatible(m.geometry)

    d = np.stack([m.bits.ravel() for m in masks])  # (raters, voxels)
    n_raters = d.shape[0]

    if not d.any():
        empty = BinaryMask(geometry, np.zeros(geometry.dims, dtype=bool))
        perf = [(1.0, 1.0)] * n_raters
        return StapleResult(empty, np.zeros(geometry.dims), perf, 0, True)

    if params.prior is PriorKind.MeanOfMasks:
        prior = d.mean(axis=0)
    else:
        prior = np.full(d.shape[1], params.fixed_prior)
    prior = np.clip(prior, _EPS, 1.0 - _EPS)
    log_prior_t = np.log(prior)
    log_prior_f = np.log1p(-prior)

    p = np.full(n_raters, params.init_sensitivity)  # sensitivity
    q = np.full(n_raters, params.init_specificity)  # specificity

    w = None
    converged = False
    iterations = 0
    for iterations in range(1, params.max_iters + 1):
        # E-step: accumulate log P(decisions | T) rater by rater, which keeps
        # memory at one float array per volume even for large rater counts.
        log_a = log_prior_t.copy()
        log_b = log_prior_f.copy()
        for j in range(n_raters):
            log_a += np.where(d[j], np.log(p[j]), np.log1p(-p[j]))
            log_b += np.where(d[j], np.log1p(-q[j]), np.log(q[j]))
        m = np.maximum(log_a, log_b)
        ea = np.exp(log_a - m)
        w = ea / (ea + np.exp(log_b - m))

        # M-step
        sum_w = w.sum()
        sum_not_w = (1.0 - w).sum()
        new_p = np.array([w[d[j]].sum() / sum_w for j in range(n_raters)])
        new_q = np.array([(1.0 - w[~d[j]]).sum() / sum_not_w for j in range(n_raters)])
        new_p = np.clip(new_p, _EPS, 1.0 - _EPS)
        new_q = np.clip(new_q, _EPS, 1.0 - _EPS)

        delta = max(np.abs(new_p - p).max(), np.abs(new_q - q).max())
        p, q = new_p, new_q
        if delta < params.tol:
            converged = True
            break

    weights = w.reshape(geometry.dims)
    consensus = BinaryMask(geometry, weights >= 0.5)
    perf = [(float(pi), float(qi)) for pi, qi in zip(p, q)]
    return StapleResult(consensus, weights, perf, iterations, converged)


def staple_fusion(labels: Sequence[LabelVolume], params: StapleParams = StapleParams()) -> LabelVolume:
    """Run binary STAPLE independently per region and reconstruct labels."""
    if len(labels) < 2:
        raise ValidationError("staple_fusion needs at least 2 label volumes")
    geometry = labels[0].geometry
    for lv in labels[1:]:
        geometry.require_compatible(lv.geometry)
    consensus = {}
    for region in REGIONS:
        masks = [extract_region(lv, region) for lv in labels]
        consensus[region] = staple_binary(masks, params).consensus
    return reconstruct_labels(consensus[REGIONS[0]], consensus[REGIONS[1]], consensus[REGIONS[2]])
