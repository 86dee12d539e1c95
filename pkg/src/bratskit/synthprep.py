"""Data-side machinery for synthetic tumour generation.

Covers the deterministic transforms around the generative model: tumour
geometry and the radial replacement-probability field, noise corruption of a
tumour-centred crop, random placement of tumour labels into healthy brain, and
the generator/discriminator loss formulas with their two-step weight schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, PlacementError, ValidationError
from .volume import BinaryMask, Geometry, LabelVolume, ScalarVolume

CROP_SIZE = 96
# First training step runs with fixed weights before the linear ramp.
FIRST_STEP_LAMBDA1 = 1.0
FIRST_STEP_LAMBDA2 = 5.0
FIRST_STEP_ITERATIONS = 200_000


@dataclass(frozen=True)
class TumourGeometry:
    bbox_min: tuple[int, int, int]
    bbox_max: tuple[int, int, int]
    center: tuple[int, int, int]
    max_size: int


@dataclass(frozen=True)
class CorruptionField:
    geometry: Geometry
    probs: np.ndarray  # shape = geometry.dims, values in [0, 1]
    exponent: float


@dataclass(frozen=True)
class LambdaPair:
    lambda1: float
    lambda2: float


def tumour_geometry(labels: LabelVolume) -> TumourGeometry:
    """Bounding box, centre and largest extent of the nonzero label voxels.

    The centre is the midpoint (floor) of the first and last occupied slice
    along each axis.
    """
    nz = np.nonzero(labels.voxels)
    if nz[0].size == 0:
        raise DegenerateInputError("no tumour voxels")
    bbox_min = tuple(int(axis.min()) for axis in nz)
    bbox_max = tuple(int(axis.max()) for axis in nz)
    center = tuple((lo + hi) // 2 for lo, hi in zip(bbox_min, bbox_max))
    max_size = max(hi - lo + 1 for lo, hi in zip(bbox_min, bbox_max))
    return TumourGeometry(bbox_min, bbox_max, center, max_size)


def decay_exponent(max_size: int) -> float:
    """Affine decay exponent in the tumour size; equals 1.1 at size 96."""
    if not 1 <= max_size <= CROP_SIZE:
        raise ValidationError(f"max_size must be in [1, {CROP_SIZE}], got {max_size}")
    slope = -0.2 / 68.0
    return slope * max_size + 1.1 - CROP_SIZE * slope


def replacement_probability(distance: float, exponent: float) -> float:
    """Probability of replacing a voxel at the given distance from the centre."""
    if exponent < 1.0:
        raise ValidationError(f"exponent must be >= 1, got {exponent}")
    prob = 83.0 / (exponent ** distance + 82.0)
    return min(max(prob, 0.0), 1.0)


def build_corruption_field(geom: TumourGeometry, crop_geometry: Geometry) -> CorruptionField:
    """Radial replacement-probability field over the crop grid.

    Distance is Euclidean voxel distance to the crop centre voxel (48, 48, 48);
    the field is fully deterministic.
    """
    if crop_geometry.dims != (CROP_SIZE, CROP_SIZE, CROP_SIZE):
        raise ValidationError(f"crop geometry must be {CROP_SIZE}^3, got {crop_geometry.dims}")
    exponent = decay_exponent(geom.max_size)
    center = CROP_SIZE // 2
    coords = np.arange(CROP_SIZE, dtype=np.float64) - center
    dist = np.sqrt(
        coords[:, None, None] ** 2 + coords[None, :, None] ** 2 + coords[None, None, :] ** 2
    )
    probs = np.clip(83.0 / (exponent ** dist + 82.0), 0.0, 1.0)
    return CorruptionField(crop_geometry, probs, exponent)


def _minmax_to_unit_range(values):
    lo = values.min()
    hi = values.max()
    if hi == lo:
        raise DegenerateInputError("constant image; cannot normalize to [-1, 1]")
    return 2.0 * (values - lo) / (hi - lo) - 1.0


def corrupt_crop(image: ScalarVolume, labels: LabelVolume, field: CorruptionField,
                 rng_seed: int, return_mask: bool = False):
    """Build the noisy generator input for one tumour-centred crop.

    Pipeline: min-max normalize to [-1, 1], add unit Gaussian noise,
    re-normalize, then replace every tumour voxel with a fresh Gaussian draw
    and every healthy voxel with probability given by the field. One seeded
    stream in a fixed draw order makes the output deterministic per seed.
    """
    for other in (labels.geometry, field.geometry):
        image.geometry.require_compatible(other)
    if image.geometry.dims != (CROP_SIZE, CROP_SIZE, CROP_SIZE):
        raise ValidationError(f"crop inputs must be {CROP_SIZE}^3")
    rng = np.random.default_rng(rng_seed)
    base = _minmax_to_unit_range(image.voxels.astype(np.float64))
    base = _minmax_to_unit_range(base + rng.standard_normal(base.shape))
    uniforms = rng.random(base.shape)
    noise = rng.standard_normal(base.shape)
    replaced = (labels.voxels != 0) | (uniforms < field.probs)
    out = np.where(replaced, noise, base)
    result = ScalarVolume(image.geometry, out.astype(np.float32))
    if return_mask:
        return result, BinaryMask(image.geometry, replaced)
    return result


def place_label(target_labels: LabelVolume, brain_mask: BinaryMask,
                candidate: LabelVolume, rng_seed: int, max_attempts: int = 100):
    """Place a candidate tumour label crop into a healthy part of the target.

    Crop origins are sampled uniformly; a placement is valid when every nonzero
    candidate voxel lands on brain tissue that is still label 0. Returns the
    updated volume and the chosen origin, or raises after max_attempts.
    """
    target_labels.geometry.require_compatible(brain_mask.geometry)
    tdims = target_labels.geometry.dims
    cdims = candidate.geometry.dims
    if any(c > t for c, t in zip(cdims, tdims)):
        raise ValidationError(f"candidate {cdims} does not fit in target {tdims}")
    rng = np.random.default_rng(rng_seed)
    cand_nz = candidate.voxels != 0
    for _ in range(max_attempts):
        origin = tuple(int(rng.integers(0, t - c + 1)) for t, c in zip(tdims, cdims))
        box = tuple(slice(o, o + c) for o, c in zip(origin, cdims))
        ok = brain_mask.bits[box][cand_nz].all() and (target_labels.voxels[box][cand_nz] == 0).all()
        if ok:
            out = target_labels.voxels.copy()
            region = out[box]
            region[cand_nz] = candidate.voxels[cand_nz]
            out[box] = region
            return LabelVolume(target_labels.geometry, out), origin
    raise PlacementError(f"no valid placement found in {max_attempts} attempts")


def lambda_schedule(epoch: int) -> LambdaPair:
    """Second-training-step loss weights: the reconstruction weight ramps
    linearly from 1 to 100 over 1000 epochs, with lambda1 = 1 / lambda2."""
    if not 0 <= epoch <= 1000:
        raise ValidationError(f"epoch must be in [0, 1000], got {epoch}")
    lambda2 = (100.0 - 1.0) / 1000.0 * epoch + 1.0
    return LambdaPair(1.0 / lambda2, lambda2)


def generator_loss(d_scores, recon: ScalarVolume, target: ScalarVolume,
                   lambdas: LambdaPair) -> float:
    """Adversarial term plus weighted mean absolute reconstruction error."""
    recon.geometry.require_compatible(target.geometry)
    d_scores = np.asarray(d_scores, dtype=np.float64)
    if d_scores.size == 0 or (d_scores <= 0).any():
        raise ValidationError("discriminator scores must be nonempty and > 0")
    mae = float(np.abs(target.voxels.astype(np.float64) - recon.voxels).mean())
    return float(-lambdas.lambda1 * np.log(d_scores).mean() + lambdas.lambda2 * mae)


def discriminator_loss(d_fake, d_real) -> float:
    d_fake = np.asarray(d_fake, dtype=np.float64)
    d_real = np.asarray(d_real, dtype=np.float64)
    for arr in (d_fake, d_real):
        if arr.size == 0 or (arr <= 0).any():
            raise ValidationError("discriminator scores must be nonempty and > 0")
    return float(np.log(d_fake).mean() - np.log(d_real).mean())
