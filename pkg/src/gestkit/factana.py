"""Guided factor analysis of contour sequences.

The decomposition runs in two passes over mean-centered data: first a jaw
factor is extracted from the jaw+tongue+lip union (jaw motion drags both),
then the jaw component is projected out and one factor per remaining
articulator is taken from its masked, jaw-free spatial covariance. Factor
scores are the least-squares coordinates of the data in the factor basis.

Conventions: spatial covariance C = X X^T (no 1/t scaling), removal is
left-multiplication by (I - F F^+), scores are Y = (F^+ X)^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkit
from .contour import (
    JAW_UNION,
    ArticulatorId,
    ArticulatorMap,
    ContourSequence,
    build_projection,
)
from .errors import (
    ArgumentError,
    DegenerateMotionError,
    DimensionError,
    InvariantError,
    RankError,
)

__all__ = [
    "FactorSet",
    "FactorScores",
    "DecompositionResult",
    "center",
    "extract_jaw_factor",
    "remove_jaw",
    "extract_other_factor",
    "extract_factors",
    "compute_factor_scores",
    "reconstruct",
    "decompose",
]

_OTHER_ARTICULATORS = (
    ArticulatorId.TONGUE,
    ArticulatorId.LIP,
    ArticulatorId.VELUM,
    ArticulatorId.LARYNX,
)


@dataclass(frozen=True)
class FactorSet:
    """Spatial factors, one column per articulator in canonical order."""

    f: np.ndarray  # 2p x 5

    def __post_init__(self):
        arr = numkit.as_matrix(self.f, "factor set")
        if arr.shape[1] != 5:
            raise DimensionError(f"factor set needs 5 columns, got {arr.shape[1]}")
        object.__setattr__(self, "f", arr)

    def column(self, art: ArticulatorId) -> np.ndarray:
        return self.f[:, list(ArticulatorId).index(art)]

    def validate(self, amap: ArticulatorMap) -> None:
        """Check articulator-support and nonzero-column invariants."""
        union = build_projection(amap, JAW_UNION).diag
        if np.any(np.abs(self.f[~union, 0]) > 1e-10):
            raise InvariantError("jaw factor has support outside jaw+tongue+lip")
        for idx, art in enumerate(_OTHER_ARTICULATORS, start=1):
            mask = build_projection(amap, [art]).diag
            if np.any(np.abs(self.f[~mask, idx]) > 1e-10):
                raise InvariantError(
                    f"{art.value} factor has support outside its articulator"
                )
        for idx, art in enumerate(ArticulatorId):
            if float(np.linalg.norm(self.f[:, idx])) <= 1e-10:
                raise InvariantError(f"{art.value} factor is numerically zero")


@dataclass(frozen=True)
class FactorScores:
    """Per-frame coordinates of the factors (t x 5)."""

    y: np.ndarray

    def __post_init__(self):
        arr = numkit.as_matrix(self.y, "factor scores")
        if arr.shape[1] != 5:
            raise DimensionError(f"factor scores need 5 columns, got {arr.shape[1]}")
        object.__setattr__(self, "y", arr)

    @property
    def t(self) -> int:
        return self.y.shape[0]


def center(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Remove each coordinate row's mean; returns (centered, mean)."""
    arr = numkit.as_matrix(x, "contour data")
    if arr.shape[1] < 2:
        raise ArgumentError("centering needs at least 2 frames")
    mean = arr.mean(axis=1)
    return arr - mean[:, None], mean


def _masked_top_eigenpair(x: np.ndarray, idx: np.ndarray, label: str):
    """Leading eigenpair of the masked spatial covariance X_m X_m^T.

    Works on the masked submatrix (rows outside contribute zeros) and embeds
    the eigenvector back into full coordinates.
    """
    sub = x[idx]
    cov = sub @ sub.T
    eig = numkit.sym_eig(cov)
    lam = float(eig.values[0])
    if lam <= 1e-12:
        raise DegenerateMotionError(label, lam)
    q = np.zeros(x.shape[0])
    q[idx] = eig.vectors[:, 0]
    return q, lam


def extract_jaw_factor(x: np.ndarray, amap: ArticulatorMap) -> np.ndarray:
    """Jaw factor: union covariance times the unit jaw direction, scaled by
    the inverse root of the jaw variance. Support stays inside the union."""
    arr = numkit.as_matrix(x, "centered data")
    if arr.shape[0] != 2 * amap.p:
        raise DimensionError(
            f"data has {arr.shape[0]} rows but map covers {amap.p} vertices"
        )
    for art in JAW_UNION:
        if amap.vertex_count(art) < 1:
            raise ArgumentError(f"articulator {art.value} owns no vertices")
    jaw_idx = build_projection(amap, [ArticulatorId.JAW]).diag.nonzero()[0]
    union_idx = build_projection(amap, JAW_UNION).diag.nonzero()[0]
    q_jaw, lam_jaw = _masked_top_eigenpair(arr, jaw_idx, ArticulatorId.JAW.value)
    x_union = arr[union_idx]
    f = np.zeros(arr.shape[0])
    f[union_idx] = x_union @ (x_union.T @ q_jaw[union_idx]) * lam_jaw**-0.5
    return f


def remove_jaw(x: np.ndarray, f_jaw: np.ndarray) -> np.ndarray:
    """Project the jaw factor's span out of the data: (I - F F^+) X."""
    arr = numkit.as_matrix(x, "centered data")
    f = np.asarray(f_jaw, dtype=np.float64).ravel()
    if f.size != arr.shape[0]:
        raise DimensionError(f"jaw factor length {f.size} != {arr.shape[0]} rows")
    norm_sq = float(f @ f)
    if norm_sq <= 0.0:
        raise ArgumentError("jaw factor is zero")
    return arr - np.outer(f, (f @ arr) / norm_sq)


def extract_other_factor(
    x_other: np.ndarray, amap: ArticulatorMap, art: ArticulatorId
) -> np.ndarray:
    """Non-jaw factor: first principal direction of the articulator's masked
    jaw-free covariance, scaled by the root of its variance (q1 * sqrt(l1))."""
    if art is ArticulatorId.JAW:
        raise ArgumentError("jaw factor has its own extraction path")
    arr = numkit.as_matrix(x_other, "jaw-free data")
    if amap.vertex_count(art) < 1:
        raise ArgumentError(f"articulator {art.value} owns no vertices")
    idx = build_projection(amap, [art]).diag.nonzero()[0]
    q, lam = _masked_top_eigenpair(arr, idx, art.value)
    return q * lam**0.5


def extract_factors(x: np.ndarray, amap: ArticulatorMap) -> FactorSet:
    """Run the full guided extraction on centered data."""
    f_jaw = extract_jaw_factor(x, amap)
    x_other = remove_jaw(x, f_jaw)
    columns = [f_jaw]
    columns += [extract_other_factor(x_other, amap, art) for art in _OTHER_ARTICULATORS]
    return FactorSet(np.column_stack(columns))


def compute_factor_scores(x: np.ndarray, factors: FactorSet) -> FactorScores:
    """Least-squares scores Y = (F^+ X)^T for X ~ F Y^T."""
    arr = numkit.as_matrix(x, "centered data")
    f = factors.f
    if f.shape[0] != arr.shape[0]:
        raise DimensionError(f"factors have {f.shape[0]} rows, data {arr.shape[0]}")
    gram_eig = numkit.sym_eig(f.T @ f)
    svals = np.sqrt(np.clip(gram_eig.values, 0.0, None))
    if svals[-1] <= 1e-10 * svals[0]:
        raise RankError(
            f"factor matrix is rank deficient (singular values {svals})"
        )
    return FactorScores((numkit.pinv(f) @ arr).T)


def reconstruct(factors: FactorSet, scores: FactorScores) -> np.ndarray:
    """Assemble F Y^T."""
    if factors.f.shape[1] != scores.y.shape[1]:
        raise DimensionError("factor and score column counts differ")
    return factors.f @ scores.y.T


@dataclass(frozen=True)
class DecompositionResult:
    factors: FactorSet
    scores: FactorScores
    mean: np.ndarray
    rel_error: float


def decompose(seq: ContourSequence) -> DecompositionResult:
    """Center, extract all five factors, validate, and score a sequence."""
    centered, mean = center(seq.x)
    factors = extract_factors(centered, seq.amap)
    factors.validate(seq.amap)
    scores = compute_factor_scores(centered, factors)
    resid = centered - reconstruct(factors, scores)
    denom = max(float(np.linalg.norm(centered)), 1e-300)
    return DecompositionResult(
        factors=factors,
        scores=scores,
        mean=mean,
        rel_error=float(np.linalg.norm(resid)) / denom,
    )
