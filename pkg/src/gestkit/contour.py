"""Vocal-tract contour sequences: data model, articulator projections, the
CSF file format, and a synthetic generator with known ground truth.

A contour sequence stores interleaved x/y vertex coordinates as a 2p x t
matrix. Articulator masks select coordinate pairs; the synthetic generator
produces sequences that are exactly a factor model driven by a convolutive
mixture of sparse gesture activations, so every downstream stage has a known
solution to recover.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError, DomainError, InvariantError, ParseError

__all__ = [
    "ArticulatorId",
    "ArticulatorMap",
    "ContourSequence",
    "ProjectionMask",
    "SynthConfig",
    "SyntheticTruth",
    "build_projection",
    "apply_projection",
    "complement",
    "generate_synthetic",
    "read_csf",
    "write_csf",
]


class ArticulatorId(enum.Enum):
    """The five articulators, in canonical column order."""

    JAW = "jaw"
    TONGUE = "tongue"
    LIP = "lip"
    VELUM = "velum"
    LARYNX = "larynx"

    @classmethod
    def from_label(cls, label: str) -> "ArticulatorId":
        for member in cls:
            if member.value == label:
                return member
        raise ParseError(f"unknown articulator label {label!r}")


CANONICAL_ORDER = tuple(ArticulatorId)

# Jaw motion drags tongue and lip tissue with it, so the jaw factor is
# extracted from the union of these three articulators.
JAW_UNION = (ArticulatorId.JAW, ArticulatorId.TONGUE, ArticulatorId.LIP)


@dataclass(frozen=True)
class ArticulatorMap:
    """Vertex-to-articulator assignment (each vertex exactly one label)."""

    assignment: tuple[ArticulatorId, ...]

    def __post_init__(self):
        if not self.assignment:
            raise ArgumentError("articulator map needs at least one vertex")
        for a in self.assignment:
            if not isinstance(a, ArticulatorId):
                raise ArgumentError(f"not an articulator id: {a!r}")

    @property
    def p(self) -> int:
        return len(self.assignment)

    def vertex_count(self, art: ArticulatorId) -> int:
        return sum(1 for a in self.assignment if a is art)

    def vertices(self, arts) -> np.ndarray:
        wanted = set(arts)
        return np.array(
            [i for i, a in enumerate(self.assignment) if a in wanted], dtype=np.intp
        )

    @classmethod
    def from_counts(cls, counts: dict[ArticulatorId, int]) -> "ArticulatorMap":
        assignment: list[ArticulatorId] = []
        for art in CANONICAL_ORDER:
            assignment.extend([art] * counts.get(art, 0))
        return cls(tuple(assignment))

    @classmethod
    def from_labels(cls, labels) -> "ArticulatorMap":
        return cls(tuple(ArticulatorId.from_label(s) for s in labels))

    def labels(self) -> list[str]:
        return [a.value for a in self.assignment]


@dataclass(frozen=True)
class ProjectionMask:
    """Coordinate-level keep mask; x and y of a vertex are kept together."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=bool)
        if d.ndim != 1 or d.size % 2 != 0:
            raise DimensionError("mask must be 1-D with even length")
        if not np.array_equal(d[0::2], d[1::2]):
            raise InvariantError("mask must keep or drop x/y pairs together")
        object.__setattr__(self, "diag", d)

    def __len__(self) -> int:
        return self.diag.size


@dataclass
class ContourSequence:
    """A 2p x t matrix of interleaved vertex coordinates plus its map."""

    fps: float
    x: np.ndarray
    amap: ArticulatorMap

    def __post_init__(self):
        arr = np.asarray(self.x, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError("contour data must be 2-D")
        if arr.shape[0] != 2 * self.amap.p:
            raise DimensionError(
                f"contour data has {arr.shape[0]} rows but map covers "
                f"{self.amap.p} vertices"
            )
        if arr.shape[1] < 1:
            raise InvariantError("contour sequence needs t >= 1 frames")
        if self.amap.p < 5:
            raise InvariantError("contour sequence needs p >= 5 vertices")
        if not np.all(np.isfinite(arr)):
            raise DomainError("contour data contains non-finite entries")
        self.x = arr

    @property
    def p(self) -> int:
        return self.amap.p

    @property
    def t(self) -> int:
        return self.x.shape[1]


def build_projection(amap: ArticulatorMap, arts) -> ProjectionMask:
    """Mask keeping the coordinate pairs of every vertex on any of ``arts``."""
    arts = set(arts)
    if not arts:
        raise ArgumentError("projection needs at least one articulator")
    diag = np.zeros(2 * amap.p, dtype=bool)
    for i in amap.vertices(arts):
        diag[2 * i] = True
        diag[2 * i + 1] = True
    return ProjectionMask(diag)


def apply_projection(mask: ProjectionMask, x: np.ndarray) -> np.ndarray:
    """Zero every coordinate row the mask drops; keep the rest unchanged."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != len(mask):
        raise DimensionError(
            f"mask length {len(mask)} does not match {arr.shape[0]} rows"
        )
    out = np.zeros_like(arr)
    out[mask.diag] = arr[mask.diag]
    return out


def complement(mask: ProjectionMask) -> ProjectionMask:
    return ProjectionMask(~mask.diag)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

DEFAULT_PARTITION = {
    ArticulatorId.JAW: 20,
    ArticulatorId.TONGUE: 30,
    ArticulatorId.LIP: 20,
    ArticulatorId.VELUM: 15,
    ArticulatorId.LARYNX: 15,
}


def _scaled_partition(p: int) -> dict[ArticulatorId, int]:
    """Scale the default 20/30/20/15/15 split to p vertices, each >= 1."""
    weights = [DEFAULT_PARTITION[a] for a in CANONICAL_ORDER]
    total = sum(weights)
    counts = [max(1, (p * w) // total) for w in weights]
    # distribute the remainder in canonical order
    i = 0
    while sum(counts) < p:
        counts[i % 5] += 1
        i += 1
    while sum(counts) > p:
        j = max(range(5), key=lambda k: counts[k])
        counts[j] -= 1
    return dict(zip(CANONICAL_ORDER, counts))


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic corpus generator."""

    p: int = 100
    t: int = 1000
    gestures: int = 15
    window: int = 21
    seed: int = 0
    noise_sigma: float = 0.01
    fps: float = 83.0
    partition: dict[ArticulatorId, int] | None = None
    kernel_gain: float = 5.0

    def resolved_partition(self) -> dict[ArticulatorId, int]:
        part = self.partition if self.partition is not None else _scaled_partition(self.p)
        if sum(part.values()) != self.p:
            raise ArgumentError(
                f"partition sums to {sum(part.values())}, expected p={self.p}"
            )
        if any(part.get(a, 0) < 1 for a in CANONICAL_ORDER):
            raise ArgumentError("every articulator needs at least one vertex")
        return part

    def validate(self):
        if self.p < 5:
            raise ArgumentError(f"p must be >= 5, got {self.p}")
        if self.gestures < 5:
            raise ArgumentError(f"gesture count must be >= 5, got {self.gestures}")
        if self.window < 1:
            raise ArgumentError(f"window must be >= 1, got {self.window}")
        if self.t < 4 * self.window:
            raise ArgumentError(
                f"t={self.t} too short for window {self.window}; need t >= {4 * self.window}"
            )
        if self.noise_sigma < 0:
            raise ArgumentError("noise_sigma must be >= 0")
        self.resolved_partition()


@dataclass
class SyntheticTruth:
    """A generated sequence together with every latent the pipeline estimates."""

    contours: ContourSequence
    true_factors: np.ndarray  # 2p x 5
    true_scores: np.ndarray  # t x 5
    true_activations: np.ndarray  # D x t
    true_kernels: np.ndarray  # K x D x 5
    noise_sigma: float


def _event_window(width: int) -> np.ndarray:
    # half-cosine bump, peak in the middle
    k = np.arange(width)
    return np.sin(math.pi * (k + 0.5) / width)


def _max_events(t: int, win: np.ndarray, spacing: int) -> int:
    # Events with equal amplitudes maximize L1/L2, so the row Hoyer sparsity
    # stays >= 0.87 whenever sqrt(n) * (L1/L2 of one event) fits the budget.
    ratio = float(win.sum() / math.sqrt(float((win**2).sum())))
    budget = 0.13 * math.sqrt(t) + 0.87
    by_sparsity = int((budget / ratio) ** 2)
    by_spacing = max(1, (t - win.size) // (2 * spacing))
    return max(1, min(by_sparsity, by_spacing))


def _place_events(rng, t: int, width: int, spacing: int, count: int) -> list[int]:
    positions: list[int] = []
    hi = t - width
    for _ in range(count):
        for _attempt in range(200):
            pos = int(rng.integers(0, hi + 1))
            if all(abs(pos - other) >= spacing for other in positions):
                positions.append(pos)
                break
    return sorted(positions)


def _smooth_kernel(rng, k: int, channels: int, gain: float) -> np.ndarray:
    raw = rng.standard_normal((k, channels))
    if k >= 3:
        pad = np.vstack([raw[:1], raw, raw[-1:]])
        raw = 0.25 * pad[:-2] + 0.5 * pad[1:-1] + 0.25 * pad[2:]
        pad = np.vstack([raw[:1], raw, raw[-1:]])
        raw = 0.25 * pad[:-2] + 0.5 * pad[1:-1] + 0.25 * pad[2:]
    taper = np.sin(math.pi * (np.arange(k) + 0.5) / k)[:, None]
    kern = raw * taper
    norm = math.sqrt(float(np.sum(kern**2)))
    if norm > 0:
        kern *= gain / norm
    return kern


def _unit(v: np.ndarray) -> np.ndarray:
    return v / math.sqrt(float(np.sum(v**2)))


def _true_factor_columns(rng, amap: ArticulatorMap) -> np.ndarray:
    """Five mutually orthogonal factor columns with articulator support.

    Jaw spans jaw+tongue+lip coordinates; tongue and lip columns are built
    orthogonal to the jaw column inside their own blocks, so guided factor
    analysis can separate them exactly.
    """
    two_p = 2 * amap.p
    coords = {
        art: build_projection(amap, [art]).diag.nonzero()[0] for art in CANONICAL_ORDER
    }
    f = np.zeros((two_p, 5))

    jaw = np.zeros(two_p)
    jaw[coords[ArticulatorId.JAW]] = rng.standard_normal(coords[ArticulatorId.JAW].size)
    jaw[coords[ArticulatorId.TONGUE]] = 0.6 * rng.standard_normal(
        coords[ArticulatorId.TONGUE].size
    )
    jaw[coords[ArticulatorId.LIP]] = 0.5 * rng.standard_normal(
        coords[ArticulatorId.LIP].size
    )
    f[:, 0] = _unit(jaw)

    for col, art in [(1, ArticulatorId.TONGUE), (2, ArticulatorId.LIP)]:
        idx = coords[art]
        v = np.zeros(two_p)
        v[idx] = rng.standard_normal(idx.size)
        v[idx] -= f[idx, 0] * (v[idx] @ f[idx, 0]) / float(f[idx, 0] @ f[idx, 0])
        f[:, col] = _unit(v)

    for col, art in [(3, ArticulatorId.VELUM), (4, ArticulatorId.LARYNX)]:
        idx = coords[art]
        v = np.zeros(two_p)
        v[idx] = rng.standard_normal(idx.size)
        f[:, col] = _unit(v)
    return f


def convolve_scores(activations: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """Causal convolutive mixture: scores[tau] = sum_i activations[:, tau-i]^T kernels[i]."""
    k, d, q = kernels.shape
    dd, t = activations.shape
    if dd != d:
        raise DimensionError(f"activations have {dd} rows, kernels expect {d}")
    out = np.zeros((t, q))
    for i in range(k):
        if i == 0:
            out += activations.T @ kernels[0]
        else:
            out[i:] += activations[:, :-i].T @ kernels[i]
    return out


def generate_synthetic(cfg: SynthConfig) -> SyntheticTruth:
    """Deterministic synthetic corpus with exact latent ground truth."""
    cfg.validate()
    part = cfg.resolved_partition()
    rng = np.random.default_rng(cfg.seed)
    amap = ArticulatorMap.from_counts(part)

    factors = _true_factor_columns(rng, amap)

    win = _event_window(max(3, cfg.window // 4))
    n_cap = _max_events(cfg.t, win, cfg.window)
    activations = np.zeros((cfg.gestures, cfg.t))
    for d in range(cfg.gestures):
        count = int(rng.integers(max(1, n_cap - 2), n_cap + 1))
        for pos in _place_events(rng, cfg.t, win.size, cfg.window, count):
            amp = float(rng.uniform(0.5, 1.5))
            activations[d, pos : pos + win.size] += amp * win

    kernels = np.zeros((cfg.window, cfg.gestures, 5))
    for d in range(cfg.gestures):
        kernels[:, d, :] = _smooth_kernel(rng, cfg.window, 5, cfg.kernel_gain)

    scores = convolve_scores(activations, kernels)
    x = factors @ scores.T
    if cfg.noise_sigma > 0:
        x = x + cfg.noise_sigma * rng.standard_normal(x.shape)

    contours = ContourSequence(fps=cfg.fps, x=x, amap=amap)
    return SyntheticTruth(
        contours=contours,
        true_factors=factors,
        true_scores=scores,
        true_activations=activations,
        true_kernels=kernels,
        noise_sigma=cfg.noise_sigma,
    )


def validate_truth(truth: SyntheticTruth) -> None:
    """Raise InvariantError unless the generated truth honors its contract."""
    from .ncmf import hoyer_sparsity  # local import to avoid a module cycle

    seq = truth.contours
    recon = truth.true_factors @ truth.true_scores.T
    misfit = np.linalg.norm(seq.x - recon)
    allowance = truth.noise_sigma * math.sqrt(seq.x.size) * 2.0 + 1e-9
    if misfit > allowance:
        raise InvariantError(
            f"contours deviate from factor model by {misfit:.3e} (allowed {allowance:.3e})"
        )
    union_mask = build_projection(seq.amap, JAW_UNION).diag
    if np.any(np.abs(truth.true_factors[~union_mask, 0]) > 1e-10):
        raise InvariantError("jaw factor has support outside jaw+tongue+lip")
    for col, art in [
        (1, ArticulatorId.TONGUE),
        (2, ArticulatorId.LIP),
        (3, ArticulatorId.VELUM),
        (4, ArticulatorId.LARYNX),
    ]:
        mask = build_projection(seq.amap, [art]).diag
        if np.any(np.abs(truth.true_factors[~mask, col]) > 1e-10):
            raise InvariantError(f"{art.value} factor has support outside its block")
    if np.any(truth.true_activations < 0):
        raise InvariantError("activations must be nonnegative")
    for d in range(truth.true_activations.shape[0]):
        s = hoyer_sparsity(truth.true_activations[d])
        if s < 0.85:
            raise InvariantError(f"activation row {d} has Hoyer sparsity {s:.3f} < 0.85")


# ---------------------------------------------------------------------------
# CSF file format
# ---------------------------------------------------------------------------

_VALID_LABELS = {a.value for a in ArticulatorId}


def write_csf(seq: ContourSequence, path) -> None:
    """Write a contour sequence as a CSF JSON document."""
    doc = {
        "p": seq.p,
        "t": seq.t,
        "fps": seq.fps,
        "articulators": seq.amap.labels(),
        "frames": [[float(v) for v in seq.x[:, tau]] for tau in range(seq.t)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_csf(path) -> ContourSequence:
    """Parse a CSF JSON document back into a contour sequence."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"not valid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ParseError("CSF document must be a JSON object")
    for key in ("p", "t", "fps", "articulators", "frames"):
        if key not in doc:
            raise ParseError(f"missing required key {key!r}")
    p, t = doc["p"], doc["t"]
    if not isinstance(p, int) or not isinstance(t, int):
        raise ParseError("p and t must be integers")
    if t < 1:
        raise ParseError(f"t must be >= 1, got {t}")
    if p < 5:
        raise ParseError(f"p must be >= 5, got {p}")
    labels = doc["articulators"]
    if not isinstance(labels, list) or len(labels) != p:
        raise ParseError(
            f"articulators must list exactly p={p} labels, got {len(labels)}"
        )
    for i, label in enumerate(labels):
        if label not in _VALID_LABELS:
            raise ParseError(f"articulators[{i}]: unknown label {label!r}")
    frames = doc["frames"]
    if not isinstance(frames, list) or len(frames) != t:
        raise ParseError(f"frames must hold exactly t={t} rows, got {len(frames)}")
    x = np.empty((2 * p, t))
    for tau, frame in enumerate(frames):
        if not isinstance(frame, list) or len(frame) != 2 * p:
            raise ParseError(
                f"frames[{tau}]: expected {2 * p} coordinates, got "
                f"{len(frame) if isinstance(frame, list) else type(frame).__name__}"
            )
        x[:, tau] = frame
    if not np.all(np.isfinite(x)):
        raise ParseError("frames contain non-finite coordinates")
    amap = ArticulatorMap.from_labels(labels)
    return ContourSequence(fps=float(doc["fps"]), x=x, amap=amap)
