"""Sparse convolutive factorization of factor scores via a small autoencoder.

The encoder (two same-padded 1-D conv layers with ReLU) maps factor scores to
nonnegative gestural scores H; the decoder is a single causal 1-D convolution
whose kernel doubles as the gesture bases, so the reconstruction is exactly a
convolutive mixture of time-shifted activations. Training minimizes
reconstruction error while rewarding time-axis Hoyer sparsity of H, optionally
adding a CTC term through a recognition head to fine-tune for phone content.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .autograd import Adam, Tape, Tensor, decayed_lr
from .contour import convolve_scores
from .errors import ArgumentError, DimensionError, InvariantError
from .factana import FactorScores, FactorSet

__all__ = [
    "ENCODER_HIDDEN",
    "ENCODER_KERNEL",
    "NcmfModel",
    "GesturalScores",
    "TrainConfig",
    "TrainResult",
    "init_model",
    "encode",
    "decode",
    "encode_on_tape",
    "decode_on_tape",
    "compose_gestures",
    "contour_reconstruction",
    "hoyer_sparsity",
    "mean_sparsity",
    "sparsity_on_tape",
    "total_loss",
    "loss_on_tape",
    "train",
    "save_checkpoint",
    "load_checkpoint",
]

ENCODER_HIDDEN = 64
ENCODER_KERNEL = 3
FACTOR_CHANNELS = 5


@dataclass
class NcmfModel:
    """Autoencoder weights; ``dec`` is the convolutive gesture kernel."""

    enc1: Tensor  # (3, 5, 64)
    enc1_bias: Tensor  # (64,)
    enc2: Tensor  # (3, 64, D)
    enc2_bias: Tensor  # (D,)
    dec: Tensor  # (K, D, 5)

    def __post_init__(self):
        k, d, q = self.dec.data.shape
        if q != FACTOR_CHANNELS:
            raise DimensionError(f"decoder must emit {FACTOR_CHANNELS} channels, got {q}")
        if k < 1 or d < 1:
            raise InvariantError("decoder kernel needs K >= 1 and D >= 1")
        if self.enc2.data.shape[2] != d:
            raise DimensionError("encoder output channels must match gesture count")

    @property
    def gestures(self) -> int:
        return self.dec.data.shape[1]

    @property
    def window(self) -> int:
        return self.dec.data.shape[0]

    def parameters(self) -> list[Tensor]:
        return [self.enc1, self.enc1_bias, self.enc2, self.enc2_bias, self.dec]

    def copy(self) -> "NcmfModel":
        return NcmfModel(*(Tensor(p.data.copy()) for p in self.parameters()))


def init_model(gestures: int = 15, window: int = 21, seed: int = 0) -> NcmfModel:
    """Deterministic fan-in-scaled uniform initialization; biases start at zero."""
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    enc1 = uniform((ENCODER_KERNEL, FACTOR_CHANNELS, ENCODER_HIDDEN), FACTOR_CHANNELS * ENCODER_KERNEL)
    enc2 = uniform((ENCODER_KERNEL, ENCODER_HIDDEN, gestures), ENCODER_HIDDEN * ENCODER_KERNEL)
    dec = uniform((window, gestures, FACTOR_CHANNELS), gestures * window)
    return NcmfModel(
        enc1=Tensor(enc1),
        enc1_bias=Tensor(np.zeros(ENCODER_HIDDEN)),
        enc2=Tensor(enc2),
        enc2_bias=Tensor(np.zeros(gestures)),
        dec=Tensor(dec),
    )


@dataclass(frozen=True)
class GesturalScores:
    """Nonnegative sparse activations, one row per gesture (D x t)."""

    h: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.h, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError("gestural scores must be 2-D")
        if not np.all(np.isfinite(arr)):
            raise InvariantError("gestural scores contain non-finite entries")
        if np.any(arr < 0):
            raise InvariantError("gestural scores must be nonnegative")
        object.__setattr__(self, "h", arr)

    @property
    def t(self) -> int:
        return self.h.shape[1]


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def _scores_channels(y) -> np.ndarray:
    arr = y.y if isinstance(y, FactorScores) else np.asarray(y, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != FACTOR_CHANNELS:
        raise DimensionError(f"factor scores must be t x {FACTOR_CHANNELS}")
    return arr.T.copy()  # channel-major (5, t)


def encode_on_tape(tape: Tape, model: NcmfModel, y_channels: Tensor) -> Tensor:
    hidden = tape.relu(
        tape.conv1d(y_channels, model.enc1, padding="same", bias=model.enc1_bias)
    )
    return tape.relu(
        tape.conv1d(hidden, model.enc2, padding="same", bias=model.enc2_bias)
    )


def decode_on_tape(tape: Tape, model: NcmfModel, h: Tensor) -> Tensor:
    if h.data.shape[0] != model.gestures:
        raise DimensionError(
            f"gestural scores have {h.data.shape[0]} rows, model has {model.gestures}"
        )
    return tape.conv1d(h, model.dec, padding="causal")


def encode(model: NcmfModel, y) -> GesturalScores:
    """Factor scores (t x 5) -> gestural scores (D x t)."""
    channels = _scores_channels(y)
    tape = Tape()
    h = encode_on_tape(tape, model, Tensor(channels))
    return GesturalScores(h.data)


def decode(model: NcmfModel, h) -> FactorScores:
    """Gestural scores (D x t) -> reconstructed factor scores (t x 5)."""
    arr = h.h if isinstance(h, GesturalScores) else np.asarray(h, dtype=np.float64)
    tape = Tape()
    out = decode_on_tape(tape, model, Tensor(arr))
    return FactorScores(out.data.T.copy())


def compose_gestures(model: NcmfModel, factors: FactorSet) -> np.ndarray:
    """Contour-space gesture bases: G[i] = W[i] F^T, shape (K, D, 2p)."""
    f = factors.f
    if f.shape[1] != FACTOR_CHANNELS:
        raise DimensionError("factor set must have 5 columns")
    w = model.dec.data
    return np.einsum("kdq,pq->kdp", w, f)


def contour_reconstruction(gesture: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Contour-space reconstruction (2p x t) from gestures and activations."""
    return convolve_scores(np.asarray(h, dtype=np.float64), gesture).T


# ---------------------------------------------------------------------------
# Sparsity and loss
# ---------------------------------------------------------------------------


def hoyer_sparsity(v) -> float:
    """Time-axis sparseness in [0, 1]: 1 for one-hot, 0 for constant vectors.

    Defined as (sqrt(t) - L1/L2) / (sqrt(t) - 1); an all-zero vector counts
    as maximally sparse (1.0).
    """
    arr = np.asarray(v, dtype=np.float64).ravel()
    t = arr.size
    if t < 2:
        raise ArgumentError(f"sparsity needs a vector of length >= 2, got {t}")
    l2 = math.sqrt(float(np.sum(arr * arr)))
    if l2 == 0.0:
        return 1.0
    l1 = float(np.sum(np.abs(arr)))
    root_t = math.sqrt(t)
    return (root_t - l1 / l2) / (root_t - 1.0)


def mean_sparsity(h) -> float:
    """Mean row-wise Hoyer sparsity of a gestural-score matrix."""
    arr = h.h if isinstance(h, GesturalScores) else np.asarray(h, dtype=np.float64)
    if arr.ndim != 2:
        raise ArgumentError("gestural scores must be 2-D")
    return float(np.mean([hoyer_sparsity(arr[d]) for d in range(arr.shape[0])]))


def sparsity_on_tape(tape: Tape, h: Tensor) -> Tensor:
    """Differentiable mean row-wise Hoyer sparsity.

    A vanished row has zero gradient and contributes ~sqrt(t)/(sqrt(t)-1)
    (the tiny L2 floor only guards the division).
    """
    d, t = h.data.shape
    if t < 2:
        raise ArgumentError("sparsity needs t >= 2")
    root_t = math.sqrt(t)
    l1 = tape.sum_axis(tape.abs(h), 1)
    l2 = tape.sqrt(tape.add_const(tape.sum_axis(tape.mul(h, h), 1), 1e-30))
    ratio = tape.div(l1, l2)
    per_row = tape.add_const(tape.scale(ratio, -1.0 / (root_t - 1.0)), root_t / (root_t - 1.0))
    return tape.scale(tape.sum(per_row), 1.0 / d)


@dataclass(frozen=True)
class TrainConfig:
    """Training protocol: composite loss weights and the Adam schedule."""

    lambda1: float = 0.5
    lambda2: float = 0.0
    lr0: float = 0.001
    weight_decay: float = 4e-4
    decay_factor: float = 0.95
    decay_every: int = 10
    updates: int = 1000
    batch: int = 4
    seed: int = 0
    decoupled_decay: bool = True

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lr0", "weight_decay"):
            if getattr(self, name) < 0:
                raise ArgumentError(f"{name} must be nonnegative")
        if self.updates < 1:
            raise ArgumentError("updates must be >= 1")
        if self.batch < 1:
            raise ArgumentError("batch must be >= 1")


def total_loss(y, y_hat, h, ctc_term: float, cfg: TrainConfig) -> float:
    """Composite objective: mse(y, y_hat) - lambda1 * S(H) + lambda2 * ctc."""
    ya = y.y if isinstance(y, FactorScores) else np.asarray(y, dtype=np.float64)
    yb = y_hat.y if isinstance(y_hat, FactorScores) else np.asarray(y_hat, dtype=np.float64)
    if ya.shape != yb.shape:
        raise DimensionError(f"score shapes differ: {ya.shape} vs {yb.shape}")
    if ctc_term < 0:
        raise ArgumentError("ctc term must be nonnegative")
    mse = float(np.sum((ya - yb) ** 2)) / ya.size
    return mse - cfg.lambda1 * mean_sparsity(h) + cfg.lambda2 * ctc_term


@dataclass
class _SegmentLoss:
    loss: Tensor
    h: Tensor
    mse: float
    sparsity: float
    ctc: float


def loss_on_tape(
    tape: Tape,
    model: NcmfModel,
    segment: np.ndarray,
    cfg: TrainConfig,
    head=None,
    target=None,
) -> _SegmentLoss:
    """Forward pass and composite loss for one factor-score segment (t x 5)."""
    channels = _scores_channels(segment)
    t = channels.shape[1]
    y_const = Tensor(channels)
    h = encode_on_tape(tape, model, y_const)
    y_hat = decode_on_tape(tape, model, h)
    diff = tape.sub(y_hat, y_const)
    mse = tape.scale(tape.sum(tape.mul(diff, diff)), 1.0 / (t * FACTOR_CHANNELS))
    sparse = sparsity_on_tape(tape, h)
    loss = tape.add(mse, tape.scale(sparse, -cfg.lambda1))
    ctc_value = 0.0
    if cfg.lambda2 > 0.0:
        if head is None or target is None:
            raise ArgumentError("lambda2 > 0 needs a recognition head and targets")
        ctc = head.loss_on_tape(tape, h, target)
        ctc_value = float(ctc.data)
        loss = tape.add(loss, tape.scale(ctc, cfg.lambda2))
    return _SegmentLoss(
        loss=loss,
        h=h,
        mse=float(mse.data),
        sparsity=mean_sparsity(h.data),
        ctc=ctc_value,
    )


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    model: NcmfModel
    trace: list[dict] = field(default_factory=list)

    def final(self, key: str) -> float:
        return self.trace[-1][key]


def _segment_stream(rng, count: int):
    """Endless deterministic stream of segment indices, reshuffled per epoch."""
    while True:
        for idx in rng.permutation(count):
            yield int(idx)


def train(
    model: NcmfModel,
    segments: list[np.ndarray],
    cfg: TrainConfig,
    head=None,
    targets: list | None = None,
) -> TrainResult:
    """Run ``cfg.updates`` Adam steps over mini-batches of score segments.

    Batches cycle deterministically from ``cfg.seed``; a dataset smaller than
    the batch size is cycled, never padded. The per-update trace records the
    batch-mean loss, mse and sparsity plus the learning rate in effect.
    """
    if not segments:
        raise ArgumentError("training needs at least one segment")
    segs = [np.asarray(s, dtype=np.float64) for s in segments]
    for i, seg in enumerate(segs):
        if seg.ndim != 2 or seg.shape[1] != FACTOR_CHANNELS:
            raise DimensionError(f"segment {i} must be t x {FACTOR_CHANNELS}")
        if seg.shape[0] < model.window:
            raise ArgumentError(
                f"segment {i} has {seg.shape[0]} frames, shorter than window "
                f"{model.window}"
            )
    if cfg.lambda2 > 0.0:
        if head is None or targets is None or len(targets) != len(segs):
            raise ArgumentError("lambda2 > 0 needs a head and one target per segment")

    params = list(model.parameters())
    if cfg.lambda2 > 0.0 and head is not None:
        params += list(head.parameters())
    opt = Adam(
        params,
        lr=cfg.lr0,
        weight_decay=cfg.weight_decay,
        decoupled=cfg.decoupled_decay,
    )
    stream = _segment_stream(np.random.default_rng(cfg.seed), len(segs))

    result = TrainResult(model=model)
    for update in range(cfg.updates):
        opt.lr = decayed_lr(cfg.lr0, cfg.decay_factor, cfg.decay_every, update)
        opt.zero_grad()
        loss_sum = mse_sum = sparse_sum = ctc_sum = 0.0
        for _ in range(cfg.batch):
            idx = next(stream)
            tape = Tape()
            part = loss_on_tape(
                tape,
                model,
                segs[idx],
                cfg,
                head=head,
                target=targets[idx] if targets is not None else None,
            )
            tape.backward(tape.scale(part.loss, 1.0 / cfg.batch))
            loss_sum += float(part.loss.data)
            mse_sum += part.mse
            sparse_sum += part.sparsity
            ctc_sum += part.ctc
        opt.step()
        result.trace.append(
            {
                "update": update,
                "loss": loss_sum / cfg.batch,
                "mse": mse_sum / cfg.batch,
                "sparsity": sparse_sum / cfg.batch,
                "ctc": ctc_sum / cfg.batch,
                "lr": opt.lr,
            }
        )
    return result


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(model: NcmfModel, factors: FactorSet, path) -> None:
    """Persist model weights and the factor set as one JSON document."""
    doc = {
        "D": model.gestures,
        "K": model.window,
        "q": FACTOR_CHANNELS,
        "p": factors.f.shape[0] // 2,
        "enc1": model.enc1.data.tolist(),
        "enc1_bias": model.enc1_bias.data.tolist(),
        "enc2": model.enc2.data.tolist(),
        "enc2_bias": model.enc2_bias.data.tolist(),
        "dec": model.dec.data.tolist(),
        "factors": factors.f.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path) -> tuple[NcmfModel, FactorSet]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    model = NcmfModel(
        enc1=Tensor(np.asarray(doc["enc1"])),
        enc1_bias=Tensor(np.asarray(doc["enc1_bias"])),
        enc2=Tensor(np.asarray(doc["enc2"])),
        enc2_bias=Tensor(np.asarray(doc["enc2_bias"])),
        dec=Tensor(np.asarray(doc["dec"])),
    )
    factors = FactorSet(np.asarray(doc["factors"]))
    if model.gestures != doc["D"] or model.window != doc["K"]:
        raise InvariantError("checkpoint dimensions are inconsistent")
    return model, factors
