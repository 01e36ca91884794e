"""Compact multi-step forecaster with a frozen linear embedding front end.

The embedding map turns each hourly row (values concatenated with its mask)
into a dense vector, so downstream code always sees a fixed-size matrix with
no missing entries. The forecaster pools the embedded rows with learned
per-hour weights, passes them through one tanh hidden layer to form a context
vector, and unrolls a single-step recurrent decoder for the forecast horizon.
The decoder consumes its own previous prediction at every step (student
forcing), during training and inference alike.

Gradients are computed analytically by backpropagation through the unroll;
per-sample gradients are available for differentially private updates.
Finite-difference verification lives in the test suite.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .data import (
    BinnedWindow,
    ConfigurationError,
    DataPoint,
    DomainError,
    EvaluationError,
    Standardizer,
    TrainingError,
    readonly,
    stack_points,
)

log = logging.getLogger(__name__)

PARAM_FIELDS = ("pos", "w_hidden", "b_hidden", "w_state", "w_feedback", "b_state", "w_out", "b_out")
EMBEDDING_FIELDS = ("emb_weight", "emb_bias")

_SHUFFLE_STREAM = 7
_NOISE_STREAM = 8


@dataclass
class EmbeddingMap:
    """Row-wise linear map from (values, mask) pairs to embedding vectors.

    Frozen by construction: the arrays are read-only and no training path
    touches the map after pretraining.
    """

    weight: np.ndarray  # (2F, n)
    bias: np.ndarray  # (n,)

    def __post_init__(self) -> None:
        self.weight = readonly(self.weight)
        self.bias = readonly(self.bias)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ConfigurationError("embedding weight must be (2F, n) with bias of length n")

    @property
    def n_vars(self) -> int:
        return self.weight.shape[0] // 2

    @property
    def dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class ForecasterParams:
    """All trainable forecaster parameters; arrays are read-only, updates allocate."""

    pos: np.ndarray  # (input_hours,) pooling weights
    w_hidden: np.ndarray  # (H, n)
    b_hidden: np.ndarray  # (H,)
    w_state: np.ndarray  # (H, H)
    w_feedback: np.ndarray  # (H, F)
    b_state: np.ndarray  # (H,)
    w_out: np.ndarray  # (F, H)
    b_out: np.ndarray  # (F,)
    horizon: int = 24

    def __post_init__(self) -> None:
        for name in PARAM_FIELDS:
            setattr(self, name, readonly(getattr(self, name)))
        H, n = self.w_hidden.shape
        F = self.w_out.shape[0]
        ok = (
            self.b_hidden.shape == (H,)
            and self.w_state.shape == (H, H)
            and self.w_feedback.shape == (H, F)
            and self.b_state.shape == (H,)
            and self.w_out.shape == (F, H)
            and self.b_out.shape == (F,)
            and self.horizon >= 1
        )
        if not ok:
            raise ConfigurationError("inconsistent parameter shapes")

    @property
    def n(self) -> int:
        return self.w_hidden.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_hidden.shape[0]

    @property
    def n_vars(self) -> int:
        return self.w_out.shape[0]

    @property
    def input_hours(self) -> int:
        return self.pos.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_FIELDS}

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(getattr(self, name))) for name in PARAM_FIELDS)

    def updated(self, deltas: dict[str, np.ndarray], scale: float) -> "ForecasterParams":
        """Return new params with each array shifted by scale * deltas[name]."""
        new = {name: getattr(self, name) + scale * deltas[name] for name in PARAM_FIELDS}
        return replace(self, **new)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization and model-size settings for plain minibatch gradient descent."""

    learning_rate: float
    batch_size: int
    max_epochs: int
    hidden_dim: int = 32
    n: int = 32
    horizon: int = 24
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.learning_rate, self.batch_size, self.max_epochs, self.hidden_dim, self.n, self.horizon) <= 0:
            raise ConfigurationError("TrainConfig values must be positive")


@dataclass(frozen=True)
class DpConfig:
    """Per-sample clipping norm, Gaussian noise multiplier, and learning-rate boost."""

    noise_multiplier: float
    clip_norm: float
    lr_scale: float = 100.0

    def __post_init__(self) -> None:
        if self.noise_multiplier < 0:
            raise ConfigurationError("noise_multiplier must be >= 0")
        if self.clip_norm <= 0:
            raise ConfigurationError("clip_norm must be > 0")
        if self.lr_scale <= 0:
            raise ConfigurationError("lr_scale must be > 0")


def init_params(
    n: int,
    hidden_dim: int,
    n_vars: int,
    horizon: int,
    seed: int,
    input_hours: int = 24,
) -> tuple[EmbeddingMap, ForecasterParams]:
    """Seeded init: every array uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    rng = np.random.default_rng(seed)

    def u(shape, fan):
        b = 1.0 / np.sqrt(fan)
        return rng.uniform(-b, b, size=shape)

    emb = EmbeddingMap(weight=u((2 * n_vars, n), 2 * n_vars), bias=u((n,), 2 * n_vars))
    params = ForecasterParams(
        pos=u((input_hours,), input_hours),
        w_hidden=u((hidden_dim, n), n),
        b_hidden=u((hidden_dim,), n),
        w_state=u((hidden_dim, hidden_dim), hidden_dim),
        w_feedback=u((hidden_dim, n_vars), n_vars),
        b_state=u((hidden_dim,), hidden_dim),
        w_out=u((n_vars, hidden_dim), hidden_dim),
        b_out=u((n_vars,), hidden_dim),
        horizon=horizon,
    )
    return emb, params


def embed_rows(values: np.ndarray, mask: np.ndarray, emb: EmbeddingMap) -> np.ndarray:
    """Row-wise linear map: row h = weight applied to concat(values[h], mask[h]) plus bias."""
    if values.shape != mask.shape or values.shape[-1] != emb.n_vars:
        raise ConfigurationError(
            f"rows have {values.shape[-1]} variables, embedding expects {emb.n_vars}"
        )
    x = np.concatenate([values, mask], axis=-1)
    return x @ emb.weight + emb.bias


def embed(window: BinnedWindow, emb: EmbeddingMap) -> np.ndarray:
    """Embed one window under the frozen map."""
    return embed_rows(window.values, window.mask_in, emb)


def embed_windows(windows: Sequence[BinnedWindow], emb: EmbeddingMap) -> np.ndarray:
    """Batched embed; returns (B, input_len, n)."""
    X = np.stack([np.concatenate([w.values, w.mask_in], axis=1) for w in windows])
    return X @ emb.weight + emb.bias


def bake_points(
    id_windows: Sequence[tuple[int, BinnedWindow]],
    emb: EmbeddingMap,
) -> list[DataPoint]:
    """Freeze windows into DataPoints under the fixed embedding map."""
    if not id_windows:
        return []
    windows = [w for _, w in id_windows]
    E = embed_windows(windows, emb)
    return [
        DataPoint(e=E[i], y=w.target, m=w.mask_out, uid=f"{eid}:{w.window_start}")
        for i, (eid, w) in enumerate(id_windows)
    ]


def _forward(E: np.ndarray, params: ForecasterParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unroll the decoder; returns (pooled, states S, predictions Yh).

    S has shape (B, T+1, H) with S[:, 0] the context vector; Yh has shape
    (B, T+1, F) with Yh[:, 0] = 0 as the initial feedback input.
    """
    B = E.shape[0]
    T = params.horizon
    H = params.hidden_dim
    F = params.n_vars
    pooled = np.einsum("h,bhn->bn", params.pos, E)
    S = np.empty((B, T + 1, H))
    S[:, 0] = np.tanh(pooled @ params.w_hidden.T + params.b_hidden)
    Yh = np.zeros((B, T + 1, F))
    for t in range(1, T + 1):
        a = S[:, t - 1] @ params.w_state.T + Yh[:, t - 1] @ params.w_feedback.T + params.b_state
        S[:, t] = np.tanh(a)
        Yh[:, t] = S[:, t] @ params.w_out.T + params.b_out
    return pooled, S, Yh


def _check_finite(params: ForecasterParams) -> None:
    if not params.is_finite():
        raise EvaluationError("forecaster parameters contain non-finite values")


def forecast(e: np.ndarray, params: ForecasterParams) -> np.ndarray:
    """Forecast one embedding matrix; deterministic given params."""
    e = np.asarray(e, dtype=np.float64)
    if e.shape != (params.input_hours, params.n):
        raise ConfigurationError(f"embedding shape {e.shape} does not match ({params.input_hours}, {params.n})")
    _check_finite(params)
    return _forward(e[None], params)[2][0, 1:]


def forecast_batch(E: np.ndarray, params: ForecasterParams) -> np.ndarray:
    """Forecast a batch of embeddings; returns (B, horizon, F)."""
    E = np.asarray(E, dtype=np.float64)
    _check_finite(params)
    return _forward(E, params)[2][:, 1:]


def masked_batch_losses(pred: np.ndarray, Y: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Per-sample masked mean squared error over a batch."""
    counts = M.sum(axis=(1, 2))
    if np.any(counts < 1):
        raise DomainError("sample with empty target mask")
    return (((pred - Y) ** 2) * M).sum(axis=(1, 2)) / counts


def _backward(
    E: np.ndarray,
    Y: np.ndarray,
    M: np.ndarray,
    params: ForecasterParams,
    pooled: np.ndarray,
    S: np.ndarray,
    Yh: np.ndarray,
    per_sample: bool,
    X: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Backprop each sample's own masked MSE through the unroll.

    With per_sample=True the returned arrays keep the leading batch axis;
    otherwise they are already averaged over the batch. Passing the raw
    window inputs X (B, I, 2F) additionally yields embedding-map gradients.
    """
    B, T = Y.shape[0], Y.shape[1]
    counts = M.sum(axis=(1, 2))
    # gradient of each sample's mmse w.r.t. its predictions
    dY_loss = 2.0 * M * (Yh[:, 1:] - Y) / counts[:, None, None]

    H = params.hidden_dim
    F = params.n_vars
    DY = np.empty((B, T, F))  # total gradient reaching each prediction
    DA = np.empty((B, T, H))  # gradient at each pre-activation state
    da_next: np.ndarray | None = None
    for t in range(T, 0, -1):
        dy = dY_loss[:, t - 1].copy()
        ds = np.zeros((B, H))
        if da_next is not None:
            dy += da_next @ params.w_feedback
            ds += da_next @ params.w_state
        ds += dy @ params.w_out
        da = ds * (1.0 - S[:, t] ** 2)
        DY[:, t - 1] = dy
        DA[:, t - 1] = da
        da_next = da

    ds0 = DA[:, 0] @ params.w_state
    da0 = ds0 * (1.0 - S[:, 0] ** 2)
    dpooled = da0 @ params.w_hidden

    if per_sample:
        g = {
            "w_out": np.einsum("btf,bth->bfh", DY, S[:, 1:]),
            "b_out": DY.sum(axis=1),
            "w_state": np.einsum("bth,btk->bhk", DA, S[:, :T]),
            "w_feedback": np.einsum("bth,btf->bhf", DA, Yh[:, :T]),
            "b_state": DA.sum(axis=1),
            "w_hidden": np.einsum("bh,bn->bhn", da0, pooled),
            "b_hidden": da0,
            "pos": np.einsum("bn,bin->bi", dpooled, E),
        }
        if X is not None:
            dE = params.pos[None, :, None] * dpooled[:, None, :]
            g["emb_weight"] = np.einsum("bip,bin->bpn", X, dE)
            g["emb_bias"] = dE.sum(axis=1)
    else:
        g = {
            "w_out": np.einsum("btf,bth->fh", DY, S[:, 1:]) / B,
            "b_out": DY.sum(axis=(0, 1)) / B,
            "w_state": np.einsum("bth,btk->hk", DA, S[:, :T]) / B,
            "w_feedback": np.einsum("bth,btf->hf", DA, Yh[:, :T]) / B,
            "b_state": DA.sum(axis=(0, 1)) / B,
            "w_hidden": np.einsum("bh,bn->hn", da0, pooled) / B,
            "b_hidden": da0.sum(axis=0) / B,
            "pos": np.einsum("bn,bin->i", dpooled, E) / B,
        }
        if X is not None:
            dE = params.pos[None, :, None] * dpooled[:, None, :]
            g["emb_weight"] = np.einsum("bip,bin->pn", X, dE) / B
            g["emb_bias"] = dE.sum(axis=(0, 1)) / B
    return g


def mean_gradients(
    points: Sequence[DataPoint],
    params: ForecasterParams,
) -> tuple[dict[str, np.ndarray], float]:
    """Batch-mean gradient of the masked MSE and the mean loss itself."""
    E, Y, M = stack_points(points)
    pooled, S, Yh = _forward(E, params)
    losses = masked_batch_losses(Yh[:, 1:], Y, M)
    grads = _backward(E, Y, M, params, pooled, S, Yh, per_sample=False)
    return grads, float(losses.mean())


def per_sample_gradients(
    points: Sequence[DataPoint],
    params: ForecasterParams,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Per-sample gradients (leading batch axis) and per-sample losses."""
    E, Y, M = stack_points(points)
    pooled, S, Yh = _forward(E, params)
    losses = masked_batch_losses(Yh[:, 1:], Y, M)
    grads = _backward(E, Y, M, params, pooled, S, Yh, per_sample=True)
    return grads, losses


def _assert_finite_grads(grads: dict[str, np.ndarray], loss: float) -> None:
    if not np.isfinite(loss) or any(not np.all(np.isfinite(g)) for g in grads.values()):
        raise TrainingError(f"non-finite gradient or loss (loss={loss})")


def train_step(
    points: Sequence[DataPoint],
    params: ForecasterParams,
    cfg: TrainConfig,
) -> tuple[ForecasterParams, float]:
    """One plain gradient-descent step on the batch-mean masked MSE."""
    if not points:
        raise DomainError("empty batch")
    grads, loss = mean_gradients(points, params)
    _assert_finite_grads(grads, loss)
    return params.updated(grads, -cfg.learning_rate), loss


def clip_per_sample(grads: dict[str, np.ndarray], clip_norm: float) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Scale each sample's gradient to L2 norm at most clip_norm.

    Returns the clipped per-sample gradients and the post-clip norms.
    """
    B = next(iter(grads.values())).shape[0]
    sq = np.zeros(B)
    for g in grads.values():
        sq += (g.reshape(B, -1) ** 2).sum(axis=1)
    norms = np.sqrt(sq)
    scale = np.minimum(1.0, clip_norm / np.maximum(norms, 1e-300))
    clipped = {k: g * scale.reshape((B,) + (1,) * (g.ndim - 1)) for k, g in grads.items()}
    return clipped, norms * scale


def dp_train_step(
    points: Sequence[DataPoint],
    params: ForecasterParams,
    cfg: TrainConfig,
    dp: DpConfig,
    rng: np.random.Generator,
) -> ForecasterParams:
    """One differentially private step: clip per-sample gradients, average, add noise.

    The noise is Gaussian with per-coordinate std noise_multiplier * clip_norm /
    batch_size, and the step uses cfg.learning_rate * dp.lr_scale.
    """
    if not points:
        raise DomainError("empty batch")
    grads, losses = per_sample_gradients(points, params)
    _assert_finite_grads(grads, float(losses.mean()))
    B = losses.shape[0]
    clipped, _ = clip_per_sample(grads, dp.clip_norm)
    noise_std = dp.noise_multiplier * dp.clip_norm / B
    update = {
        k: g.mean(axis=0) + noise_std * rng.standard_normal(g.shape[1:]) for k, g in clipped.items()
    }
    return params.updated(update, -cfg.learning_rate * dp.lr_scale)


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator) -> Iterable[np.ndarray]:
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start : start + batch_size]


def train(
    points: Sequence[DataPoint],
    params: ForecasterParams,
    cfg: TrainConfig,
    epochs: int | None = None,
    seed: int | None = None,
) -> tuple[ForecasterParams, list[float]]:
    """Minibatch SGD for a fixed number of epochs; returns params and per-epoch mean loss."""
    if not points:
        raise DomainError("empty training set")
    epochs = cfg.max_epochs if epochs is None else epochs
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng([seed, _SHUFFLE_STREAM])
    history: list[float] = []
    for _ in range(epochs):
        total, count = 0.0, 0
        for idx in _epoch_batches(len(points), cfg.batch_size, rng):
            batch = [points[i] for i in idx]
            params, loss = train_step(batch, params, cfg)
            total += loss * len(idx)
            count += len(idx)
        history.append(total / count)
    return params, history


def dp_train(
    points: Sequence[DataPoint],
    params: ForecasterParams,
    cfg: TrainConfig,
    dp: DpConfig,
    epochs: int,
    seed: int,
) -> ForecasterParams:
    """DP-SGD training loop with independent shuffle and noise streams."""
    if not points:
        raise DomainError("empty training set")
    shuffle_rng = np.random.default_rng([seed, _SHUFFLE_STREAM])
    noise_rng = np.random.default_rng([seed, _NOISE_STREAM])
    for _ in range(epochs):
        for idx in _epoch_batches(len(points), cfg.batch_size, shuffle_rng):
            batch = [points[i] for i in idx]
            params = dp_train_step(batch, params, cfg, dp, noise_rng)
    return params


def _stack_windows(windows: Sequence[BinnedWindow]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.stack([np.concatenate([w.values, w.mask_in], axis=1) for w in windows])
    Y = np.stack([w.target for w in windows])
    M = np.stack([w.mask_out for w in windows])
    return X, Y, M


def pretrain_embedding(
    windows: Sequence[BinnedWindow],
    cfg: TrainConfig,
) -> tuple[EmbeddingMap, ForecasterParams]:
    """Jointly train embedding map and forecaster, then freeze the embedding.

    Runs cfg.max_epochs of minibatch SGD on the masked MSE. The returned map
    is the one all later augmentation and retraining operates on; only the
    forecaster parameters remain trainable afterwards.
    """
    if not windows:
        raise DomainError("empty pretraining set")
    n_vars = windows[0].values.shape[1]
    emb, params = init_params(cfg.n, cfg.hidden_dim, n_vars, cfg.horizon, cfg.seed)
    X, Y, M = _stack_windows(windows)
    rng = np.random.default_rng([cfg.seed, _SHUFFLE_STREAM])
    weight, bias = emb.weight.copy(), emb.bias.copy()
    for _ in range(cfg.max_epochs):
        for idx in _epoch_batches(len(windows), cfg.batch_size, rng):
            Xb, Yb, Mb = X[idx], Y[idx], M[idx]
            Eb = Xb @ weight + bias
            pooled, S, Yh = _forward(Eb, params)
            losses = masked_batch_losses(Yh[:, 1:], Yb, Mb)
            grads = _backward(Eb, Yb, Mb, params, pooled, S, Yh, per_sample=False, X=Xb)
            _assert_finite_grads(grads, float(losses.mean()))
            forecaster_grads = {k: grads[k] for k in PARAM_FIELDS}
            params = params.updated(forecaster_grads, -cfg.learning_rate)
            weight = weight - cfg.learning_rate * grads["emb_weight"]
            bias = bias - cfg.learning_rate * grads["emb_bias"]
    return EmbeddingMap(weight=weight, bias=bias), params


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: str,
    emb: EmbeddingMap,
    params: ForecasterParams,
    std: Standardizer,
    seed: int,
) -> None:
    """Persist model state as an npz archive (layout documented in the README)."""
    np.savez(
        path,
        version=np.int64(CHECKPOINT_VERSION),
        n=np.int64(params.n),
        hidden_dim=np.int64(params.hidden_dim),
        n_vars=np.int64(params.n_vars),
        horizon=np.int64(params.horizon),
        input_hours=np.int64(params.input_hours),
        seed=np.int64(seed),
        emb_weight=emb.weight,
        emb_bias=emb.bias,
        std_mean=std.mean,
        std_std=std.std,
        **params.arrays(),
    )


def load_checkpoint(path: str) -> tuple[EmbeddingMap, ForecasterParams, Standardizer, dict]:
    with np.load(path) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigurationError(f"unsupported checkpoint version {version}")
        emb = EmbeddingMap(weight=data["emb_weight"], bias=data["emb_bias"])
        params = ForecasterParams(
            **{name: data[name] for name in PARAM_FIELDS},
            horizon=int(data["horizon"]),
        )
        std = Standardizer(mean=data["std_mean"], std=data["std_std"])
        meta = {k: int(data[k]) for k in ("n", "hidden_dim", "n_vars", "horizon", "input_hours", "seed")}
    return emb, params, std, meta
