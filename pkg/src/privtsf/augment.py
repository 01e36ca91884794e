"""Embedding-space data synthesis: gradient-free optimization, PCA-restricted
perturbations, convex mixing, and the bounded synthetic pool.

The gradient-free route estimates the gradient of a scalar objective from
paired function evaluations at random unit perturbations of the embedding
matrix and takes a descent step. The objective trades off diversity (raising
the candidate's masked MSE) against attacker confusion (making it look like a
member of the reference set); alpha = 1 optimizes purely for diversity,
alpha = 0 purely for member-likeness. The PCA variant confines perturbations
to the span of the top principal components of the training embeddings.

Candidate generation is independent per seed point: each point draws from its
own RNG stream derived from (wave seed, point index), so waves reproduce
exactly regardless of evaluation order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .data import (
    ConfigurationError,
    DataPoint,
    DomainError,
    ORIGIN_SYNTHETIC,
    ValidationError,
    readonly,
    stack_points,
)
from .forecaster import ForecasterParams, forecast_batch, masked_batch_losses
from .metrics import mmse

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ZooConfig:
    """Step size, probe width, probes per step, step count, and objective mix."""

    alpha: float
    lam: float = 3000.0
    mu: float = 300.0
    k: int = 3
    steps: int = 10

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError("alpha must lie in [0, 1]")
        if self.lam <= 0 or self.mu <= 0:
            raise ConfigurationError("lam and mu must be positive")
        if self.k < 1 or self.steps < 0:
            raise ConfigurationError("k must be >= 1 and steps >= 0")


@dataclass(frozen=True)
class MixupConfig:
    """Beta(beta, beta) concentration for the interpolation weight."""

    beta: float

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ConfigurationError("beta must be positive")


@dataclass
class PcaBasis:
    """Principal directions of flattened embeddings covering a variance target.

    Keeps the minimal prefix of components whose cumulative explained
    variance ratio reaches `variance_threshold`; components are orthonormal.
    """

    mean: np.ndarray  # (D,)
    components: np.ndarray  # (d, D)
    explained_variance_ratio: np.ndarray  # (d,)
    variance_threshold: float

    def __post_init__(self) -> None:
        self.mean = readonly(self.mean)
        self.components = readonly(self.components)
        self.explained_variance_ratio = readonly(self.explained_variance_ratio)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def pca_fit(embeddings: Sequence[np.ndarray] | np.ndarray, variance_threshold: float = 0.70) -> PcaBasis:
    """Fit a PCA basis on flattened embedding matrices.

    Components come from the eigendecomposition of the sample covariance in
    descending eigenvalue order; directions below numerical rank are dropped
    before applying the threshold, so a threshold of 1.0 keeps exactly the
    covariance rank.
    """
    X = np.stack([np.asarray(e, dtype=np.float64).ravel() for e in embeddings])
    if X.shape[0] < 2:
        raise DomainError("PCA needs at least 2 samples")
    if not 0.0 < variance_threshold <= 1.0:
        raise ConfigurationError("variance_threshold must lie in (0, 1]")
    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    if s[0] <= 0:
        raise DomainError("embeddings have zero variance")
    rank = int((s > s[0] * max(X.shape) * np.finfo(np.float64).eps).sum())
    var = s[:rank] ** 2
    ratio = var / var.sum()
    d = int(np.searchsorted(np.cumsum(ratio), variance_threshold - 1e-9) + 1)
    d = min(d, rank)
    return PcaBasis(
        mean=mean,
        components=Vt[:d],
        explained_variance_ratio=ratio[:d],
        variance_threshold=variance_threshold,
    )


def unit_perturbations(
    shape: tuple[int, ...],
    k: int,
    rng: np.random.Generator,
    basis: PcaBasis | None = None,
) -> np.ndarray:
    """k random directions of unit Frobenius norm; confined to the basis span if given."""
    if basis is None:
        u = rng.standard_normal((k,) + shape)
    else:
        coef = rng.standard_normal((k, basis.n_components))
        u = (coef @ basis.components).reshape((k,) + shape)
    flat = u.reshape(k, -1)
    norms = np.maximum(np.linalg.norm(flat, axis=1), 1e-300)
    return (flat / norms[:, None]).reshape((k,) + shape)


def zoo_objective_g(x: DataPoint, tau: float, params: ForecasterParams, alpha: float) -> float:
    """Scalar objective: negative mix of the point's loss and its member indicator."""
    loss = mmse(x, params)
    return -(alpha * loss + (1.0 - alpha) * float(loss < tau))


def zoo_update(
    e: np.ndarray,
    objective: Callable[[np.ndarray], float],
    cfg: ZooConfig,
    rng: np.random.Generator,
    basis: PcaBasis | None = None,
) -> np.ndarray:
    """One estimator step on an arbitrary scalar objective.

    Draws k unit perturbations, probes the objective at e +/- mu * u, and
    steps along the estimated descent direction. Perturbation pairs with a
    non-finite probe are skipped; if all pairs are skipped the input is
    returned unchanged with a warning.
    """
    e = np.asarray(e, dtype=np.float64)
    us = unit_perturbations(e.shape, cfg.k, rng, basis)
    est = np.zeros_like(e)
    skipped = 0
    for u in us:
        g_plus = float(objective(e + cfg.mu * u))
        g_minus = float(objective(e - cfg.mu * u))
        d = (g_plus - g_minus) / (2.0 * cfg.mu)
        if np.isfinite(d):
            est += d * u
        else:
            skipped += 1
    if skipped == cfg.k:
        log.warning("all %d perturbation pairs non-finite; embedding left unchanged", cfg.k)
        return e
    return e - cfg.lam * est / cfg.k


def zoo_step(
    e: np.ndarray,
    y: np.ndarray,
    m: np.ndarray,
    tau: float,
    params: ForecasterParams,
    cfg: ZooConfig,
    rng: np.random.Generator,
    basis: PcaBasis | None = None,
) -> np.ndarray:
    """One update of an embedding against the model-backed objective (fixed y, m)."""

    def obj(em: np.ndarray) -> float:
        loss = masked_batch_losses(forecast_batch(em[None], params), y[None], m[None])[0]
        return -(cfg.alpha * loss + (1.0 - cfg.alpha) * float(loss < tau))

    return zoo_update(e, obj, cfg, rng, basis)


def zoo_pca_step(
    e: np.ndarray,
    y: np.ndarray,
    m: np.ndarray,
    tau: float,
    params: ForecasterParams,
    cfg: ZooConfig,
    basis: PcaBasis,
    rng: np.random.Generator,
) -> np.ndarray:
    """zoo_step with perturbations restricted to the span of the kept components."""
    return zoo_step(e, y, m, tau, params, cfg, rng, basis=basis)


def _g_batch(
    E: np.ndarray,
    Y: np.ndarray,
    M: np.ndarray,
    tau: float,
    params: ForecasterParams,
    alpha: float,
) -> np.ndarray:
    losses = masked_batch_losses(forecast_batch(E, params), Y, M)
    return -(alpha * losses + (1.0 - alpha) * (losses < tau).astype(np.float64))


def zoo_generate(
    seed_points: Sequence[DataPoint],
    tau: float,
    params: ForecasterParams,
    cfg: ZooConfig,
    seed: int,
    epoch: int,
    basis: PcaBasis | None = None,
) -> list[DataPoint]:
    """Run the multi-step update on every seed point and emit synthetic points.

    Each output keeps its seed's target and mask; only the embedding moves.
    Point j draws its perturbations from the stream (seed, j). Probe pairs
    with non-finite objective differences are skipped (contributing nothing
    to that step's estimate).
    """
    if not seed_points:
        raise DomainError("no seed points")
    E, Y, M = stack_points(seed_points)
    B = E.shape[0]
    if cfg.steps > 0:
        U = np.stack(
            [
                unit_perturbations(E.shape[1:], cfg.steps * cfg.k, np.random.default_rng([seed, j]), basis).reshape(
                    (cfg.steps, cfg.k) + E.shape[1:]
                )
                for j in range(B)
            ]
        )
        E = E.copy()
        total_skipped = 0
        for s in range(cfg.steps):
            est = np.zeros_like(E)
            for i in range(cfg.k):
                Us = U[:, s, i]
                diff = (
                    _g_batch(E + cfg.mu * Us, Y, M, tau, params, cfg.alpha)
                    - _g_batch(E - cfg.mu * Us, Y, M, tau, params, cfg.alpha)
                ) / (2.0 * cfg.mu)
                finite = np.isfinite(diff)
                total_skipped += int((~finite).sum())
                est += np.where(finite, diff, 0.0)[:, None, None] * Us
            E = E - cfg.lam * est / cfg.k
        if total_skipped:
            log.warning("skipped %d non-finite perturbation pairs during generation", total_skipped)
    return [
        DataPoint(
            e=E[j],
            y=seed_points[j].y,
            m=seed_points[j].m,
            origin=ORIGIN_SYNTHETIC,
            created_epoch=epoch,
            uid=f"syn{epoch}:{j}",
        )
        for j in range(B)
    ]


def mixup_generate(
    x1: DataPoint,
    x2: DataPoint,
    cfg: MixupConfig,
    rng: np.random.Generator,
    epoch: int = 0,
    uid: str = "",
) -> DataPoint:
    """Convex combination of two embeddings, inheriting the dominant point's labels.

    Draws lam ~ Beta(beta, beta); the mixed point takes (y, m) from x1 when
    lam > 0.5 and from x2 otherwise.
    """
    if x1.e.shape != x2.e.shape or x1.y.shape != x2.y.shape:
        raise ConfigurationError("mixup points must share dimensions")
    lam = float(rng.beta(cfg.beta, cfg.beta))
    e = lam * x1.e + (1.0 - lam) * x2.e
    dominant = x1 if lam > 0.5 else x2
    return DataPoint(
        e=e,
        y=dominant.y,
        m=dominant.m,
        origin=ORIGIN_SYNTHETIC,
        created_epoch=epoch,
        uid=uid or f"mix{epoch}",
    )


class SyntheticPool:
    """Bounded first-in-first-out store of synthetic points.

    Inserts append in creation order and evict from the front (oldest
    creation epoch first) until the size bound holds again.
    """

    def __init__(self, cap: int):
        if cap < 0:
            raise ConfigurationError("pool cap must be non-negative")
        self.cap = cap
        self._items: list[DataPoint] = []

    def insert(self, items: Sequence[DataPoint]) -> None:
        for it in items:
            if it.origin != ORIGIN_SYNTHETIC:
                raise ValidationError("pool accepts synthetic points only")
        self._items.extend(items)
        overflow = len(self._items) - self.cap
        if overflow > 0:
            del self._items[:overflow]

    @property
    def items(self) -> tuple[DataPoint, ...]:
        return tuple(self._items)

    def __len__(self) -> int:
        return len(self._items)
