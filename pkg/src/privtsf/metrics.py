"""Masked losses and the loss-thresholding membership attack.

The attack calls a sample a training-set member when the model's masked MSE
on it falls strictly below a threshold tau, conventionally the average loss
on a reference set. Its strength is summarized by the ratio of true-positive
to false-positive rate at tau: 1.0 means the attacker does no better than
random guessing. Sweeping tau over every observed loss yields the exact
empirical ROC curve and its area.

Everything here is a pure function over immutable inputs; evaluation is safe
to run in parallel across models and datasets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import DataPoint, DomainError, readonly, stack_points
from .forecaster import ForecasterParams, forecast, forecast_batch, masked_batch_losses


def masked_mse(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> float:
    """Mean squared error over observed cells only, normalized by their count."""
    mask = np.asarray(mask, dtype=np.float64)
    count = mask.sum()
    if count < 1:
        raise DomainError("empty target mask")
    diff = (np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)) * mask
    return float((diff**2).sum() / count)


def mmse(x: DataPoint, params: ForecasterParams) -> float:
    """Masked MSE of the model forecast for a single point."""
    return masked_mse(forecast(x.e, params), x.y, x.m)


def dataset_losses(points: Sequence[DataPoint], params: ForecasterParams) -> np.ndarray:
    """Per-sample masked MSE for every point, batched."""
    if not points:
        raise DomainError("empty dataset")
    E, Y, M = stack_points(points)
    return masked_batch_losses(forecast_batch(E, params), Y, M)


def mse_set(points: Sequence[DataPoint], params: ForecasterParams) -> float:
    """Unweighted mean of per-sample masked MSE over a dataset."""
    return float(dataset_losses(points, params).mean())


def avg_train_loss_tau(points: Sequence[DataPoint], params: ForecasterParams) -> float:
    """Attack threshold: the mean loss on the reference set under current params.

    The reference set is the training set in plain attack evaluation and the
    augmented set (originals plus synthetic pool) during augmented retraining.
    """
    return mse_set(points, params)


def pl(x: DataPoint, tau: float, params: ForecasterParams) -> int:
    """Positive-membership indicator: 1 iff the point's loss is strictly below tau."""
    if not math.isfinite(tau):
        raise DomainError("tau must be finite")
    return int(mmse(x, params) < tau)


def predict_zero_mse(points: Sequence[DataPoint]) -> float:
    """Masked MSE of the all-zero forecast, the natural floor for learnability checks."""
    if not points:
        raise DomainError("empty dataset")
    _, Y, M = stack_points(points)
    return float(masked_batch_losses(np.zeros_like(Y), Y, M).mean())


@dataclass
class LossTable:
    """Per-sample losses keyed by sample id, labelled member or non-member."""

    ids: tuple[str, ...]
    losses: np.ndarray
    label: str

    def __post_init__(self) -> None:
        self.losses = readonly(self.losses)
        if self.losses.ndim != 1 or len(self.ids) != self.losses.shape[0]:
            raise DomainError("ids and losses must align")
        if self.losses.size and (not np.all(np.isfinite(self.losses)) or np.any(self.losses < 0)):
            raise DomainError("losses must be finite and non-negative")

    def __len__(self) -> int:
        return self.losses.shape[0]


def loss_table(points: Sequence[DataPoint], params: ForecasterParams, label: str) -> LossTable:
    losses = dataset_losses(points, params)
    ids = tuple(p.uid or str(i) for i, p in enumerate(points))
    return LossTable(ids=ids, losses=losses, label=label)


def tpr_fpr(members: LossTable, nonmembers: LossTable, tau: float) -> tuple[float, float]:
    """Fractions of member and non-member losses strictly below tau."""
    if len(members) == 0 or len(nonmembers) == 0:
        raise DomainError("member and non-member tables must be nonempty")
    tpr = float((members.losses < tau).mean())
    fpr = float((nonmembers.losses < tau).mean())
    return tpr, fpr


def priv(members: LossTable, nonmembers: LossTable, tau: float) -> float:
    """TPR/FPR ratio at tau.

    A zero FPR with zero TPR reports 1.0 (the attack is exactly random
    guessing); a zero FPR with positive TPR reports +inf, serialized as
    `inf` in CSV output.
    """
    tpr, fpr = tpr_fpr(members, nonmembers, tau)
    if fpr == 0.0:
        return 1.0 if tpr == 0.0 else math.inf
    return tpr / fpr


def roc_points(members: LossTable, nonmembers: LossTable) -> np.ndarray:
    """Exact empirical ROC: one point per observed loss value plus -inf/+inf ends.

    Returns an array of (threshold, fpr, tpr) rows in ascending threshold
    order; both rates are non-decreasing in the threshold.
    """
    if len(members) == 0 or len(nonmembers) == 0:
        raise DomainError("member and non-member tables must be nonempty")
    thresholds = np.concatenate(
        [[-np.inf], np.unique(np.concatenate([members.losses, nonmembers.losses])), [np.inf]]
    )
    m_sorted = np.sort(members.losses)
    n_sorted = np.sort(nonmembers.losses)
    tpr = np.searchsorted(m_sorted, thresholds, side="left") / len(members)
    fpr = np.searchsorted(n_sorted, thresholds, side="left") / len(nonmembers)
    return np.column_stack([thresholds, fpr, tpr])


def auroc_from_points(points: np.ndarray) -> float:
    """Trapezoidal area under a (threshold, fpr, tpr) curve."""
    return float(np.trapezoid(points[:, 2], points[:, 1]))


def roc_curve(members: LossTable, nonmembers: LossTable) -> tuple[np.ndarray, float]:
    pts = roc_points(members, nonmembers)
    return pts, auroc_from_points(pts)


@dataclass
class AttackReport:
    """Threshold attack summary for one model/dataset pair."""

    tau: float
    tpr: float
    fpr: float
    priv: float
    roc: np.ndarray  # (K, 3) threshold/fpr/tpr rows
    auroc: float


def attack_report(members: LossTable, nonmembers: LossTable, tau: float) -> AttackReport:
    """Assemble TPR/FPR/Priv at tau plus the full swept ROC and its area."""
    tpr, fpr = tpr_fpr(members, nonmembers, tau)
    pts, area = roc_curve(members, nonmembers)
    return AttackReport(
        tau=tau,
        tpr=tpr,
        fpr=fpr,
        priv=priv(members, nonmembers, tau),
        roc=pts,
        auroc=area,
    )
