"""Experiment orchestration: baseline training, acceptance-gated augmented
retraining, the differentially private comparison run, and report emission.

A run starts from a pretrained baseline (frozen embedding plus a forecaster
trained to convergence on the original training windows). Each augmentation
round generates a synthetic wave, inserts it into the bounded pool, retrains
on a 50/50 mixture of originals and pool samples, and evaluates the candidate
against a three-condition gate: privacy may not degrade beyond a small
factor, heldout error may not degrade beyond a small factor, and the combined
objective priv + beta * mse must not increase. Rejected candidates are
discarded entirely; every candidate leaves exactly one metrics row.

Two evaluation conventions coexist and are kept explicit:
- gate rows use the heldout split as non-members and the augmented set
  (originals plus pool) as the reference for the loss threshold;
- attack/DP rows use the test split as non-members and the training set as
  the reference.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .augment import MixupConfig, PcaBasis, SyntheticPool, ZooConfig, mixup_generate, pca_fit, zoo_generate
from .data import (
    ConfigurationError,
    DataPoint,
    DomainError,
    Episode,
    MetricsRow,
    Standardizer,
    build_windows,
    load_triplets,
    split_by_episode,
    write_report_csv,
    write_roc_csv,
)
from .forecaster import (
    DpConfig,
    EmbeddingMap,
    ForecasterParams,
    TrainConfig,
    bake_points,
    dp_train,
    init_params,
    load_checkpoint,
    pretrain_embedding,
    save_checkpoint,
    train,
)
from .metrics import AttackReport, attack_report, dataset_losses, loss_table, mse_set
from .synth import GeneratorConfig, generate

METHODS = ("baseline", "zoo", "zoo_pca", "mixup", "dp_sgd")

MANIFEST_HEADER = (
    "run_id",
    "method",
    "alpha_or_beta",
    "epoch",
    "accepted",
    "pool_size",
    "samples_generated",
    "steps_executed",
)

_SPLIT_STREAM = 1
_CAP_STREAM = 2
_BASELINE_STREAM = 3
_WAVE_STREAM = 4
_MIX_STREAM = 5
_RETRAIN_STREAM = 6
_DP_INIT_STREAM = 9
_DP_TRAIN_STREAM = 10


def derive_seed(master: int, tag: int) -> int:
    """Deterministic child seed for stream `tag` of a master seed."""
    return int(np.random.SeedSequence([master, tag]).generate_state(1)[0])


@dataclass
class AcceptanceState:
    """Best accepted privacy/error pair plus the gate tolerances."""

    priv_best: float
    mse_best: float
    eps_priv: float = 0.005
    eps_mse: float = 0.005
    beta_accept: float = 3.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.priv_best) and math.isfinite(self.mse_best)):
            raise ConfigurationError("acceptance state must start from finite baseline metrics")


def apply_gate(state: AcceptanceState, priv_value: float, mse_value: float) -> tuple[bool, str, AcceptanceState]:
    """Check the three acceptance inequalities; on accept, bests move to the candidate.

    All three comparisons are inclusive, so a candidate equal to the current
    bests is accepted.
    """
    if not (math.isfinite(priv_value) and math.isfinite(mse_value)):
        return False, "non-finite candidate metrics", state
    ok_priv = priv_value <= (1.0 + state.eps_priv) * state.priv_best
    ok_mse = mse_value <= (1.0 + state.eps_mse) * state.mse_best
    combined = priv_value + state.beta_accept * mse_value
    ok_combined = combined <= state.priv_best + state.beta_accept * state.mse_best
    if ok_priv and ok_mse and ok_combined:
        return True, "", replace(state, priv_best=priv_value, mse_best=mse_value)
    reasons = []
    if not ok_priv:
        reasons.append("priv")
    if not ok_mse:
        reasons.append("mse")
    if not ok_combined:
        reasons.append("combined")
    return False, "+".join(reasons), state


@dataclass(frozen=True)
class CandidateDecision:
    accepted: bool
    priv: float
    mse_heldout: float
    tau: float
    tpr: float
    fpr: float
    reason: str


def measure_candidate(
    params: ForecasterParams,
    train_pts: Sequence[DataPoint],
    heldout_pts: Sequence[DataPoint],
    reference_pts: Sequence[DataPoint],
) -> CandidateDecision:
    """Gate metrics for one model, without applying the gate.

    The privacy ratio treats the original training points as members and the
    heldout points as non-members, with the threshold set to the model's mean
    loss over the reference set (originals plus synthetic pool).
    """
    members = loss_table(train_pts, params, "member")
    nonmembers = loss_table(heldout_pts, params, "non-member")
    tau = float(dataset_losses(reference_pts, params).mean())
    tpr = float((members.losses < tau).mean())
    fpr = float((nonmembers.losses < tau).mean())
    if fpr == 0.0:
        priv_value = 1.0 if tpr == 0.0 else math.inf
    else:
        priv_value = tpr / fpr
    mse_value = float(nonmembers.losses.mean())
    return CandidateDecision(
        accepted=False, priv=priv_value, mse_heldout=mse_value, tau=tau, tpr=tpr, fpr=fpr, reason=""
    )


def evaluate_candidate(
    candidate: ForecasterParams,
    state: AcceptanceState,
    train_pts: Sequence[DataPoint],
    heldout_pts: Sequence[DataPoint],
    reference_pts: Sequence[DataPoint],
) -> tuple[CandidateDecision, AcceptanceState]:
    """Gate one retrained candidate; on accept the state's bests move to it."""
    m = measure_candidate(candidate, train_pts, heldout_pts, reference_pts)
    accepted, reason, new_state = apply_gate(state, m.priv, m.mse_heldout)
    return replace(m, accepted=accepted, reason=reason), new_state


def run_attack(
    params: ForecasterParams,
    members_pts: Sequence[DataPoint],
    nonmembers_pts: Sequence[DataPoint],
) -> AttackReport:
    """Threshold attack with tau set to the members' average loss."""
    if not members_pts or not nonmembers_pts:
        raise DomainError("member and non-member sets must be nonempty")
    tau = mse_set(members_pts, params)
    members = loss_table(members_pts, params, "member")
    nonmembers = loss_table(nonmembers_pts, params, "non-member")
    return attack_report(members, nonmembers, tau)


# ---------------------------------------------------------------------------
# Run configuration and workbench
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Everything one run needs; exactly one method per run.

    The master seed drives derived streams for splitting, window capping,
    training shuffles, synthetic waves, and DP noise, so a config reproduces
    its metrics CSV bit for bit.
    """

    method: str
    seed: int
    data_path: str = ""
    generator: GeneratorConfig | None = None
    n_vars: int = 16
    output_dir: str = ""
    run_id: str = ""
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    train: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=0.05, batch_size=32, max_epochs=100))
    zoo: ZooConfig | None = None
    mixup: MixupConfig | None = None
    dp: DpConfig | None = None
    pca_ratio: float = 0.70
    rounds: int = 10
    samples_per_round: int = 32000
    baseline_epochs: int = 400
    retrain_epochs: int = 1
    dp_epochs: int = 100
    dp_sigma_grid: tuple[float, ...] = (1.1, 1.5, 2.0)
    max_train_windows: int = 0
    max_eval_windows: int = 0
    stride: int = 4
    input_len: int = 24
    max_start: int = 96
    checkpoint: str = ""
    eps_priv: float = 0.005
    eps_mse: float = 0.005
    beta_accept: float = 3.0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method in ("zoo", "zoo_pca") and self.zoo is None:
            raise ConfigurationError(f"method {self.method} requires a zoo config")
        if self.method == "mixup" and self.mixup is None:
            raise ConfigurationError("method mixup requires a mixup config")
        if self.method == "dp_sgd" and self.dp is None:
            raise ConfigurationError("method dp_sgd requires a dp config")
        if self.rounds < 0:
            raise ConfigurationError("rounds must be >= 0")

    def resolved_run_id(self) -> str:
        if self.run_id:
            return self.run_id
        if self.method in ("zoo", "zoo_pca"):
            return f"{self.method}_a{self.zoo.alpha}_s{self.seed}"
        if self.method == "mixup":
            return f"mixup_b{self.mixup.beta}_s{self.seed}"
        return f"{self.method}_s{self.seed}"

    def param_tag(self) -> str:
        if self.method in ("zoo", "zoo_pca"):
            return repr(float(self.zoo.alpha))
        if self.method == "mixup":
            return repr(float(self.mixup.beta))
        return ""


@dataclass
class Workbench:
    """Prepared artifacts shared by every run on one corpus: frozen embedding,
    converged baseline forecaster, and baked point sets per split."""

    emb: EmbeddingMap
    baseline_params: ForecasterParams
    train_pts: list[DataPoint]
    heldout_pts: list[DataPoint]
    test_pts: list[DataPoint]
    std: Standardizer
    seed: int


def load_episodes(cfg: RunConfig) -> list[Episode]:
    if cfg.data_path:
        return load_triplets(cfg.data_path, cfg.n_vars)
    if cfg.generator is not None:
        return generate(cfg.generator)
    raise ConfigurationError("config needs data_path or an inline generator")


def _cap(items: list, limit: int, rng: np.random.Generator) -> list:
    if limit and len(items) > limit:
        idx = np.sort(rng.choice(len(items), size=limit, replace=False))
        return [items[i] for i in idx]
    return items


def build_workbench(cfg: RunConfig, episodes: list[Episode] | None = None) -> Workbench:
    """Split, standardize, window, pretrain, and train the baseline to convergence.

    When cfg.checkpoint points at a saved baseline, its embedding, forecaster
    and standardizer are reused and only the datasets are rebuilt (the same
    data/split/seed settings must be supplied).
    """
    if episodes is None:
        episodes = load_episodes(cfg)
    train_ids, held_ids, test_ids = split_by_episode(
        episodes, cfg.split_fractions, derive_seed(cfg.seed, _SPLIT_STREAM)
    )
    by_split = {
        "train": [ep for ep in episodes if ep.episode_id in train_ids],
        "heldout": [ep for ep in episodes if ep.episode_id in held_ids],
        "test": [ep for ep in episodes if ep.episode_id in test_ids],
    }

    from_ckpt = None
    if cfg.checkpoint:
        emb, params, std, _ = load_checkpoint(cfg.checkpoint)
        from_ckpt = (emb, params)
    else:
        std = Standardizer.fit(by_split["train"], cfg.n_vars)

    wcfg = dict(
        stride=cfg.stride,
        input_len=cfg.input_len,
        horizon=cfg.train.horizon,
        max_start=cfg.max_start,
    )
    cap_rng = np.random.default_rng([cfg.seed, _CAP_STREAM])
    train_w = _cap(build_windows(by_split["train"], std, **wcfg), cfg.max_train_windows, cap_rng)
    held_w = _cap(build_windows(by_split["heldout"], std, **wcfg), cfg.max_eval_windows, cap_rng)
    test_w = _cap(build_windows(by_split["test"], std, **wcfg), cfg.max_eval_windows, cap_rng)
    if not train_w or not held_w or not test_w:
        raise DomainError("one of the splits produced no usable windows")

    if from_ckpt is not None:
        emb, baseline = from_ckpt
    else:
        emb, params0 = pretrain_embedding([w for _, w in train_w], cfg.train)
        train_pts0 = bake_points(train_w, emb)
        baseline, _ = train(
            train_pts0, params0, cfg.train, epochs=cfg.baseline_epochs, seed=derive_seed(cfg.seed, _BASELINE_STREAM)
        )
    return Workbench(
        emb=emb,
        baseline_params=baseline,
        train_pts=bake_points(train_w, emb),
        heldout_pts=bake_points(held_w, emb),
        test_pts=bake_points(test_w, emb),
        std=std,
        seed=cfg.seed,
    )


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundAudit:
    epoch: int
    accepted: bool
    pool_size: int
    samples_generated: int
    steps_executed: int


@dataclass
class RunResult:
    rows: list[MetricsRow]
    audits: list[RoundAudit]
    final_params: ForecasterParams
    final_epoch: int
    workbench: Workbench


def _round_row(
    cfg: RunConfig,
    epoch: int,
    decision: CandidateDecision,
    candidate: ForecasterParams,
    wb: Workbench,
) -> MetricsRow:
    members = loss_table(wb.train_pts, candidate, "member")
    nonmembers = loss_table(wb.heldout_pts, candidate, "non-member")
    report = attack_report(members, nonmembers, decision.tau)
    return MetricsRow(
        run_id=cfg.resolved_run_id(),
        method=cfg.method,
        alpha_or_beta=cfg.param_tag(),
        epoch=epoch,
        mse_test=mse_set(wb.test_pts, candidate),
        mse_heldout=decision.mse_heldout,
        tpr_at_tau=decision.tpr,
        fpr_at_tau=decision.fpr,
        priv_ratio=decision.priv,
        auroc=report.auroc,
        tau=decision.tau,
    )


def _generate_wave(
    cfg: RunConfig,
    wb: Workbench,
    params: ForecasterParams,
    tau_ref: float,
    epoch: int,
    n_samples: int,
    basis: PcaBasis | None,
) -> list[DataPoint]:
    wave_rng = np.random.default_rng([cfg.seed, _WAVE_STREAM, epoch])
    n_train = len(wb.train_pts)
    if cfg.method in ("zoo", "zoo_pca"):
        idx = wave_rng.choice(n_train, size=n_samples, replace=False)
        seeds = [wb.train_pts[i] for i in idx]
        return zoo_generate(
            seeds,
            tau_ref,
            params,
            cfg.zoo,
            seed=derive_seed(cfg.seed, _WAVE_STREAM * 100_000 + epoch),
            epoch=epoch,
            basis=basis,
        )
    if cfg.method == "mixup":
        i1 = wave_rng.choice(n_train, size=n_samples, replace=False)
        i2 = wave_rng.choice(n_train, size=n_samples, replace=False)
        pair_seed = derive_seed(cfg.seed, _WAVE_STREAM * 100_000 + epoch)
        return [
            mixup_generate(
                wb.train_pts[i1[j]],
                wb.train_pts[i2[j]],
                cfg.mixup,
                np.random.default_rng([pair_seed, j]),
                epoch=epoch,
                uid=f"mix{epoch}:{j}",
            )
            for j in range(n_samples)
        ]
    raise ConfigurationError(f"method {cfg.method} generates no synthetic data")


def pool_sample_indices(pool_size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Indices for the synthetic half of a retraining mixture.

    Draws `count` pool indices, with replacement only while the pool is
    smaller than the requested count (upsampling to reach the 50/50 mix).
    """
    if pool_size < 1:
        raise DomainError("cannot sample from an empty pool")
    return rng.choice(pool_size, size=count, replace=pool_size < count)


def run_augmentation_experiment(cfg: RunConfig, wb: Workbench | None = None) -> RunResult:
    """Acceptance-gated retraining loop; also handles method='baseline' (no rounds).

    Per round: generate a synthetic wave, insert it into the FIFO pool,
    retrain one pass on a 50/50 original/pool mixture (upsampling the pool
    with replacement while it is smaller than the original set), gate the
    candidate, and log one metrics row either way. The final model is the
    last accepted candidate. On error, rows produced so far are still
    flushed to the output directory.
    """
    if cfg.method not in ("baseline", "zoo", "zoo_pca", "mixup"):
        raise ConfigurationError(f"run_augmentation_experiment does not handle {cfg.method}")
    if wb is None:
        wb = build_workbench(cfg)
    n_train = len(wb.train_pts)
    rounds = 0 if cfg.method == "baseline" else cfg.rounds
    n_samples = max(1, min(cfg.samples_per_round, n_train // 2))
    pool = SyntheticPool(cap=min(32_000 * max(rounds, 1), n_train // 2))
    basis: PcaBasis | None = None
    if cfg.method == "zoo_pca":
        basis = pca_fit([p.e for p in wb.train_pts], cfg.pca_ratio)

    params = wb.baseline_params
    decision0 = measure_candidate(params, wb.train_pts, wb.heldout_pts, wb.train_pts)
    rows = [_round_row(cfg, 0, decision0, params, wb)]
    audits = [RoundAudit(epoch=0, accepted=True, pool_size=0, samples_generated=0, steps_executed=0)]
    state = None
    if rounds > 0:
        # an infinite baseline priv cannot seed the gate; surfaced as a config error
        state = AcceptanceState(
            priv_best=decision0.priv,
            mse_best=decision0.mse_heldout,
            eps_priv=cfg.eps_priv,
            eps_mse=cfg.eps_mse,
            beta_accept=cfg.beta_accept,
        )
    final_epoch = 0

    try:
        for r in range(1, rounds + 1):
            reference = list(wb.train_pts) + list(pool.items)
            tau_ref = float(dataset_losses(reference, params).mean())
            wave = _generate_wave(cfg, wb, params, tau_ref, r, n_samples, basis)
            pool.insert(wave)

            pool_items = pool.items
            mix_rng = np.random.default_rng([cfg.seed, _MIX_STREAM, r])
            pidx = pool_sample_indices(len(pool_items), n_train, mix_rng)
            mixture = list(wb.train_pts) + [pool_items[i] for i in pidx]

            candidate, _ = train(
                mixture,
                params,
                cfg.train,
                epochs=cfg.retrain_epochs,
                seed=derive_seed(cfg.seed, _RETRAIN_STREAM * 100_000 + r),
            )
            reference = list(wb.train_pts) + list(pool.items)
            decision, new_state = evaluate_candidate(candidate, state, wb.train_pts, wb.heldout_pts, reference)
            rows.append(_round_row(cfg, r, decision, candidate, wb))
            audits.append(
                RoundAudit(
                    epoch=r,
                    accepted=decision.accepted,
                    pool_size=len(pool),
                    samples_generated=len(wave),
                    steps_executed=cfg.zoo.steps if cfg.method in ("zoo", "zoo_pca") else 0,
                )
            )
            if decision.accepted:
                params = candidate
                state = new_state
                final_epoch = r
    finally:
        _flush_outputs(cfg, rows, audits)

    _write_final_artifacts(cfg, wb, params)
    return RunResult(rows=rows, audits=audits, final_params=params, final_epoch=final_epoch, workbench=wb)


def run_dp_baseline(cfg: RunConfig, wb: Workbench | None = None) -> RunResult:
    """Train from scratch with clipped, noised gradient steps for each noise level.

    Each sigma in the grid gets a fresh forecaster (the frozen embedding is
    reused), the configured number of DP epochs, and one metrics row in the
    attack convention (members = train, non-members = test, tau = mean train
    loss).
    """
    if cfg.method != "dp_sgd":
        raise ConfigurationError("run_dp_baseline requires method dp_sgd")
    if wb is None:
        wb = build_workbench(cfg)
    rows: list[MetricsRow] = []
    audits: list[RoundAudit] = []
    params = wb.baseline_params
    try:
        for j, sigma in enumerate(cfg.dp_sigma_grid):
            dp = DpConfig(noise_multiplier=sigma, clip_norm=cfg.dp.clip_norm, lr_scale=cfg.dp.lr_scale)
            _, fresh = init_params(
                cfg.train.n,
                cfg.train.hidden_dim,
                cfg.n_vars,
                cfg.train.horizon,
                derive_seed(cfg.seed, _DP_INIT_STREAM * 100_000 + j),
                input_hours=cfg.input_len,
            )
            params = dp_train(
                wb.train_pts,
                fresh,
                cfg.train,
                dp,
                epochs=cfg.dp_epochs,
                seed=derive_seed(cfg.seed, _DP_TRAIN_STREAM * 100_000 + j),
            )
            report = run_attack(params, wb.train_pts, wb.test_pts)
            rows.append(
                MetricsRow(
                    run_id=cfg.resolved_run_id(),
                    method=cfg.method,
                    alpha_or_beta=repr(float(sigma)),
                    epoch=0,
                    mse_test=mse_set(wb.test_pts, params),
                    mse_heldout=mse_set(wb.heldout_pts, params),
                    tpr_at_tau=report.tpr,
                    fpr_at_tau=report.fpr,
                    priv_ratio=report.priv,
                    auroc=report.auroc,
                    tau=report.tau,
                )
            )
            audits.append(RoundAudit(epoch=0, accepted=True, pool_size=0, samples_generated=0, steps_executed=0))
    finally:
        _flush_outputs(cfg, rows, audits)
    _write_final_artifacts(cfg, wb, params)
    return RunResult(rows=rows, audits=audits, final_params=params, final_epoch=0, workbench=wb)


# ---------------------------------------------------------------------------
# Outputs, gate replay, and the tradeoff report
# ---------------------------------------------------------------------------


def _flush_outputs(cfg: RunConfig, rows: list[MetricsRow], audits: list[RoundAudit]) -> None:
    if not cfg.output_dir:
        return
    os.makedirs(cfg.output_dir, exist_ok=True)
    metrics_path = os.path.join(cfg.output_dir, "metrics.csv")
    write_report_csv(rows, metrics_path, append=os.path.exists(metrics_path))
    manifest_path = os.path.join(cfg.output_dir, f"manifest_{cfg.resolved_run_id()}.csv")
    with open(manifest_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for a in audits:
            writer.writerow(
                [
                    cfg.resolved_run_id(),
                    cfg.method,
                    cfg.param_tag(),
                    a.epoch,
                    int(a.accepted),
                    a.pool_size,
                    a.samples_generated,
                    a.steps_executed,
                ]
            )


def _write_final_artifacts(cfg: RunConfig, wb: Workbench, params: ForecasterParams) -> None:
    if not cfg.output_dir:
        return
    run_id = cfg.resolved_run_id()
    report = run_attack(params, wb.train_pts, wb.heldout_pts)
    write_roc_csv(report.roc.tolist(), os.path.join(cfg.output_dir, f"roc_{run_id}.csv"))
    save_checkpoint(os.path.join(cfg.output_dir, f"checkpoint_{run_id}.npz"), wb.emb, params, wb.std, cfg.seed)


def replay_gate(
    rows: Sequence[MetricsRow],
    eps_priv: float = 0.005,
    eps_mse: float = 0.005,
    beta: float = 3.0,
) -> list[int]:
    """Re-run the acceptance gate over logged rows of one run.

    Row 0 (the baseline evaluation) initializes the bests and counts as
    accepted; the returned list holds indices of all accepted rows.
    """
    if not rows:
        return []
    state = AcceptanceState(
        priv_best=rows[0].priv_ratio, mse_best=rows[0].mse_heldout, eps_priv=eps_priv, eps_mse=eps_mse, beta_accept=beta
    )
    accepted = [0]
    for i, row in enumerate(rows[1:], start=1):
        ok, _, state = apply_gate(state, row.priv_ratio, row.mse_heldout)
        if ok:
            accepted.append(i)
    return accepted


def build_tradeoff(rows: Sequence[MetricsRow], eps_priv: float = 0.005, eps_mse: float = 0.005, beta: float = 3.0):
    """One tradeoff entry per run: the final accepted model's priv and test MSE.

    Gated methods replay the acceptance gate to locate the final accepted row;
    baseline runs contribute their single row and DP runs one row per noise
    level.
    """
    by_run: dict[str, list[MetricsRow]] = {}
    for row in rows:
        by_run.setdefault(row.run_id, []).append(row)
    out = []
    for run_id, run_rows in by_run.items():
        method = run_rows[0].method
        if method == "dp_sgd":
            chosen = run_rows
        elif method == "baseline":
            chosen = [run_rows[0]]
        else:
            ordered = sorted(run_rows, key=lambda r: r.epoch)
            accepted = replay_gate(ordered, eps_priv, eps_mse, beta)
            chosen = [ordered[accepted[-1]]]
        for row in chosen:
            out.append((run_id, row.method, row.alpha_or_beta, row.mse_test, row.priv_ratio, row.auroc))
    return out


TRADEOFF_HEADER = ("run_id", "method", "alpha_or_beta", "mse_test", "priv_ratio", "auroc")


def write_tradeoff_csv(entries, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRADEOFF_HEADER)
        for run_id, method, ab, mse, pr, auroc in entries:
            writer.writerow([run_id, method, ab, repr(float(mse)), repr(float(pr)), repr(float(auroc))])
