"""Iterative magnitude pruning with per-round spectral monitoring.

One IMP run trains the dense model, then repeatedly (1) prunes W_xh and
W_hh to a geometrically shrinking keep-fraction q, (2) fine-tunes the
survivors, (3) evaluates test accuracy, and (4) computes weighted and
unweighted spectral reports for both layers.  The resulting trajectory
is the object of study: accuracy versus the remaining-edge fraction,
annotated with the first zero crossing of each spectral gap.

Runs are deterministic for a fixed seed and resumable: every round
writes a checkpoint plus one JSON line, and a restarted run continues
from the last complete round with bit-identical output.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import NoiseSpec, SequenceDataset, add_noise, train_test_split
from .errors import DomainError, ShapeError
from .formats import (
    dump_json_line,
    load_checkpoint,
    parse_json_line,
    save_checkpoint,
)
from .graphs import MODES, SpectralReport, UNWEIGHTED, WEIGHTED, build_bipartite, spectral_gaps
from .nets import (
    PruneMask,
    RecurrentParams,
    TrainConfig,
    apply_mask,
    evaluate,
    init_params,
    train,
)

LAYERS = ("w_xh", "w_hh")
GAP_KINDS = ("unweighted_delta_r", "unweighted_delta_s", "weighted_delta_s")

_STREAM_DENSE = 0
_STREAM_FINETUNE = 1


@dataclass(frozen=True)
class PruneSchedule:
    """Geometric keep-fraction schedule q_t = q0 * r^t, r = (qT/q0)^(1/rounds)."""

    rounds: int = 20
    start_fraction: float = 1.0
    final_fraction: float = 0.01
    finetune_epochs: int = 2
    rewind_to_init: bool = False

    def __post_init__(self):
        if self.rounds < 1:
            raise DomainError("rounds must be >= 1")
        if not 0.0 < self.final_fraction <= self.start_fraction <= 1.0:
            raise DomainError("need 0 < final_fraction <= start_fraction <= 1")
        if self.finetune_epochs < 0:
            raise DomainError("finetune_epochs must be >= 0")

    def keep_fraction(self, round_index: int) -> float:
        ratio = (self.final_fraction / self.start_fraction) ** (1.0 / self.rounds)
        return self.start_fraction * ratio ** round_index


@dataclass
class PruneRecord:
    round: int
    q: dict[str, float]
    test_accuracy: float
    reports: dict[str, dict[str, SpectralReport]]
    zero_crossed: dict[str, dict[str, bool]]

    def gap(self, layer: str, kind: str) -> float:
        mode, attr = _split_kind(kind)
        report = self.reports[layer][mode]
        return report.delta_r if attr == "delta_r" else report.delta_s

    def as_dict(self) -> dict:
        return {
            "round": self.round,
            "q": dict(self.q),
            "test_accuracy": self.test_accuracy,
            "reports": {
                layer: {mode: rep.as_dict() for mode, rep in by_mode.items()}
                for layer, by_mode in self.reports.items()
            },
            "zero_crossed": {layer: dict(v) for layer, v in self.zero_crossed.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PruneRecord":
        reports = {
            layer: {mode: SpectralReport(mode=mode, **{k: v for k, v in rep.items() if k != "mode"})
                    for mode, rep in by_mode.items()}
            for layer, by_mode in d["reports"].items()
        }
        return cls(
            round=d["round"],
            q=d["q"],
            test_accuracy=d["test_accuracy"],
            reports=reports,
            zero_crossed=d["zero_crossed"],
        )


@dataclass
class PruneTrajectory:
    records: list[PruneRecord] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int = 0


def _split_kind(kind: str) -> tuple[str, str]:
    if kind not in GAP_KINDS:
        raise DomainError(f"unknown gap kind {kind!r}; expected one of {GAP_KINDS}")
    mode, attr = kind.split("_", 1)
    return mode, attr


def _check_layer(layer: str) -> str:
    if layer not in LAYERS:
        raise DomainError(f"unknown layer {layer!r}; expected one of {LAYERS}")
    return layer


def magnitude_prune(W: np.ndarray, mask: np.ndarray, q: float) -> np.ndarray:
    """Keep the ceil(q * total) largest-|w| currently-unmasked entries.

    Ties break toward the lexicographically smaller (row, col).  The
    returned support is always a subset of the input support; asking for
    at least as many entries as are currently kept returns the mask
    unchanged.
    """
    if q <= 0.0:
        raise DomainError("keep fraction q must be > 0")
    W = np.asarray(W, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != W.shape:
        raise ShapeError(f"mask shape {mask.shape} != weight shape {W.shape}")
    target = math.ceil(q * W.size)
    kept = int(mask.sum())
    if target >= kept:
        return mask.copy()
    rows, cols = np.nonzero(mask)
    magnitudes = np.abs(W[rows, cols])
    order = np.lexsort((cols, rows, -magnitudes))
    winners = order[:target]
    out = np.zeros_like(mask)
    out[rows[winners], cols[winners]] = True
    return out


def layer_reports(params: RecurrentParams, mask: PruneMask) -> dict[str, dict[str, SpectralReport]]:
    """Weighted and unweighted spectral reports for both prunable layers."""
    out: dict[str, dict[str, SpectralReport]] = {}
    for layer in LAYERS:
        out[layer] = {}
        for mode in MODES:
            graph = build_bipartite(getattr(params, layer), getattr(mask, layer), mode)
            out[layer][mode] = spectral_gaps(graph)
    return out


def _crossing_flags(reports, previous: PruneRecord | None) -> dict[str, dict[str, bool]]:
    flags: dict[str, dict[str, bool]] = {}
    for layer in LAYERS:
        flags[layer] = {}
        for kind in GAP_KINDS:
            mode, attr = _split_kind(kind)
            rep = reports[layer][mode]
            value = rep.delta_r if attr == "delta_r" else rep.delta_s
            if previous is None:
                flags[layer][kind] = value < 0
            else:
                flags[layer][kind] = value < 0 and previous.gap(layer, kind) >= 0
    return flags


def _make_record(round_index, params, mask, test_ds, previous) -> PruneRecord:
    reports = layer_reports(params, mask)
    return PruneRecord(
        round=round_index,
        q={layer: mask.kept_fraction(layer) for layer in LAYERS},
        test_accuracy=evaluate(params, mask, test_ds.sequences, test_ds.labels),
        reports=reports,
        zero_crossed=_crossing_flags(reports, previous),
    )


def first_zero_crossing(values) -> int | None:
    """Index of the first transition from >= 0 to < 0 (or 0 if the series
    starts negative); None when the series never goes negative."""
    for i, v in enumerate(values):
        if v < 0 and (i == 0 or values[i - 1] >= 0):
            return i
    return None


def detect_zero_crossing(trajectory: PruneTrajectory, layer: str, kind: str) -> int | None:
    """Round of the first zero crossing of one layer's gap, or None."""
    _check_layer(layer)
    _split_kind(kind)
    if not trajectory.records:
        raise DomainError("trajectory is empty")
    series = [r.gap(layer, kind) for r in trajectory.records]
    idx = first_zero_crossing(series)
    return None if idx is None else trajectory.records[idx].round


def stop_criterion(trajectory: PruneTrajectory, policy) -> bool:
    """True (stop) when any monitored (layer, gap kind) has crossed zero.

    An empty policy never stops.
    """
    for layer, kind in policy:
        if not trajectory.records:
            return False
        if detect_zero_crossing(trajectory, layer, kind) is not None:
            return True
    return False


def save_trajectory(trajectory: PruneTrajectory, path) -> None:
    """One canonical JSON line per record (byte-deterministic)."""
    with open(path, "w", newline="") as f:
        for record in trajectory.records:
            f.write(dump_json_line(record.as_dict()) + "\n")


def load_trajectory(path) -> PruneTrajectory:
    records = []
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip():
                records.append(PruneRecord.from_dict(parse_json_line(line, path, line_no)))
    return PruneTrajectory(records=records)


def _checkpoint_path(out_dir, round_index) -> str:
    return os.path.join(out_dir, f"round_{round_index:03d}.ckpt")


def _resume_state(out_dir, trajectory_path):
    """Longest usable prefix of a previous run: records 0..R with checkpoints."""
    if not (out_dir and os.path.exists(trajectory_path)):
        return None
    records = load_trajectory(trajectory_path).records
    usable = []
    for expected_round, record in enumerate(records):
        if record.round != expected_round:
            break
        if not os.path.exists(_checkpoint_path(out_dir, expected_round)):
            break
        usable.append(record)
    if not usable:
        return None
    params, mask = load_checkpoint(_checkpoint_path(out_dir, usable[-1].round))
    return usable, params, mask


def run_imp(config: TrainConfig, schedule: PruneSchedule, dataset: SequenceDataset,
            *, cell_kind: str = "rnn", hidden_size: int = 128,
            out_dir=None, policy=(), test_fraction: float = 0.20,
            noise: NoiseSpec | None = None, noise_apply_to: str = "both") -> PruneTrajectory:
    """Full IMP trajectory on an 80/20 train/test split of ``dataset``.

    Round 0 is the dense baseline after config.train_epochs of training;
    each later round prunes both layers to the scheduled keep fraction,
    fine-tunes for schedule.finetune_epochs (skipped when the masks did
    not change), and records accuracy plus all spectral reports.  W_hy
    is never pruned.  A non-empty ``policy`` (pairs of layer and gap
    kind) stops the run after the first monitored zero crossing.

    ``noise`` perturbs the train split, the test split, or both
    (``noise_apply_to``) after splitting.

    With ``out_dir`` set, each round is persisted (trajectory.jsonl plus
    round_NNN.ckpt) and a rerun resumes after the last complete round,
    reproducing an uninterrupted run byte for byte.
    """
    if dataset.n < 2:
        raise DomainError("dataset too small to split")
    for layer, kind in policy:
        _check_layer(layer)
        _split_kind(kind)
    if noise_apply_to not in ("both", "train", "test"):
        raise DomainError(f"noise_apply_to must be both/train/test, got {noise_apply_to!r}")
    train_ds, test_ds = train_test_split(dataset, test_fraction, seed=config.seed)
    if noise is not None:
        if noise_apply_to in ("both", "train"):
            train_ds = add_noise(train_ds, noise)
        if noise_apply_to in ("both", "test"):
            test_ds = add_noise(test_ds, noise)

    trajectory_path = os.path.join(out_dir, "trajectory.jsonl") if out_dir else None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    snapshot = {
        "cell_kind": cell_kind,
        "hidden_size": hidden_size,
        "test_fraction": test_fraction,
        "train": asdict(config),
        "schedule": asdict(schedule),
        "policy": [list(pair) for pair in policy],
    }
    trajectory = PruneTrajectory(config=snapshot, seed=config.seed)
    resumed = _resume_state(out_dir, trajectory_path) if out_dir else None
    initial = init_params(dataset.input_size, hidden_size, dataset.class_count,
                          cell_kind, seed=config.seed)
    if resumed is not None:
        trajectory.records, params, mask = resumed
        if trajectory_path:
            save_trajectory(trajectory, trajectory_path)  # drop any dangling tail
    else:
        params = initial.copy()
        mask = PruneMask.full(params)
        params = train(params, mask, train_ds.sequences, train_ds.labels,
                       config, config.train_epochs, stream=(_STREAM_DENSE, 0))
        record = _make_record(0, params, mask, test_ds, previous=None)
        _persist_round(out_dir, trajectory_path, record, params, mask)
        trajectory.records.append(record)

    start_round = trajectory.records[-1].round + 1
    for round_index in range(start_round, schedule.rounds + 1):
        if stop_criterion(trajectory, policy):
            break
        q_t = schedule.keep_fraction(round_index)
        new_mask = PruneMask(
            magnitude_prune(params.w_xh, mask.w_xh, q_t),
            magnitude_prune(params.w_hh, mask.w_hh, q_t),
        )
        changed = (new_mask.w_xh != mask.w_xh).any() or (new_mask.w_hh != mask.w_hh).any()
        mask = new_mask
        if schedule.rewind_to_init:
            params = initial.copy()
        params = apply_mask(params, mask)
        if changed and schedule.finetune_epochs > 0:
            params = train(params, mask, train_ds.sequences, train_ds.labels,
                           config, schedule.finetune_epochs,
                           stream=(_STREAM_FINETUNE, round_index))
        record = _make_record(round_index, params, mask, test_ds, trajectory.records[-1])
        _persist_round(out_dir, trajectory_path, record, params, mask)
        trajectory.records.append(record)
    return trajectory


def _persist_round(out_dir, trajectory_path, record, params, mask) -> None:
    if not out_dir:
        return
    save_checkpoint(_checkpoint_path(out_dir, record.round), params, mask)
    with open(trajectory_path, "a", newline="") as f:
        f.write(dump_json_line(record.as_dict()) + "\n")
