import numpy as np
import pytest

from expanderprune.data import synth_task
from expanderprune.errors import DomainError
from expanderprune.graphs import SpectralReport
from expanderprune.nets import TrainConfig
from expanderprune.pruning import (
    GAP_KINDS,
    PruneRecord,
    PruneSchedule,
    PruneTrajectory,
    detect_zero_crossing,
    first_zero_crossing,
    load_trajectory,
    magnitude_prune,
    run_imp,
    save_trajectory,
    stop_criterion,
)


def test_magnitude_prune_keeps_largest():
    W = np.array([[3.0, -1.0], [0.5, 2.0]])
    mask = magnitude_prune(W, np.ones((2, 2), dtype=bool), 0.5)
    assert np.array_equal(mask, [[True, False], [False, True]])


def test_magnitude_prune_idempotent_at_current_fraction():
    W = np.array([[3.0, -1.0], [0.5, 2.0]])
    current = np.array([[True, False], [False, True]])
    assert np.array_equal(magnitude_prune(W, current, 0.5), current)


def test_magnitude_prune_tie_breaks_lexicographically():
    W = np.array([[0.0, 1.0], [-1.0, 0.0]])
    mask = magnitude_prune(W, np.ones((2, 2), dtype=bool), 0.25)
    assert np.array_equal(mask, [[False, True], [False, False]])


def test_magnitude_prune_support_shrinks():
    rng = np.random.default_rng(0)
    W = rng.standard_normal((10, 10))
    mask = np.ones((10, 10), dtype=bool)
    previous = mask
    for q in (0.7, 0.5, 0.3, 0.1):
        mask = magnitude_prune(W, mask, q)
        assert int(mask.sum()) == int(np.ceil(q * 100))
        assert np.all(previous | ~mask)  # support(mask) subset of support(previous)
        previous = mask


def test_magnitude_prune_rejects_nonpositive_q():
    with pytest.raises(DomainError):
        magnitude_prune(np.ones((2, 2)), np.ones((2, 2), dtype=bool), 0.0)


def test_schedule_is_geometric():
    sched = PruneSchedule(rounds=10, start_fraction=1.0, final_fraction=0.04)
    ratio = 0.04 ** 0.1
    for t in range(11):
        assert abs(sched.keep_fraction(t) - ratio ** t) < 1e-12
    assert abs(sched.keep_fraction(10) - 0.04) < 1e-12


def test_schedule_validation():
    with pytest.raises(DomainError):
        PruneSchedule(rounds=0)
    with pytest.raises(DomainError):
        PruneSchedule(final_fraction=0.0)
    with pytest.raises(DomainError):
        PruneSchedule(start_fraction=0.5, final_fraction=0.9)


def test_first_zero_crossing_enumerated_traces():
    assert first_zero_crossing([0.4, 0.1, -0.2, -0.5]) == 2
    assert first_zero_crossing([0.3, 0.2, 0.1]) is None
    assert first_zero_crossing([0.1, -0.1, 0.2, -0.3]) == 1


def fake_record(round_index, gap_by_kind, accuracy=0.9):
    reports = {}
    for layer in ("w_xh", "w_hh"):
        unweighted = SpectralReport(
            mode="unweighted", lambda1=2.0, lambda2=1.0, d_avg=2.0, alpha2=0.5,
            delta_r=gap_by_kind.get("unweighted_delta_r", 1.0),
            delta_s=gap_by_kind.get("unweighted_delta_s", 1.0),
            cheeger_lower=0.25, cheeger_upper=1.0,
            ramanujan=gap_by_kind.get("unweighted_delta_r", 1.0) >= 0,
        )
        weighted = SpectralReport(
            mode="weighted", lambda1=2.0, lambda2=1.0, d_avg=2.0, alpha2=0.5,
            delta_r=None,
            delta_s=gap_by_kind.get("weighted_delta_s", 1.0),
            cheeger_lower=0.25, cheeger_upper=1.0,
            ramanujan=gap_by_kind.get("weighted_delta_s", 1.0) >= 0,
        )
        reports[layer] = {"unweighted": unweighted, "weighted": weighted}
    return PruneRecord(
        round=round_index,
        q={"w_xh": 1.0, "w_hh": 1.0},
        test_accuracy=accuracy,
        reports=reports,
        zero_crossed={layer: {kind: False for kind in GAP_KINDS} for layer in ("w_xh", "w_hh")},
    )


def trajectory_from_gaps(kind, gaps):
    records = [fake_record(i, {kind: g}) for i, g in enumerate(gaps)]
    return PruneTrajectory(records=records)


def test_detect_zero_crossing_on_traces():
    traj = trajectory_from_gaps("weighted_delta_s", [0.4, 0.1, -0.2, -0.5])
    assert detect_zero_crossing(traj, "w_hh", "weighted_delta_s") == 2
    traj = trajectory_from_gaps("weighted_delta_s", [0.4, 0.1, 0.2])
    assert detect_zero_crossing(traj, "w_hh", "weighted_delta_s") is None
    traj = trajectory_from_gaps("unweighted_delta_r", [0.1, -0.1, 0.2, -0.3])
    assert detect_zero_crossing(traj, "w_xh", "unweighted_delta_r") == 1


def test_detect_zero_crossing_validates_names():
    traj = trajectory_from_gaps("weighted_delta_s", [0.1])
    with pytest.raises(DomainError):
        detect_zero_crossing(traj, "w_hy", "weighted_delta_s")
    with pytest.raises(DomainError):
        detect_zero_crossing(traj, "w_xh", "delta_t")


def test_stop_criterion_policies():
    crossed = trajectory_from_gaps("unweighted_delta_s", [0.4, -0.1])
    assert stop_criterion(crossed, [("w_xh", "unweighted_delta_s")])
    all_positive = trajectory_from_gaps("unweighted_delta_s", [0.4, 0.1])
    assert not stop_criterion(all_positive, [("w_xh", "unweighted_delta_s")])
    assert not stop_criterion(crossed, [])  # empty policy never stops


def tiny_run(tmp_path=None, rounds=3, seed=3):
    ds = synth_task("mean-threshold", 80, 4, 3, seed=seed)
    cfg = TrainConfig(seed=seed, train_epochs=2, batch_size=20)
    sched = PruneSchedule(rounds=rounds, final_fraction=0.05, finetune_epochs=1)
    out = str(tmp_path) if tmp_path is not None else None
    return run_imp(cfg, sched, ds, cell_kind="rnn", hidden_size=6, out_dir=out)


def test_run_imp_records_and_masks(tmp_path):
    traj = tiny_run(tmp_path)
    assert [r.round for r in traj.records] == [0, 1, 2, 3]
    assert traj.records[0].q == {"w_xh": 1.0, "w_hh": 1.0}
    qs = [r.q["w_xh"] for r in traj.records]
    assert all(b <= a for a, b in zip(qs, qs[1:]))
    sched = PruneSchedule(rounds=3, final_fraction=0.05, finetune_epochs=1)
    for r in traj.records[1:]:
        # recorded q is exact popcount / size for an 18-entry layer
        expected = np.ceil(sched.keep_fraction(r.round) * 18) / 18
        assert r.q["w_xh"] == expected
    for record in traj.records:
        for layer in ("w_xh", "w_hh"):
            assert set(record.reports[layer]) == {"weighted", "unweighted"}


def test_run_imp_single_identity_round_keeps_dense_accuracy():
    ds = synth_task("mean-threshold", 60, 4, 2, seed=4)
    cfg = TrainConfig(seed=4, train_epochs=1, batch_size=20)
    sched = PruneSchedule(rounds=1, start_fraction=1.0, final_fraction=1.0)
    traj = run_imp(cfg, sched, ds, cell_kind="rnn", hidden_size=4)
    assert len(traj.records) == 2
    assert traj.records[1].q == {"w_xh": 1.0, "w_hh": 1.0}
    assert traj.records[1].test_accuracy == traj.records[0].test_accuracy


def test_run_imp_stop_policy_halts_early():
    ds = synth_task("mean-threshold", 80, 4, 3, seed=5)
    cfg = TrainConfig(seed=5, train_epochs=1, batch_size=20)
    sched = PruneSchedule(rounds=8, final_fraction=0.02, finetune_epochs=0)
    full = run_imp(cfg, sched, ds, cell_kind="rnn", hidden_size=6)
    crossing = None
    for kind in GAP_KINDS:
        c = detect_zero_crossing(full, "w_hh", kind)
        if c is not None and (crossing is None or c < crossing):
            crossing, first_kind = c, kind
    if crossing is None:
        pytest.skip("no crossing on this tiny run")
    stopped = run_imp(cfg, sched, ds, cell_kind="rnn", hidden_size=6,
                      policy=[("w_hh", first_kind)])
    assert stopped.records[-1].round == crossing


def test_trajectory_round_trip(tmp_path):
    traj = tiny_run()
    path = tmp_path / "traj.jsonl"
    save_trajectory(traj, path)
    loaded = load_trajectory(path)
    assert len(loaded.records) == len(traj.records)
    for a, b in zip(loaded.records, traj.records):
        assert a.as_dict() == b.as_dict()


def test_run_imp_deterministic_bytes(tmp_path):
    tiny_run(tmp_path / "a")
    tiny_run(tmp_path / "b")
    a = (tmp_path / "a" / "trajectory.jsonl").read_bytes()
    b = (tmp_path / "b" / "trajectory.jsonl").read_bytes()
    assert a == b


def test_run_imp_resume_is_bit_identical(tmp_path):
    tiny_run(tmp_path / "full", rounds=4)
    full_path = tmp_path / "full" / "trajectory.jsonl"
    # fabricate an interrupted run: first two rounds' records + checkpoints
    partial = tmp_path / "partial"
    partial.mkdir()
    lines = full_path.read_bytes().splitlines(keepends=True)
    (partial / "trajectory.jsonl").write_bytes(b"".join(lines[:2]))
    for name in ("round_000.ckpt", "round_001.ckpt"):
        (partial / name).write_bytes((tmp_path / "full" / name).read_bytes())
    resumed = tiny_run(partial, rounds=4)
    assert [r.round for r in resumed.records] == [0, 1, 2, 3, 4]
    assert (partial / "trajectory.jsonl").read_bytes() == full_path.read_bytes()


def test_run_imp_ignores_dangling_records_without_checkpoints(tmp_path):
    tiny_run(tmp_path / "full", rounds=4)
    full_path = tmp_path / "full" / "trajectory.jsonl"
    partial = tmp_path / "partial"
    partial.mkdir()
    # records for rounds 0..2 but checkpoint only up to round 1
    lines = full_path.read_bytes().splitlines(keepends=True)
    (partial / "trajectory.jsonl").write_bytes(b"".join(lines[:3]))
    for name in ("round_000.ckpt", "round_001.ckpt"):
        (partial / name).write_bytes((tmp_path / "full" / name).read_bytes())
    resumed = tiny_run(partial, rounds=4)
    assert (partial / "trajectory.jsonl").read_bytes() == full_path.read_bytes()
