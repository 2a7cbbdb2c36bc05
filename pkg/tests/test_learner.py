import json

import numpy as np
import pytest

from continual_replay.errors import (
    DimensionMismatch,
    Diverged,
    InvalidParameters,
    NotConverged,
    NotEnoughSamples,
)
from continual_replay.learner import (
    Fixed,
    GdConfig,
    ReplayMemory,
    UniformWithoutReplacement,
    augment_with_replay,
    fit_closed_form,
    fit_gd,
    run_sequence,
    select_replay,
    trajectory_to_json,
)
from continual_replay.linalg_core import orthonormal_basis
from continual_replay.task_gen import Task, TaskSequence, make_worst_case, sample_task


def _random_consistent_task(rng, n, d, w_star):
    X = rng.standard_normal((n, d))
    return Task(X=X, y=X @ w_star)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_fit_closed_form_exact_and_minimal(seed):
    rng = np.random.default_rng(seed)
    d, n = 9, 4
    w_star = rng.standard_normal(d)
    task = _random_consistent_task(rng, n, d, w_star)
    w_prev = rng.standard_normal(d)
    w = fit_closed_form(w_prev, task)
    assert task.residual(w) <= 1e-9
    # the update never leaves w_prev + rowspan
    s = orthonormal_basis(task.X)
    delta = w - w_prev
    np.testing.assert_allclose(s.basis @ (s.basis.T @ delta), delta, atol=1e-9)


def test_fit_closed_form_fixed_point():
    rng = np.random.default_rng(4)
    w_star = rng.standard_normal(5)
    task = _random_consistent_task(rng, 2, 5, w_star)
    np.testing.assert_allclose(fit_closed_form(w_star, task), w_star, atol=1e-12)


def test_fit_closed_form_row_permutation_invariant():
    rng = np.random.default_rng(9)
    w_star = rng.standard_normal(6)
    X = rng.standard_normal((4, 6))
    perm = rng.permutation(4)
    w_prev = rng.standard_normal(6)
    w_a = fit_closed_form(w_prev, Task(X=X, y=X @ w_star))
    w_b = fit_closed_form(w_prev, Task(X=X[perm], y=(X @ w_star)[perm]))
    np.testing.assert_allclose(w_a, w_b, atol=1e-10)


@pytest.mark.parametrize("seed", [0, 5, 6])
def test_fit_gd_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    d, n = 12, 4
    w_star = rng.standard_normal(d)
    task = _random_consistent_task(rng, n, d, w_star)
    w_prev = rng.standard_normal(d)
    cfg = GdConfig(learning_rate=None, epochs=100000, convergence_tol=1e-10)
    np.testing.assert_allclose(
        fit_gd(w_prev, task, cfg), fit_closed_form(w_prev, task), atol=1e-4
    )


def test_fit_gd_zero_loss_start():
    rng = np.random.default_rng(7)
    w_star = rng.standard_normal(5)
    task = _random_consistent_task(rng, 2, 5, w_star)
    w = fit_gd(w_star, task, GdConfig())
    np.testing.assert_allclose(w, w_star, atol=1e-9)


def test_fit_gd_rejects_unstable_rate():
    task = Task(X=np.eye(3), y=np.zeros(3))
    with pytest.raises(InvalidParameters):
        fit_gd(np.ones(3), task, GdConfig(learning_rate=3.0))


def test_fit_gd_not_converged():
    rng = np.random.default_rng(8)
    task = _random_consistent_task(rng, 3, 8, rng.standard_normal(8))
    with pytest.raises(NotConverged):
        fit_gd(np.zeros(8), task, GdConfig(learning_rate=1e-6, epochs=5))


def test_sgd_diverges_with_huge_rate():
    rng = np.random.default_rng(11)
    task = _random_consistent_task(rng, 6, 4, rng.standard_normal(4))
    cfg = GdConfig(learning_rate=5.0, epochs=2000, batch_size=2)
    with pytest.raises(Diverged):
        fit_gd(np.zeros(4), task, cfg, rng=np.random.default_rng(0))


def test_gd_config_validation():
    with pytest.raises(InvalidParameters):
        GdConfig(epochs=0)
    with pytest.raises(InvalidParameters):
        GdConfig(learning_rate=-0.1)
    with pytest.raises(InvalidParameters):
        GdConfig(batch_size=-1)
    with pytest.raises(InvalidParameters):
        GdConfig(lr_decay=0.0)


# ---------------------------------------------------------------- replay


def _two_task_seq(rng, d=6):
    w_star = rng.standard_normal(d)
    t1 = _random_consistent_task(rng, 3, d, w_star)
    t2 = _random_consistent_task(rng, 2, d, w_star)
    return TaskSequence((t1, t2), w_star)


def test_select_replay_uniform():
    rng = np.random.default_rng(0)
    seq = _two_task_seq(rng)
    mem = select_replay(seq, 1, 2, UniformWithoutReplacement(), np.random.default_rng(1))
    assert mem.size == 2
    assert len(set(mem.provenance)) == 2
    for (t, i), row, label in zip(mem.provenance, mem.rows, mem.labels):
        assert t == 0
        np.testing.assert_allclose(seq.tasks[t].X[i], row, atol=1e-15)
        np.testing.assert_allclose(seq.tasks[t].y[i], label, atol=1e-15)


def test_select_replay_errors():
    rng = np.random.default_rng(0)
    seq = _two_task_seq(rng)
    with pytest.raises(NotEnoughSamples):
        select_replay(seq, 1, 4, UniformWithoutReplacement(), np.random.default_rng(0))
    with pytest.raises(InvalidParameters):
        select_replay(seq, 1, 2, Fixed(((0, 0),)), np.random.default_rng(0))
    with pytest.raises(InvalidParameters):
        select_replay(seq, 1, 1, Fixed(((1, 0),)), np.random.default_rng(0))
    assert select_replay(seq, 1, 0, UniformWithoutReplacement()).size == 0


def test_augment_with_replay():
    rng = np.random.default_rng(2)
    seq = _two_task_seq(rng)
    mem = select_replay(seq, 1, 2, UniformWithoutReplacement(), np.random.default_rng(3))
    task = augment_with_replay(seq.tasks[1], mem)
    assert task.n_samples == seq.tasks[1].n_samples + 2
    np.testing.assert_allclose(task.X[-2:], mem.rows, atol=1e-15)
    empty = ReplayMemory.empty(6)
    assert augment_with_replay(seq.tasks[1], empty) is seq.tasks[1]
    with pytest.raises(DimensionMismatch):
        augment_with_replay(seq.tasks[1], ReplayMemory.empty(5).__class__(
            rows=np.zeros((1, 5)), labels=np.zeros(1), provenance=((0, 0),)
        ))


def test_run_sequence_histories_and_fixed_point():
    rng = np.random.default_rng(12)
    d = 5
    w_star = rng.standard_normal(d)
    tasks = tuple(_random_consistent_task(rng, 2, d, w_star) for _ in range(3))
    seq = TaskSequence(tasks, w_star)
    state = run_sequence(seq)
    assert len(state.history) == 3
    np.testing.assert_allclose(state.history[-1], state.w, atol=1e-15)
    assert seq.tasks[-1].residual(state.w) <= 1e-9
    # repeating the final task changes nothing: zero-loss fixed point
    again = fit_closed_form(state.w, seq.tasks[-1])
    np.testing.assert_allclose(again, state.w, atol=1e-12)


def test_run_sequence_full_span_replay_recovers_w_star():
    seq, _ = make_worst_case(3, 3)
    # both rows of the mixed task plus the final task span all of R^3
    replay = (2, Fixed(((1, 0), (1, 1))))
    state = run_sequence(seq, replay=replay)
    np.testing.assert_allclose(state.w, seq.w_star, atol=1e-9)
    from continual_replay.metrics import forgetting_train

    assert forgetting_train(seq, state.w).average <= 1e-9


def test_run_sequence_solvers_agree_with_replay():
    rng = np.random.default_rng(21)
    seq = _two_task_seq(rng, d=8)
    replay = (1, UniformWithoutReplacement())
    cfg = GdConfig(learning_rate=None, epochs=200000, convergence_tol=1e-11)
    w_closed = run_sequence(seq, replay=replay, rng=np.random.default_rng(5)).w
    w_gd = run_sequence(
        seq, replay=replay, solver="gd", gd_config=cfg, rng=np.random.default_rng(5)
    ).w
    np.testing.assert_allclose(w_gd, w_closed, atol=1e-4)


def test_sgd_replay_fits_joint_system():
    rng = np.random.default_rng(30)
    d = 6
    w_star = rng.standard_normal(d)
    t1 = _random_consistent_task(rng, 2, d, w_star)
    t2 = _random_consistent_task(rng, 2, d, w_star)
    seq = TaskSequence((t1, t2), w_star)
    cfg = GdConfig(learning_rate=None, epochs=200000, batch_size=1, convergence_tol=1e-8)
    state = run_sequence(
        seq,
        replay=(1, UniformWithoutReplacement()),
        solver="gd",
        gd_config=cfg,
        rng=np.random.default_rng(6),
    )
    assert seq.tasks[1].residual(state.w) <= 1e-6


def test_trajectory_to_json():
    rng = np.random.default_rng(13)
    seq = _two_task_seq(rng)
    state = run_sequence(seq)
    records = json.loads(trajectory_to_json(state, seq))
    assert [r["task_index"] for r in records] == [1, 2]
    assert len(records[0]["w"]) == seq.ambient_dim
    assert records[0]["residuals"] == []
    assert len(records[1]["residuals"]) == 1
    np.testing.assert_allclose(records[1]["w"], state.w, atol=1e-15)


def test_replay_memory_validation():
    with pytest.raises(DimensionMismatch):
        ReplayMemory(rows=np.zeros((2, 3)), labels=np.zeros(1), provenance=((0, 0), (0, 1)))
    with pytest.raises(DimensionMismatch):
        ReplayMemory(rows=np.zeros((2, 3)), labels=np.zeros(2), provenance=((0, 0),))
    # provenance is optional: synthesized rows have no stored origin
    assert ReplayMemory(rows=np.zeros((1, 3)), labels=np.zeros(1)).size == 1
