"""Forgetting metrics.

Forgetting of a final iterate w_T is the average squared residual over the
first T-1 tasks (the final task is fit exactly, so it never contributes).
Three variants are exposed: squared error on the training rows themselves,
squared error on freshly drawn rows from the task subspaces, and the exact
expectation of the fresh-sample variant, which reduces to projector
algebra. On top of these sit the two-task replay expectation (Monte Carlo)
and the benign-replay certificate with its trace-form exact expectation
over standard-normal targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParameters, TooFewTasks
from .linalg_core import Projector, Subspace, as_vector, orthonormal_basis
from .task_gen import TaskSequence, sample_task

CSV_HEADER = "variant,T,per_task_losses,average"

_VARIANTS = ("train_samples", "test_samples", "closed_form")


@dataclass(frozen=True)
class ForgettingReport:
    """Per-task squared-error losses on tasks 1..T-1 and their average."""

    per_task_losses: tuple[float, ...]
    average: float
    variant: str

    def __post_init__(self):
        losses = tuple(float(x) for x in self.per_task_losses)
        if not losses:
            raise TooFewTasks("a forgetting report needs at least one prior task")
        if self.variant not in _VARIANTS:
            raise InvalidParameters(f"unknown variant {self.variant!r}")
        if min(losses) < 0.0:
            raise InvalidParameters("squared-error losses cannot be negative")
        mean = sum(losses) / len(losses)
        if abs(mean - self.average) > 1e-12 * max(1.0, abs(mean)):
            raise InvalidParameters("average disagrees with the per-task losses")
        object.__setattr__(self, "per_task_losses", losses)
        object.__setattr__(self, "average", float(self.average))

    @property
    def T(self) -> int:
        """Sequence length implied by the report (losses cover tasks 1..T-1)."""
        return len(self.per_task_losses) + 1

    def to_csv_row(self) -> str:
        losses = ";".join(repr(x) for x in self.per_task_losses)
        return f"{self.variant},{self.T},{losses},{self.average!r}"


def forgetting_train(seq: TaskSequence, w) -> ForgettingReport:
    """Average squared residual of w on the training rows of tasks 1..T-1."""
    if len(seq) < 2:
        raise TooFewTasks("forgetting needs at least two tasks")
    w = as_vector(w, "w")
    losses = tuple(task.residual(w) ** 2 for task in seq.tasks[:-1])
    return ForgettingReport(losses, sum(losses) / len(losses), "train_samples")


def forgetting_test(
    subspaces: list[Subspace],
    w,
    w_star,
    rng: np.random.Generator,
    n_per_task=None,
) -> ForgettingReport:
    """One fresh-sample draw of forgetting.

    Draws k_t new rows from each of the first T-1 task subspaces (or
    ``n_per_task`` rows, which only reduces variance; the expectation is
    sample-count free) and averages the squared residuals of w.
    """
    T = len(subspaces)
    if T < 2:
        raise TooFewTasks("forgetting needs at least two tasks")
    w = as_vector(w, "w")
    w_star = as_vector(w_star, "w_star")
    losses = []
    for t in range(T - 1):
        s = subspaces[t]
        n = _n_for(n_per_task, t, s.rank)
        task = sample_task(s, n, w_star, rng)
        losses.append(task.residual(w) ** 2)
    losses = tuple(losses)
    return ForgettingReport(losses, sum(losses) / len(losses), "test_samples")


def _n_for(n_per_task, t: int, rank: int) -> int:
    if n_per_task is None:
        return rank
    if isinstance(n_per_task, int):
        return n_per_task
    return int(n_per_task[t])


def forgetting_test_mean(
    subspaces: list[Subspace],
    w,
    w_star,
    trials: int,
    rng: np.random.Generator,
    n_per_task=None,
    chunk: int = 20000,
) -> dict:
    """Monte Carlo mean of forgetting_test over many independent draws.

    Vectorizes the identical sampling law: a fresh row W z contributes
    (z . W^T(w - w*))^2, so each draw's loss is ||Z_t c_t||^2 with
    c_t = W_t^T (w - w*) and Z_t an n_t x k_t matrix of N(0, 1/k_t)
    entries. Returns the mean, its standard error, and the trial count.
    """
    T = len(subspaces)
    if T < 2:
        raise TooFewTasks("forgetting needs at least two tasks")
    if trials < 1:
        raise InvalidParameters("trials must be >= 1")
    w = as_vector(w, "w")
    w_star = as_vector(w_star, "w_star")
    delta = w - w_star
    coords = []
    for t in range(T - 1):
        s = subspaces[t]
        coords.append((s.basis.T @ delta, _n_for(n_per_task, t, s.rank), s.rank))
    values = np.zeros(trials)
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        total = np.zeros(size)
        for c, n, k in coords:
            if k == 0 or n == 0:
                continue
            Z = rng.standard_normal((size, n, k)) / math.sqrt(k)
            total += np.sum(np.einsum("ijk,k->ij", Z, c) ** 2, axis=1)
        values[done : done + size] = total / (T - 1)
        done += size
    mean = float(values.mean())
    std_err = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return {"mean": mean, "std_err": std_err, "trials": trials}


def expected_forgetting_closed_form(subspaces: list[Subspace], w_star) -> float:
    """Exact expected fresh-sample forgetting of the min-norm learner.

    Pushes w* through the null projectors of all T tasks in order, then
    averages ||Pi_t (P_T ... P_1 w*)||^2 over the first T-1 tasks.
    """
    T = len(subspaces)
    if T < 2:
        raise TooFewTasks("forgetting needs at least two tasks")
    w_star = as_vector(w_star, "w_star")
    r = w_star.copy()
    for s in subspaces:
        if s.ambient_dim != r.shape[0]:
            raise DimensionMismatch("subspace ambient dims disagree")
        r -= s.basis @ (s.basis.T @ r)
    total = 0.0
    for t in range(T - 1):
        total += float(np.sum((subspaces[t].basis.T @ r) ** 2))
    return total / (T - 1)


def replay_null_projector(s2: Subspace, memory_rows) -> Projector:
    """Null projector of the second task after adding replay rows.

    The augmented range is the exact span of the task subspace together
    with the stored rows (SVD rank decision, no iterative training).
    """
    rows = np.atleast_2d(np.asarray(memory_rows, dtype=float))
    if rows.size and rows.shape[1] != s2.ambient_dim:
        raise DimensionMismatch("memory rows do not match the ambient dimension")
    stacked = np.vstack([s2.basis.T, rows]) if rows.size else s2.basis.T
    union = orthonormal_basis(stacked)
    d = s2.ambient_dim
    return Projector(np.eye(d) - union.basis @ union.basis.T)


def expected_replay_forgetting_two_tasks(
    s1: Subspace,
    s2: Subspace,
    w_star,
    m: int,
    trials: int,
    rng: np.random.Generator,
) -> dict:
    """Monte Carlo replay forgetting for a two-task sequence.

    Each trial draws m memory rows from the first task's sampling law,
    forms the augmented null projector of task 2 from the exact union
    span, and evaluates ||Pi_1 P~_2 P_1 w*||^2.

    Returns:
        {"mean", "std_err", "trials"} of the per-trial values.
    """
    if s1.ambient_dim != s2.ambient_dim:
        raise DimensionMismatch("task subspaces live in different dimensions")
    if m < 1:
        raise InvalidParameters("m must be >= 1")
    if trials < 1:
        raise InvalidParameters("trials must be >= 1")
    w_star = as_vector(w_star, "w_star")
    if w_star.shape[0] != s1.ambient_dim:
        raise DimensionMismatch("w_star dimension mismatch")
    k1 = s1.rank
    if k1 == 0:
        raise InvalidParameters("the first task subspace is trivial")
    W1 = s1.basis
    base_rows = s2.basis.T
    q = w_star - W1 @ (W1.T @ w_star)  # P_1 w*
    scale = 1.0 / math.sqrt(k1)
    values = np.zeros(trials)
    for i in range(trials):
        Z = rng.standard_normal((m, k1)) * scale
        rows = Z @ W1.T
        stacked = np.vstack([base_rows, rows])
        _, svals, vh = np.linalg.svd(stacked, full_matrices=False)
        rank = int(np.sum(svals > 1e-10 * svals[0])) if svals[0] > 0 else 0
        B = vh[:rank]
        p = q - B.T @ (B @ q)  # P~_2 P_1 w*
        values[i] = float(np.sum((W1.T @ p) ** 2))
    mean = float(values.mean())
    std_err = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return {"mean": mean, "std_err": std_err, "trials": trials}


SQRT2_OVER_2 = math.sqrt(2.0) / 2.0


def benign_replay_certificate(s1: Subspace, s2: Subspace) -> dict:
    """Certify that replay cannot increase expected forgetting.

    Computes ||P_2 P_1||_op. When it is at most sqrt(2)/2, every eigenvalue
    of (P_2 P_1)^T (P_2 P_1) sits in [0, 1/2], where x - x^2 is monotone,
    so shrinking the second null space (which is what replay does) can only
    lower the trace-form expectation over w* ~ N(0, I).

    Returns:
        {"op_norm_value": float, "certified": bool}.
    """
    if s1.ambient_dim != s2.ambient_dim:
        raise DimensionMismatch("task subspaces live in different dimensions")
    d = s1.ambient_dim
    P1 = np.eye(d) - s1.basis @ s1.basis.T
    P2 = np.eye(d) - s2.basis @ s2.basis.T
    value = float(np.linalg.svd(P2 @ P1, compute_uv=False)[0]) if d else 0.0
    return {"op_norm_value": value, "certified": bool(value <= SQRT2_OVER_2 + 1e-12)}


def expected_forgetting_trace_form(
    s1: Subspace, s2: Subspace, replay_projector: Projector | None = None
) -> float:
    """Exact E[two-task forgetting] over w* ~ N(0, I_d).

    With A = P_2 P_1 (or P~_2 P_1 when ``replay_projector``, the null
    projector of the replay-augmented second task, is given), the
    expectation equals trace(A^T A - (A^T A)^2).
    """
    if s1.ambient_dim != s2.ambient_dim:
        raise DimensionMismatch("task subspaces live in different dimensions")
    d = s1.ambient_dim
    P1 = np.eye(d) - s1.basis @ s1.basis.T
    if replay_projector is None:
        P2 = np.eye(d) - s2.basis @ s2.basis.T
    else:
        if replay_projector.ambient_dim != d:
            raise DimensionMismatch("replay projector dimension mismatch")
        P2 = replay_projector.matrix
    A = P2 @ P1
    M = A.T @ A
    return float(np.trace(M) - np.sum(M * M))
