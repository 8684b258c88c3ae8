"""GVF subtasks: cumulant, stopping value, and stopping condition.

Three task kinds are supported:

- ``reward_respecting``: the cumulant is the environment reward and the
  stopping value is the estimated primary value plus a feature-attainment
  bonus, z(s) = v̂(x(s), w) + x_i(s) (w̄ - w_i).
- ``shortest_path``: zero cumulant, stopping value 1 at the subgoal and 0
  elsewhere, stopping forced exactly at the subgoal (and at termination).
  The classic variant (cumulant -1, subgoal value 0) is the same task with
  ``cumulant_const=-1, subgoal_value=0``.
- ``eigen``: zero cumulant; the stopping value of a state is the entry the
  selected graph-Laplacian eigenvector assigns to it.

Stopping for reward-respecting and eigen tasks uses the threshold rule
(stop iff z(s) >= w·x(s), ties stop); shortest-path tasks stop exactly on a
fixed set of states. Termination always stops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

REWARD_RESPECTING = "reward_respecting"
SHORTEST_PATH = "shortest_path"
EIGEN = "eigen"

THRESHOLD = "threshold"
FIXED_SET = "fixed_set"


@dataclass(frozen=True)
class GvfTask:
    """Immutable subtask definition (cumulant rule, stopping value, stop rule)."""

    kind: str
    feature_index: int = -1          # target feature (rr: bonus feature; sp: subgoal state)
    bonus_weight: float = 0.0        # w̄, reward_respecting only
    stop_rule: str = THRESHOLD
    stop_set: frozenset = frozenset()            # fixed_set rule: state indices
    eigen_values: tuple = ()                     # eigen only: per-state stopping values
    cumulant_const: float = 0.0                  # sp/eigen cumulant
    subgoal_value: float = 1.0                   # sp stopping value at the subgoal
    label: str = ""

    def __post_init__(self):
        if self.kind not in (REWARD_RESPECTING, SHORTEST_PATH, EIGEN):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.kind == REWARD_RESPECTING and not np.isfinite(self.bonus_weight):
            raise ValueError("bonus weight must be finite")
        if self.stop_rule not in (THRESHOLD, FIXED_SET):
            raise ValueError(f"unknown stop rule {self.stop_rule!r}")

    @property
    def task_id(self):
        return self.label or f"{self.kind}:{self.feature_index}"


def cumulant(task, reward):
    """Per-step cumulant: the reward for reward-respecting tasks, a constant
    (default 0) otherwise."""
    if task.kind == REWARD_RESPECTING:
        return reward
    return task.cumulant_const


def stopping_value(task, x, w_primary):
    """Stopping value z for the state with feature vector ``x``.

    For reward-respecting tasks this is v̂(x, w) + x_i (w̄ - w_i), computed as
    (v̂ - x_i w_i) + x_i w̄ so that a one-hot target state yields exactly w̄.
    z is 0 at the terminal state for every kind (x(⊥) = 0).
    """
    x = np.asarray(x, dtype=float)
    if task.kind == REWARD_RESPECTING:
        i = task.feature_index
        v_hat = float(np.dot(w_primary, x))
        return (v_hat - x[i] * w_primary[i]) + x[i] * task.bonus_weight
    if task.kind == SHORTEST_PATH:
        return x[task.feature_index] * task.subgoal_value
    return float(np.dot(np.asarray(task.eigen_values), x))


def stopping_condition(task, x, w_task, z, is_terminal):
    """Binary stop decision for the state with feature vector ``x``.

    Terminal always stops. The threshold rule stops iff z >= w_task·x
    (inclusive). The fixed-set rule stops exactly on the listed states and
    requires one-hot features.
    """
    if is_terminal:
        return 1
    if task.stop_rule == THRESHOLD:
        return 1 if z >= float(np.dot(w_task, x)) else 0
    s = int(np.argmax(x))
    if x[s] != 1.0:
        raise ValueError("fixed-set stopping requires one-hot features")
    return 1 if s in task.stop_set else 0


def make_feature_attainment_task(feature_index, bonus_weight, label=""):
    """Reward-respecting feature-attainment subtask with the threshold stop rule."""
    return GvfTask(kind=REWARD_RESPECTING, feature_index=int(feature_index),
                   bonus_weight=float(bonus_weight), stop_rule=THRESHOLD,
                   label=label or f"rr:{feature_index}:w{bonus_weight:g}")


def make_shortest_path_task(layout, subgoal_cell, classic=False, label=""):
    """Shortest-path subtask stopping exactly at ``subgoal_cell``.

    The goal cell is terminal, so stopping there is covered by the
    terminal rule; the explicit stop set holds the subgoal. ``classic``
    selects the cumulant -1 / subgoal value 0 variant.
    """
    subgoal = layout.index_of(subgoal_cell)
    if subgoal not in layout.hallway_indices:
        raise ValueError(f"subgoal {subgoal_cell} is not a hallway cell")
    return GvfTask(kind=SHORTEST_PATH, feature_index=subgoal,
                   stop_rule=FIXED_SET, stop_set=frozenset({subgoal}),
                   cumulant_const=-1.0 if classic else 0.0,
                   subgoal_value=0.0 if classic else 1.0,
                   label=label or f"sp:{subgoal}")


def move_graph_laplacian(layout):
    """Unnormalized Laplacian L = D - A of the single-move adjacency graph
    over non-terminal cells."""
    d = layout.n_states
    A = np.zeros((d, d))
    for s, (r, c) in enumerate(layout.cells):
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nb = (r + dr, c + dc)
            if layout.has_state(nb):
                A[s, layout.index_of(nb)] = 1.0
    D = np.diag(A.sum(axis=1))
    return D - A


def make_eigen_task(layout, eigen_index=1, sign=1, label=""):
    """Eigenoption subtask: stopping values from a Laplacian eigenvector.

    ``eigen_index`` selects the eigenvector of the eigen_index-th smallest
    eigenvalue (1 = Fiedler vector). The eigenvector's intrinsic sign is
    fixed by making its largest-magnitude entry positive; ``sign`` (+1/-1)
    is applied on top. Raises if the move graph is disconnected or the
    index is out of range.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    L = move_graph_laplacian(layout)
    eigvals, eigvecs = scipy.linalg.eigh(L)
    if not 0 <= eigen_index < layout.n_states:
        raise ValueError(f"eigen_index {eigen_index} out of range")
    if layout.n_states > 1 and eigvals[1] < 1e-10:
        raise ValueError("move graph is disconnected (repeated zero eigenvalue)")
    vec = eigvecs[:, eigen_index].copy()
    if vec[int(np.argmax(np.abs(vec)))] < 0:
        vec = -vec
    vec *= sign
    return GvfTask(kind=EIGEN, stop_rule=THRESHOLD,
                   eigen_values=tuple(float(v) for v in vec),
                   label=label or f"eigen:{eigen_index}:{'+' if sign > 0 else '-'}")


def static_z_table(task, layout):
    """Per-state stopping values for tasks whose z does not depend on the
    primary weights (shortest_path, eigen); None for reward_respecting."""
    if task.kind == REWARD_RESPECTING:
        return None
    z = np.zeros(layout.n_states)
    if task.kind == SHORTEST_PATH:
        z[task.feature_index] = task.subgoal_value
    else:
        z[:] = task.eigen_values
    return z


def z_table(task, layout, w_primary):
    """Per-state stopping values given primary weights (all task kinds)."""
    static = static_z_table(task, layout)
    if static is not None:
        return static
    z = np.asarray(w_primary, dtype=float).copy()
    z[task.feature_index] = task.bonus_weight
    return z


def check_one_task_per_feature(tasks):
    """Reject duplicate feature-attainment targets within one run."""
    seen = {}
    for t in tasks:
        if t.kind != REWARD_RESPECTING:
            continue
        if t.feature_index in seen:
            raise ValueError(
                f"feature {t.feature_index} has two subtasks "
                f"({seen[t.feature_index]!r} and {t.task_id!r})")
        seen[t.feature_index] = t.task_id
