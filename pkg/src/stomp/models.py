"""Linear option models and the exact idealized-model oracle.

An option model has a reward part r̂(x, o) = w_r . x and an expectation
transition part n̂(x, o) = W x predicting the discounted feature vector at
stopping time. Internally the transition weights are stored transposed
(``nt[s, :]`` = n̂ of the one-hot state s) so the hot loops touch contiguous
rows; ``W`` exposes the conventional d x d orientation.

The idealized oracle solves the exact fixed points over environment states:

    r(s,o)   = E[R' + gamma (1 - beta(s')) r(s',o)]
    p(.|s,o) = E[gamma (beta(s') 1_{s'} + (1 - beta(s')) p(.|s',o))]

by dense linear solves. For a primitive action these reduce to the one-step
expected reward and gamma times the transition distribution restricted to
non-terminal successors.

The learning updates follow the corrected recursion consistent with these
fixed points (the continuation term is gamma (1-beta) times the next
prediction); ``literal_eq19_21=True`` switches to a double-discounted variant of the
recursion for comparison, and ``literal_fixed_point`` computes what that
variant converges to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, learning
from .util import rmse


class LinearOptionModel:
    """Learned linear model of one option (reward part + transition part)."""

    def __init__(self, option_id, w_r, nt):
        self.option_id = option_id
        self.w_r = np.asarray(w_r, dtype=float)
        self.nt = np.asarray(nt, dtype=float)
        if self.nt.shape != (self.w_r.shape[0], self.w_r.shape[0]):
            raise ValueError("transition part must be d x d")

    @property
    def W(self):
        """Transition matrix in the n̂(x) = W x orientation (rows w_j)."""
        return self.nt.T

    @classmethod
    def zeros(cls, option_id, d):
        return cls(option_id, np.zeros(d), np.zeros((d, d)))

    @classmethod
    def from_idealized(cls, ideal):
        """Tabular injection of exact tables into the linear form."""
        return cls(ideal.option_id, ideal.r.copy(), ideal.p.copy())

    def as_arrays(self):
        return self.w_r, self.nt


@dataclass
class IdealizedModel:
    """Exact r(s,o) and p(s'|s,o) tables; ``p[s, s']`` is the row from s."""

    option_id: str
    r: np.ndarray
    p: np.ndarray

    def as_arrays(self):
        return self.r, self.p


def predict_reward(model, x):
    """r̂(x) = w_r . x (works for learned and idealized models alike)."""
    w_r, _ = model.as_arrays()
    x = np.asarray(x, dtype=float)
    if x.shape != w_r.shape:
        raise ValueError("feature dimension mismatch")
    return float(np.dot(w_r, x))


def predict_next(model, x):
    """n̂(x) = W x, the expected discounted feature vector at stopping."""
    w_r, nt = model.as_arrays()
    x = np.asarray(x, dtype=float)
    if x.shape != w_r.shape:
        raise ValueError("feature dimension mismatch")
    return nt.T @ x


def idealized_model(layout, option):
    """Exact model of an option, by direct linear solve (tolerance-free).

    The systems are always solvable for gamma < 1 (a never-stopping option
    simply gets a zero transition part); a singular solve is reported
    explicitly.
    """
    gamma = layout.gamma
    pi = option.policy_table(layout)
    beta = option.beta_table(layout)
    P, _, R_exp = layout.env_probs()
    P_pi = np.einsum("sa,sax->sx", pi, P)
    R_pi = np.einsum("sa,sa->s", pi, R_exp)
    d = layout.n_states
    A = np.eye(d) - gamma * (P_pi * (1.0 - beta)[None, :])
    try:
        r = np.linalg.solve(A, R_pi)
        p = np.linalg.solve(A, gamma * (P_pi * beta[None, :]))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"idealized model system for {option.option_id} is singular "
            f"(is the stopping function degenerate?)") from exc
    return IdealizedModel(option.option_id, r, p)


def literal_fixed_point(layout, option):
    """Fixed point of the double-discounted recursion variant, for the
    discrepancy experiment. Coincides with the idealized model for
    one-step options (beta = 1 everywhere kills the continuation term)."""
    gamma = layout.gamma
    pi = option.policy_table(layout)
    beta = option.beta_table(layout)
    P, _, R_exp = layout.env_probs()
    P_pi = np.einsum("sa,sax->sx", pi, P)
    R_pi = np.einsum("sa,sa->s", pi, R_exp)
    d = layout.n_states
    A = np.eye(d) - gamma * gamma * (P_pi * (1.0 - beta)[None, :])
    r = np.linalg.solve(A, R_pi)
    p = np.linalg.solve(A, gamma * (P_pi * beta[None, :]))
    return IdealizedModel(option.option_id + ":literal", r, p)


@dataclass
class ModelHyperparams:
    alpha_r: float = 0.1
    alpha_p: float = 0.1
    lam: float = 0.0

    def __post_init__(self):
        if self.alpha_r <= 0.0 or self.alpha_p <= 0.0:
            raise ValueError("model step sizes must be > 0")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must be in [0, 1]")


class ModelLearningState:
    """Mutable weights/traces of one model-learning run over a fixed option
    set; exposed for segment-wise stepping and trace inspection."""

    def __init__(self, layout, options, hp, literal=False):
        d = layout.n_states
        n = len(options)
        self.layout = layout
        self.options = list(options)
        self.hp = hp
        self.literal = bool(literal)
        self.pi_tab = np.stack([o.policy_table(layout) for o in options])
        self.beta_tab = np.stack([o.beta_table(layout) for o in options])
        self.WR = np.zeros((n, d))
        self.ER = np.zeros((n, d))
        self.NT = np.zeros((n, d, d))
        self.ETn = np.zeros((n, d, d))
        self.steps_done = 0

    def advance(self, traj, i0, i1, backend=None):
        impl = _kernels.get_backend(backend)
        impl.model_learning_steps(
            traj[0], traj[1], traj[2], traj[3], i0, i1, self.layout.gamma,
            self.hp.alpha_r, self.hp.alpha_p, self.hp.lam, self.literal,
            self.pi_tab, self.beta_tab, self.WR, self.ER, self.NT, self.ETn)
        self.steps_done = i1

    def model(self, o):
        return LinearOptionModel(self.options[o].option_id,
                                 self.WR[o].copy(), self.NT[o].copy())

    def models(self):
        return [self.model(o) for o in range(len(self.options))]


def learn_models(layout, options, hp, steps, seed, eval_cadence=500,
                 ideals=None, log=None, run_id=0, snapshot_steps=(),
                 literal=False, stage="models", backend=None):
    """Learn reward and transition models for every option in ``options``
    from one equiprobable-policy stream.

    Logs per-option RMSE against ``ideals`` (dict option_id ->
    IdealizedModel) at the cadence; returns (models, snapshots) where
    ``snapshots`` maps each step count in ``snapshot_steps`` to the list of
    models frozen at that point.
    """
    rng = np.random.default_rng(seed)
    traj = learning.sample_trajectory(layout, steps, rng, backend=backend)
    state = ModelLearningState(layout, options, hp, literal=literal)
    snapshots = {}
    snap_set = {s for s in snapshot_steps if s <= steps}
    for i0, i1 in learning._segments(steps, eval_cadence, extra=snap_set):
        state.advance(traj, i0, i1, backend=backend)
        if log is not None and ideals is not None:
            for o, opt in enumerate(options):
                ideal = ideals[opt.option_id]
                log.append(run_id, f"{stage}:{opt.option_id}", "step", i1,
                           "reward_rmse", rmse(state.WR[o], ideal.r))
                log.append(run_id, f"{stage}:{opt.option_id}", "step", i1,
                           "transition_rmse", rmse(state.NT[o], ideal.p))
        if i1 in snap_set:
            snapshots[i1] = state.models()
    return state.models(), snapshots


def model_rmse(learned, ideal, layout=None):
    """(reward_rmse, transition_rmse) against the idealized tables,
    uniformly weighted over states and state-component entries."""
    return (rmse(learned.w_r, ideal.r), rmse(learned.nt, ideal.p))


# -- snapshot serialization (flat text CSV) -----------------------------------


def save_model_csv(model, path):
    """Write one model as rows: ``w_r,<d values>`` then ``n,<s>,<d values>``
    (``n`` row s holds n̂ of one-hot state s)."""
    d = model.w_r.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("w_r," + ",".join(repr(float(v)) for v in model.w_r) + "\n")
        for s in range(d):
            fh.write(f"n,{s}," + ",".join(repr(float(v)) for v in model.nt[s]) + "\n")


def load_model_csv(path, option_id=None):
    w_r = None
    rows = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if parts[0] == "w_r":
                w_r = np.array([float(v) for v in parts[1:]])
            elif parts[0] == "n":
                rows[int(parts[1])] = np.array([float(v) for v in parts[2:]])
    if w_r is None or len(rows) != w_r.shape[0]:
        raise ValueError(f"malformed model snapshot {path}")
    nt = np.stack([rows[s] for s in range(len(rows))])
    return LinearOptionModel(option_id or "loaded", w_r, nt)
