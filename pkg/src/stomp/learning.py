"""Off-policy option learning: general TD error, UWT, softmax actor.

The learning loop runs under the equiprobable behavior policy
mu(a|s) = 1/4. Each step applies one on-policy TD update to the primary
value estimate and then, for every subtask, one off-policy critic update
(weights w^i over state features) and one actor update (softmax preferences
theta^i over state-action features), both through the UWT procedure with
the task's importance ratio and the general TD error

    delta(c, z, v, v', beta) = c + beta z + gamma (1 - beta) v' - v.

The hot loop lives in ``stomp._kernels``; this module provides the public
building blocks, the orchestration, and the metric logging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, gridworld, subtasks
from .util import rmse


@dataclass
class Hyperparams:
    """Step sizes and trace decays for option learning.

    ``gamma=None`` means "use the layout's discount rate". Defaults follow
    the two-room configuration; the four-room runs use alpha_primary=0.1.
    """

    alpha: float = 0.1            # critic step size
    alpha_prime: float = 0.1      # actor step size
    lam: float = 0.0              # critic trace decay
    lam_prime: float = 0.0        # actor trace decay
    alpha_primary: float = 0.9    # primary-value TD step size
    lam_primary: float = 0.0
    gamma: float | None = None

    def __post_init__(self):
        for name in ("alpha", "alpha_prime", "alpha_primary"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        for name in ("lam", "lam_prime", "lam_primary"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.gamma is not None and not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")

    def discount(self, layout):
        return layout.gamma if self.gamma is None else self.gamma


@dataclass
class TraceSet:
    """A weight vector paired with its eligibility trace."""

    w: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        if self.w.shape != self.e.shape:
            raise ValueError("weight and trace dimensions differ")

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros(dim), np.zeros(dim))


def td_error(c, z, v, v_next, beta, gamma):
    """General TD error: c + beta*z + gamma*(1-beta)*v_next - v."""
    return c + beta * z + gamma * (1.0 - beta) * v_next - v


def uwt(ts, grad, alpha_delta, rho, decay):
    """UpdateWeights&Traces, in place: e <- rho (e + grad);
    w <- w + alpha_delta e; e <- decay e. Returns the mutated TraceSet."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != ts.w.shape:
        raise ValueError("gradient dimension does not match the trace set")
    ts.e += grad
    ts.e *= rho
    ts.w += alpha_delta * ts.e
    ts.e *= decay
    return ts


@dataclass
class SoftmaxActor:
    """Linear softmax policy: pi(a|s) proportional to exp(theta . phi(s,a))."""

    theta: np.ndarray

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros(dim))


def policy_probs(actor, phi_all):
    """Action probabilities for the feature rows in ``phi_all``
    (one per action), computed with max-subtraction."""
    prefs = np.asarray(phi_all, dtype=float) @ actor.theta
    prefs = prefs - np.max(prefs)
    expd = np.exp(prefs)
    return expd / np.sum(expd)


def grad_log_policy(actor, phi_all, a):
    """Score function: phi(s,a) - sum_b pi(b|s) phi(s,b)."""
    phi_all = np.asarray(phi_all, dtype=float)
    probs = policy_probs(actor, phi_all)
    return phi_all[a] - probs @ phi_all


def importance_ratio(pi_prob, mu_prob):
    """Target-over-behavior probability ratio; behavior must have support."""
    if mu_prob <= 0.0:
        raise ValueError("behavior policy must assign positive probability")
    return pi_prob / mu_prob


class OptionDef:
    """A way of behaving: a primitive action or a (policy, stopping) pair.

    Planners and model learners consume options only through
    ``policy_table`` (per-state action probabilities) and ``beta_table``
    (per-state binary stopping), so primitive, learned, and explicitly
    tabulated options are interchangeable.
    """

    def __init__(self, kind, option_id, action=None, actor=None, task=None,
                 critic_w=None, w_primary=None, pi_table=None, beta_tab=None):
        self.kind = kind
        self.option_id = option_id
        self.action = action
        self.actor = actor
        self.task = task
        self.critic_w = critic_w
        self.w_primary = w_primary
        self._pi_table = pi_table
        self._beta_table = beta_tab

    @classmethod
    def primitive(cls, action):
        return cls("primitive", f"action:{gridworld.ACTION_NAMES[action]}",
                   action=action)

    @classmethod
    def learned(cls, actor, task, critic_w, w_primary):
        """Freeze a learned option: softmax policy from the actor weights,
        stopping from the task rule evaluated with the final critic and
        primary weights."""
        return cls("learned", f"option:{task.task_id}", actor=actor, task=task,
                   critic_w=np.asarray(critic_w, dtype=float).copy(),
                   w_primary=np.asarray(w_primary, dtype=float).copy())

    @classmethod
    def tabular(cls, pi_table, beta_tab, option_id):
        return cls("tabular", option_id,
                   pi_table=np.asarray(pi_table, dtype=float),
                   beta_tab=np.asarray(beta_tab, dtype=float))

    def policy_table(self, layout):
        """(d, 4) array of pi(a|s)."""
        d = layout.n_states
        if self.kind == "primitive":
            pi = np.zeros((d, 4))
            pi[:, self.action] = 1.0
            return pi
        if self.kind == "tabular":
            return self._pi_table
        prefs = self.actor.theta.reshape(d, 4)
        prefs = prefs - prefs.max(axis=1, keepdims=True)
        expd = np.exp(prefs)
        return expd / expd.sum(axis=1, keepdims=True)

    def beta_table(self, layout):
        """(d,) float array of 0/1 stopping decisions at non-terminal states."""
        d = layout.n_states
        if self.kind == "primitive":
            return np.ones(d)
        if self.kind == "tabular":
            return self._beta_table
        z = subtasks.z_table(self.task, layout, self.w_primary)
        if self.task.stop_rule == subtasks.THRESHOLD:
            return (z >= self.critic_w).astype(float)
        beta = np.zeros(d)
        for s in self.task.stop_set:
            beta[s] = 1.0
        return beta

    def greedy_action(self, s):
        """Greedy action of the option's policy at state s (ties: lowest)."""
        if self.kind == "primitive":
            return self.action
        if self.kind == "tabular":
            return int(np.argmax(self._pi_table[s]))
        return int(np.argmax(self.actor.theta[4 * s:4 * s + 4]))

    def __repr__(self):
        return f"OptionDef({self.option_id})"


def primitive_options():
    return [OptionDef.primitive(a) for a in gridworld.ACTIONS]


def _task_pack(tasks, layout):
    """Flatten task definitions into the arrays the kernels consume."""
    n, d = len(tasks), layout.n_states
    pack = {
        "cmode": np.zeros(n, dtype=np.int64),
        "cconst": np.zeros(n),
        "zmode": np.zeros(n, dtype=np.int64),
        "ztgt": np.zeros(n, dtype=np.int64),
        "zwbar": np.zeros(n),
        "zstatic": np.zeros((n, d)),
        "bmode": np.zeros(n, dtype=np.int64),
        "stopmask": np.zeros((n, d)),
    }
    for t, task in enumerate(tasks):
        if task.kind == subtasks.REWARD_RESPECTING:
            pack["ztgt"][t] = task.feature_index
            pack["zwbar"][t] = task.bonus_weight
        else:
            pack["cmode"][t] = 1
            pack["cconst"][t] = task.cumulant_const
            pack["zmode"][t] = 1
            pack["zstatic"][t] = subtasks.static_z_table(task, layout)
        if task.stop_rule == subtasks.FIXED_SET:
            pack["bmode"][t] = 1
            for s in task.stop_set:
                pack["stopmask"][t, s] = 1.0
    return pack


class OptionLearningState:
    """Mutable weight/trace state of one option-learning run.

    Exposed so tests can step the loop in segments and inspect traces.
    """

    def __init__(self, layout, tasks, hp):
        d = layout.n_states
        n = len(tasks)
        self.layout = layout
        self.tasks = list(tasks)
        self.hp = hp
        self.w_p = np.zeros(d)
        self.e_p = np.zeros(d)
        self.W = np.zeros((n, d))
        self.E = np.zeros((n, d))
        self.TH = np.zeros((n, 4 * d))
        self.ETH = np.zeros((n, 4 * d))
        self.pack = _task_pack(tasks, layout)
        self.steps_done = 0

    def advance(self, traj, i0, i1, backend=None):
        impl = _kernels.get_backend(backend)
        hp = self.hp
        impl.option_learning_steps(
            traj[0], traj[1], traj[2], traj[3], i0, i1,
            hp.discount(self.layout),
            hp.alpha_primary, hp.lam_primary, self.w_p, self.e_p,
            hp.alpha, hp.lam, hp.alpha_prime, hp.lam_prime,
            self.pack["cmode"], self.pack["cconst"], self.pack["zmode"],
            self.pack["ztgt"], self.pack["zwbar"], self.pack["zstatic"],
            self.pack["bmode"], self.pack["stopmask"],
            self.W, self.E, self.TH, self.ETH)
        self.steps_done = i1

    def option(self, t):
        return OptionDef.learned(SoftmaxActor(self.TH[t].copy()),
                                 self.tasks[t], self.W[t], self.w_p)


def sample_trajectory(layout, steps, rng, backend=None):
    """Equiprobable-policy trajectory as (s, a, r, s2) arrays; episodes
    restart at the start state."""
    impl = _kernels.get_backend(backend)
    u01 = rng.random((steps, 2))
    return impl.sample_steps(layout.t_cum, layout.t_next, layout.t_rew,
                             layout.t_n, layout.start_index, u01)


def learn_primary_value(layout, hp, steps, seed, eval_cadence=0, v_mu_ref=None,
                        log=None, run_id=0, backend=None):
    """On-policy TD(lam_primary) estimate of v_mu under the equiprobable
    policy. Logs RMSE against ``v_mu_ref`` every ``eval_cadence`` steps when
    both are provided. Returns the weight vector."""
    rng = np.random.default_rng(seed)
    traj = sample_trajectory(layout, steps, rng, backend=backend)
    state = OptionLearningState(layout, [], hp)
    for i0, i1 in _segments(steps, eval_cadence):
        state.advance(traj, i0, i1, backend=backend)
        if log is not None and v_mu_ref is not None:
            log.append(run_id, "primary", "step", i1, "rmse_vs_v_mu",
                       rmse(state.w_p, v_mu_ref))
    return state.w_p


def learn_options(layout, tasks, hp, steps, seed, eval_cadence=500,
                  oracles=None, log=None, run_id=0, backend=None,
                  mu_weights=None):
    """Learn one option per task, off-policy from a shared random stream.

    ``oracles`` maps task_id to the optimal-subtask-value table; when given
    (with ``log``), per-task RMSE against it (uniform and, when
    ``mu_weights`` is given, weighted by the behavior visitation), the
    critic's start-state estimate, and the exact GVF value of the current
    option are logged at ``eval_cadence``. Returns (options, w_primary,
    state).
    """
    from . import planner  # deferred: planner imports this module

    subtasks.check_one_task_per_feature(tasks)
    rng = np.random.default_rng(seed)
    traj = sample_trajectory(layout, steps, rng, backend=backend)
    state = OptionLearningState(layout, tasks, hp)
    start = layout.start_index
    for i0, i1 in _segments(steps, eval_cadence):
        state.advance(traj, i0, i1, backend=backend)
        if log is None or oracles is None:
            continue
        for t, task in enumerate(tasks):
            stage = f"options:{task.task_id}"
            err = state.W[t] - oracles[task.task_id]
            log.append(run_id, stage, "step", i1, "rmse_vs_optimal",
                       float(np.sqrt(np.mean(err ** 2))))
            if mu_weights is not None:
                log.append(run_id, stage, "step", i1, "rmse_vs_optimal_mu",
                           float(np.sqrt(np.sum(mu_weights * err ** 2))))
            log.append(run_id, stage, "step", i1, "start_value_estimate",
                       float(state.W[t, start]))
            opt = state.option(t)
            v_opt = planner.evaluate_option_gvf(layout, opt, task,
                                                w_primary=state.w_p)
            log.append(run_id, stage, "step", i1, "start_value_policy_eval",
                       float(v_opt[start]))
    options = [state.option(t) for t in range(len(tasks))]
    return options, state.w_p, state


def _segments(steps, cadence, extra=()):
    """Half-open step ranges split at the logging cadence and at any
    ``extra`` boundaries (e.g., snapshot steps)."""
    bounds = {0, steps}
    if cadence is not None and cadence > 0:
        bounds.update(range(cadence, steps, cadence))
    bounds.update(b for b in extra if 0 < b < steps)
    ordered = sorted(bounds)
    return [(ordered[k], ordered[k + 1]) for k in range(len(ordered) - 1)]
