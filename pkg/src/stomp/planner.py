"""Planning with option models, plus the exact dynamic-programming oracles.

Approximate value iteration (AVI) maintains a linear value function
v̂(x, w) = w . x and repeatedly assigns sampled states toward the maximum
backed-up value b(x, o, w) = r̂(x, o) + v̂(n̂(x, o), w) over an option menu.
With tabular features, step size 1, and exact models this is classical
asynchronous value iteration extended to options, which is also how the
exact oracle here is implemented (states updated one by one, in place).

The optimal-subtask-value oracle iterates

    v(s) = max_a sum_{s',r} p(s',r|s,a) [ c(r) + arrival(s') ]
    arrival(s') = 0 if s' terminal else max(z(s'), gamma v(s'))

(for fixed-set stop rules the arrival value is z(s') exactly on the listed
states and gamma v(s') elsewhere). An option runs for at least one step, so
the stopping value enters with the same discount as the final cumulant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels, gridworld, learning, models, subtasks
from .util import rmse


@dataclass
class PlanState:
    """Planned value weights plus the logged progress curve."""

    w: np.ndarray
    updates_done: int = 0
    curve: list = field(default_factory=list)  # (updates, v_start, rmse_vs_opt)


def menu_arrays(menu):
    """Stack menu models into (WRm, NTm) kernel arrays.

    ``menu`` is a list of LinearOptionModel / IdealizedModel (anything with
    ``as_arrays``).
    """
    WRm = np.ascontiguousarray(np.stack([m.as_arrays()[0] for m in menu]))
    NTm = np.ascontiguousarray(np.stack([m.as_arrays()[1] for m in menu]))
    return WRm, NTm


def backed_up_value(x, model, w):
    """b(x, o, w) = r̂(x, o) + v̂(n̂(x, o), w)."""
    return models.predict_reward(model, x) + float(np.dot(w, models.predict_next(model, x)))


def greedy_option(x, menu, w):
    """Index of the menu entry with the largest backed-up value (ties to
    the lowest index)."""
    values = np.array([backed_up_value(x, m, w) for m in menu])
    return int(np.argmax(values))


def avi_update(ps, x, menu, alpha):
    """One AVI update at feature vector x: w += alpha (max_o b - v̂) x."""
    x = np.asarray(x, dtype=float)
    best = max(backed_up_value(x, m, ps.w) for m in menu)
    ps.w += alpha * (best - float(np.dot(ps.w, x))) * x
    ps.updates_done += 1
    return ps


def plan(menu, layout, n_updates, alpha, seed, eval_cadence=100,
         v_star=None, log=None, run_id=0, menu_id="menu", backend=None):
    """AVI over uniformly sampled non-terminal states, from zero weights.

    Records v̂(start) (and RMSE against ``v_star`` when given) every
    ``eval_cadence`` state updates; the x-axis unit is states updated.
    """
    impl = _kernels.get_backend(backend)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, layout.n_states, size=n_updates, dtype=np.int64)
    WRm, NTm = menu_arrays(menu)
    ps = PlanState(w=np.zeros(layout.n_states))
    start = layout.start_index
    stage = f"plan:{menu_id}"
    for k0, k1 in learning._segments(n_updates, eval_cadence):
        impl.avi_steps(idx, k0, k1, alpha, WRm, NTm, ps.w)
        ps.updates_done = k1
        err = rmse(ps.w, v_star) if v_star is not None else float("nan")
        ps.curve.append((k1, float(ps.w[start]), err))
        if log is not None:
            log.append(run_id, stage, "updates", k1, "start_value",
                       float(ps.w[start]))
            if v_star is not None:
                log.append(run_id, stage, "updates", k1, "rmse_vs_opt", err)
    return ps


def primitive_idealized_models(layout):
    """Idealized models of the four primitive actions (one-step
    expectations: r(s,a) = E[R], p = gamma P restricted to non-terminal)."""
    P, _, R_exp = layout.env_probs()
    out = []
    for a in gridworld.ACTIONS:
        out.append(models.IdealizedModel(
            f"action:{gridworld.ACTION_NAMES[a]}", R_exp[:, a].copy(),
            layout.gamma * P[:, a, :]))
    return out


def exact_value_iteration(layout, menu=None, tol=1e-4, max_sweeps=200000,
                          return_history=False):
    """Asynchronous value iteration with option models, to convergence.

    States are updated in index order, in place; sweeps repeat until the
    largest single-state change in a sweep is below ``tol`` (the default
    matches the experiments' convergence threshold; oracle callers pass
    1e-12). ``menu=None`` means the four primitive actions with their
    idealized models (classical value iteration). With ``return_history``
    the per-sweep max changes are returned alongside the values.
    """
    if menu is None:
        menu = primitive_idealized_models(layout)
    WRm, NTm = menu_arrays(menu)
    d = layout.n_states
    V = np.zeros(d)
    history = []
    for _ in range(max_sweeps):
        biggest = 0.0
        for s in range(d):
            b = WRm[:, s] + NTm[:, s, :] @ V
            new = float(np.max(b))
            change = abs(new - V[s])
            if change > biggest:
                biggest = change
            V[s] = new
        history.append(biggest)
        if biggest < tol:
            return (V, history) if return_history else V
    raise RuntimeError("value iteration failed to converge (non-stopping option?)")


def greedy_state_path(layout, V, s0, cap=10000):
    """Greedy primitive rollout under value table V (deterministic layouts).

    Follows argmax_a E[r + gamma V(s')] transitions until the terminal
    state; used by layout self-verification.
    """
    P, _, R_exp = layout.env_probs()
    path = [s0]
    s = s0
    for _ in range(cap):
        q = R_exp[s] + layout.gamma * (P[s] @ V)
        a = int(np.argmax(q))
        nxt = layout.t_next[s, a]
        if layout.t_n[s, a] != 1:
            raise ValueError("greedy_state_path requires a deterministic layout")
        s = int(nxt[0])
        path.append(s)
        if s == gridworld.TERMINAL:
            return path
    raise RuntimeError("greedy rollout did not terminate")


def solve_v_mu(layout):
    """Exact value of the equiprobable policy: (I - gamma P_mu) v = R_mu."""
    P, _, R_exp = layout.env_probs()
    P_mu = P.mean(axis=1)
    R_mu = R_exp.mean(axis=1)
    return np.linalg.solve(np.eye(layout.n_states) - layout.gamma * P_mu, R_mu)


def solve_mu_visitation(layout):
    """Stationary state distribution of the equiprobable policy with
    episodes restarting at the start state (the weighting behind
    behavior-distribution metrics)."""
    P, _, _ = layout.env_probs()
    P_mu = P.mean(axis=1)
    restart = P_mu.copy()
    restart[:, layout.start_index] += 1.0 - P_mu.sum(axis=1)
    eigvals, eigvecs = np.linalg.eig(restart.T)
    k = int(np.argmin(np.abs(eigvals - 1.0)))
    d = np.real(eigvecs[:, k])
    d = np.abs(d)
    return d / d.sum()


def _arrival_values(layout, task, z, v):
    """arrival(s') per state: the better of stopping now and continuing,
    or the forced choice under a fixed-set rule."""
    if task.stop_rule == subtasks.FIXED_SET:
        arrival = layout.gamma * v
        for s in task.stop_set:
            arrival[s] = z[s]
        return arrival
    return np.maximum(z, layout.gamma * v)


def optimal_subtask_values(layout, task, w_primary_exact, tol=1e-12,
                           max_sweeps=2000000):
    """Optimal subtask values v*: synchronous value iteration over the
    augmented stop/continue choice, iterated to ``tol``.

    ``w_primary_exact`` should be the exactly solved v_mu so the stopping
    values match the definition used in learning.
    """
    d = layout.n_states
    z = subtasks.z_table(task, layout, w_primary_exact)
    nxt = layout.t_next
    prob = layout.t_prob
    if task.kind == subtasks.REWARD_RESPECTING:
        cum = layout.t_rew
    else:
        cum = np.where(prob > 0.0, task.cumulant_const, 0.0)
    nonterm = nxt >= 0
    nxt_safe = np.where(nonterm, nxt, 0)
    v = np.zeros(d)
    for _ in range(max_sweeps):
        arrival = _arrival_values(layout, task, z, v)
        contrib = cum + np.where(nonterm, arrival[nxt_safe], 0.0)
        q = np.sum(prob * contrib, axis=2)
        v_new = q.max(axis=1)
        change = float(np.max(np.abs(v_new - v)))
        v = v_new
        if change < tol:
            return v
    raise RuntimeError("subtask value iteration failed to converge")


def optimal_option(layout, task, w_primary_exact, tol=1e-12):
    """Extract the optimal option for a task: greedy deterministic policy
    from the converged action values, stopping where the task rule fires
    against v* itself."""
    v = optimal_subtask_values(layout, task, w_primary_exact, tol=tol)
    z = subtasks.z_table(task, layout, w_primary_exact)
    nxt = layout.t_next
    prob = layout.t_prob
    if task.kind == subtasks.REWARD_RESPECTING:
        cum = layout.t_rew
    else:
        cum = np.where(prob > 0.0, task.cumulant_const, 0.0)
    nonterm = nxt >= 0
    nxt_safe = np.where(nonterm, nxt, 0)
    arrival = _arrival_values(layout, task, z, v)
    q = np.sum(prob * (cum + np.where(nonterm, arrival[nxt_safe], 0.0)), axis=2)
    pi = np.zeros((layout.n_states, 4))
    pi[np.arange(layout.n_states), np.argmax(q, axis=1)] = 1.0
    if task.stop_rule == subtasks.FIXED_SET:
        beta = np.zeros(layout.n_states)
        for s in task.stop_set:
            beta[s] = 1.0
    else:
        beta = (z >= v).astype(float)
    return learning.OptionDef.tabular(pi, beta, f"optimal:{task.task_id}")


def evaluate_option_gvf(layout, option, task, w_primary):
    """Exact GVF value of a fixed option for ``task``: solves
    v = E_pi[c + beta' z' + gamma (1 - beta') v'] directly."""
    gamma = layout.gamma
    pi = option.policy_table(layout)
    beta = option.beta_table(layout)
    z = subtasks.z_table(task, layout, w_primary)
    P, _, R_exp = layout.env_probs()
    P_pi = np.einsum("sa,sax->sx", pi, P)
    if task.kind == subtasks.REWARD_RESPECTING:
        c_pi = np.einsum("sa,sa->s", pi, R_exp)
    else:
        c_pi = np.full(layout.n_states, task.cumulant_const)
    stop_gain = P_pi @ (beta * z)
    A = np.eye(layout.n_states) - gamma * (P_pi * (1.0 - beta)[None, :])
    return np.linalg.solve(A, c_pi + stop_gain)


def greedy_option_rollout(layout, option, rng=None, cap=10000):
    """Roll out an option greedily from the start state.

    Follows the option's greedy action, stops when its stopping function
    fires (or at termination), and returns (states, rewards, stopped_at)
    where stopped_at is a state index or TERMINAL. Stochastic layouts need
    an rng; deterministic ones roll out exactly.
    """
    beta = option.beta_table(layout)
    s = layout.start_index
    states = [s]
    rewards = []
    for _ in range(cap):
        a = option.greedy_action(s)
        if rng is None:
            if layout.t_n[s, a] != 1:
                raise ValueError("stochastic layout: pass an rng")
            nxt, rew = int(layout.t_next[s, a, 0]), float(layout.t_rew[s, a, 0])
        else:
            nxt, rew, _term = gridworld.step(layout, s, a, rng)
        states.append(nxt)
        rewards.append(rew)
        s = nxt
        if s == gridworld.TERMINAL or beta[s] == 1.0:
            return states, rewards, s
    raise RuntimeError("option rollout did not stop")
