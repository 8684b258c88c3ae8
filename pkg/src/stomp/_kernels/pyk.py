"""Pure-Python/numpy kernel backend.

Fallback twin of the compiled extension in ``_core.pyx``. The two backends
execute the same float64 operations in the same order for the sequential
learning loops, so their outputs are bit-identical; keep every expression in
step with the .pyx file when editing. The AVI kernel is the one exception:
its backed-up value needs a length-d dot product, and numpy's reduction
order is not pinned down, so cross-backend agreement there is 1e-10-level
rather than bitwise.
"""

from __future__ import annotations

from math import exp

import numpy as np

BACKEND = "python"


def sample_steps(t_cum, t_next, t_rew, t_n, start, u01):
    """Sample a trajectory under the equiprobable policy.

    ``u01`` is an (n, 2) array of uniforms (action draw, transition draw).
    Episodes restart at ``start`` after a terminal transition. Returns
    (s, a, r, s2) arrays; s2 is -1 on terminal transitions.
    """
    n = u01.shape[0]
    s_arr = np.empty(n, dtype=np.int64)
    a_arr = np.empty(n, dtype=np.int64)
    r_arr = np.empty(n)
    s2_arr = np.empty(n, dtype=np.int64)
    cur = int(start)
    for i in range(n):
        a = int(u01[i, 0] * 4.0)
        if a > 3:
            a = 3
        u = u01[i, 1]
        last = t_n[cur, a] - 1
        k = 0
        while k < last and u >= t_cum[cur, a, k]:
            k += 1
        s_arr[i] = cur
        a_arr[i] = a
        r_arr[i] = t_rew[cur, a, k]
        nxt = int(t_next[cur, a, k])
        s2_arr[i] = nxt
        cur = nxt if nxt >= 0 else int(start)
    return s_arr, a_arr, r_arr, s2_arr


def option_learning_steps(s_arr, a_arr, r_arr, s2_arr, i0, i1, gamma,
                          alpha_primary, lam_primary, w_p, e_p,
                          alpha, lam, alpha_prime, lam_prime,
                          cmode, cconst, zmode, ztgt, zwbar, zstatic,
                          bmode, stopmask, W, E, TH, ETH):
    """Advance the off-policy option-learning loop over steps [i0, i1).

    Per step: one on-policy TD(lam_primary) update of the primary value
    w_p, then for each task the general TD error plus critic and actor
    UWT updates with the task's importance ratio. The stopping value for
    reward-respecting tasks uses the primary weights already updated this
    step; the stopping decision uses the task critic before its update.
    """
    n_tasks = W.shape[0]
    for i in range(i0, i1):
        s = int(s_arr[i])
        a = int(a_arr[i])
        r = float(r_arr[i])
        s2 = int(s2_arr[i])
        terminal = s2 < 0

        # primary value, on-policy (rho = 1)
        v = w_p[s]
        v2 = 0.0 if terminal else w_p[s2]
        beta_p = 1.0 if terminal else 0.0
        delta_p = r + gamma * (1.0 - beta_p) * v2 - v
        ad = alpha_primary * delta_p
        if lam_primary == 0.0:
            w_p[s] = w_p[s] + ad
        else:
            e_p[s] = e_p[s] + 1.0
            w_p += ad * e_p
            e_p *= gamma * lam_primary * (1.0 - beta_p)

        base = 4 * s
        for t in range(n_tasks):
            # softmax policy of task t at s (max-subtracted)
            p0 = TH[t, base]
            p1 = TH[t, base + 1]
            p2 = TH[t, base + 2]
            p3 = TH[t, base + 3]
            m = p0
            if p1 > m:
                m = p1
            if p2 > m:
                m = p2
            if p3 > m:
                m = p3
            x0 = exp(p0 - m)
            x1 = exp(p1 - m)
            x2 = exp(p2 - m)
            x3 = exp(p3 - m)
            zsum = x0 + x1 + x2 + x3
            if a == 0:
                xa = x0
            elif a == 1:
                xa = x1
            elif a == 2:
                xa = x2
            else:
                xa = x3
            pia = xa / zsum
            rho = pia * 4.0  # mu = 1/4 exactly

            if terminal:
                z = 0.0
                beta = 1.0
            else:
                if zmode[t] == 0:
                    z = zwbar[t] if s2 == ztgt[t] else w_p[s2]
                else:
                    z = zstatic[t, s2]
                if bmode[t] == 0:
                    beta = 1.0 if z >= W[t, s2] else 0.0
                else:
                    beta = stopmask[t, s2]

            c = r if cmode[t] == 0 else cconst[t]
            v = W[t, s]
            v2 = 0.0 if terminal else W[t, s2]
            delta = c + beta * z + gamma * (1.0 - beta) * v2 - v

            ad = alpha * delta
            if lam == 0.0:
                W[t, s] = W[t, s] + ad * rho
            else:
                old = E[t, s]
                E[t] *= rho
                E[t, s] = rho * (old + 1.0)
                W[t] += ad * E[t]
                E[t] *= gamma * lam * (1.0 - beta)

            adp = alpha_prime * delta
            if lam_prime == 0.0:
                g = -(x0 / zsum)
                if a == 0:
                    g = 1.0 + g
                TH[t, base] = TH[t, base] + adp * (rho * g)
                g = -(x1 / zsum)
                if a == 1:
                    g = 1.0 + g
                TH[t, base + 1] = TH[t, base + 1] + adp * (rho * g)
                g = -(x2 / zsum)
                if a == 2:
                    g = 1.0 + g
                TH[t, base + 2] = TH[t, base + 2] + adp * (rho * g)
                g = -(x3 / zsum)
                if a == 3:
                    g = 1.0 + g
                TH[t, base + 3] = TH[t, base + 3] + adp * (rho * g)
            else:
                o0 = ETH[t, base]
                o1 = ETH[t, base + 1]
                o2 = ETH[t, base + 2]
                o3 = ETH[t, base + 3]
                ETH[t] *= rho
                g = -(x0 / zsum)
                if a == 0:
                    g = 1.0 + g
                ETH[t, base] = rho * (o0 + g)
                g = -(x1 / zsum)
                if a == 1:
                    g = 1.0 + g
                ETH[t, base + 1] = rho * (o1 + g)
                g = -(x2 / zsum)
                if a == 2:
                    g = 1.0 + g
                ETH[t, base + 2] = rho * (o2 + g)
                g = -(x3 / zsum)
                if a == 3:
                    g = 1.0 + g
                ETH[t, base + 3] = rho * (o3 + g)
                TH[t] += adp * ETH[t]
                ETH[t] *= gamma * lam_prime * (1.0 - beta)


def model_learning_steps(s_arr, a_arr, r_arr, s2_arr, i0, i1, gamma,
                         alpha_r, alpha_p, lam, literal,
                         pi_tab, beta_tab, WR, ER, NT, ETn):
    """Advance the per-option reward/transition model loop over [i0, i1).

    NT[o, s, :] is the predicted discounted next-feature vector from state
    s (the transpose of the d x d weight matrix). ``literal`` selects the
    double-discounted recursion variant instead of the corrected one.
    """
    n_opt = WR.shape[0]
    for i in range(i0, i1):
        s = int(s_arr[i])
        a = int(a_arr[i])
        r = float(r_arr[i])
        s2 = int(s2_arr[i])
        terminal = s2 < 0
        for o in range(n_opt):
            rho = pi_tab[o, s, a] * 4.0
            if rho == 0.0:
                if lam != 0.0:
                    ER[o].fill(0.0)
                    ETn[o].fill(0.0)
                continue
            beta = 1.0 if terminal else beta_tab[o, s2]

            # reward part
            vr = WR[o, s]
            vr2 = 0.0 if terminal else WR[o, s2]
            if literal:
                vr2 = gamma * vr2
            delta_r = r + gamma * (1.0 - beta) * vr2 - vr
            ad = alpha_r * delta_r
            if lam == 0.0:
                WR[o, s] = WR[o, s] + ad * rho
            else:
                old = ER[o, s]
                ER[o] *= rho
                ER[o, s] = rho * (old + 1.0)
                WR[o] += ad * ER[o]
                ER[o] *= gamma * lam * (1.0 - beta)

            # transition part: all output components at once
            g1mb = gamma * (1.0 - beta)
            if terminal:
                delta_vec = -NT[o, s]
            else:
                if literal:
                    cont = g1mb * (gamma * NT[o, s2])
                else:
                    cont = g1mb * NT[o, s2]
                cont[s2] = beta * gamma + cont[s2]
                delta_vec = cont - NT[o, s]
            if lam == 0.0:
                NT[o, s] += (alpha_p * delta_vec) * rho
            else:
                old_row = ETn[o, s].copy()
                ETn[o] *= rho
                ETn[o, s] = rho * (old_row + 1.0)
                NT[o] += ETn[o] * (alpha_p * delta_vec)
                ETn[o] *= gamma * lam * (1.0 - beta)


def avi_steps(idx, k0, k1, alpha, WRm, NTm, w):
    """Approximate value iteration updates over sampled states [k0, k1).

    Menu models: WRm[o, s] reward part, NTm[o, s, :] discounted
    next-feature part. Each update assigns toward the max backed-up value.
    """
    for k in range(k0, k1):
        s = int(idx[k])
        b = WRm[:, s] + NTm[:, s, :] @ w
        m = float(np.max(b))
        w[s] = w[s] + alpha * (m - w[s])
