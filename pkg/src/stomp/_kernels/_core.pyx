# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Twin of ``pyk.py``: the sequential learning loops here perform the same
float64 operations in the same order as the pure-Python backend, so outputs
are bit-identical (asserted by tests). Keep both files in step when editing.
The AVI kernel accumulates its dot product left to right; numpy's reduction
order may differ, so that kernel matches the fallback to ~1e-10, not bitwise.
"""

from libc.math cimport exp
from libc.stdint cimport int64_t

import numpy as np

BACKEND = "cython"


def sample_steps(double[:, :, ::1] t_cum, int64_t[:, :, ::1] t_next,
                 double[:, :, ::1] t_rew, int64_t[:, ::1] t_n,
                 int64_t start, double[:, ::1] u01):
    cdef Py_ssize_t n = u01.shape[0]
    s_np = np.empty(n, dtype=np.int64)
    a_np = np.empty(n, dtype=np.int64)
    r_np = np.empty(n)
    s2_np = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] s_arr = s_np
    cdef int64_t[::1] a_arr = a_np
    cdef double[::1] r_arr = r_np
    cdef int64_t[::1] s2_arr = s2_np
    cdef Py_ssize_t i
    cdef int64_t cur = start, a, k, last, nxt
    cdef double u
    for i in range(n):
        a = <int64_t>(u01[i, 0] * 4.0)
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
        nxt = t_next[cur, a, k]
        s2_arr[i] = nxt
        cur = nxt if nxt >= 0 else start
    return s_np, a_np, r_np, s2_np


def option_learning_steps(int64_t[::1] s_arr, int64_t[::1] a_arr,
                          double[::1] r_arr, int64_t[::1] s2_arr,
                          Py_ssize_t i0, Py_ssize_t i1, double gamma,
                          double alpha_primary, double lam_primary,
                          double[::1] w_p, double[::1] e_p,
                          double alpha, double lam,
                          double alpha_prime, double lam_prime,
                          int64_t[::1] cmode, double[::1] cconst,
                          int64_t[::1] zmode, int64_t[::1] ztgt,
                          double[::1] zwbar, double[:, ::1] zstatic,
                          int64_t[::1] bmode, double[:, ::1] stopmask,
                          double[:, ::1] W, double[:, ::1] E,
                          double[:, ::1] TH, double[:, ::1] ETH):
    cdef Py_ssize_t n_tasks = W.shape[0]
    cdef Py_ssize_t d = w_p.shape[0]
    cdef Py_ssize_t dp = TH.shape[1]
    cdef Py_ssize_t i, t, j
    cdef int64_t s, a, s2, base
    cdef bint terminal
    cdef double r, v, v2, beta_p, delta_p, ad, adp, decay
    cdef double p0, p1, p2, p3, m, x0, x1, x2, x3, zsum, xa, pia, rho
    cdef double z, beta, c, delta, g, old, o0, o1, o2, o3

    for i in range(i0, i1):
        s = s_arr[i]
        a = a_arr[i]
        r = r_arr[i]
        s2 = s2_arr[i]
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
            for j in range(d):
                w_p[j] += ad * e_p[j]
            decay = gamma * lam_primary * (1.0 - beta_p)
            for j in range(d):
                e_p[j] *= decay

        base = 4 * s
        for t in range(n_tasks):
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
            rho = pia * 4.0

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
                for j in range(d):
                    E[t, j] *= rho
                E[t, s] = rho * (old + 1.0)
                for j in range(d):
                    W[t, j] += ad * E[t, j]
                decay = gamma * lam * (1.0 - beta)
                for j in range(d):
                    E[t, j] *= decay

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
                for j in range(dp):
                    ETH[t, j] *= rho
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
                for j in range(dp):
                    TH[t, j] += adp * ETH[t, j]
                decay = gamma * lam_prime * (1.0 - beta)
                for j in range(dp):
                    ETH[t, j] *= decay


def model_learning_steps(int64_t[::1] s_arr, int64_t[::1] a_arr,
                         double[::1] r_arr, int64_t[::1] s2_arr,
                         Py_ssize_t i0, Py_ssize_t i1, double gamma,
                         double alpha_r, double alpha_p, double lam,
                         bint literal,
                         double[:, :, ::1] pi_tab, double[:, ::1] beta_tab,
                         double[:, ::1] WR, double[:, ::1] ER,
                         double[:, :, ::1] NT, double[:, :, ::1] ETn):
    cdef Py_ssize_t n_opt = WR.shape[0]
    cdef Py_ssize_t d = WR.shape[1]
    cdef Py_ssize_t i, o, j, q
    cdef int64_t s, a, s2
    cdef bint terminal
    cdef double r, rho, beta, vr, vr2, delta_r, ad, g1mb, cj, dj, old, decay
    cdef double etn_old

    for i in range(i0, i1):
        s = s_arr[i]
        a = a_arr[i]
        r = r_arr[i]
        s2 = s2_arr[i]
        terminal = s2 < 0
        for o in range(n_opt):
            rho = pi_tab[o, s, a] * 4.0
            if rho == 0.0:
                if lam != 0.0:
                    for j in range(d):
                        ER[o, j] = 0.0
                    for j in range(d):
                        for q in range(d):
                            ETn[o, j, q] = 0.0
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
                for j in range(d):
                    ER[o, j] *= rho
                ER[o, s] = rho * (old + 1.0)
                for j in range(d):
                    WR[o, j] += ad * ER[o, j]
                decay = gamma * lam * (1.0 - beta)
                for j in range(d):
                    ER[o, j] *= decay

            # transition part
            g1mb = gamma * (1.0 - beta)
            if lam == 0.0:
                if terminal:
                    for j in range(d):
                        dj = -NT[o, s, j]
                        NT[o, s, j] += (alpha_p * dj) * rho
                else:
                    for j in range(d):
                        if literal:
                            cj = g1mb * (gamma * NT[o, s2, j])
                        else:
                            cj = g1mb * NT[o, s2, j]
                        if j == s2:
                            cj = beta * gamma + cj
                        dj = cj - NT[o, s, j]
                        NT[o, s, j] += (alpha_p * dj) * rho
            else:
                for j in range(d):
                    etn_old = ETn[o, s, j]
                    for q in range(d):
                        ETn[o, q, j] *= rho
                    ETn[o, s, j] = rho * (etn_old + 1.0)
                    if terminal:
                        dj = -NT[o, s, j]
                    else:
                        if literal:
                            cj = g1mb * (gamma * NT[o, s2, j])
                        else:
                            cj = g1mb * NT[o, s2, j]
                        if j == s2:
                            cj = beta * gamma + cj
                        dj = cj - NT[o, s, j]
                    ad = alpha_p * dj
                    for q in range(d):
                        NT[o, q, j] += ad * ETn[o, q, j]
                    decay = gamma * lam * (1.0 - beta)
                    for q in range(d):
                        ETn[o, q, j] *= decay


def avi_steps(int64_t[::1] idx, Py_ssize_t k0, Py_ssize_t k1, double alpha,
              double[:, ::1] WRm, double[:, :, ::1] NTm, double[::1] w):
    cdef Py_ssize_t n_opt = WRm.shape[0]
    cdef Py_ssize_t d = w.shape[0]
    cdef Py_ssize_t k, o, j
    cdef int64_t s
    cdef double acc, b, m
    for k in range(k0, k1):
        s = idx[k]
        m = 0.0
        for o in range(n_opt):
            acc = 0.0
            for j in range(d):
                acc += NTm[o, s, j] * w[j]
            b = WRm[o, s] + acc
            if o == 0 or b > m:
                m = b
        w[s] = w[s] + alpha * (m - w[s])
