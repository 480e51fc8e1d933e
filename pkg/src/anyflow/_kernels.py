"""Compiled inner loops for the anytime flow on quadratic programs.

One budget iteration advances the projected saddle flow by ``h`` seconds of
virtual time through the backward-Euler resolvent

    z  solves  z + tau*grad_x B(z, w(z)) = x,      tau = sigma*h
    lam+_i = max(0, lam_i - tau*log a_i(z))        (= w_i(z) clamped)

which is the resolvent of the monotone saddle operator plus the normal cone
of the nonnegative orthant.  The resolvent subproblem is the strongly convex
minimization of

    Psi(z) = 0.5*||z - x||^2 + tau*f0(z) + 0.5*sum_i max(0, w_i(z))^2

with ``w_i(z) = lam_i - tau*log(-beta*(f_i(z) + 1/beta) + 1)``, solved by a
semismooth Newton iteration kept strictly interior by a fraction-to-boundary
damping.  The log wall makes the minimizer strictly feasible, so every
accepted step satisfies the anytime-feasibility invariant by construction.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Newton termination: squared gradient-norm tolerance (relative to 1 + ||z||^2)
_GTOL_SQ = 1e-20
_STEP_TOL_SQ = 1e-24


@njit(cache=True)
def _chol_solve(M, b, d, p):
    """Cholesky-factor M in place (lower) and solve M d = b. False if not PD."""
    for j in range(p):
        s = M[j, j]
        for k in range(j):
            s -= M[j, k] * M[j, k]
        if s <= 0.0:
            return False
        M[j, j] = np.sqrt(s)
        for i in range(j + 1, p):
            s2 = M[i, j]
            for k in range(j):
                s2 -= M[i, k] * M[j, k]
            M[i, j] = s2 / M[j, j]
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= M[i, k] * d[k]
        d[i] = s / M[i, i]
    for i in range(p - 1, -1, -1):
        s = d[i]
        for k in range(i + 1, p):
            s -= M[k, i] * d[k]
        d[i] = s / M[i, i]
    return True


@njit(cache=True)
def _resolvent(H, q, G, hvec, x, lam, beta, tau, eps, max_newton,
               z, lam_out, f, a, w, g, d, M):
    """One resolvent step.  Writes z and lam_out; returns True on success."""
    p = x.shape[0]
    m = G.shape[0]
    for j in range(p):
        z[j] = x[j]
    converged = False
    for _ in range(max_newton):
        for i in range(m):
            s = -hvec[i]
            for j in range(p):
                s += G[i, j] * z[j]
            f[i] = s
            a[i] = -beta * (s + 1.0 / beta) + 1.0
            if a[i] <= 0.0:
                return False
            w[i] = lam[i] - tau * np.log(a[i])
        for j in range(p):
            acc = z[j] - x[j] + tau * q[j]
            for k in range(p):
                acc += tau * H[j, k] * z[k]
            g[j] = acc
        for i in range(m):
            if w[i] > 0.0:
                c = tau * w[i] * beta / a[i]
                for j in range(p):
                    g[j] += c * G[i, j]
        gn = 0.0
        zn = 0.0
        for j in range(p):
            gn += g[j] * g[j]
            zn += z[j] * z[j]
        if gn <= _GTOL_SQ * (1.0 + zn):
            converged = True
            break
        for j in range(p):
            for k in range(p):
                M[j, k] = tau * H[j, k]
            M[j, j] += 1.0
        for i in range(m):
            if w[i] > 0.0:
                c1 = tau * beta / a[i]
                coef = c1 * c1 + w[i] * tau * beta * beta / (a[i] * a[i])
                for j in range(p):
                    gij = G[i, j]
                    if gij != 0.0:
                        for k in range(p):
                            M[j, k] += coef * gij * G[i, k]
        for j in range(p):
            g[j] = -g[j]
        if not _chol_solve(M, g, d, p):
            return False
        alpha = 1.0
        for i in range(m):
            gd = 0.0
            for j in range(p):
                gd += G[i, j] * d[j]
            if gd > 0.0:
                am = 0.995 * (-f[i]) / gd
                if am < alpha:
                    alpha = am
        sn = 0.0
        for j in range(p):
            z[j] += alpha * d[j]
            sn += (alpha * d[j]) ** 2
        if sn <= _STEP_TOL_SQ * (1.0 + zn):
            converged = True
            break
    if not converged:
        return False
    for i in range(m):
        s = -hvec[i]
        for j in range(p):
            s += G[i, j] * z[j]
        if s >= -eps:
            return False
        ai = -beta * (s + 1.0 / beta) + 1.0
        if ai <= 0.0:
            return False
        v = lam[i] - tau * np.log(ai)
        lam_out[i] = v if v > 0.0 else 0.0
    return True


@njit(cache=True)
def run_steps(H, q, G, hvec, x, lam, beta, sigma, hstep, budget,
              eps, rho, max_bt, stall, max_newton):
    """Advance the flow ``budget`` iterations in place.

    Returns (accepted_count, last_step_accepted, stalled).  Stops early after
    ``stall`` consecutive rejected iterations.
    """
    p = x.shape[0]
    m = G.shape[0]
    z = np.empty(p)
    lam_out = np.empty(m)
    f = np.empty(m)
    a = np.empty(m)
    w = np.empty(m)
    g = np.empty(p)
    d = np.empty(p)
    M = np.empty((p, p))
    consec = 0
    accepted = 0
    last_ok = True
    for _ in range(budget):
        tau = sigma * hstep
        ok = False
        for _bt in range(max_bt + 1):
            if _resolvent(H, q, G, hvec, x, lam, beta, tau, eps, max_newton,
                          z, lam_out, f, a, w, g, d, M):
                ok = True
                break
            tau *= rho
        last_ok = ok
        if ok:
            for j in range(p):
                x[j] = z[j]
            for i in range(m):
                lam[i] = lam_out[i]
            accepted += 1
            consec = 0
        else:
            consec += 1
            if consec >= stall:
                return accepted, last_ok, True
    return accepted, last_ok, False
