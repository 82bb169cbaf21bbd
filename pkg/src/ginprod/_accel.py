"""Hot numeric kernels: numba-jitted with pure-numpy fallbacks.

The jitted paths cover the two inner loops that dominate Monte Carlo runtime
at hardware precision: renormalized accumulation of uniform matrix chains and
the one-sided Jacobi sweep.  Set ``GINPROD_DISABLE_NUMBA=1`` to force the
numpy fallbacks (the benchmark in ``benchmarks/`` compares both).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("GINPROD_DISABLE_NUMBA", "0") not in ("", "0")

try:
    if _DISABLED:
        raise ImportError("numba disabled by GINPROD_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


USING_NUMBA = HAVE_NUMBA


def chain_accumulate_numpy(stack):
    """Left-to-right product of ``stack[j]`` with max-entry renormalization.

    Returns ``(acc, logscale)`` with the true product equal to
    ``exp(logscale) * acc``.
    """
    acc = stack[0].copy()
    logscale = 0.0
    for j in range(1, stack.shape[0]):
        acc = stack[j] @ acc
        big = np.abs(acc).max()
        acc /= big
        logscale += np.log(big)
    return acc, logscale


@njit(cache=True)
def _chain_accumulate_jit(stack):  # pragma: no cover - compiled
    m = stack.shape[0]
    acc = stack[0].copy()
    logscale = 0.0
    for j in range(1, m):
        acc = stack[j] @ acc
        big = 0.0
        for r in range(acc.shape[0]):
            for c in range(acc.shape[1]):
                v = abs(acc[r, c])
                if v > big:
                    big = v
        acc /= big
        logscale += np.log(big)
    return acc, logscale


def jacobi_sweeps_numpy(a, tol, max_sweeps):
    """One-sided Jacobi column orthogonalization, in place.

    Returns the number of sweeps used, or -1 if ``max_sweeps`` was exhausted
    with the largest column-pair cosine still above ``tol``.
    """
    n = a.shape[1]
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = np.vdot(a[:, p], a[:, p]).real
                aqq = np.vdot(a[:, q], a[:, q]).real
                apq = np.vdot(a[:, p], a[:, q])
                denom = np.sqrt(app * aqq)
                if denom == 0.0:
                    continue
                cosine = abs(apq) / denom
                if cosine > off:
                    off = cosine
                if cosine <= tol:
                    continue
                phi = np.angle(apq)
                tau = (aqq - app) / (2.0 * abs(apq))
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                eiphi = np.exp(1j * phi)
                ap_new = c * a[:, p] - s * np.conj(eiphi) * a[:, q]
                aq_new = s * eiphi * a[:, p] + c * a[:, q]
                a[:, p] = ap_new
                a[:, q] = aq_new
        if off <= tol:
            return sweep + 1
    return -1


@njit(cache=True)
def _jacobi_sweeps_jit(a, tol, max_sweeps):  # pragma: no cover - compiled
    rows, n = a.shape
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = 0.0
                aqq = 0.0
                apq = 0.0 + 0.0j
                for i in range(rows):
                    vp = a[i, p]
                    vq = a[i, q]
                    app += vp.real * vp.real + vp.imag * vp.imag
                    aqq += vq.real * vq.real + vq.imag * vq.imag
                    apq += np.conj(vp) * vq
                denom = np.sqrt(app * aqq)
                if denom == 0.0:
                    continue
                cosine = abs(apq) / denom
                if cosine > off:
                    off = cosine
                if cosine <= tol:
                    continue
                phi = np.angle(apq)
                tau = (aqq - app) / (2.0 * abs(apq))
                if tau != 0.0:
                    t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau))
                else:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                eiphi = np.cos(phi) + 1j * np.sin(phi)
                for i in range(rows):
                    vp = a[i, p]
                    vq = a[i, q]
                    a[i, p] = c * vp - s * np.conj(eiphi) * vq
                    a[i, q] = s * eiphi * vp + c * vq
        if off <= tol:
            return sweep + 1
    return -1


if USING_NUMBA:
    chain_accumulate = _chain_accumulate_jit
    jacobi_sweeps = _jacobi_sweeps_jit
else:
    chain_accumulate = chain_accumulate_numpy
    jacobi_sweeps = jacobi_sweeps_numpy
