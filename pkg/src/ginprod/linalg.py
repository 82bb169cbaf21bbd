"""Complex dense linear algebra at hardware or software float precision.

The working type is a numpy array: ``complex128`` when the precision context
asks for 53 mantissa bits, otherwise an object array of ``gmpy2.mpc`` values.
Matrices stay small (the width of a profile), so the object path's Python-level
arithmetic is acceptable; the 53-bit path routes through the jitted kernels in
``_accel``.

Deep products lose singular values below ``eps * sigma_max`` no matter how the
SVD is computed, so ``product_log_spectrum`` reports how many of the returned
values sit above that floor (``reliable_count``) and a helper suggests the
mantissa budget a profile needs for its k-th value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from . import _accel, specfun
from .errors import NumericalError, ShapeError, DomainError

_JACOBI_MAX_SWEEPS = 30
# one-sided Jacobi at 53 bits is O(n^3) per sweep with a large constant; past
# this width LAPACK's SVD is used for product spectra (values above the
# eps*sigma_max floor are equally trustworthy either way)
_LAPACK_CUTOVER = 48


@dataclass(frozen=True)
class PrecisionContext:
    """mantissa_bits == 53 selects hardware arithmetic, larger values gmpy2."""

    mantissa_bits: int = 53

    def __post_init__(self):
        if self.mantissa_bits < 53:
            raise DomainError("mantissa_bits must be >= 53")

    @property
    def native(self) -> bool:
        return self.mantissa_bits == 53

    @property
    def eps(self) -> float:
        return 2.0 ** (1 - self.mantissa_bits)

    @property
    def log_eps(self) -> float:
        return (1 - self.mantissa_bits) * math.log(2.0)

    def jacobi_tol(self) -> float:
        # 1e2 * eps: the tightest off-cosine reachable above inner-product
        # rounding noise at this precision
        return 100.0 * self.eps


def to_working(a, ctx: PrecisionContext):
    """Convert a complex128 array to the context's working representation."""
    a = np.asarray(a, dtype=complex)
    if ctx.native:
        return a.copy()
    with gmpy2.local_context(gmpy2.context(), precision=ctx.mantissa_bits):
        out = np.empty(a.shape, dtype=object)
        flat = a.ravel()
        oflat = out.ravel()
        for i, z in enumerate(flat):
            oflat[i] = gmpy2.mpc(z)
    return out


def _norm2_col(x):
    acc = sum((v * v.conjugate()).real for v in x)
    return acc


def _sqrt(v, native):
    return math.sqrt(v) if native else gmpy2.sqrt(v)


def householder_qr(a, ctx: PrecisionContext | None = None):
    """Thin Householder QR with nonnegative real R diagonal.

    ``a`` may be complex128 or a gmpy2 object array; rows >= cols required.
    Returns ``(Q, R)`` with Q (m x n) having orthonormal columns and R (n x n)
    upper triangular.
    """
    ctx = ctx or PrecisionContext()
    native = a.dtype != object
    m, n = a.shape
    if m < n:
        raise ShapeError(f"householder_qr needs rows >= cols, got {m} x {n}")

    def run(r):
        reflectors = []
        for j in range(n):
            x = r[j:, j].copy()
            normx2 = _norm2_col(x)
            normx = _sqrt(normx2, native)
            if normx == 0:
                reflectors.append(None)
                continue
            alpha = x[0]
            aabs = abs(alpha)
            phase = alpha / aabs if aabs != 0 else (1.0 if native else gmpy2.mpc(1))
            v = x
            v[0] = v[0] + phase * normx
            vnorm2 = _norm2_col(v)
            beta = 2.0 / vnorm2
            w = np.dot(np.conj(v), r[j:, j:])
            r[j:, j:] = r[j:, j:] - beta * np.outer(v, w)
            reflectors.append((j, v, beta))
        return reflectors

    r = a.copy() if native else a.copy()
    reflectors = run(r)

    # apply reflectors in reverse to thin identity to form Q
    if native:
        q = np.zeros((m, n), dtype=complex)
    else:
        q = np.empty((m, n), dtype=object)
        q[:] = gmpy2.mpc(0)
    for j in range(n):
        q[j, j] = 1.0 if native else gmpy2.mpc(1)
    for refl in reversed(reflectors):
        if refl is None:
            continue
        j, v, beta = refl
        w = np.dot(np.conj(v), q[j:, :])
        q[j:, :] = q[j:, :] - beta * np.outer(v, w)

    # phase-fix: make diag(R) real nonnegative
    r = np.triu(r[:n, :])
    for j in range(n):
        d = r[j, j]
        dab = abs(d)
        if dab != 0:
            ph = d / dab
            r[j, j:] = r[j, j:] * ph.conjugate()
            q[:, j] = q[:, j] * ph
            # kill rounding residue on the diagonal's imaginary part
            r[j, j] = dab
    return q, r


def _jacobi_object(a, tol, max_sweeps, v=None):
    rows, n = a.shape
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = _norm2_col(a[:, p])
                aqq = _norm2_col(a[:, q])
                apq = sum(a[i, p].conjugate() * a[i, q] for i in range(rows))
                denom = gmpy2.sqrt(app * aqq)
                if denom == 0:
                    continue
                cosine = abs(apq) / denom
                if cosine > off:
                    off = float(cosine)
                if cosine <= tol:
                    continue
                phi_mag = abs(apq)
                eiphi = apq / phi_mag
                tau = (aqq - app) / (2 * phi_mag)
                if tau != 0:
                    t = gmpy2.sign(tau) / (abs(tau) + gmpy2.sqrt(1 + tau * tau))
                else:
                    t = gmpy2.mpfr(1)
                c = 1 / gmpy2.sqrt(1 + t * t)
                s = c * t
                ap_new = c * a[:, p] - s * eiphi.conjugate() * a[:, q]
                aq_new = s * eiphi * a[:, p] + c * a[:, q]
                a[:, p] = ap_new
                a[:, q] = aq_new
                if v is not None:
                    vp_new = c * v[:, p] - s * eiphi.conjugate() * v[:, q]
                    vq_new = s * eiphi * v[:, p] + c * v[:, q]
                    v[:, p] = vp_new
                    v[:, q] = vq_new
        if off <= tol:
            return sweep + 1
    return -1


def jacobi_svd(a, ctx: PrecisionContext | None = None, want_uv: bool = False):
    """One-sided Jacobi SVD; singular values descending.

    Operates on column inner products, so high relative accuracy survives
    strong column scaling.  Raises ``NumericalError`` if 30 sweeps do not
    reach the off-cosine tolerance.
    """
    ctx = ctx or PrecisionContext()
    native = a.dtype != object
    if a.shape[0] < a.shape[1]:
        a = np.conj(a.T)
    b = a.copy()
    m, n = b.shape
    tol = ctx.jacobi_tol()

    vmat = None
    if native:
        if want_uv:
            vmat = np.eye(n, dtype=complex)
            sweeps = _jacobi_with_v_native(b, tol, _JACOBI_MAX_SWEEPS, vmat)
        else:
            sweeps = _accel.jacobi_sweeps(b, tol, _JACOBI_MAX_SWEEPS)
    else:
        if want_uv:
            vmat = np.empty((n, n), dtype=object)
            vmat[:] = gmpy2.mpc(0)
            for i in range(n):
                vmat[i, i] = gmpy2.mpc(1)
        with gmpy2.local_context(gmpy2.context(), precision=ctx.mantissa_bits):
            sweeps = _jacobi_object(b, tol, _JACOBI_MAX_SWEEPS, vmat)
    if sweeps < 0:
        raise NumericalError(
            f"one-sided Jacobi did not converge in {_JACOBI_MAX_SWEEPS} sweeps "
            f"(tol {tol:g}, shape {m}x{n})")

    if native:
        sigma = np.sqrt(np.sum((b * b.conj()).real, axis=0))
        order = np.argsort(sigma)[::-1]
        sigma = sigma[order]
        if not want_uv:
            return sigma
        u = b[:, order]
        nz = sigma > 0
        u[:, nz] = u[:, nz] / sigma[nz]
        return sigma, u, vmat[:, order]

    sigma = np.array([gmpy2.sqrt(_norm2_col(b[:, j])) for j in range(n)], dtype=object)
    order = sorted(range(n), key=lambda j: sigma[j], reverse=True)
    sigma = sigma[order]
    if not want_uv:
        return sigma
    u = b[:, order]
    for j in range(n):
        if sigma[j] > 0:
            u[:, j] = u[:, j] / sigma[j]
    return sigma, u, vmat[:, order]


def _jacobi_with_v_native(a, tol, max_sweeps, v):
    rows, n = a.shape
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = np.vdot(a[:, p], a[:, p]).real
                aqq = np.vdot(a[:, q], a[:, q]).real
                apq = np.vdot(a[:, p], a[:, q])
                denom = math.sqrt(app * aqq)
                if denom == 0.0:
                    continue
                cosine = abs(apq) / denom
                off = max(off, cosine)
                if cosine <= tol:
                    continue
                phi = np.angle(apq)
                tau = (aqq - app) / (2.0 * abs(apq))
                t = np.sign(tau) / (abs(tau) + math.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                eiphi = np.exp(1j * phi)
                for mat in (a, v):
                    mp_new = c * mat[:, p] - s * np.conj(eiphi) * mat[:, q]
                    mq_new = s * eiphi * mat[:, p] + c * mat[:, q]
                    mat[:, p] = mp_new
                    mat[:, q] = mq_new
        if off <= tol:
            return sweep + 1
    return -1


@dataclass
class LogSpectrum:
    """2 ln sigma_i of a product, descending, plus the trust bookkeeping."""

    values: np.ndarray
    reliable_count: int


def _validate_chain(factors):
    if len(factors) == 0:
        raise DomainError("empty factor list")
    for j in range(1, len(factors)):
        if factors[j].shape[1] != factors[j - 1].shape[0]:
            raise ShapeError(
                f"factor {j} has {factors[j].shape[1]} cols but factor {j - 1} "
                f"has {factors[j - 1].shape[0]} rows")


def product_log_spectrum(factors, mode: str = "dense",
                         ctx: PrecisionContext | None = None) -> LogSpectrum:
    """Log-squared singular values {2 ln sigma_i} of X_M ... X_1, descending.

    dense: renormalized left-to-right accumulation, then SVD; values below
    eps * sigma_max are untrustworthy and excluded from ``reliable_count``.
    qr_sweep: per-step thin QR, 2 * sum(log diag R) per position; exact for
    the aggregate log-determinant, approximate per position at finite depth.
    """
    ctx = ctx or PrecisionContext()
    factors = [np.asarray(f) for f in factors]
    _validate_chain(factors)
    if mode == "dense":
        return _dense_log_spectrum(factors, ctx)
    if mode == "qr_sweep":
        return _qr_sweep_log_spectrum(factors, ctx)
    raise DomainError(f"unknown mode {mode!r}")


def _dense_log_spectrum(factors, ctx):
    n_out = min(factors[-1].shape[0], factors[0].shape[1])
    if ctx.native:
        shapes = {f.shape for f in factors}
        if len(shapes) == 1 and len(factors) > 1:
            stack = np.ascontiguousarray(
                np.stack([f.astype(np.complex128) for f in factors]))
            acc, logscale = _accel.chain_accumulate(stack)
        else:
            acc = factors[0].astype(np.complex128)
            logscale = 0.0
            for f in factors[1:]:
                acc = f.astype(np.complex128) @ acc
                big = np.abs(acc).max()
                acc /= big
                logscale += math.log(big)
        if min(acc.shape) > _LAPACK_CUTOVER:
            sigma = np.linalg.svd(acc, compute_uv=False)
        else:
            sigma = jacobi_svd(acc, ctx)
        with np.errstate(divide="ignore"):
            vals = 2.0 * (np.log(sigma) + logscale)
    else:
        with gmpy2.local_context(gmpy2.context(), precision=ctx.mantissa_bits):
            acc = to_working(factors[0], ctx)
            logscale = gmpy2.mpfr(0)
            for f in factors[1:]:
                acc = np.dot(to_working(f, ctx), acc)
                big = max(abs(v) for v in acc.ravel())
                acc = acc / big
                logscale += gmpy2.log(big)
            sigma = jacobi_svd(acc, ctx)
            vals = np.array(
                [2.0 * float(gmpy2.log(s) + logscale) if s > 0 else -math.inf
                 for s in sigma], dtype=float)
    vals = np.sort(vals)[::-1][:n_out]
    floor = vals[0] + 2.0 * ctx.log_eps
    reliable = int(np.sum(vals > floor))
    return LogSpectrum(values=vals, reliable_count=reliable)


def _qr_sweep_log_spectrum(factors, ctx):
    n = factors[0].shape[1]

    def sweep(chain, q0):
        q = q0
        acc = np.zeros(n, dtype=float)
        for f in chain:
            b = f if q is None else np.dot(f, q)
            q, r = householder_qr(b, ctx)
            for i in range(n):
                d = r[i, i].real if ctx.native else r[i, i]
                if d == 0:
                    acc[i] = -math.inf
                else:
                    acc[i] += math.log(d) if ctx.native else float(gmpy2.log(d))
        return q, acc

    with gmpy2.local_context(gmpy2.context(), precision=ctx.mantissa_bits):
        chain = [to_working(f, ctx) for f in factors]
        # warm-up pass on the adjoint chain (restricted to n directions)
        # estimates the right singular frame; starting the forward sweep there
        # removes the O(1) basis-overlap offset in the accumulated diagonals
        adj = [np.conj(f.T) for f in reversed(chain)]
        adj[0] = adj[0][:, :n]
        v_est, _ = sweep(adj, None)
        _, acc = sweep(chain, v_est)
    vals = np.sort(2.0 * acc)[::-1]
    return LogSpectrum(values=vals, reliable_count=len(vals))


def suggest_precision_bits(profile, k: int) -> int:
    """Mantissa budget for resolving the k-th largest value of a profile.

    Uses the expected log-sigma gap between the top and the k-th position
    (digamma sums); 53 suffices for k = 1.
    """
    if k < 1 or k > profile.n:
        raise DomainError(f"k must be in [1, {profile.n}]")
    if k == 1:
        return 53
    spread = 0.0
    for vj in profile.v_full:
        spread += specfun.digamma(profile.n + vj) - specfun.digamma(profile.n + vj + 1 - k)
    spread *= 0.5  # ln sigma units
    return max(53, int(math.ceil(2.0 * spread / math.log(2.0))) + 64)
