"""Special functions: complex log-gamma, the psi family, Airy Ai, normal law.

Everything here is hand-rolled on top of Stirling/Bernoulli asymptotics with
upward recurrence shifts, so accuracy is uniform on the complex contours used
by the kernel integrators.  All entry points accept scalars or numpy arrays
and return matching shapes.

Branch policy for ``log_gamma``: principal branch for Re z >= 0.5; for
Re z < 0.5 the reflection formula is used, which returns *a* logarithm of
Gamma(z) (exponentiating always reproduces Gamma(z)).  Downstream code only
ever exponentiates sums of log-gammas, so branch offsets are immaterial.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

_LOG_2PI = math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)

# B_{2k} / (2k (2k-1)) for the log-gamma Stirling series, k = 1..8
_STIRLING_COEFFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)

# B_{2k} for the psi-family asymptotics, k = 1..7
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)

_GAMMA_SHIFT_RADIUS = 12.0
_PSI_SHIFT = 10.0


def _log_sin_pi(z):
    """log(sin(pi z)) evaluated without overflow for large |Im z|."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    upper = z.imag > 0.0
    # sin(pi z) = e^{-i pi z} (1 - e^{2 i pi z}) * (i/2)      for Im z > 0
    #           = e^{+i pi z} (1 - e^{-2 i pi z}) / (2 i)     for Im z <= 0
    zu = z[upper]
    out[upper] = (-1j * math.pi) * zu + np.log1p(-np.exp(2j * math.pi * zu)) \
        + (-math.log(2.0) + 0.5j * math.pi)
    zl = z[~upper]
    out[~upper] = (1j * math.pi) * zl + np.log1p(-np.exp(-2j * math.pi * zl)) \
        - (math.log(2.0) + 0.5j * math.pi)
    return out


def _stirling_log_gamma(z):
    """Stirling series; caller guarantees |z| >= shift radius, Re z > 0."""
    res = (z - 0.5) * np.log(z) - z + 0.5 * _LOG_2PI
    zinv = 1.0 / z
    z2 = zinv * zinv
    term = zinv
    acc = np.zeros_like(z)
    for c in _STIRLING_COEFFS:
        acc = acc + c * term
        term = term * z2
    return res + acc


def log_gamma(z):
    """Complex log Gamma(z).

    Raises ``DomainError`` on the poles z = 0, -1, -2, ...  Relative accuracy
    about 1e-13 for |z| <= 1e6 staying at least 1e-3 away from the poles.
    """
    zarr = np.asarray(z, dtype=complex)
    scalar = zarr.ndim == 0
    zf = np.atleast_1d(zarr).astype(complex).ravel()

    pole = (zf.imag == 0.0) & (zf.real <= 0.0) & (zf.real == np.round(zf.real))
    if pole.any():
        bad = zf[pole][0]
        raise DomainError(f"log_gamma pole at z = {bad}")

    refl = zf.real < 0.5
    w = np.where(refl, 1.0 - zf, zf)

    # upward recurrence until |w| >= radius (Re w >= 0.5 so ~12 steps max)
    shift = np.zeros_like(w)
    for _ in range(int(_GAMMA_SHIFT_RADIUS) + 2):
        mask = np.abs(w) < _GAMMA_SHIFT_RADIUS
        if not mask.any():
            break
        shift[mask] += np.log(w[mask])
        w[mask] += 1.0

    res = _stirling_log_gamma(w) - shift
    if refl.any():
        res_refl = _LOG_PI - _log_sin_pi(zf[refl]) - res[refl]
        res[refl] = res_refl

    res = res.reshape(np.atleast_1d(zarr).shape)
    return complex(res[0]) if scalar else res.reshape(zarr.shape)


def _psi_shift_eval(x, asymptotic, rec_term, upward_sign):
    """Shared shift-then-asymptotic driver for the psi family (real x > 0)."""
    xarr = np.asarray(x, dtype=float)
    scalar = xarr.ndim == 0
    xf = np.atleast_1d(xarr).astype(float).ravel()
    if (xf <= 0.0).any():
        raise DomainError(f"psi-family argument must be > 0, got {xf[xf <= 0.0][0]}")

    acc = np.zeros_like(xf)
    w = xf.copy()
    for _ in range(int(_PSI_SHIFT) + 1):
        mask = w < _PSI_SHIFT
        if not mask.any():
            break
        acc[mask] += upward_sign * rec_term(w[mask])
        w[mask] += 1.0
    res = asymptotic(w) + acc
    return float(res[0]) if scalar else res.reshape(xarr.shape)


def digamma(x):
    """psi(x) for real x > 0, absolute accuracy ~1e-13."""

    def asym(w):
        winv = 1.0 / w
        w2 = winv * winv
        res = np.log(w) - 0.5 * winv
        term = w2
        for k, b in enumerate(_BERNOULLI, start=1):
            res = res - b / (2.0 * k) * term
            term = term * w2
        return res

    return _psi_shift_eval(x, asym, lambda w: 1.0 / w, upward_sign=-1.0)


def trigamma(x):
    """psi'(x) for real x > 0, absolute accuracy ~1e-13."""

    def asym(w):
        winv = 1.0 / w
        w2 = winv * winv
        res = winv + 0.5 * w2
        term = winv * w2
        for b in _BERNOULLI:
            res = res + b * term
            term = term * w2
        return res

    return _psi_shift_eval(x, asym, lambda w: 1.0 / (w * w), upward_sign=1.0)


def tetragamma(x):
    """psi''(x) for real x > 0, absolute accuracy ~1e-12."""

    def asym(w):
        winv = 1.0 / w
        w2 = winv * winv
        res = -w2 - winv * w2
        term = w2 * w2
        for k, b in enumerate(_BERNOULLI, start=1):
            res = res - (2.0 * k + 1.0) * b * term
            term = term * w2
        return res

    return _psi_shift_eval(x, asym, lambda w: 2.0 / (w * w * w), upward_sign=-1.0)


# --- Airy Ai ---------------------------------------------------------------

_AIRY_SERIES_LO = -7.5     # Maclaurin cancellation exceeds 1e-11 abs below this
_AIRY_SERIES_HI = 5.0      # decaying asymptotics reach 1e-11 abs above this
_AIRY_MIN = -40.0
_AIRY_MAX = 200.0
_AIRY_TERMS = 90

# Ai(0) = 3^{-2/3}/Gamma(2/3), Ai'(0) = -3^{-1/3}/Gamma(1/3)
_AI0 = 0.3550280538878172
_AIP0 = -0.2588194037928068


def _airy_uv(nterms):
    u = [1.0]
    v = [1.0]
    for k in range(1, nterms):
        uk = u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1))
        u.append(uk)
        v.append(uk * (6 * k + 1) / (1 - 6 * k))
    return np.array(u), np.array(v)


_AIRY_U, _AIRY_V = _airy_uv(40)


def _airy_series(x):
    """Maclaurin evaluation of (Ai, Ai') via the f/g solution pair."""
    f = np.ones_like(x)
    g = x.copy()
    fp = np.zeros_like(x)
    gp = np.ones_like(x)
    x3 = x * x * x
    t = np.ones_like(x)      # f_k term
    u = x.copy()             # g_k term
    s = np.zeros_like(x)     # f'_k term, starts at k=1
    vterm = np.ones_like(x)  # g'_k term
    for k in range(_AIRY_TERMS):
        t = t * x3 / ((3 * k + 2) * (3 * k + 3))
        u = u * x3 / ((3 * k + 3) * (3 * k + 4))
        if k == 0:
            s = x * x / 2.0
        else:
            s = s * x3 * (k + 1) / (k * (3 * k + 2) * (3 * k + 3))
        vterm = vterm * x3 / ((3 * k + 1) * (3 * k + 3))
        f = f + t
        g = g + u
        fp = fp + s
        gp = gp + vterm
    ai = _AI0 * f + _AIP0 * g
    aip = _AI0 * fp + _AIP0 * gp
    return ai, aip


def _asym_sum(zeta, coeffs, alternating):
    """Truncate the asymptotic series at its smallest term."""
    acc = np.ones_like(zeta)
    term = np.ones_like(zeta)
    last = np.abs(term)
    frozen = np.zeros(zeta.shape, dtype=bool)
    for k in range(1, len(coeffs)):
        term = term * (coeffs[k] / coeffs[k - 1]) / zeta
        if alternating:
            contrib = term * (-1.0) ** k
        else:
            contrib = term
        mag = np.abs(term)
        grow = mag >= last
        frozen |= grow
        acc = np.where(frozen, acc, acc + contrib)
        last = mag
    return acc


def _airy_asym_pos(x):
    zeta = 2.0 / 3.0 * x ** 1.5
    su = _asym_sum(zeta, _AIRY_U, alternating=True)
    sv = _asym_sum(zeta, _AIRY_V, alternating=True)
    pre = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    ai = pre * su / x ** 0.25
    aip = -pre * sv * x ** 0.25
    return ai, aip


def _airy_asym_neg(x):
    t = -x
    zeta = 2.0 / 3.0 * t ** 1.5
    omega = zeta - math.pi / 4.0
    # split u/v into even and odd index subsequences
    ue, uo = _AIRY_U[0::2], _AIRY_U[1::2]
    ve, vo = _AIRY_V[0::2], _AIRY_V[1::2]
    zeta2 = zeta * zeta

    def series(coeffs, z):
        acc = np.zeros_like(z)
        term = np.ones_like(z)
        last = np.full(z.shape, np.inf)
        frozen = np.zeros(z.shape, dtype=bool)
        for k, c in enumerate(coeffs):
            contrib = (-1.0) ** k * c * term
            mag = np.abs(c * term)
            grow = mag >= last
            frozen |= grow
            acc = np.where(frozen, acc, acc + contrib)
            last = mag
            term = term / z
        return acc

    se = series(ue, zeta2)
    so = series(uo, zeta2) / zeta
    ai = (np.cos(omega) * se + np.sin(omega) * so) / (math.sqrt(math.pi) * t ** 0.25)
    sve = series(ve, zeta2)
    svo = series(vo, zeta2) / zeta
    aip = (np.sin(omega) * sve - np.cos(omega) * svo) * t ** 0.25 / math.sqrt(math.pi)
    return ai, aip


def _airy_pair(x):
    xarr = np.asarray(x, dtype=float)
    scalar = xarr.ndim == 0
    xf = np.atleast_1d(xarr).astype(float).ravel()
    if (xf < _AIRY_MIN).any() or (xf > _AIRY_MAX).any():
        raise DomainError(
            f"airy argument outside supported range [{_AIRY_MIN}, {_AIRY_MAX}]")

    ai = np.empty_like(xf)
    aip = np.empty_like(xf)
    mid = (xf >= _AIRY_SERIES_LO) & (xf <= _AIRY_SERIES_HI)
    hi = xf > _AIRY_SERIES_HI
    lo = xf < _AIRY_SERIES_LO
    if mid.any():
        ai[mid], aip[mid] = _airy_series(xf[mid])
    if hi.any():
        ai[hi], aip[hi] = _airy_asym_pos(xf[hi])
    if lo.any():
        ai[lo], aip[lo] = _airy_asym_neg(xf[lo])
    if scalar:
        return float(ai[0]), float(aip[0])
    return ai.reshape(xarr.shape), aip.reshape(xarr.shape)


def airy_ai(x):
    """Ai(x) on [-40, 200], absolute accuracy ~1e-11."""
    return _airy_pair(x)[0]


def airy_ai_prime(x):
    """Ai'(x) on [-40, 200], absolute accuracy ~1e-11."""
    return _airy_pair(x)[1]


# --- standard normal --------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_pdf(x):
    xarr = np.asarray(x, dtype=float)
    res = _INV_SQRT_2PI * np.exp(-0.5 * xarr * xarr)
    return float(res) if xarr.ndim == 0 else res


def std_normal_cdf(x):
    xarr = np.asarray(x, dtype=float)
    if xarr.ndim == 0:
        return 0.5 * math.erfc(-float(xarr) / _SQRT2)
    flat = xarr.ravel()
    out = np.fromiter((0.5 * math.erfc(-v / _SQRT2) for v in flat),
                      dtype=float, count=flat.size)
    return out.reshape(xarr.shape)
