"""Finite-width correlation kernel by contour quadrature and residue reduction.

The kernel of the log-squared singular-value point process is a double
contour integral: s runs over a Hankel loop around the negative axis, t over
a closed rectangle around the integrand's t-poles {0, -1, ..., 1-N}.  Two
evaluation modes are provided:

residue (default, N <= 64): the t-integral is replaced by the exact residue
sum over t = -m, leaving N one-dimensional Hankel integrals that share their
gamma-part across quadrature nodes.  This is fast, vectorizes across
evaluation points, and stays well-conditioned even for deep chains.

quadrature: the literal iterated double integral.  Note the s-loop's cap is
anchored at -N here so the two curves stay disjoint; the kernel value does
not depend on the anchor because moving the cap across the rectangle only
sweeps the s = t pole, whose residue is entire in t and integrates to zero
over the closed t-contour.

All integrands are assembled in log space (sums of log-gammas, one
exponentiation per node, a per-evaluation exponent offset), so magnitudes up
to hundreds of nats cause no overflow.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .contours import ContourSpec, RefinementPolicy, Segment, assert_disjoint
from .errors import ConfigurationError, DomainError, NumericalError
from .profiles import DimensionProfile
from .specfun import airy_ai, airy_ai_prime, log_gamma

_TWO_PI_I = 2j * math.pi
_RESIDUE_MAX_N = 64
_HANKEL_CAP_RADIUS = 0.25


@dataclass(frozen=True)
class QuadConfig:
    nodes_per_panel: int = 20
    abs_tol: float = 1e-9
    hankel_offset: float = 0.5       # delta: ray distance from the real axis
    tail_threshold: float = 1e-16    # truncate rays once the bound drops below
    max_panel_len: float = 0.5
    max_depth: int = 6
    sigma_margin: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.hankel_offset < 1.0:
            raise DomainError("hankel_offset must be in (0, 1)")
        if self.abs_tol <= 0 or self.tail_threshold <= 0:
            raise DomainError("tolerances must be positive")

    def policy(self) -> RefinementPolicy:
        return RefinementPolicy(self.max_panel_len, self.max_depth, self.abs_tol)


@dataclass(frozen=True)
class KernelEvaluation:
    value: float
    imag_leak: float
    est_error: float


def build_hankel(config: QuadConfig | None = None, tail_logmag=None,
                 anchor: float = -1.0) -> ContourSpec:
    """Positively oriented Hankel loop around (-inf, anchor].

    Runs at imaginary offset +-delta, drops to a semicircular cap of radius
    0.25 centered at ``anchor`` that crosses the real axis right of it.  The
    ray truncation T adapts to ``tail_logmag`` (log-magnitude of the intended
    integrand along the lower ray) against the configured threshold.
    """
    config = config or QuadConfig()
    delta = config.hankel_offset
    r0 = _HANKEL_CAP_RADIUS

    if tail_logmag is None:
        # generic superexponential gamma-ratio decay at fixed offset
        def tail_logmag(u):
            return float(log_gamma(complex(u + 1.0 - anchor, delta)).real)

    probes = [anchor - 0.5, anchor - 1.5, anchor - 3.0]
    ref = max(tail_logmag(u) for u in probes)
    log_thr = math.log(config.tail_threshold)
    t_end = abs(anchor) + 6.0
    while True:
        cur = tail_logmag(-t_end)
        ref = max(ref, cur)  # the ray peak may sit far from the cap
        if cur <= ref + log_thr:
            break
        t_end += max(4.0, 0.02 * t_end)
        if t_end > 20000.0:
            raise NumericalError("hankel truncation walked past T = 20000 "
                                 "without meeting the tail threshold")

    segs = (
        Segment.line(complex(-t_end, -delta), complex(anchor, -delta)),
        Segment.line(complex(anchor, -delta), complex(anchor, -r0)),
        Segment.arc(anchor, r0, -math.pi / 2.0, math.pi / 2.0),
        Segment.line(complex(anchor, r0), complex(anchor, delta)),
        Segment.line(complex(anchor, delta), complex(-t_end, delta)),
    )
    return ContourSpec(segs, closed=False, refinement=config.policy(),
                       name=f"hankel@{anchor:g}")


def build_sigma(n: int, margin: float = 0.25,
                hankel: ContourSpec | None = None,
                config: QuadConfig | None = None) -> ContourSpec:
    """Positively oriented rectangle around the t-poles {0, -1, ..., 1-n}."""
    config = config or QuadConfig()
    if not 0.0 < margin < 0.5:
        raise DomainError("sigma margin must be in (0, 0.5)")
    right = margin
    left = 1.0 - n - margin
    segs = (
        Segment.line(complex(right, -margin), complex(right, margin)),
        Segment.line(complex(right, margin), complex(left, margin)),
        Segment.line(complex(left, margin), complex(left, -margin)),
        Segment.line(complex(left, -margin), complex(right, -margin)),
    )
    spec = ContourSpec(segs, closed=True, refinement=config.policy(),
                       name=f"sigma[{1 - n},0]")
    if hankel is not None:
        assert_disjoint(spec, hankel)
    return spec


# --- integrand assembly -------------------------------------------------------


def _gamma_sum_s(profile: DimensionProfile, z: np.ndarray) -> np.ndarray:
    """sum_j logGamma(z + N + v_j) - logGamma(z) on the s-side."""
    acc = -log_gamma(z)
    for w in profile.widths():
        acc = acc + log_gamma(z + w)
    return acc

def _gamma_sum_t(profile: DimensionProfile, z: np.ndarray) -> np.ndarray:
    """logGamma(z) - sum_j logGamma(z + N + v_j) on the t-side."""
    acc = log_gamma(z)
    for w in profile.widths():
        acc = acc - log_gamma(z + w)
    return acc


def _residue_prefactor_logs(profile: DimensionProfile) -> np.ndarray:
    """log of m! * prod_j Gamma(N + v_j - m) for m = 0..N-1 (all real)."""
    n = profile.n
    out = np.empty(n)
    for m in range(n):
        acc = math.lgamma(m + 1)
        for w in profile.widths():
            acc += math.lgamma(w - m)
        out[m] = acc
    return out


def _hankel_for_profile(profile, y_worst, config, anchor=-1.0):
    delta = config.hankel_offset
    widths = profile.widths()

    def tail(u):
        s = complex(u, delta)
        val = -y_worst * u - log_gamma(s).real
        for w in widths:
            val += log_gamma(s + w).real
        return val

    return build_hankel(config, tail_logmag=tail, anchor=anchor)


# --- saddle-adapted s-contours for residue mode --------------------------------
#
# The 1D residue integrands decay superexponentially to the left, so their
# Hankel integral equals the integral over any path from -i*inf to +i*inf
# passing right of the poles (closing arcs vanish; no poles are crossed).
# A vertical line through the real minimizer of the phase keeps the node
# magnitudes at the scale of the result, eliminating the cancellation blowup
# the literal Hankel suffers past the spectrum edge.  Where the phase has a
# real stationary point (at and beyond the edge), its second derivative
# degenerates, so the path bends to +-60 degrees there: that direction
# descends for both the quadratic and the cubic term.

_SADDLE_FLOOR = 0.05


def _phi_line(profile, y, s):
    """-y*s + sum_j logGamma(s + w_j) - logGamma(s), elementwise."""
    return -y * s + _gamma_sum_s(profile, np.asarray(s, dtype=complex))


def _phi_real(profile, y, c):
    return float(_phi_line(profile, y, np.array([complex(c, 0.0)]))[0].real)


def _phase_slope(profile, y, c):
    """d/dc of the real line phase: sum psi(c+w) - psi(c) - y."""
    from .specfun import digamma

    carr = np.asarray(c, dtype=float)
    acc = -digamma(carr) - y
    for w in profile.widths():
        acc = acc + digamma(carr + w)
    return acc


def saddle_threshold(profile) -> float:
    """Smallest y for which the line phase has a real stationary point.

    Sits at the spectrum's upper edge (near log lambda); above it the density
    decays superexponentially.
    """
    cmax = 4.0 * (profile.n + max(profile.v_full)) + 8.0
    grid = np.geomspace(_SADDLE_FLOOR, cmax, 512)
    return float(_phase_slope(profile, 0.0, grid).min())


def _solve_phase_saddle(profile, y):
    """Rightmost real root of the phase slope, or None in the bulk."""
    def g(c):
        return float(_phase_slope(profile, y, c))

    cmax = 4.0 * (profile.n + max(profile.v_full)) + 8.0
    for _ in range(60):
        if g(cmax) > 0:
            break
        cmax *= 2.0
    grid = np.geomspace(_SADDLE_FLOOR, cmax, 256)
    gv = _phase_slope(profile, y, grid)
    neg = np.nonzero(gv < 0)[0]
    if len(neg) == 0 or neg[-1] + 1 >= len(grid):
        return None
    i = neg[-1]
    lo, hi = grid[i], grid[i + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * hi:
            break
    return 0.5 * (lo + hi)


def _walk_tail(fn, start, step, log_thr, max_steps=4000, what="tail walk"):
    """Walk outward until ``fn`` drops ``-log_thr`` below its running peak."""
    peak = fn(start)
    r = start
    for _ in range(max_steps):
        r += step
        cur = fn(r)
        peak = max(peak, cur)
        if cur <= peak + log_thr:
            return r
    raise NumericalError(f"{what} exceeded {max_steps} steps")


def _walk_arm(fn, step, cut, max_steps=4000, what="arm walk"):
    """Walk until ``fn`` drops below ``cut`` or reaches its minimum."""
    prev = fn(0.0)
    r = 0.0
    for _ in range(max_steps):
        r += step
        cur = fn(r)
        if cur <= cut or cur > prev:
            return r
        prev = cur
    raise NumericalError(f"{what} exceeded {max_steps} steps")


def _saddle_contour(profile, y, config: QuadConfig) -> ContourSpec:
    log_thr = math.log(config.tail_threshold)
    root = _solve_phase_saddle(profile, y)

    if root is None:
        # bulk: no real stationary point; vertical line through the real
        # minimizer.  The floor 0.5 keeps the line away from the zeros of
        # 1/Gamma(s) at the nonpositive integers, whose width-|s| dips are
        # otherwise expensive to resolve.
        cmax = 4.0 * (profile.n + max(profile.v_full)) + 8.0
        grid = np.geomspace(0.5, cmax, 128)
        phis = np.array([_phi_real(profile, y, c) for c in grid])
        c = float(grid[int(np.argmin(phis))])

        def vert(t):
            return float(_phi_line(profile, y,
                                   np.array([complex(c, t)]))[0].real)

        t_end = _walk_tail(vert, 0.0, 2.0, log_thr, what="vertical tail walk")
        rf = max(1.0, 1.0 / c)
        core = min(2.0, 0.45 * t_end)
        segs = (
            Segment.line(complex(c, -t_end), complex(c, -core)),
            Segment.line(complex(c, -core), complex(c, core), refine_factor=rf),
            Segment.line(complex(c, core), complex(c, t_end)),
        )
        return ContourSpec(segs, refinement=config.policy(),
                           name=f"line@{c:.4g}")

    c = root
    ref = _phi_real(profile, y, c)
    direction = cmath.exp(1j * math.pi / 3.0)

    def arm(r):
        return float(_phi_line(profile, y,
                               np.array([c + r * direction]))[0].real)

    step = max(0.25, 0.01 * c)
    r_end = _walk_arm(arm, step, ref + log_thr, what="wedge arm walk")
    top = c + r_end * direction
    a = top.real

    def vert_up(t):
        return float(_phi_line(profile, y, np.array([complex(a, t)]))[0].real)

    t_end = _walk_tail(vert_up, top.imag, 2.0, log_thr,
                       what="wedge tail walk")
    # finer panels near the vertex resolve the 1/Gamma(s) dip when the
    # stationary point sits close to the origin
    rf = max(1.0, 1.0 / c)
    core = min(2.0, 0.45 * r_end)
    mid_lo = c + core * direction.conjugate()
    mid_hi = c + core * direction
    segs = (
        Segment.line(complex(a, -t_end), complex(a, -top.imag)),
        Segment.line(complex(a, -top.imag), mid_lo),
        Segment.line(mid_lo, complex(c, 0.0), refine_factor=rf),
        Segment.line(complex(c, 0.0), mid_hi, refine_factor=rf),
        Segment.line(mid_hi, complex(a, top.imag)),
        Segment.line(complex(a, top.imag), complex(a, t_end)),
    )
    return ContourSpec(segs, refinement=config.policy(), name=f"wedge@{c:.4g}")


class _ResidueEvaluator:
    """Residue-mode evaluation engine with per-level cached node data.

    Construction is cheap; the first evaluation at a refinement level pays
    for the node log-gammas, later calls at that level (new evaluation
    points, e.g. trace panels) reuse them.
    """

    def __init__(self, profile, contour, config):
        self.profile = profile
        self.contour = contour
        self.config = config
        self.c0 = _residue_prefactor_logs(profile)
        marr = np.arange(profile.n, dtype=float)
        self.marr = marr
        self.signs = np.where(marr.astype(int) % 2 == 0, 1.0, -1.0)
        self._levels = {}

    def _level_data(self, level):
        data = self._levels.get(level)
        if data is None:
            z, w = self.contour.nodes(self.config.nodes_per_panel, level)
            g0 = _gamma_sum_s(self.profile, z)
            winv = w[:, None] / (z[:, None] + self.marr[None, :])  # (ns, N)
            data = (z, g0, winv, np.abs(winv))
            self._levels[level] = data
        return data

    def eval(self, xs, ys, level):
        """Kernel values K(xs[i], ys[i]) plus their summed node magnitudes.

        eps times the magnitude is the cancellation noise floor of the sum.
        """
        z, g0, winv, awinv = self._level_data(level)
        out = np.empty(len(xs), dtype=complex)
        amp = np.empty(len(xs), dtype=float)
        chunk = max(1, int(4_000_000 // max(len(z), 1)))
        with np.errstate(over="raise", invalid="raise"):
            for i0 in range(0, len(xs), chunk):
                xc = xs[i0:i0 + chunk]
                yc = ys[i0:i0 + chunk]
                lb = -yc[:, None] * z[None, :] + g0[None, :]
                off = lb.real.max(axis=1)
                e = np.exp(lb - off[:, None])
                d = e @ winv                              # (P, N)
                da = np.abs(e) @ awinv
                coeff = self.signs[None, :] * np.exp(
                    off[:, None] - xc[:, None] * self.marr[None, :]
                    - self.c0[None, :])
                out[i0:i0 + chunk] = (coeff * d).sum(axis=1) / _TWO_PI_I
                amp[i0:i0 + chunk] = ((np.abs(coeff) * da).sum(axis=1)
                                      / (2.0 * math.pi))
        if not np.all(np.isfinite(out)):
            raise NumericalError("residue-mode kernel overflowed; evaluation "
                                 "point too far outside the spectrum's support")
        return out, amp


_EPS = np.finfo(float).eps

# Bernoulli numbers B_2..B_32 for the extended-precision Stirling series
_BERN_FRACS = (
    (1, 6), (-1, 30), (1, 42), (-1, 30), (5, 66), (-691, 2730), (7, 6),
    (-3617, 510), (43867, 798), (-174611, 330), (854513, 138),
    (-236364091, 2730), (8553103, 6), (-23749461029, 870),
    (8615841276005, 14322), (-7709321041217, 510),
)


def _mp_log_gamma(z, precision):
    """Stirling-with-shift log-gamma for gmpy2.mpc with Re z > 0."""
    import gmpy2

    shift = gmpy2.mpc(0)
    radius = max(12.0, precision / 3.0)
    while abs(z) < radius:
        shift += gmpy2.log(z)
        z = z + 1
    res = (z - 0.5) * gmpy2.log(z) - z + 0.5 * gmpy2.log(2 * gmpy2.const_pi())
    zinv = 1 / z
    z2 = zinv * zinv
    term = zinv
    for k, (num, den) in enumerate(_BERN_FRACS, start=1):
        res += term * num / (den * (2 * k) * (2 * k - 1))
        term *= z2
    return res - shift


def _mp_residue_point(profile, x, y, contour, config, level, bits):
    """Extended-precision residue-mode evaluation of K(x, y).

    Used where the residue components cancel beyond double precision (deep
    left tail); node positions stay double, arithmetic runs at ``bits``.
    """
    import gmpy2

    z, w = contour.nodes(config.nodes_per_panel, level)
    with gmpy2.local_context(gmpy2.context(), precision=bits):
        acc = gmpy2.mpc(0)
        widths = profile.widths()
        # log of m! * prod_j Gamma(w_j - m) per m, all real and modest
        pref = []
        for m in range(profile.n):
            c0 = gmpy2.lgamma(gmpy2.mpfr(m + 1))[0]
            for wd in widths:
                c0 += gmpy2.lgamma(gmpy2.mpfr(wd - m))[0]
            pref.append((-1) ** m * gmpy2.exp(-m * gmpy2.mpfr(x) - c0))
        ym = gmpy2.mpfr(y)
        for zi, wi in zip(z, w):
            s = gmpy2.mpc(zi)
            g = -ym * s - _mp_log_gamma(s, bits)
            for wd in widths:
                g = g + _mp_log_gamma(s + wd, bits)
            base = gmpy2.exp(g) * gmpy2.mpc(wi)
            for m in range(profile.n):
                acc += pref[m] * base / (s + m)
        two_pi_i = gmpy2.mpc(0, 2) * gmpy2.const_pi()
        val = acc / two_pi_i
        return complex(val)


def _mp_bits_for(amp, target):
    extra = max(0.0, math.log2(max(amp, 1.0)) - math.log2(max(target, 1e-300)))
    return 64 + int(math.ceil(extra))


def _mp_fix(profile, x, y, contour, config, est):
    """Re-evaluate one ill-conditioned point at enough mantissa bits."""
    bits = _mp_bits_for(est / _EPS, config.abs_tol)
    prev = _mp_residue_point(profile, x, y, contour, config, 1, bits)
    for level in range(2, config.max_depth + 3):
        cur = _mp_residue_point(profile, x, y, contour, config, level, bits)
        err = abs(cur - prev)
        if err <= 10.0 * config.abs_tol:
            return cur, err
        prev = cur
    raise NumericalError(
        f"extended-precision kernel at ({x:g}, {y:g}) did not settle "
        f"(err {err:g})")


def _needs_mp(vals, est, abs_tol):
    v = np.atleast_1d(np.asarray(vals))
    e = np.atleast_1d(np.asarray(est))
    return e > np.maximum(abs_tol, 0.01 * np.abs(v.real))


def _refine(eval_level, abs_tol, max_depth, what):
    """Panel-doubling driver.

    Converges when successive levels differ by less than ``abs_tol`` or by
    less than the cancellation noise floor (eps times the summed node
    magnitude), whichever is larger; the reported per-point error covers
    both.  Returns ``(values, est)`` with matching shapes.
    """
    prev, _ = eval_level(0)
    history = [prev]
    for level in range(1, max_depth + 1):
        cur, amp = eval_level(level)
        history.append(cur)
        diff = np.abs(np.atleast_1d(cur - prev))
        floor = _EPS * np.atleast_1d(amp)
        if np.all(diff <= np.maximum(abs_tol, 8.0 * floor)):
            est = np.maximum(diff, floor)
            if np.ndim(cur) == 0:
                return cur, float(est[0])
            return cur, est
        prev = cur
    raise NumericalError(
        f"{what}: refinement did not reach {abs_tol:g} in {max_depth} doublings",
        diagnostics={"levels": [np.asarray(h).tolist() for h in history]})


def kernel_finite(profile: DimensionProfile, x: float, y: float,
                  mode: str = "residue",
                  config: QuadConfig | None = None) -> KernelEvaluation:
    """K(x, y) of the finite-width process; see module docstring for modes."""
    config = config or QuadConfig()
    if mode == "residue":
        if profile.n > _RESIDUE_MAX_N:
            raise DomainError(f"residue mode supports N <= {_RESIDUE_MAX_N}")
        contour = _saddle_contour(profile, y, config)
        ev = _ResidueEvaluator(profile, contour, config)
        xa, ya = np.array([x]), np.array([y])

        def at_level(level):
            vals, amps = ev.eval(xa, ya, level)
            return vals[0], amps[0]

        val, est = _refine(at_level, config.abs_tol, config.max_depth,
                           "residue kernel")
        if _needs_mp(val, est, config.abs_tol)[0]:
            val, est = _mp_fix(profile, x, y, contour, config, est)
        return KernelEvaluation(value=float(val.real),
                                imag_leak=abs(float(val.imag)), est_error=est)
    if mode == "quadrature":
        return _kernel_quadrature(profile, x, y, config)
    raise DomainError(f"unknown kernel mode {mode!r}")


def _kernel_quadrature(profile, x, y, config):
    anchor = -float(profile.n)
    hank = _hankel_for_profile(profile, y, config, anchor=anchor)
    sigma = build_sigma(profile.n, config.sigma_margin, hankel=hank,
                        config=config)

    def at_level(level):
        zs, ws = hank.nodes(config.nodes_per_panel, level)
        zt, wt = sigma.nodes(config.nodes_per_panel, level)
        lb = -y * zs + _gamma_sum_s(profile, zs)
        la = x * zt + _gamma_sum_t(profile, zt)
        offb = lb.real.max()
        offa = la.real.max()
        b = ws * np.exp(lb - offb)
        a = wt * np.exp(la - offa)
        acc = 0.0 + 0.0j
        mag = 0.0
        chunk = max(1, int(4_000_000 // max(len(zt), 1)))
        for i0 in range(0, len(zs), chunk):
            m = 1.0 / (zs[None, i0:i0 + chunk] - zt[:, None])
            acc += a @ m @ b[i0:i0 + chunk]
            mag += np.abs(a) @ np.abs(m) @ np.abs(b[i0:i0 + chunk])
        scale = math.exp(offa + offb)
        return (acc * scale / (_TWO_PI_I ** 2),
                mag * scale / (4.0 * math.pi ** 2))

    val, est = _refine(at_level, config.abs_tol, config.max_depth,
                       "quadrature kernel")
    return KernelEvaluation(value=float(val.real),
                            imag_leak=abs(float(val.imag)), est_error=est)


def density_finite(profile: DimensionProfile, x: float, mode: str = "residue",
                   config: QuadConfig | None = None) -> float:
    """One-point correlation function K(x, x)."""
    return kernel_finite(profile, x, x, mode, config).value


def density_grid(profile: DimensionProfile, xs,
                 mode: str = "residue",
                 config: QuadConfig | None = None):
    """Vectorized density curve; returns (values, est_error, imag_leak).

    Bulk points (below the saddle threshold) are evaluated in shared bands on
    one vertical contour per band; edge/tail points get their own
    saddle-adapted contour.
    """
    config = config or QuadConfig()
    xs = np.asarray(xs, dtype=float)
    if mode != "residue":
        vals = np.empty(len(xs))
        est = np.empty(len(xs))
        leak = np.empty(len(xs))
        for i, x in enumerate(xs):
            ev = kernel_finite(profile, float(x), float(x), mode, config)
            vals[i], est[i], leak[i] = ev.value, ev.est_error, ev.imag_leak
        return vals, est, leak
    if profile.n > _RESIDUE_MAX_N:
        raise DomainError(f"residue mode supports N <= {_RESIDUE_MAX_N}")

    y_thr = saddle_threshold(profile)
    vals = np.empty(len(xs), dtype=complex)
    est = np.empty(len(xs), dtype=float)

    bulk_idx = np.nonzero(xs < y_thr)[0]
    if len(bulk_idx):
        order = bulk_idx[np.argsort(xs[bulk_idx])]
        # shared vertical contours in bands; the band reference is its top
        # point, which bounds the amplitude mismatch for the rest
        band_width = 4.0
        start = 0
        while start < len(order):
            y0 = xs[order[start]]
            stop = start
            while stop < len(order) and xs[order[stop]] <= y0 + band_width:
                stop += 1
            idx = order[start:stop]
            y_ref = float(xs[idx].max())
            contour = _saddle_contour(profile, y_ref, config)
            ev = _ResidueEvaluator(profile, contour, config)
            xg = xs[idx]

            def at_level(level, ev=ev, xg=xg):
                return ev.eval(xg, xg, level)

            v, e = _refine(at_level, config.abs_tol, config.max_depth,
                           "residue density band")
            for b in np.nonzero(_needs_mp(v, e, config.abs_tol))[0]:
                v[b], e[b] = _mp_fix(profile, float(xg[b]), float(xg[b]),
                                     contour, config, float(e[b]))
            vals[idx] = v
            est[idx] = e
            start = stop

    for i in np.nonzero(xs >= y_thr)[0]:
        x = float(xs[i])
        contour = _saddle_contour(profile, x, config)
        ev = _ResidueEvaluator(profile, contour, config)
        xa = np.array([x])

        def at_level(level, ev=ev, xa=xa):
            return ev.eval(xa, xa, level)

        v, e = _refine(at_level, config.abs_tol, config.max_depth,
                       "residue density point")
        if _needs_mp(v[0], e[0], config.abs_tol)[0]:
            v0, e0 = _mp_fix(profile, x, x, contour, config, float(e[0]))
            vals[i] = v0
            est[i] = e0
        else:
            vals[i] = v[0]
            est[i] = e[0]

    leak = np.abs(vals.imag)
    return vals.real.copy(), est, leak


def _scan_config(config: QuadConfig, abs_tol: float) -> QuadConfig:
    """Looser-tolerance variant for support scans and trace grids."""
    return QuadConfig(
        nodes_per_panel=config.nodes_per_panel,
        abs_tol=max(config.abs_tol, abs_tol),
        hankel_offset=config.hankel_offset,
        tail_threshold=max(config.tail_threshold, 1e-12),
        max_panel_len=max(config.max_panel_len, 1.0),
        max_depth=config.max_depth,
        sigma_margin=config.sigma_margin,
    )


def integration_bracket(profile: DimensionProfile, mode: str = "residue",
                        config: QuadConfig | None = None, cut: float = 1e-6):
    """[lo, hi] found by scanning the density down to ``cut`` on both sides.

    The decay beyond the scan points is at least exponential on the left and
    superexponential on the right, so the omitted tail mass is negligible
    against trace tolerances of 1e-3.
    """
    from .scaling import compute_edge_scaling, gaussian_center, gaussian_scale

    config = _scan_config(config or QuadConfig(), 1e-4)
    n = profile.n
    es = compute_edge_scaling(profile)

    lo = gaussian_center(profile, n)
    step_l = max(1.0, gaussian_scale(profile, n))
    for _ in range(200):
        lo -= step_l
        if density_finite(profile, lo, mode, config) < cut:
            break
    else:
        raise NumericalError("left bracket scan did not reach the density cut")

    hi = es.log_lambda + 2.0 / es.rho_airy_corrected
    step_r = max(0.5, 1.0 / es.rho_airy_corrected)
    for _ in range(200):
        if abs(density_finite(profile, hi, mode, config)) < cut:
            break
        hi += step_r
    else:
        raise NumericalError("right bracket scan did not reach the density cut")
    return lo - step_l, hi + step_r


def trace_density(profile: DimensionProfile, mode: str = "residue",
                  config: QuadConfig | None = None, bracket=None,
                  tol: float = 1e-4):
    """Integral of the density over a bracketing interval (should equal N)."""
    config = config or QuadConfig()
    lo, hi = bracket if bracket is not None else integration_bracket(
        profile, mode, config)
    seg = Segment.line(complex(lo, 0.0), complex(hi, 0.0))
    grid_config = _scan_config(config, min(1e-6, tol * 1e-2))

    def at_panels(panel_len):
        z, w = seg.nodes(config.nodes_per_panel, panel_len)
        vals, _, _ = density_grid(profile, z.real, mode, grid_config)
        return float(np.sum(w.real * vals))

    panel = 2.0
    prev = at_panels(panel)
    for _ in range(5):
        panel /= 2.0
        cur = at_panels(panel)
        if abs(cur - prev) <= tol:
            return cur, abs(cur - prev)
        prev = cur
    raise NumericalError(f"trace integral did not settle to {tol:g}")


# --- Airy kernel ---------------------------------------------------------------

_AIRY_ARG_MAX = 40.0
_AIRY_DIAG_EPS = 1e-6


def airy_kernel(x: float, y: float) -> float:
    """(Ai(x)Ai'(y) - Ai'(x)Ai(y)) / (x - y), diagonal limit within 1e-6."""
    if abs(x) > _AIRY_ARG_MAX or abs(y) > _AIRY_ARG_MAX:
        raise DomainError(f"airy kernel arguments limited to |.| <= {_AIRY_ARG_MAX}")
    if abs(x - y) <= _AIRY_DIAG_EPS:
        xm = 0.5 * (x + y)
        return airy_ai_prime(xm) ** 2 - xm * airy_ai(xm) ** 2
    return ((airy_ai(x) * airy_ai_prime(y) - airy_ai_prime(x) * airy_ai(y))
            / (x - y))


def _airy_rays(x_or_y_max: float, config: QuadConfig):
    """Truncated gamma_R through +1 and its mirror gamma_L, both upward."""
    r = 2.0
    # cubic decay along the rays: Re(u^3)/3 - x*Re(u) with u = 1 + r e^{i pi/3}
    def ray_log(r):
        u = 1.0 + r * cmath.exp(1j * math.pi / 3.0)
        return (u ** 3).real / 3.0 + abs(x_or_y_max) * abs(u.real)

    cut = math.log(config.tail_threshold)
    while ray_log(r) > cut and r < 400.0:
        r += 1.0
    e_up = cmath.exp(1j * math.pi / 3.0)
    e_dn = cmath.exp(-1j * math.pi / 3.0)
    gamma_r = ContourSpec((
        Segment.line(1.0 + r * e_dn, 1.0 + 0j),
        Segment.line(1.0 + 0j, 1.0 + r * e_up),
    ), refinement=config.policy(), name="gamma_R")
    gamma_l = ContourSpec((
        Segment.line(-1.0 - r * e_up, -1.0 + 0j),
        Segment.line(-1.0 + 0j, -1.0 - r * e_dn),
    ), refinement=config.policy(), name="gamma_L")
    return gamma_r, gamma_l


def airy_kernel_contour(x: float, y: float,
                        config: QuadConfig | None = None) -> float:
    """Double-contour form of the Airy kernel (oracle for the closed form)."""
    config = config or QuadConfig()
    gamma_r, gamma_l = _airy_rays(max(abs(x), abs(y)), config)

    def at_level(level):
        u, wu = gamma_r.nodes(config.nodes_per_panel, level)
        lam, wl = gamma_l.nodes(config.nodes_per_panel, level)
        fu = wu * np.exp(u ** 3 / 3.0 - x * u)
        fl = wl * np.exp(-(lam ** 3) / 3.0 + y * lam)
        m = 1.0 / (u[:, None] - lam[None, :])
        val = fu @ m @ fl / (_TWO_PI_I ** 2)
        mag = np.abs(fu) @ np.abs(m) @ np.abs(fl) / (4.0 * math.pi ** 2)
        return val, mag

    val, _ = _refine(at_level, config.abs_tol, config.max_depth, "airy contour")
    return float(val.real)


def correlation(points, kernel) -> float:
    """n-point correlation det[K(x_i, x_j)] by LU with partial pivoting."""
    pts = list(points)
    if not 1 <= len(pts) <= 8:
        raise DomainError("correlation supports 1..8 points")
    k = np.array([[kernel(xi, xj) for xj in pts] for xi in pts], dtype=float)
    return float(np.linalg.det(k))
