"""Edge-scaling constants: DWR, Gaussian centerings, z0, log lambda, rho.

The depth-to-width ratio Delta = sum_j 1/(N + v_j) (j = 0..M, v_0 = 0) drives
the phase transition between Gaussian and Airy edge statistics.  Everything
downstream (rescalings, phase functions, regime classification) reads its
constants from an ``EdgeScaling`` snapshot computed here.

The Airy density scale carries three modes.  ``paper`` is the literal
2^{-1/3} * (1/z0^2 - S)^{-1/3} constant; ``corrected`` multiplies by 2^{2/3},
which is the unique constant making the cubic coefficient of the low-DWR
phase equal 2 at its saddle (and matching the known single-factor soft-edge
scale); ``exact`` normalizes with the true third derivative via psi''.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .profiles import DimensionProfile
from .specfun import digamma, tetragamma, trigamma

RHO_MODES = ("paper", "corrected", "exact")


def dwr(profile: DimensionProfile) -> float:
    """Depth-to-width ratio Delta = sum_{j=0}^{M} 1/(N + v_j)."""
    return sum(1.0 / w for w in profile.widths())


def gaussian_center(profile: DimensionProfile, k: int) -> float:
    """sum_j psi(N + v_j + 1 - k); the high-DWR centering of the k-th value."""
    _check_k(profile, k)
    return sum(digamma(w + 1 - k) for w in profile.widths())


def gaussian_scale(profile: DimensionProfile, k: int) -> float:
    """(sum_j psi'(N + v_j + 1 - k))^{1/2}; the high-DWR fluctuation scale."""
    _check_k(profile, k)
    return math.sqrt(sum(trigamma(w + 1 - k) for w in profile.widths()))


def _check_k(profile, k):
    if not 1 <= k <= profile.n:
        raise DomainError(f"k must be in [1, {profile.n}], got {k}")


def _z0_residual(profile, z):
    return sum(1.0 / (w + z) for w in profile.widths()) - 1.0 / z


def solve_z0(profile: DimensionProfile, tol: float = 1e-14) -> float:
    """Unique positive root of sum_j 1/(N+v_j+z) = 1/z, by bracketed bisection.

    The residual goes to -inf at 0+ and approaches 0 from above at infinity;
    a log-grid scan asserts there is a single sign change before bisecting.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    lo = 1.0
    for _ in range(200):
        if _z0_residual(profile, lo) < 0:
            break
        lo /= 2.0
    else:
        raise NumericalError("could not find a negative-residual lower bracket")
    hi = max(1.0, lo * 2.0)
    for _ in range(200):
        if _z0_residual(profile, hi) > 0:
            break
        hi *= 2.0
    else:
        raise NumericalError("could not find a positive-residual upper bracket")

    grid = np.geomspace(lo, hi, 256)
    res = np.array([_z0_residual(profile, z) for z in grid])
    changes = int(np.sum(np.diff(np.sign(res)) != 0))
    if changes != 1:
        raise NumericalError(
            f"expected a single sign change on [{lo:g}, {hi:g}], found {changes}",
            diagnostics={"z": grid.tolist(), "residual": res.tolist()})

    for _ in range(300):
        mid = 0.5 * (lo + hi)
        r = _z0_residual(profile, mid)
        if abs(r) <= tol / mid:
            return mid
        if r < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-17 * hi:
            break
    z = 0.5 * (lo + hi)
    if abs(_z0_residual(profile, z)) > tol / z:
        raise NumericalError(
            f"bisection stalled at z = {z} with residual {_z0_residual(profile, z):g}")
    return z


def log_lambda(profile: DimensionProfile, z0: float) -> float:
    """log of (1/z0) prod_j (N + v_j + z0), accumulated in log space."""
    if z0 <= 0:
        raise DomainError("z0 must be positive")
    return sum(math.log(w + z0) for w in profile.widths()) - math.log(z0)


def curvature_sum(profile: DimensionProfile, z0: float) -> float:
    """D = 1/z0^2 - sum_j 1/(N+v_j+z0)^2 (> 0 at the true root)."""
    return 1.0 / z0 ** 2 - sum(1.0 / (w + z0) ** 2 for w in profile.widths())


def f3_gamma(profile: DimensionProfile, z0: float) -> float:
    """Exact third derivative of the gamma-sum phase at z0, via psi''."""
    return sum(tetragamma(z0 + w) for w in profile.widths()) - tetragamma(z0)


def rho_airy(profile: DimensionProfile, z0: float, mode: str = "corrected") -> float:
    """Airy density scale in the requested mode (see module docstring)."""
    if mode not in RHO_MODES:
        raise DomainError(f"rho mode must be one of {RHO_MODES}, got {mode!r}")
    if mode == "exact":
        f3 = f3_gamma(profile, z0)
        if f3 <= 0:
            raise NumericalError(f"nonpositive exact cubic coefficient {f3:g}; "
                                 "z0 inconsistent with the profile")
        return (2.0 / f3) ** (1.0 / 3.0)
    d = curvature_sum(profile, z0)
    if d <= 0:
        raise NumericalError(f"nonpositive curvature sum {d:g}; "
                             "z0 inconsistent with the profile")
    base = d ** (-1.0 / 3.0)
    if mode == "paper":
        return 2.0 ** (-1.0 / 3.0) * base
    return 2.0 ** (1.0 / 3.0) * base


def classify_regime(delta: float, low_threshold: float = 0.2,
                    high_threshold: float = 5.0) -> str:
    """'low' | 'moderate' | 'high' by thresholding the DWR."""
    if not 0 < low_threshold < high_threshold:
        raise DomainError("need 0 < low_threshold < high_threshold")
    if delta <= low_threshold:
        return "low"
    if delta >= high_threshold:
        return "high"
    return "moderate"


@dataclass(frozen=True)
class EdgeScaling:
    """All derived constants of a profile, with the z0 residual on record."""

    profile: DimensionProfile
    delta: float
    z0: float
    log_lambda: float
    rho_airy_paper: float
    rho_airy_corrected: float
    rho_airy_exact: float
    residual_z0: float

    def rho(self, mode: str = "corrected") -> float:
        if mode not in RHO_MODES:
            raise DomainError(f"rho mode must be one of {RHO_MODES}, got {mode!r}")
        return getattr(self, f"rho_airy_{mode}")

    def to_json_dict(self) -> dict:
        return {
            "profile": self.profile.to_dict(),
            "delta": f"{self.delta:.17g}",
            "z0": f"{self.z0:.17g}",
            "log_lambda": f"{self.log_lambda:.17g}",
            "rho_airy_paper": f"{self.rho_airy_paper:.17g}",
            "rho_airy_corrected": f"{self.rho_airy_corrected:.17g}",
            "rho_airy_exact": f"{self.rho_airy_exact:.17g}",
            "residual_z0": f"{self.residual_z0:.17g}",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "EdgeScaling":
        return cls(
            profile=DimensionProfile.from_dict(d["profile"]),
            delta=float(d["delta"]),
            z0=float(d["z0"]),
            log_lambda=float(d["log_lambda"]),
            rho_airy_paper=float(d["rho_airy_paper"]),
            rho_airy_corrected=float(d["rho_airy_corrected"]),
            rho_airy_exact=float(d["rho_airy_exact"]),
            residual_z0=float(d["residual_z0"]),
        )


def compute_edge_scaling(profile: DimensionProfile, tol: float = 1e-14) -> EdgeScaling:
    z0 = solve_z0(profile, tol)
    return EdgeScaling(
        profile=profile,
        delta=dwr(profile),
        z0=z0,
        log_lambda=log_lambda(profile, z0),
        rho_airy_paper=rho_airy(profile, z0, "paper"),
        rho_airy_corrected=rho_airy(profile, z0, "corrected"),
        rho_airy_exact=rho_airy(profile, z0, "exact"),
        residual_z0=abs(_z0_residual(profile, z0)),
    )
