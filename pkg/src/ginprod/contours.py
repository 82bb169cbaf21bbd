"""Oriented piecewise contours (lines + circular arcs) with panel quadrature.

A ``ContourSpec`` is an ordered list of segments; ``nodes(level)`` lays
composite Gauss-Legendre panels along it, where each level halves the panel
length.  Weights already include the complex dz factor, so a contour integral
is just ``sum(w * f(z))``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DomainError


@lru_cache(maxsize=32)
def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@dataclass(frozen=True)
class Segment:
    kind: str  # "line" | "arc"
    start: complex
    end: complex
    center: complex | None = None
    radius: float | None = None
    theta0: float | None = None
    theta1: float | None = None
    refine_factor: float = 1.0  # local panel-density multiplier

    @classmethod
    def line(cls, a, b, refine_factor: float = 1.0) -> "Segment":
        return cls("line", complex(a), complex(b),
                   refine_factor=float(refine_factor))

    @classmethod
    def arc(cls, center, radius, theta0, theta1,
            refine_factor: float = 1.0) -> "Segment":
        """Circular arc; theta increasing means counterclockwise."""
        c = complex(center)
        a = c + radius * cmath.exp(1j * theta0)
        b = c + radius * cmath.exp(1j * theta1)
        return cls("arc", a, b, c, float(radius), float(theta0), float(theta1),
                   refine_factor=float(refine_factor))

    def length(self) -> float:
        if self.kind == "line":
            return abs(self.end - self.start)
        return self.radius * abs(self.theta1 - self.theta0)

    def nodes(self, per_panel: int, panel_len: float):
        """Gauss-Legendre nodes and dz-weights on panels of <= panel_len."""
        gl_x, gl_w = _gauss(per_panel)
        eff = panel_len / self.refine_factor
        npan = max(1, int(math.ceil(self.length() / eff)))
        if self.kind == "line":
            d = self.end - self.start
            edges = np.linspace(0.0, 1.0, npan + 1)
            mid = 0.5 * (edges[:-1] + edges[1:])
            half = 0.5 * (edges[1:] - edges[:-1])
            t = mid[:, None] + half[:, None] * gl_x[None, :]
            z = self.start + d * t
            w = d * (half[:, None] * gl_w[None, :])
            return z.ravel(), w.ravel()
        edges = np.linspace(self.theta0, self.theta1, npan + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        th = mid[:, None] + half[:, None] * gl_x[None, :]
        z = self.center + self.radius * np.exp(1j * th)
        w = 1j * self.radius * np.exp(1j * th) * (half[:, None] * gl_w[None, :])
        return z.ravel(), w.ravel()

    def sample(self, n: int):
        """n interior points, uniform in the parameter; for sign/margin scans."""
        t = (np.arange(n) + 0.5) / n
        if self.kind == "line":
            return self.start + (self.end - self.start) * t
        th = self.theta0 + (self.theta1 - self.theta0) * t
        return self.center + self.radius * np.exp(1j * th)


@dataclass(frozen=True)
class RefinementPolicy:
    max_panel_len: float = 0.5
    max_depth: int = 6
    panel_tol: float = 1e-9


@dataclass(frozen=True)
class ContourSpec:
    segments: tuple[Segment, ...]
    closed: bool = False
    refinement: RefinementPolicy = field(default_factory=RefinementPolicy)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for a, b in zip(self.segments, self.segments[1:]):
            if abs(a.end - b.start) > 1e-9 * max(1.0, abs(a.end)):
                raise ConfigurationError(
                    f"contour {self.name!r}: segment ends at {a.end}, "
                    f"next starts at {b.start}")
        if self.closed and self.segments:
            a, b = self.segments[-1], self.segments[0]
            if abs(a.end - b.start) > 1e-9 * max(1.0, abs(a.end)):
                raise ConfigurationError(
                    f"closed contour {self.name!r} does not close up")

    def length(self) -> float:
        return sum(s.length() for s in self.segments)

    def nodes(self, per_panel: int = 20, level: int = 0):
        panel_len = self.refinement.max_panel_len / (2 ** level)
        zs, ws = [], []
        for seg in self.segments:
            z, w = seg.nodes(per_panel, panel_len)
            zs.append(z)
            ws.append(w)
        return np.concatenate(zs), np.concatenate(ws)

    def sample(self, n_per_segment: int):
        return np.concatenate([s.sample(n_per_segment) for s in self.segments])

    def with_name(self, name: str) -> "ContourSpec":
        return replace(self, name=name)


def min_distance(c1: ContourSpec, c2: ContourSpec, samples_per_unit: float = 64.0) -> float:
    """Minimum distance between densely sampled points of two contours."""
    pts = []
    for c in (c1, c2):
        arr = []
        for seg in c.segments:
            n = max(8, int(seg.length() * samples_per_unit))
            arr.append(seg.sample(n))
        pts.append(np.concatenate(arr))
    a, b = pts
    # chunk to bound memory on long contours
    best = math.inf
    for i in range(0, len(a), 2048):
        d = np.abs(a[i:i + 2048, None] - b[None, :])
        best = min(best, float(d.min()))
    return best


def assert_disjoint(c1: ContourSpec, c2: ContourSpec, clearance: float = 0.02) -> float:
    d = min_distance(c1, c2)
    if d < clearance:
        raise ConfigurationError(
            f"contours {c1.name!r} and {c2.name!r} come within {d:.3g} "
            f"(< clearance {clearance:g})")
    return d


def conjugate_symmetric(c: ContourSpec, tol: float = 1e-9) -> bool:
    """True if the segment set is invariant under complex conjugation."""
    def key(seg):
        return (round(seg.start.real, 9), round(abs(seg.start.imag), 9),
                round(seg.end.real, 9), round(abs(seg.end.imag), 9))

    pool = {}
    for seg in c.segments:
        k = key(seg)
        pool[k] = pool.get(k, 0) + 1
    for seg in c.segments:
        s2, e2 = seg.start.conjugate(), seg.end.conjugate()
        k2 = (round(e2.real, 9), round(abs(e2.imag), 9),
              round(s2.real, 9), round(abs(s2.imag), 9))
        k2b = (round(s2.real, 9), round(abs(s2.imag), 9),
               round(e2.real, 9), round(abs(e2.imag), 9))
        if k2 not in pool and k2b not in pool:
            return False
    return True
