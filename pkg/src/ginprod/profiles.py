"""Dimension profiles for chains of rectangular Ginibre factors.

A profile ``(N, v_1..v_M)`` with implicit ``v_0 = 0`` describes a chain of M
factors where factor j has shape ``(N + v_j) x (N + v_{j-1})``.  The full
product maps C^N -> C^{N+v_M} and generically has exactly N nonzero singular
values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError


@dataclass(frozen=True)
class DimensionProfile:
    """Width N >= 1 plus the list of per-factor offsets v_1..v_M (all >= 0)."""

    n: int
    v: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"profile width must be >= 1, got {self.n}")
        if len(self.v) < 1:
            raise DomainError("profile needs at least one factor (M >= 1)")
        if any(int(vj) != vj or vj < 0 for vj in self.v):
            raise DomainError(f"offsets must be nonnegative integers, got {self.v}")
        object.__setattr__(self, "v", tuple(int(vj) for vj in self.v))

    @classmethod
    def square(cls, n: int, m: int) -> "DimensionProfile":
        """All-square chain: M factors of size N x N."""
        return cls(n, (0,) * m)

    @property
    def m(self) -> int:
        return len(self.v)

    @property
    def v_full(self) -> tuple[int, ...]:
        """Offsets including the implicit v_0 = 0; length M + 1."""
        return (0,) + self.v

    def widths(self) -> list[int]:
        """The M + 1 values N + v_j for j = 0..M, in order."""
        return [self.n + vj for vj in self.v_full]

    def factor_shapes(self) -> list[tuple[int, int]]:
        """Shapes (rows, cols) of X_1..X_M in multiplication order."""
        w = self.widths()
        return [(w[j], w[j - 1]) for j in range(1, self.m + 1)]

    def to_dict(self) -> dict:
        return {"n": self.n, "v": list(self.v)}

    @classmethod
    def from_dict(cls, d: dict) -> "DimensionProfile":
        return cls(int(d["n"]), tuple(int(x) for x in d["v"]))
