"""Weight functions k -> m(k, N) for the counting operators, and the
descending family m^0 .. m^5 built by the parity-split recursion

    m^j(k) = m^{j+1}(k) + m^j(k+2)      (N + k even, starting at m^j(N) = (N+2)^-j)
    m^j(k) = (m^j(k-1) + m^j(k+1)) / 2  (N + k odd)

seeded with ``m^5(k) = N^{-1/2} (k+1)^{-9/2}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import weight_recursion
from .potentials import DomainError


@dataclass(frozen=True)
class WeightVector:
    N: int
    values: np.ndarray
    label: str = "custom"
    # values at k = -1 and k = N+1, N+2 as the construction defines them;
    # only used to audit the recursion at its edges
    ghosts: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.shape != (self.N + 1,):
            raise DomainError(f"expected {self.N + 1} values, got {vals.shape[0]}")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise DomainError("weights must be finite and nonnegative")
        object.__setattr__(self, "values", vals)

    def at(self, k):
        """m(k, N), zero for k outside 0..N."""
        k = np.asarray(k)
        inside = (k >= 0) & (k <= self.N)
        return np.where(inside, self.values[np.clip(k, 0, self.N)], 0.0)

    def extended(self, k) -> float:
        """Like :meth:`at` but returning construction ghosts where defined."""
        if 0 <= k <= self.N:
            return float(self.values[k])
        return float(self.ghosts.get(int(k), 0.0))

    def shifted(self, d: int) -> "WeightVector":
        """Weights of the shifted operator: k -> m(k + d, N)."""
        return WeightVector(self.N, self.at(np.arange(self.N + 1) + d), f"{self.label}_{d}")


def n_weights(N: int) -> WeightVector:
    return WeightVector(N, np.sqrt(np.arange(N + 1) / N), "n")


def constant_weights(N: int, c: float = 1.0) -> WeightVector:
    return WeightVector(N, np.full(N + 1, float(c)), "const")


def _seed(N: int) -> np.ndarray:
    """m^5 on k = -1 .. N+2 (array index k + 1)."""
    K = np.arange(-1, N + 3)
    seed = np.full(N + 4, np.nan)
    formula = ((K + N) % 2 == 0) | (K == 0)
    formula &= K >= 0
    seed[formula] = N ** -0.5 * (K[formula] + 1.0) ** -4.5
    if N % 2 == 1:
        # k = -1 sits on the recursion sublattice; pick it so k = 0 is an average
        seed[0] = 2.0 * seed[1] - seed[2]
    odd = np.nonzero(np.isnan(seed) & (K >= 1) & (K <= N + 1))[0]
    seed[odd] = 0.5 * (seed[odd - 1] + seed[odd + 1])
    return seed


def build_m_family(N: int) -> list:
    """The six weights m^0 .. m^5 (index j of the returned list)."""
    N = int(N)
    if N < 2:
        raise DomainError(f"N={N} must be at least 2")
    table = weight_recursion(_seed(N), N)
    family = []
    for j in range(6):
        row = table[j]
        ghosts = {k: float(row[k + 1]) for k in (-1, N + 1, N + 2) if np.isfinite(row[k + 1])}
        family.append(WeightVector(N, row[1:N + 2].copy(), f"m{j}", ghosts))
    return family


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

@dataclass
class BoundsReport:
    N: int
    recursion_residual: float      # max |m^{j+1}(k) - m^j(k) + m^j(k+2)| / m^j(k)
    lower_c: dict                  # j -> min_k m^j(k) / (N^-j n^{1-2j}(k+2))
    upper_C: dict                  # j -> max_k of the same ratio
    upper_violations: dict         # j -> [k, ...] where the unit upper bound fails
    diff1_C: dict                  # j -> first-difference constant
    diff2_C: dict                  # j -> second-difference constant
    monotone: bool
    mn_bound: float                # max_k m^0(k) n(k), must stay <= 1
    notes: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(len(v) for v in self.upper_violations.values()) + int(not self.monotone)

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.recursion_residual < 1e-14 and self.mn_bound <= 1.0

    def rows(self):
        for j in range(6):
            yield {"j": j, "lower_c": self.lower_c.get(j), "upper_C": self.upper_C.get(j),
                   "upper_violations": len(self.upper_violations.get(j, [])),
                   "diff1_C": self.diff1_C[j], "diff2_C": self.diff2_C[j]}

    def summary(self) -> dict:
        return {"N": self.N, "recursion_residual": self.recursion_residual,
                "lower_c": self.lower_c, "upper_C": self.upper_C,
                "upper_violations": {j: len(v) for j, v in self.upper_violations.items()},
                "diff1_C": self.diff1_C, "diff2_C": self.diff2_C,
                "monotone": self.monotone, "mn_bound": self.mn_bound,
                "violations": self.violations, "verdict": "PASS" if self.ok else "FAIL",
                "notes": list(self.notes)}


def _n(k, N):
    return np.sqrt(np.asarray(k, dtype=float) / N)


def check_bounds(family, N: int | None = None) -> BoundsReport:
    """Exhaustive check of the recursion, the sandwich bound and the difference bounds.

    The lower constant ``c_j`` and the difference constants are existential,
    so they are reported rather than asserted.  The upper sandwich bound has
    constant one and is asserted literally.
    """
    N = family[0].N if N is None else int(N)
    k = np.arange(N + 1)

    resid = 0.0
    for j in range(5):
        m0, m1 = family[j], family[j + 1]
        for kk in k:
            lhs = m1.values[kk]
            rhs = m0.values[kk] - m0.extended(kk + 2)
            resid = max(resid, abs(lhs - rhs) / m0.values[kk])

    lower, upper, viol, d1, d2 = {}, {}, {}, {}, {}
    for j in range(6):
        m = family[j].values
        if j > 0:
            ratio = m / (N ** -j * _n(k + 2, N) ** (1 - 2 * j))
            lower[j] = float(ratio.min())
            upper[j] = float(ratio.max())
            viol[j] = [int(x) for x in k[ratio > 1.0]]
        b1 = N ** (-j - 1.0) * _n(k[:-1] + 1, N) ** (-1 - 2 * j)
        d1[j] = float(np.max(np.abs(m[:-1] - m[1:]) / b1))
        b2 = N ** (-j - 2.0) * _n(k[:-2] + 1, N) ** (-3 - 2 * j)
        d2[j] = float(np.max(np.abs(m[:-2] - 2 * m[1:-1] + m[2:]) / b2))

    monotone = all(np.all(np.diff(family[j].values) < 0) for j in range(1, 6))
    mn = float(np.max(family[0].values * _n(k, N)))
    notes = []
    if any(viol.values()):
        worst = max(upper, key=upper.get)
        notes.append(f"unit upper bound fails for j in {sorted(j for j in viol if viol[j])}; "
                     f"largest ratio {upper[worst]:.4g} at j={worst}")
    return BoundsReport(N, resid, lower, upper, viol, d1, d2, monotone, mn, notes)
