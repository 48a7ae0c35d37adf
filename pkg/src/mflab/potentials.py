"""Radial pair potentials and their N-scaled versions.

Profiles are piecewise constant on spherical shells: ``values[i]`` holds on
``edges[i-1] < r <= edges[i]`` (with ``edges[-1] = 0``).  Everything that
integrates a profile can therefore do so exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit


class DomainError(ValueError):
    """A parameter lies outside the range an operation is defined on."""


KINDS = ("square-barrier", "piecewise-constant-shells", "tabulated")


def _shell_volumes(edges):
    inner = np.concatenate([[0.0], edges[:-1]])
    return 4.0 * np.pi / 3.0 * (edges ** 3 - inner ** 3)


def _evaluate(edges, values, r):
    r = np.asarray(r, dtype=float)
    idx = np.searchsorted(edges, r, side="left")
    padded = np.concatenate([values, [0.0]])
    return padded[np.minimum(idx, len(values))]


@dataclass(frozen=True)
class RadialProfile:
    kind: str
    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.kind not in KINDS:
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if edges.shape != values.shape or edges.size == 0:
            raise DomainError("edges and values must be non-empty and of equal length")
        if edges[0] <= 0 or np.any(np.diff(edges) <= 0):
            raise DomainError("shell radii must be positive and strictly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DomainError("potential values must be finite and nonnegative")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)

    @property
    def support_radius(self) -> float:
        nz = np.nonzero(self.values)[0]
        return float(self.edges[nz[-1]]) if nz.size else 0.0

    @cached_property
    def l1(self) -> float:
        """Integral of V over R^3."""
        return float(np.sum(self.values * _shell_volumes(self.edges)))

    @cached_property
    def sup(self) -> float:
        return float(self.values.max())

    def __call__(self, r):
        return _evaluate(self.edges, self.values, r)

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "shells": [[float(e), float(v)] for e, v in zip(self.edges, self.values)]}


def square_barrier(V0: float, R: float) -> RadialProfile:
    return RadialProfile("square-barrier", [R], [V0])


def shells(pairs: Sequence[Sequence[float]]) -> RadialProfile:
    """Build a profile from ``[[r_out, value], ...]``."""
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    kind = "square-barrier" if len(arr) == 1 else "piecewise-constant-shells"
    return RadialProfile(kind, arr[:, 0], arr[:, 1])


def tabulated(r, values) -> RadialProfile:
    """Profile sampled at radii ``r``; each sample holds on the cell ending at it."""
    return RadialProfile("tabulated", r, values)


def profile_from_dict(doc: dict) -> RadialProfile:
    kind = doc.get("kind", "piecewise-constant-shells")
    if kind == "tabulated" and "r" in doc:
        return tabulated(doc["r"], doc["values"])
    if "shells" in doc:
        arr = np.asarray(doc["shells"], dtype=float).reshape(-1, 2)
        return RadialProfile(kind, arr[:, 0], arr[:, 1])
    if kind == "square-barrier":
        return square_barrier(float(doc["V0"]), float(doc["R"]))
    raise DomainError(f"cannot build a profile from keys {sorted(doc)}")


def load_profile(path) -> RadialProfile:
    with open(path) as fh:
        return profile_from_dict(json.load(fh))


@dataclass(frozen=True)
class ScaledPotential:
    """``base`` scaled to particle number ``N``.

    Exactly one of ``beta`` (``N^{-1+3 beta} V(N^beta x)``) or ``mu``
    (``N^mu V(N x)``) is set.  ``expand=True`` switches the ``mu`` family to
    the literal ``N^mu V(x / N)`` form.
    """

    base: RadialProfile
    N: float
    beta: float | None = None
    mu: float | None = None
    expand: bool = False
    steps_per_feature: int = field(default=2000, compare=False)

    @property
    def length_factor(self) -> float:
        if self.beta is not None:
            return self.N ** (-self.beta)
        return self.N if self.expand else 1.0 / self.N

    @property
    def amplitude_factor(self) -> float:
        if self.beta is not None:
            return self.N ** (-1.0 + 3.0 * self.beta)
        return self.N ** self.mu

    @property
    def edges(self) -> np.ndarray:
        return self.base.edges * self.length_factor

    @property
    def values(self) -> np.ndarray:
        return self.base.values * self.amplitude_factor

    @property
    def support_radius(self) -> float:
        return self.base.support_radius * self.length_factor

    @property
    def l1(self) -> float:
        return self.base.l1 * self.amplitude_factor * self.length_factor ** 3

    @property
    def sup(self) -> float:
        return self.base.sup * self.amplitude_factor

    @property
    def is_hard(self) -> bool:
        """True for the branch classified through the scattering length."""
        return self.mu is not None or self.beta == 1.0

    @cached_property
    def a(self) -> float:
        """Effective coupling at this N."""
        if self.is_hard:
            from .scattering import scat
            return 4.0 * np.pi * self.N * scat(self, steps_per_feature=self.steps_per_feature)
        return self.N * self.l1 / 2.0

    def __call__(self, r):
        return _evaluate(self.edges, self.values, r)

    def at(self, N: float) -> "ScaledPotential":
        return ScaledPotential(self.base, N, self.beta, self.mu, self.expand,
                               self.steps_per_feature)


def scale(base: RadialProfile, N: float, beta: float) -> ScaledPotential:
    # N = 1 is accepted: it is the fixed point of the scaling
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta={beta} outside (0, 1]")
    if N < 1:
        raise DomainError(f"N={N} must be at least 1")
    return ScaledPotential(base, float(N), beta=float(beta))


def scale_mu(base: RadialProfile, N: float, mu: float, expand: bool = False) -> ScaledPotential:
    if not mu > 2.0:
        raise DomainError(f"mu={mu} must exceed 2")
    if N < 1:
        raise DomainError(f"N={N} must be at least 1")
    return ScaledPotential(base, float(N), mu=float(mu), expand=expand)


# ---------------------------------------------------------------------------
# class membership
# ---------------------------------------------------------------------------

@dataclass
class ClassReport:
    branch: str                       # "L1" or "scat"
    rows: list                        # (N, L1, sup, scat, residual)
    a: float
    eta: float                        # math.inf when the limit is reached exactly
    verdict: str                      # PASS | FAIL | INCONCLUSIVE
    sup_scaling: float                # max over N of N^{1-3 beta} sup V_beta (L1 branch)
    notes: list = field(default_factory=list)

    columns = ("N", "L1", "sup", "scat", "residual")

    def summary(self) -> dict:
        return {"branch": self.branch, "a": self.a,
                "eta": None if math.isinf(self.eta) else self.eta,
                "verdict": self.verdict, "sup_scaling": self.sup_scaling,
                "notes": list(self.notes)}


def _power_tail(N, A, B, eta):
    return A + B * N ** (-eta)


def classify(p: ScaledPotential, seq: Sequence[float], rtol: float = 1e-9) -> ClassReport:
    """Empirical membership test over an increasing sequence of N.

    The soft branch (beta < 1) tracks ``N ||V_beta||_1 -> 2a``; the hard
    branch (beta = 1 or the mu family) tracks ``4 pi N scat(V) -> a``.
    """
    from .scattering import scat

    seq = [float(n) for n in seq]
    if len(seq) < 3 or any(b <= a for a, b in zip(seq, seq[1:])):
        raise DomainError("seq must be strictly increasing with at least 3 entries")

    pots = [p.at(n) for n in seq]
    scats = np.array([scat(q, steps_per_feature=p.steps_per_feature) for q in pots])
    Ns = np.array(seq)
    if p.is_hard:
        branch = "scat"
        target = 4.0 * np.pi * Ns * scats          # -> a
        scale_to_a = 1.0
    else:
        branch = "L1"
        target = np.array([n * q.l1 for n, q in zip(seq, pots)])  # -> 2a
        scale_to_a = 0.5

    notes = []
    spread = np.ptp(target) / max(abs(target).max(), 1e-300)
    if spread <= rtol:
        limit, eta = float(np.mean(target)), math.inf
    else:
        try:
            popt, _ = curve_fit(_power_tail, Ns, target,
                                p0=(target[-1], target[0] - target[-1], 1.0), maxfev=20000)
            limit, eta = float(popt[0]), float(popt[2])
        except RuntimeError:
            limit, eta = float(target[-1]), float("nan")
            notes.append("power-law tail fit did not converge")

    residual = np.abs(target - limit)
    rows = [(n, q.l1, q.sup, s, r) for n, q, s, r in zip(seq, pots, scats, residual)]
    a = limit * scale_to_a

    if p.beta is not None and p.beta < 1.0:
        sup_scaling = float(max(n ** (1.0 - 3.0 * p.beta) * q.sup for n, q in zip(seq, pots)))
    else:
        sup_scaling = float("nan")

    if a < 0 or not np.isfinite(a):
        verdict = "FAIL"
    elif math.isinf(eta):
        verdict = "PASS"
    elif not eta > 0:
        verdict = "FAIL"
    else:
        tol = rtol * abs(limit)
        increasing = np.any(np.diff(residual) > tol)
        verdict = "INCONCLUSIVE" if increasing else "PASS"
        if increasing:
            notes.append("residuals not monotone in N")
    return ClassReport(branch, rows, a, eta, verdict, sup_scaling, notes)
