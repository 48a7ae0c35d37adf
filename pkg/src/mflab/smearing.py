"""Smeared ball potential U and the Newtonian potential h of V_beta - U.

Sign convention: ``h = -(1/4 pi) * integral |x-y|^-1 (V - U)(y) dy`` so that
``Laplace h = V - U`` holds without extra factors.  Both V and U are piecewise
constant on shells, so h, h' and the enclosed charge are closed-form per shell.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .potentials import DomainError, ScaledPotential, scale, square_barrier

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


@dataclass
class SmearedPair:
    V: ScaledPotential
    beta1: float
    U_height: float
    U_radius: float
    edges: np.ndarray          # merged shell edges of rho = V - U
    rho: np.ndarray            # charge density per shell
    Q_edge: np.ndarray         # enclosed charge at each outer edge
    T_edge: np.ndarray         # int_{edge}^inf rho s ds
    h_table: tuple = ()        # (r, h) sampled on the stored mesh
    meta: dict = field(default_factory=dict)

    def _locate(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.edges, r, side="left")
        return r, np.minimum(idx, len(self.rho))

    def charge(self, r):
        """Charge of rho inside radius r."""
        r, idx = self._locate(r)
        rho = np.concatenate([self.rho, [0.0]])[idx]
        inner = np.concatenate([[0.0], self.edges])[idx]
        q_in = np.concatenate([[0.0], self.Q_edge])[idx]
        return q_in + 4.0 * np.pi / 3.0 * rho * (r ** 3 - inner ** 3)

    def h(self, r):
        r, idx = self._locate(r)
        rho = np.concatenate([self.rho, [0.0]])[idx]
        outer = np.concatenate([self.edges, [np.inf]])[idx]
        t_out = np.concatenate([self.T_edge, [0.0]])[idx]
        outer = np.where(np.isinf(outer), r, outer)
        T = t_out + 0.5 * rho * (outer ** 2 - r ** 2)
        Q = self.charge(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            coulomb = np.where(r > 0, Q / (4.0 * np.pi * np.where(r > 0, r, 1.0)), 0.0)
        return -coulomb - T

    def dh(self, r):
        """Radial derivative, from the enclosed charge (Gauss)."""
        r = np.asarray(r, dtype=float)
        Q = self.charge(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r > 0, Q / (4.0 * np.pi * np.where(r > 0, r, 1.0) ** 2), 0.0)

    def U(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.U_radius, self.U_height, 0.0)

    @property
    def outer_radius(self) -> float:
        return float(self.edges[-1])

    @property
    def neutrality_residual(self) -> float:
        return float(abs(self.Q_edge[-1]) / max(self.V.l1, 1e-300))

    def U_potential(self) -> ScaledPotential | None:
        """U as a beta1-scaled ball, so it can be classified like any V."""
        if self.beta1 <= 0:
            return None
        base = square_barrier(3.0 / (4.0 * np.pi) * self.V.N * self.V.l1, 1.0)
        return scale(base, self.V.N, self.beta1)

    def mesh(self, per_shell: int):
        """Shell-aligned mesh, Chebyshev-clustered toward every shell edge."""
        inner = np.concatenate([[0.0], self.edges[:-1]])
        t = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, per_shell + 1)))
        pieces = [a + (b - a) * t[:-1] for a, b in zip(inner, self.edges)]
        return np.concatenate(pieces + [[self.edges[-1]]])


def build_smeared(V: ScaledPotential, beta1: float, per_shell: int = 400) -> SmearedPair:
    beta = 1.0 if V.beta is None else V.beta
    if beta1 > beta:
        raise DomainError(f"beta1={beta1} exceeds beta={beta}")
    if beta1 < 0:
        raise DomainError(f"beta1={beta1} must be nonnegative")
    N = V.N
    U_radius = N ** (-beta1)
    U_height = 3.0 / (4.0 * np.pi) * V.l1 * N ** (3.0 * beta1)

    v_edges = np.asarray(V.edges)[np.asarray(V.values) != 0]
    edges = np.unique(np.concatenate([v_edges, V.edges[V.edges <= V.support_radius], [U_radius]]))
    edges = edges[edges > 0]
    mid = 0.5 * (np.concatenate([[0.0], edges[:-1]]) + edges)
    rho = np.asarray(V(mid), dtype=float) - np.where(mid < U_radius, U_height, 0.0)
    inner = np.concatenate([[0.0], edges[:-1]])
    Q_edge = np.cumsum(4.0 * np.pi / 3.0 * rho * (edges ** 3 - inner ** 3))
    t_shell = 0.5 * rho * (edges ** 2 - inner ** 2)
    T_edge = np.concatenate([np.cumsum(t_shell[::-1])[::-1][1:], [0.0]])
    pair = SmearedPair(V, beta1, U_height, U_radius, edges, rho, Q_edge, T_edge)
    r = pair.mesh(per_shell)
    pair.h_table = (r, pair.h(r))
    pair.meta = {"mesh": "chebyshev-clustered per shell", "points_per_shell": per_shell,
                 "shells": int(len(edges))}
    return pair


def _radial_norm(pair: SmearedPair, func, p: float) -> float:
    inner = np.concatenate([[0.0], pair.edges[:-1]])
    total = 0.0
    for a, b in zip(inner, pair.edges):
        x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
        total += 0.5 * (b - a) * np.sum(_GL_WEIGHTS * np.abs(func(x)) ** p * x ** 2)
    return (4.0 * np.pi * total) ** (1.0 / p)


def h_norms(pair: SmearedPair) -> dict:
    return {"L2": _radial_norm(pair, pair.h, 2.0),
            "L3": _radial_norm(pair, pair.h, 3.0),
            "grad_L1": _radial_norm(pair, pair.dh, 1.0),
            "grad_L2": _radial_norm(pair, pair.dh, 2.0)}


def laplacian_residual(pair: SmearedPair, per_shell: int = 4000) -> float:
    """Relative L2 mismatch between a discrete radial Laplacian of h and V - U.

    Uses ``(1/r^2) d/dr (r^2 dh/dr)`` with geometric-mean face weights, which
    is exact for ``A + B/r + C r^2``.  Stencils never straddle a shell edge.
    """
    inner = np.concatenate([[0.0], pair.edges[:-1]])
    num = den = 0.0
    for a, b, rho in zip(inner, pair.edges, pair.rho):
        r = np.linspace(a, b, per_shell + 1)
        if a == 0.0:
            r = r[1:]
        h = pair.h(r)
        rl, rc, rr = r[:-2], r[1:-1], r[2:]
        lap = (rc * rr * (h[2:] - h[1:-1]) / (rr - rc) - rl * rc * (h[1:-1] - h[:-2]) / (rc - rl))
        lap /= rc ** 2 * 0.5 * (rr - rl)
        w = rc ** 2 * 0.5 * (rr - rl)
        num += np.sum(w * (lap - rho) ** 2)
        den += np.sum(w * rho ** 2)
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))


def h_pointwise_constant(pair: SmearedPair) -> float:
    """Smallest C with ``|h(r)| <= C / (N r)`` on the stored mesh."""
    r, h = pair.h_table
    keep = r > 0
    return float(np.max(np.abs(h[keep]) * r[keep] * pair.V.N))
