"""Zero-energy radial scattering: scattering lengths and the compensated
microstructure ``f`` that flattens to one at a finite radius.

Convention: the scattering length of V is read off the solution of
``(-Laplace + V/2) f = 0`` with ``f -> 1 - scat/r``.  In terms of
``u(r) = r f(r)`` this is ``u'' = (V/2) u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .kernels import rk4_shells
from .potentials import DomainError, ScaledPotential

MIN_STEPS_PER_FEATURE = 20
# cap on sqrt(|q|) * width per sub-shell so the growing branch stays representable
_MAX_PHASE = 50.0


class SolverError(RuntimeError):
    """The radial integration produced an unusable solution."""


class ResolutionError(DomainError):
    """Mesh too coarse for the potential features."""


class ParameterError(DomainError):
    """Compensator parameters incompatible with the potential."""


def _profile_arrays(V):
    edges = np.asarray(V.edges, dtype=float)
    values = np.asarray(V.values, dtype=float)
    return edges, values


def _build_shells(segments, steps_per_feature):
    """Expand ``(r_in, r_out, q)`` segments into integration shells.

    Segments whose ``sqrt(|q|) * width`` is large are split so that each piece
    gets at least ``steps_per_feature`` RK4 steps and a bounded phase.
    """
    if steps_per_feature < MIN_STEPS_PER_FEATURE:
        raise ResolutionError(
            f"{steps_per_feature} steps per feature is below the minimum {MIN_STEPS_PER_FEATURE}")
    edges, qs, nsteps = [segments[0][0]], [], []
    for r_in, r_out, q in segments:
        width = r_out - r_in
        if width <= 0:
            continue
        phase = math.sqrt(abs(q)) * width
        pieces = max(1, math.ceil(phase / _MAX_PHASE))
        n = max(steps_per_feature, math.ceil(40.0 * phase / pieces))
        n += n % 2  # even counts keep Simpson's rule exact per shell
        for i in range(1, pieces + 1):
            edges.append(r_in + width * i / pieces)
            qs.append(q)
            nsteps.append(n)
    return np.array(edges), np.array(qs), np.array(nsteps, dtype=np.int64)


def _integrate(segments, steps_per_feature):
    edges, qs, nsteps = _build_shells(segments, steps_per_feature)
    r, u, up, ls = rk4_shells(edges, qs, nsteps, edges[0], 1.0)
    breaks = np.concatenate([[0], np.cumsum(nsteps)])
    return r, u, up, ls, edges, qs, breaks


def _potential_segments(V, coef=0.5):
    edges, values = _profile_arrays(V)
    inner = np.concatenate([[0.0], edges[:-1]])
    keep = edges <= (V.support_radius if V.support_radius > 0 else 0.0)
    return [(a, b, coef * v) for a, b, v, k in zip(inner, edges, values, keep) if k]


def scat(V, r_max: float | None = None, steps_per_feature: int = 2000) -> float:
    """Scattering length of a nonnegative radial potential."""
    support = V.support_radius
    if support == 0.0:
        return 0.0
    if r_max is None:
        r_max = 8.0 * support
    if r_max < 4.0 * support:
        raise DomainError(f"r_max={r_max} must be at least 4x the support radius {support}")
    segs = _potential_segments(V)
    segs += [(support, r_max / 2.0, 0.0), (r_max / 2.0, r_max, 0.0)]
    r, u, up, ls, edges, _, breaks = _integrate(segs, steps_per_feature)
    if np.any(u[1:] <= 0):
        raise SolverError("radial solution has a node; a repulsive potential cannot produce one")
    i1, i2 = breaks[-2], breaks[-1]
    r1, r2 = r[i1], r[i2]
    u1, u2 = u[i1], u[i2] * math.exp(ls[i2] - ls[i1])
    c = (u2 - u1) / (r2 - r1)
    if not c > 0:
        raise SolverError(f"nonpositive asymptotic slope {c}")
    return float(r1 - u1 / c)


@dataclass(frozen=True)
class CompensatedPotential:
    inner: ScaledPotential
    beta1: float
    W_height: float
    W_inner_radius: float
    W_outer_radius: float
    a_N: float
    scat_length: float

    def W(self, r):
        r = np.asarray(r, dtype=float)
        return np.where((r > self.W_inner_radius) & (r < self.W_outer_radius), self.W_height, 0.0)

    @property
    def support_radius(self) -> float:
        return self.W_outer_radius


@dataclass
class ScatteringProfile:
    r: np.ndarray
    u: np.ndarray           # r f(r), normalised like f
    f: np.ndarray
    scat_length: float
    K: float
    R_flat: float | None
    breaks: np.ndarray      # node indices of shell edges
    shell_V: np.ndarray     # V on each integration shell
    shell_W: np.ndarray
    V: np.ndarray
    W: np.ndarray

    @property
    def g(self) -> np.ndarray:
        return 1.0 - self.f

    def integrate(self, values, upto=None, shell_weights=None) -> float:
        """Integral of a radial array over R^3, shell by shell (Simpson).

        ``shell_weights`` multiplies each shell's contribution; use it for
        piecewise-constant factors whose jumps sit on shell edges.
        """
        total = 0.0
        for s in range(len(self.breaks) - 1):
            lo, hi = self.breaks[s], self.breaks[s + 1]
            if upto is not None and self.r[lo] >= upto * (1 - 1e-14):
                break
            seg = slice(lo, hi + 1)
            part = simpson(values[seg] * self.r[seg] ** 2, x=self.r[seg])
            total += part if shell_weights is None else shell_weights[s] * part
        return 4.0 * np.pi * total

    def to_dict(self) -> dict:
        return {"r": self.r.tolist(), "f": self.f.tolist(), "V": self.V.tolist(),
                "W": self.W.tolist(), "scat": self.scat_length, "K": self.K,
                "R_flat": self.R_flat}


def _flat_residual(r, r1, s, k):
    theta = k * (r - r1)
    u = (r1 - s) * math.cos(theta) + math.sin(theta) / k
    du = -k * (r1 - s) * math.sin(theta) + math.cos(theta)
    return du * r - u


def build_compensator(V_beta: ScaledPotential, beta1: float) -> CompensatedPotential:
    """Ring potential W on (N^-beta1, R) that cancels the scattering length of V_beta.

    The ring height is fixed at ``a_N N^{3 beta1}`` with ``a_N = 4 pi scat(V_beta)``;
    ``R`` is the first radius beyond ``N^-beta1`` where the compensated
    solution has zero slope.  Outside V's support the solution is known in
    closed form, so ``R`` is found by root bracketing on that branch.
    """
    beta = 1.0 if V_beta.beta is None else V_beta.beta
    if not 0.0 < beta1 < beta <= 1.0:
        raise DomainError(f"need 0 < beta1 < beta <= 1, got beta1={beta1}, beta={beta}")
    N = V_beta.N
    r1 = N ** (-beta1)
    if V_beta.support_radius > r1:
        raise ParameterError(
            f"support of V ({V_beta.support_radius:.3g}) reaches past N^-beta1 = {r1:.3g}; "
            "increase N or beta - beta1")
    s = scat(V_beta, steps_per_feature=V_beta.steps_per_feature)
    a_N = 4.0 * np.pi * s
    height = a_N * N ** (3.0 * beta1)
    if s == 0.0:
        return CompensatedPotential(V_beta, beta1, height, r1, r1, a_N, s)
    k = math.sqrt(height / 2.0)
    r_node = r1 + (math.pi - math.atan(k * (r1 - s))) / k
    lo, hi = _flat_residual(r1, r1, s, k), _flat_residual(r_node, r1, s, k)
    if not (lo > 0 and hi < 0):
        raise ParameterError(
            f"no flatness radius before the first node (F(r1)={lo:.3g}, F(node)={hi:.3g}); "
            "beta1 too small for this N")
    R = brentq(_flat_residual, r1, r_node, args=(r1, s, k), xtol=1e-12 * r1, rtol=1e-15)
    return CompensatedPotential(V_beta, beta1, height, r1, R, a_N, s)


def zero_energy_state(V, W: CompensatedPotential | None = None, r_max: float | None = None,
                      steps_per_feature: int = 2000) -> ScatteringProfile:
    """Zero-energy solution on a radial mesh.

    Without ``W`` the result is normalised so that ``f -> 1`` at infinity.  With
    ``W`` it is normalised so that ``f(R_flat) = 1``; ``K`` is then the ratio
    between the two normalisations inside ``N^-beta1``.
    """
    support = V.support_radius
    segs = _potential_segments(V)
    lead = support
    if W is not None:
        if W.inner is not V and W.inner != V:
            raise DomainError("compensator was built for a different potential")
        segs.append((support, W.W_inner_radius, 0.0))
        segs.append((W.W_inner_radius, W.W_outer_radius, -0.5 * W.W_height))
        lead = W.W_outer_radius
    if lead == 0.0:
        lead = 1.0
    if r_max is None:
        r_max = 8.0 * lead
    segs += [(lead, r_max / 2.0, 0.0), (r_max / 2.0, r_max, 0.0)]
    segs = [sg for sg in segs if sg[1] > sg[0]]
    if segs[0][0] > 0.0:
        segs.insert(0, (0.0, segs[0][0], 0.0))
    r, u, up, ls, edges, _, breaks = _integrate(segs, steps_per_feature)
    # undo the running rescale relative to the outermost node
    w = np.exp(ls - ls[-1])
    u, up = u * w, up * w

    # slope of the bare solution just outside V: first node past the support
    i_out = int(np.searchsorted(r, support, side="left")) if support > 0 else 0
    c_bare = up[i_out]
    s = float(r[i_out] - u[i_out] / c_bare) if support > 0 else 0.0

    if W is None:
        norm, K, R_flat = c_bare, 1.0, None
    else:
        iR = int(np.argmin(np.abs(r - W.W_outer_radius)))
        norm = u[iR] / r[iR]
        K = float(norm / c_bare)
        R_flat = W.W_outer_radius
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(r > 0, u / np.where(r > 0, r, 1.0), up) / norm
    Vr = np.asarray(V(r), dtype=float)
    Wr = W.W(r) if W is not None else np.zeros_like(r)
    mid = 0.5 * (edges[:-1] + edges[1:])
    shell_V = np.asarray(V(mid), dtype=float)
    shell_W = W.W(mid) if W is not None else np.zeros_like(mid)
    return ScatteringProfile(r, u / norm, f, s, K, R_flat, breaks, shell_V, shell_W, Vr, Wr)


def g_norms(p: ScatteringProfile) -> dict:
    """L1, L2, L3 norms over R^3 of ``g = 1 - f`` (zero beyond ``R_flat``)."""
    if p.R_flat is None:
        raise DomainError("g is only integrable for a compensated profile")
    g = np.abs(p.g)
    return {"L1": p.integrate(g, upto=p.R_flat),
            "L2": p.integrate(g ** 2, upto=p.R_flat) ** 0.5,
            "L3": p.integrate(g ** 3, upto=p.R_flat) ** (1.0 / 3.0)}


def microstructure(V_beta: ScaledPotential, beta1: float):
    """Compensator, profile and the integrals the microstructure checks need."""
    comp = build_compensator(V_beta, beta1)
    prof = zero_energy_state(V_beta, comp, steps_per_feature=V_beta.steps_per_feature)
    # integrate V f and W f shell by shell; the integrands jump only at shell edges
    Vf = prof.integrate(prof.f, upto=comp.W_outer_radius, shell_weights=prof.shell_V)
    Wf = prof.integrate(prof.f, upto=comp.W_outer_radius, shell_weights=prof.shell_W)
    return comp, prof, {"int_Vf": Vf, "int_Wf": Wf,
                        "zero_scat_residual": abs(Vf - Wf) / max(abs(Vf), 1e-300)}
