"""Exact few-body dynamics on a periodic grid and the condensate projector algebra.

States are stored as arrays of shape ``(M,) * (d * N)`` and normalised with the
grid measure, ``sum |Psi|^2 dV^N = 1``.  Particle ``j`` owns axes
``j*d .. j*d + d - 1``.

Two ways to apply a weight operator ``m^ = sum_k m(k) P_k`` are provided:
the literal expansion over the ``2^N`` products of ``p_j`` / ``q_j``, and a
rotation into a one-body basis whose first vector is ``phi``, where ``P_k``
is diagonal (it counts indices other than the first).  They agree to
round-off and the second is much cheaper.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from . import gp
from .gp import Field, TrapSchedule
from .potentials import DomainError
from .weights import WeightVector, n_weights

DEFAULT_BUDGET = 2 ** 24
MAX_PATTERN_N = 6


class CapacityError(RuntimeError):
    pass


def check_capacity(N: int, M: int, d: int = 1, budget: int = DEFAULT_BUDGET):
    size = M ** (d * N)
    if size > budget:
        n_max = int(math.floor(math.log(budget) / (d * math.log(M))))
        m_max = int(math.floor(budget ** (1.0 / (d * N)) + 1e-9))
        raise CapacityError(f"M^(dN) = {M}^{d * N} = {size} exceeds the budget {budget}; "
                            f"at M={M} the largest feasible N is {n_max}, at N={N} the largest M is {m_max}")


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass
class FockState:
    N: int
    d: int
    M: int
    L: float
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.M,) * (self.d * self.N):
            raise DomainError(f"amplitude shape {self.amplitudes.shape} does not match "
                              f"N={self.N}, d={self.d}, M={self.M}")

    @property
    def dV(self) -> float:
        return (self.L / self.M) ** self.d

    @property
    def measure(self) -> float:
        return self.dV ** self.N

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.measure))

    def with_amplitudes(self, amps) -> "FockState":
        return replace(self, amplitudes=amps)

    def inner(self, other: "FockState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes) * self.measure)

    def particles(self) -> np.ndarray:
        """View with one (flattened) axis per particle."""
        return self.amplitudes.reshape((self.M ** self.d,) * self.N)

    def symmetry_residual(self, rng=None, trials: int = 10) -> float:
        """max |Psi o sigma - Psi| over random transpositions (all of them if few)."""
        pairs = list(itertools.combinations(range(self.N), 2))
        if rng is not None and len(pairs) > trials:
            pairs = [pairs[i] for i in rng.choice(len(pairs), trials, replace=False)]
        P = self.particles()
        worst = 0.0
        for j, k in pairs:
            worst = max(worst, float(np.max(np.abs(np.swapaxes(P, j, k) - P))))
        return worst


def product_state(phi: Field, N: int, budget: int = DEFAULT_BUDGET) -> FockState:
    check_capacity(N, phi.M, phi.d, budget)
    v = phi.psi.reshape(-1)
    out = v
    for _ in range(N - 1):
        out = np.multiply.outer(out, v)
    return FockState(N, phi.d, phi.M, phi.L, out.reshape((phi.M,) * (phi.d * N)))


def symmetrize(state: FockState, normalize: bool = True) -> FockState:
    P = state.particles()
    acc = np.zeros_like(P)
    for perm in itertools.permutations(range(state.N)):
        acc += np.transpose(P, perm)
    out = state.with_amplitudes(acc.reshape(state.amplitudes.shape) / math.factorial(state.N))
    if normalize:
        out = out.with_amplitudes(out.amplitudes / out.norm())
    return out


def random_symmetric(N: int, d: int, M: int, L: float, rng) -> FockState:
    shape = (M,) * (d * N)
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return symmetrize(FockState(N, d, M, L, raw))


# ---------------------------------------------------------------------------
# Hamiltonian pieces
# ---------------------------------------------------------------------------

@dataclass
class PairPotential:
    """Pair interaction sampled on displacements, minimum-image convention."""
    table: np.ndarray          # shape (M,)*d, indexed by displacement mod M
    range_: float              # largest |r| where the table is nonzero
    label: str = "custom"

    @classmethod
    def from_radial(cls, fn, d: int, M: int, L: float, label: str = "radial") -> "PairPotential":
        idx = np.fft.fftfreq(M, d=1.0 / M)         # 0, 1, ..., -1 : minimum image
        r = np.sqrt(sum(x ** 2 for x in np.meshgrid(*([idx * L / M] * d), indexing="ij")))
        table = np.asarray(fn(r), dtype=float)
        nz = r[table != 0]
        pot = cls(table, float(nz.max()) if nz.size else 0.0, label)
        if pot.range_ >= L / 4:
            raise DomainError(f"interaction range {pot.range_:.3g} must stay below L/4 = {L / 4:.3g}")
        return pot

    @classmethod
    def contact(cls, strength: float, d: int, M: int, L: float) -> "PairPotential":
        """Grid delta with integral ``strength``."""
        dV = (L / M) ** d
        return cls.from_radial(lambda r: np.where(r == 0, strength / dV, 0.0), d, M, L, "contact")

    @classmethod
    def zero(cls, d: int, M: int) -> "PairPotential":
        return cls(np.zeros((M,) * d), 0.0, "zero")

    def integral(self, L: float) -> float:
        M, d = self.table.shape[0], self.table.ndim
        return float(np.sum(self.table)) * (L / M) ** d


def _particle_index_grids(N, d, M):
    """Integer grid index of every axis, broadcastable to the state shape."""
    nd = N * d
    out = []
    for ax in range(nd):
        shape = [1] * nd
        shape[ax] = M
        out.append(np.arange(M).reshape(shape))
    return out


def pair_diagonal(V: PairPotential, N: int, d: int, M: int) -> np.ndarray:
    idx = _particle_index_grids(N, d, M)
    diag = np.zeros((M,) * (N * d))
    for j, k in itertools.combinations(range(N), 2):
        sel = tuple((idx[j * d + c] - idx[k * d + c]) % M for c in range(d))
        diag = diag + V.table[sel]
    return diag


def one_body_diagonal(values: np.ndarray, N: int, d: int) -> np.ndarray:
    """sum_j f(x_j) for a one-body grid function f."""
    M = values.shape[0]
    out = np.zeros((M,) * (N * d))
    for j in range(N):
        shape = [1] * (N * d)
        shape[j * d:(j + 1) * d] = [M] * d
        out = out + values.reshape(shape)
    return out


def kinetic_symbol(N: int, d: int, M: int, L: float) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.fftfreq(M, d=L / M)
    # every axis is an independent 1D kinetic term
    return one_body_diagonal(k ** 2, N * d, 1)


class Hamiltonian:
    """``-sum Laplace_j + sum_{j<k} V(x_j - x_k) + sum_j A_t(x_j)`` on the grid."""

    def __init__(self, N: int, d: int, M: int, L: float, V: PairPotential, trap: TrapSchedule,
                 budget: int = DEFAULT_BUDGET):
        check_capacity(N, M, d, budget)
        self.N, self.d, self.M, self.L = N, d, M, L
        self.V, self.trap = V, trap
        self.kin = kinetic_symbol(N, d, M, L)
        self.pair = pair_diagonal(V, N, d, M)
        self.trap_shape = one_body_diagonal(trap.shape((d, M, L)), N, d)

    def diagonal(self, t: float = 0.0) -> np.ndarray:
        return self.pair + self.trap.s(t) * self.trap_shape

    def apply(self, psi: FockState, t: float = 0.0) -> FockState:
        a = psi.amplitudes
        kin = np.fft.ifftn(self.kin * np.fft.fftn(a))
        return psi.with_amplitudes(kin + self.diagonal(t) * a)

    def expectation(self, psi: FockState, t: float = 0.0) -> float:
        a = psi.amplitudes
        ak = np.fft.fftn(a)
        kin = np.sum(self.kin * np.abs(ak) ** 2) / a.size
        pot = np.sum(self.diagonal(t) * np.abs(a) ** 2)
        return float((kin + pot) * psi.measure)


def evolve(psi: FockState, H: Hamiltonian, dt: float, steps: int, t0: float = 0.0) -> FockState:
    """Strang steps: half diagonal phase, kinetic in Fourier space, half phase."""
    a = psi.amplitudes
    kin = np.exp(-1j * dt * H.kin)
    t = t0
    for _ in range(steps):
        half = np.exp(-0.5j * dt * H.diagonal(t + 0.5 * dt))
        a = half * a
        a = np.fft.ifftn(kin * np.fft.fftn(a))
        a = half * a
        t += dt
    return psi.with_amplitudes(a)


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------

class ProjectorContext:
    """Projectors ``p_j = |phi(x_j)><phi(x_j)|`` for a reference one-body state."""

    def __init__(self, phi: Field):
        self.phi = phi
        self.vec = phi.psi.reshape(-1) * math.sqrt(phi.dV)   # orthonormal-basis coefficients
        if abs(np.linalg.norm(self.vec) - 1.0) > 1e-10:
            raise DomainError("reference state must be normalised")
        self._basis = None

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.vec, self.vec.conj())

    @property
    def basis(self) -> np.ndarray:
        """Unitary whose first column is phi (orthonormal grid coefficients)."""
        if self._basis is None:
            n = self.vec.size
            seed = np.eye(n, dtype=complex)
            seed[:, 0] = self.vec
            # move the largest component of phi first so the QR seed is well conditioned
            i = int(np.argmax(np.abs(self.vec)))
            if i != 0:
                seed[:, i] = np.eye(n)[:, 0]
            q, _ = np.linalg.qr(seed)
            phase = np.vdot(q[:, 0], self.vec)
            q[:, 0] *= phase / abs(phase)
            self._basis = q
        return self._basis

    # one-body operators on particle j ------------------------------------

    def apply_p(self, psi: FockState, j: int) -> FockState:
        P = psi.particles()
        v = self.vec
        overlap = np.tensordot(v.conj(), P, axes=([0], [j]))    # particle j removed
        out = np.moveaxis(np.multiply.outer(v, overlap), 0, j)
        return psi.with_amplitudes(out.reshape(psi.amplitudes.shape))

    def apply_q(self, psi: FockState, j: int) -> FockState:
        return psi.with_amplitudes(psi.amplitudes - self.apply_p(psi, j).amplitudes)

    def apply_pattern(self, psi: FockState, pattern) -> FockState:
        """prod_j p_j^{1-a_j} q_j^{a_j}."""
        out = psi
        for j, a in enumerate(pattern):
            out = self.apply_q(out, j) if a else self.apply_p(out, j)
        return out

    # weight operators ------------------------------------------------------

    def apply_weight(self, psi: FockState, w: WeightVector, d: int = 0,
                     method: str = "rotate") -> FockState:
        """``m^_d psi`` with ``m^_d = sum_k m(k + d) P_k``; ``m`` is zero outside 0..N."""
        if w.N != psi.N:
            raise DomainError(f"weight built for N={w.N}, state has N={psi.N}")
        coeff = w.at(np.arange(psi.N + 1) + d)
        if method == "patterns":
            return self._weight_patterns(psi, coeff)
        if method == "rotate":
            return self._weight_rotate(psi, coeff)
        raise DomainError(f"unknown method {method!r}")

    def apply_P(self, psi: FockState, k: int) -> FockState:
        coeff = np.zeros(psi.N + 1)
        if 0 <= k <= psi.N:
            coeff[k] = 1.0
        return self._weight_rotate(psi, coeff)

    def _weight_patterns(self, psi, coeff):
        if psi.N > MAX_PATTERN_N:
            raise CapacityError(f"pattern expansion enumerates 2^N terms; N={psi.N} exceeds {MAX_PATTERN_N}")
        acc = np.zeros_like(psi.amplitudes)

        def walk(state, j, count):
            nonlocal acc
            if j == psi.N:
                if coeff[count] != 0.0:
                    acc = acc + coeff[count] * state.amplitudes
                return
            walk(self.apply_p(state, j), j + 1, count)
            walk(self.apply_q(state, j), j + 1, count + 1)

        walk(psi, 0, 0)
        return psi.with_amplitudes(acc)

    def to_rotated(self, psi: FockState) -> np.ndarray:
        U = self.basis.conj().T * math.sqrt(psi.dV)   # grid amplitudes -> orthonormal rotated coeffs
        out = psi.particles()
        for j in range(psi.N):
            out = np.moveaxis(np.tensordot(U, out, axes=([1], [j])), 0, j)
        return out

    def from_rotated(self, coeffs: np.ndarray, like: FockState) -> FockState:
        U = self.basis / math.sqrt(like.dV)
        out = coeffs
        for j in range(like.N):
            out = np.moveaxis(np.tensordot(U, out, axes=([1], [j])), 0, j)
        return like.with_amplitudes(out.reshape(like.amplitudes.shape))

    def excitation_count(self, N: int) -> np.ndarray:
        n1 = self.vec.size
        count = np.zeros((n1,) * N, dtype=np.int64)
        for j in range(N):
            shape = [1] * N
            shape[j] = n1
            count = count + (np.arange(n1) != 0).reshape(shape)
        return count

    def _weight_rotate(self, psi, coeff):
        c = self.to_rotated(psi)
        return self.from_rotated(coeff[self.excitation_count(psi.N)] * c, psi)

    def weight_expectation(self, psi: FockState, w: WeightVector, d: int = 0) -> float:
        c = self.to_rotated(psi)
        coeff = w.at(np.arange(psi.N + 1) + d)
        return float(np.sum(coeff[self.excitation_count(psi.N)] * np.abs(c) ** 2))

    def excitation_distribution(self, psi: FockState) -> np.ndarray:
        """<Psi, P_k Psi> for k = 0..N."""
        c = self.to_rotated(psi)
        return np.bincount(self.excitation_count(psi.N).ravel(), weights=np.abs(c.ravel()) ** 2,
                           minlength=psi.N + 1)


# ---------------------------------------------------------------------------
# reduced density
# ---------------------------------------------------------------------------

@dataclass
class OneBodyDensity:
    matrix: np.ndarray          # orthonormal grid basis

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[::-1]

    def hermiticity(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def trace_distance(self, ctx: ProjectorContext) -> float:
        ev = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T) - ctx.matrix)
        return float(0.5 * np.sum(np.abs(ev)))


def reduced_density(psi: FockState) -> OneBodyDensity:
    n1 = psi.M ** psi.d
    C = psi.amplitudes.reshape(n1, -1) * math.sqrt(psi.measure)
    return OneBodyDensity(C @ C.conj().T)


# ---------------------------------------------------------------------------
# counting functional
# ---------------------------------------------------------------------------

def multiply_two_body(psi: FockState, f: np.ndarray, j: int = 0, k: int = 1) -> FockState:
    """Multiply by f(x_j, x_k) given as an (M^d, M^d) table."""
    P = psi.particles()
    shape = [1] * psi.N
    shape[j] = shape[k] = f.shape[0]
    ff = f if j < k else f.T
    return psi.with_amplitudes((ff.reshape(shape) * P).reshape(psi.amplitudes.shape))


def pair_table(V: PairPotential, d: int, M: int) -> np.ndarray:
    """V(x_1 - x_2) as an (M^d, M^d) table."""
    idx = np.indices((M,) * d).reshape(d, -1)
    disp = tuple((idx[c][:, None] - idx[c][None, :]) % M for c in range(d))
    return V.table[disp]


def Z_table(V: PairPotential, phi: Field, a: float, N: int) -> np.ndarray:
    rho = (np.abs(phi.psi) ** 2).reshape(-1)
    return pair_table(V, phi.d, phi.M) - 2.0 * a / (N - 1) * (rho[:, None] + rho[None, :])


def energy_per_particle(psi: FockState, H: Hamiltonian, t: float = 0.0) -> float:
    return H.expectation(psi, t) / psi.N


def alpha(psi: FockState, ctx: ProjectorContext, H: Hamiltonian, a: float, t: float = 0.0,
          parts: bool = False):
    """<Psi, n^ Psi> + |E(Psi) - E_GP(phi)|."""
    nhat = ctx.weight_expectation(psi, n_weights(psi.N))
    e_mb = energy_per_particle(psi, H, t)
    e_gp = gp.energy(ctx.phi, H.trap, a, t)
    val = nhat + abs(e_mb - e_gp)
    if parts:
        return val, {"n": nhat, "E": e_mb, "E_GP": e_gp}
    return val


def alpha_prime(psi: FockState, ctx: ProjectorContext, H: Hamiltonian, a: float,
                t: float = 0.0) -> dict:
    """The three derivative functionals, evaluated as written (signed for 1 and 2)."""
    N = psi.N
    if N < 2:
        raise DomainError("alpha' needs N >= 2")
    n = n_weights(N)
    Z = Z_table(H.V, ctx.phi, a, N)

    # the functionals use an inner product linear in its first slot,
    # i.e. the complex conjugate of FockState.inner
    def sandwich(x: FockState) -> complex:
        return multiply_two_body(x, Z).inner(psi)

    X = ctx.apply_weight(psi, n).amplitudes - ctx.apply_weight(psi, n, 2).amplitudes
    X = ctx.apply_p(ctx.apply_p(psi.with_amplitudes(X), 0), 1)
    a1 = 2.0 * N * (N - 1) * sandwich(X).imag

    Y = ctx.apply_weight(psi, n).amplitudes - ctx.apply_weight(psi, n, 1).amplitudes
    Y = ctx.apply_p(ctx.apply_q(psi.with_amplitudes(Y), 1), 0)
    a2 = 4.0 * N * (N - 1) * sandwich(Y).imag

    Adot = H.trap.A_dot(ctx.phi, t)
    rho1 = marginal_density(psi)
    a0 = abs(float(np.sum(Adot.reshape(-1) * rho1)) * psi.dV - gp.energy_rate(ctx.phi, H.trap, t))
    return {"a0": a0, "a1": float(a1), "a2": float(a2)}


def marginal_density(psi: FockState) -> np.ndarray:
    """Diagonal of the one-body density in grid measure: integral |Psi|^2 over x_2..x_N."""
    P = np.abs(psi.particles()) ** 2
    return P.reshape(P.shape[0], -1).sum(axis=1) * psi.dV ** (psi.N - 1)


def commutator_rate(psi: FockState, ctx: ProjectorContext, H: Hamiltonian, a: float) -> float:
    """``i <Psi, [H - H_GP, n^] Psi>`` computed directly from the operators.

    This is the exact time derivative of ``<Psi_t, n^{phi_t} Psi_t>``; it
    equals ``(alpha'_1 + alpha'_2) / 2`` because H sums over unordered pairs.
    """
    n = n_weights(psi.N)
    rho = np.abs(ctx.phi.psi) ** 2
    diff = H.pair - 2.0 * a * one_body_diagonal(rho, psi.N, psi.d)
    nPsi = ctx.apply_weight(psi, n)
    # i <[D, n^]> = i (<Psi, D n^ Psi> - c.c.) = -2 Im <Psi, D n^ Psi>
    val = np.vdot(psi.amplitudes, diff * nPsi.amplitudes) * psi.measure
    return float(-2.0 * val.imag)


# ---------------------------------------------------------------------------
# convolution identity
# ---------------------------------------------------------------------------

def correlate(f: np.ndarray, rho: np.ndarray, dV: float) -> np.ndarray:
    """g(y) = sum_x f(x - y) rho(x) dV on the torus (f indexed by displacement)."""
    return np.fft.ifftn(np.conj(np.fft.fftn(np.conj(f))) * np.fft.fftn(rho)) * dV


def convolution_identity_check(ctx: ProjectorContext, f: np.ndarray, rng=None, samples: int = 20,
                               N: int = 2) -> float:
    """max relative residual of ``p_1 f(x_1 - x_2) p_1 - p_1 (f * |phi|^2)(x_2)``."""
    rng = np.random.default_rng(0) if rng is None else rng
    phi = ctx.phi
    d, M, L = phi.d, phi.M, phi.L
    f = np.asarray(f, dtype=float).reshape((M,) * d)
    ftab = PairPotential(f, 0.0)
    F = pair_table(ftab, d, M)
    g = correlate(f, np.abs(phi.psi) ** 2, phi.dV).real.reshape(-1)
    G = np.broadcast_to(g[None, :], F.shape)
    worst = 0.0
    for _ in range(samples):
        shape = (M,) * (d * N)
        raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        psi = FockState(N, d, M, L, raw)
        psi = psi.with_amplitudes(psi.amplitudes / psi.norm())
        lhs = ctx.apply_p(multiply_two_body(ctx.apply_p(psi, 0), F), 0).amplitudes
        rhs = ctx.apply_p(multiply_two_body(psi, G), 0).amplitudes
        scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1e-300)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / scale))
    return worst


# ---------------------------------------------------------------------------
# operator identities
# ---------------------------------------------------------------------------

_Q_PATTERNS = {0: ((0, 0),), 1: ((0, 1), (1, 0)), 2: ((1, 1),)}


def _apply_Q(ctx, psi, pat):
    out = ctx.apply_q(psi, 0) if pat[0] else ctx.apply_p(psi, 0)
    return ctx.apply_q(out, 1) if pat[1] else ctx.apply_p(out, 1)


def identity_residuals(ctx: ProjectorContext, psi: FockState, m: WeightVector, r: WeightVector,
                       f: np.ndarray) -> dict:
    """Relative max-norm residuals of the weight-operator identities on one state.

    ``f`` is a real (M^d, M^d) table acting as f(x_1, x_2).  Keys:
    ``product`` (m^ r^ = (mr)^), ``commute_p`` (m^ p_j = p_j m^),
    ``n_square`` (n^2 = N^-1 sum q_j), ``shift`` (m^ Q_j f Q_k = Q_j f m^_{j-k} Q_k)
    and ``commutator`` (the p/q expansion of [f, m^]).
    """
    N = psi.N
    amp = lambda s: s.amplitudes
    scale = lambda *xs: max(max(float(np.max(np.abs(x))) for x in xs), 1e-300)

    def rel(lhs, rhs):
        return float(np.max(np.abs(lhs - rhs))) / scale(lhs, rhs)

    W = lambda s, w, d=0: ctx.apply_weight(s, w, d)
    out = {}
    mr = WeightVector(N, m.values * r.values)
    out["product"] = max(rel(amp(W(W(psi, r), m)), amp(W(psi, mr))),
                         rel(amp(W(W(psi, m), r)), amp(W(psi, mr))))
    out["commute_p"] = max(rel(amp(W(ctx.apply_p(psi, j), m)), amp(ctx.apply_p(W(psi, m), j)))
                           for j in range(N))
    n = n_weights(N)
    qsum = sum(amp(ctx.apply_q(psi, j)) for j in range(N)) / N
    out["n_square"] = rel(amp(W(W(psi, n), n)), qsum)

    F = lambda s: multiply_two_body(s, f)
    worst = 0.0
    for j, pats_j in _Q_PATTERNS.items():
        for k, pats_k in _Q_PATTERNS.items():
            for pj in pats_j:
                for pk in pats_k:
                    lhs = W(_apply_Q(ctx, F(_apply_Q(ctx, psi, pk)), pj), m)
                    rhs = _apply_Q(ctx, F(W(_apply_Q(ctx, psi, pk), m, j - k)), pj)
                    worst = max(worst, rel(amp(lhs), amp(rhs)))
    out["shift"] = worst

    def expansion(s):
        # p1p2 (m^ - m^_2) + (p1q2 + q1p2)(m^ - m^_1)
        t2 = s.with_amplitudes(amp(W(s, m)) - amp(W(s, m, 2)))
        t1 = s.with_amplitudes(amp(W(s, m)) - amp(W(s, m, 1)))
        return (amp(_apply_Q(ctx, t2, (0, 0))) + amp(_apply_Q(ctx, t1, (0, 1)))
                + amp(_apply_Q(ctx, t1, (1, 0))))

    lhs = amp(F(W(psi, m))) - amp(W(F(psi), m))
    rhs = amp(F(psi.with_amplitudes(expansion(psi)))) - expansion(F(psi))
    out["commutator"] = rel(lhs, rhs)
    return out
