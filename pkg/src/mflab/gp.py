"""Gross-Pitaevskii solver on a periodic box.

    i d/dt phi = (-Laplace + A_t) phi + 2 a |phi|^2 phi

Real time uses Strang splitting: half a potential/nonlinear phase, a full
kinetic step in Fourier space, half a phase.  The kinetic operator is ``-Laplace``
(no factor 1/2), so a plane wave ``e^{ikx}`` rotates as ``e^{-i k^2 t}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .potentials import DomainError


class StepSizeError(RuntimeError):
    def __init__(self, msg, suggested_dt):
        super().__init__(msg)
        self.suggested_dt = suggested_dt


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# grid and field
# ---------------------------------------------------------------------------

@dataclass
class Field:
    d: int
    M: int
    L: float
    psi: np.ndarray

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError(f"dimension {self.d} not in 1..3")
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != (self.M,) * self.d:
            raise DomainError(f"amplitude shape {self.psi.shape} does not match M={self.M}, d={self.d}")

    @property
    def dx(self) -> float:
        return self.L / self.M

    @property
    def dV(self) -> float:
        return self.dx ** self.d

    def copy(self) -> "Field":
        return replace(self, psi=self.psi.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2) * self.dV))

    def normalized(self) -> "Field":
        return replace(self, psi=self.psi / self.norm())

    def inner(self, other: "Field") -> complex:
        return complex(np.vdot(self.psi, other.psi) * self.dV)


def grid_axis(M: int, L: float) -> np.ndarray:
    return (np.arange(M) - M // 2) * (L / M)


def coords(d: int, M: int, L: float):
    ax = grid_axis(M, L)
    return np.meshgrid(*([ax] * d), indexing="ij")


def wavenumbers(d: int, M: int, L: float):
    kx = 2.0 * np.pi * np.fft.fftfreq(M, d=L / M)
    return np.meshgrid(*([kx] * d), indexing="ij")


def k_squared(d: int, M: int, L: float) -> np.ndarray:
    return sum(k ** 2 for k in wavenumbers(d, M, L))


def from_function(fn, d: int, M: int, L: float, normalize: bool = True) -> Field:
    f = Field(d, M, L, fn(*coords(d, M, L)))
    return f.normalized() if normalize else f


def gaussian(d: int, M: int, L: float, sigma: float = 1.0, center=0.0) -> Field:
    """Normalised ``exp(-|x - c|^2 / (2 sigma^2))``."""
    def fn(*xs):
        return np.exp(-sum((x - center) ** 2 for x in xs) / (2.0 * sigma ** 2))
    return from_function(fn, d, M, L)


# ---------------------------------------------------------------------------
# external potential
# ---------------------------------------------------------------------------

@dataclass
class TrapSchedule:
    """``A(x, t) = s(t) * shape(x)``.

    ``form`` picks the shape: ``harmonic`` (|x|^2), ``linear`` (x_1), ``off``
    or ``tabulated`` (``table`` on the grid).  ``ramp`` picks ``s``:
    ``None`` (constant ``strength``), ``{"type": "linear", "t_end", "final"}``
    or ``{"type": "sin", "eps", "omega"}`` for ``strength (1 + eps sin(omega t))``.
    """
    form: str = "harmonic"
    strength: float = 1.0
    ramp: dict | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.form not in ("harmonic", "linear", "off", "tabulated"):
            raise DomainError(f"unknown trap form {self.form!r}")
        if self.form == "tabulated" and self.table is None:
            raise DomainError("tabulated trap needs a table")
        kind = (self.ramp or {}).get("type")
        if kind not in (None, "linear", "sin"):
            raise DomainError(f"unknown ramp type {kind!r}")

    @property
    def is_static(self) -> bool:
        return self.form == "off" or self.ramp is None

    def shape(self, field_or_grid) -> np.ndarray:
        d, M, L = _grid_of(field_or_grid)
        if self.form == "off":
            return np.zeros((M,) * d)
        if self.form == "harmonic":
            return sum(x ** 2 for x in coords(d, M, L))
        if self.form == "linear":
            return coords(d, M, L)[0]
        return np.asarray(self.table, dtype=float).reshape((M,) * d)

    def s(self, t: float) -> float:
        r = self.ramp
        if r is None:
            return self.strength
        if r["type"] == "linear":
            frac = min(max(t / r["t_end"], 0.0), 1.0)
            return self.strength + (r["final"] - self.strength) * frac
        return self.strength * (1.0 + r["eps"] * math.sin(r["omega"] * t))

    def s_dot(self, t: float) -> float:
        r = self.ramp
        if r is None:
            return 0.0
        if r["type"] == "linear":
            return (r["final"] - self.strength) / r["t_end"] if 0.0 <= t < r["t_end"] else 0.0
        return self.strength * r["eps"] * r["omega"] * math.cos(r["omega"] * t)

    def sup_s_dot(self) -> float:
        r = self.ramp
        if r is None:
            return 0.0
        if r["type"] == "linear":
            return abs(r["final"] - self.strength) / r["t_end"]
        return abs(self.strength * r["eps"] * r["omega"])

    def A(self, grid, t: float = 0.0) -> np.ndarray:
        return self.s(t) * self.shape(grid)

    def A_dot(self, grid, t: float = 0.0) -> np.ndarray:
        return self.s_dot(t) * self.shape(grid)

    def sup_A_dot(self, grid) -> float:
        """sup over the box and all times of |dA/dt|."""
        return self.sup_s_dot() * float(np.max(np.abs(self.shape(grid))))

    def to_dict(self) -> dict:
        out = {"form": self.form, "strength": self.strength, "ramp": self.ramp}
        if self.table is not None:
            out["table"] = np.asarray(self.table).tolist()
        return out

    @classmethod
    def from_dict(cls, doc: dict | None) -> "TrapSchedule":
        if not doc:
            return cls("off", 0.0)
        table = doc.get("table")
        return cls(doc.get("form", "harmonic"), float(doc.get("strength", 1.0)),
                   doc.get("ramp"), None if table is None else np.asarray(table, dtype=float))


def _grid_of(g):
    if isinstance(g, Field):
        return g.d, g.M, g.L
    return g


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------

def _check_step(phi: Field, A: np.ndarray, a: float, dt: float):
    if a < 0:
        raise DomainError(f"coupling a={a} must be nonnegative")
    rate = float(np.max(np.abs(A))) + 2.0 * a * float(np.max(np.abs(phi.psi)) ** 2)
    if abs(dt) * rate >= 0.5:
        safe = 0.4 / rate
        raise StepSizeError(f"dt={dt} violates dt * (max|A| + 2a|phi|^2) < 0.5 (rate {rate:.4g}); "
                            f"try dt <= {safe:.3g}", safe)


def step(phi: Field, trap: TrapSchedule, a: float, dt: float, t: float = 0.0,
         _cache: dict | None = None) -> Field:
    """One Strang step from ``t`` to ``t + dt``; ``dt < 0`` runs backwards."""
    cache = {} if _cache is None else _cache
    if "k2" not in cache:
        cache["k2"] = k_squared(phi.d, phi.M, phi.L)
        cache["shape"] = trap.shape(phi)
    A = trap.s(t + 0.5 * dt) * cache["shape"]
    _check_step(phi, A, a, dt)
    psi = phi.psi * np.exp(-0.5j * dt * (A + 2.0 * a * np.abs(phi.psi) ** 2))
    psi = np.fft.ifftn(np.exp(-1j * dt * cache["k2"]) * np.fft.fftn(psi))
    psi = psi * np.exp(-0.5j * dt * (A + 2.0 * a * np.abs(psi) ** 2))
    return replace(phi, psi=psi)


def gradient(phi: Field) -> list:
    psi_k = np.fft.fftn(phi.psi)
    return [np.fft.ifftn(1j * k * psi_k) for k in wavenumbers(phi.d, phi.M, phi.L)]


def laplacian(phi: Field) -> np.ndarray:
    return np.fft.ifftn(-k_squared(phi.d, phi.M, phi.L) * np.fft.fftn(phi.psi))


def kinetic_energy(phi: Field) -> float:
    psi_k = np.fft.fftn(phi.psi)
    return float(np.sum(k_squared(phi.d, phi.M, phi.L) * np.abs(psi_k) ** 2)
                 * phi.dV / phi.psi.size)


def energy(phi: Field, trap: TrapSchedule, a: float, t: float = 0.0) -> float:
    """``<grad phi, grad phi> + <phi, (A_t + a |phi|^2) phi>``."""
    rho = np.abs(phi.psi) ** 2
    pot = np.sum((trap.A(phi, t) + a * rho) * rho) * phi.dV
    return kinetic_energy(phi) + float(pot)


def energy_rate(phi: Field, trap: TrapSchedule, t: float) -> float:
    """Exact time derivative of the energy along the GP flow: ``<phi, dA/dt phi>``."""
    return float(np.sum(trap.A_dot(phi, t) * np.abs(phi.psi) ** 2) * phi.dV)


def ground_state(trap: TrapSchedule, a: float, tol: float = 1e-12, *, d: int = 1, M: int = 128,
                 L: float = 20.0, dtau: float = 1e-2, max_iter: int = 200000,
                 init: Field | None = None, refine: int = 3) -> Field:
    """Minimise the energy by normalised imaginary-time Strang steps.

    The splitting biases the fixed point by O(dtau^2), so once converged the
    step is cut by 10 and the iteration resumed, ``refine`` times.
    """
    if not trap.is_static:
        raise DomainError("ground state needs a static trap")
    if a < 0:
        raise DomainError(f"coupling a={a} must be nonnegative")
    phi = (init.copy() if init is not None else gaussian(d, M, L, sigma=1.0)).normalized()
    k2 = k_squared(phi.d, phi.M, phi.L)
    A = trap.A(phi, 0.0)
    it = 0
    for stage in range(refine + 1):
        e_old = energy(phi, trap, a)
        kin = np.exp(-dtau * k2)
        while True:
            psi = phi.psi * np.exp(-0.5 * dtau * (A + 2.0 * a * np.abs(phi.psi) ** 2))
            psi = np.fft.ifftn(kin * np.fft.fftn(psi))
            psi = psi * np.exp(-0.5 * dtau * (A + 2.0 * a * np.abs(psi) ** 2))
            phi = replace(phi, psi=psi).normalized()
            e = energy(phi, trap, a)
            it += 1
            if abs(e - e_old) < tol * max(1.0, abs(e)):
                break
            if it >= max_iter:
                grad = np.linalg.norm(_residual(phi, trap, a)) * math.sqrt(phi.dV)
                raise ConvergenceError(f"no convergence after {it} steps; |dE|={abs(e - e_old):.3g}, "
                                       f"gradient norm {grad:.3g}")
            e_old = e
        dtau /= 10.0
    # fix the global phase so the field is real and positive at its peak
    i = np.argmax(np.abs(phi.psi))
    phase = phi.psi.flat[i] / abs(phi.psi.flat[i])
    return replace(phi, psi=phi.psi / phase)


def _residual(phi: Field, trap: TrapSchedule, a: float, t: float = 0.0) -> np.ndarray:
    h = -laplacian(phi) + (trap.A(phi, t) + 2.0 * a * np.abs(phi.psi) ** 2) * phi.psi
    mu = np.vdot(phi.psi, h).real * phi.dV
    return h - mu * phi.psi


# ---------------------------------------------------------------------------
# monitors
# ---------------------------------------------------------------------------

@dataclass
class GpDiagnostics:
    t: float
    energy: float
    norm: float
    sup: float
    grad6_loc: float
    lap2: float
    A_dot_sup: float
    gronwall: float               # running integral of sup + grad6_loc + A_dot_sup
    edge_mass: float = 0.0        # mass in the outer 10% of the box

    columns = ("t", "energy", "norm", "sup", "grad6_loc", "lap2", "A_dot_sup", "gronwall",
               "edge_mass")

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in self.columns)

    @property
    def integrand(self) -> float:
        return self.sup + self.grad6_loc + self.A_dot_sup


def _ball_kernel(d, M, L, radius):
    dist2 = sum(x ** 2 for x in coords(d, M, L))
    ball = (dist2 <= radius ** 2 * (1 + 1e-12)).astype(float)
    return np.fft.fftn(np.fft.ifftshift(ball))


def local_l6_grad(phi: Field, radius: float = 1.0, _kernel=None) -> float:
    """max over grid centres of the L^6 norm of |grad phi| on a ball of ``radius``."""
    g6 = sum(np.abs(g) ** 2 for g in gradient(phi)) ** 3
    kern = _ball_kernel(phi.d, phi.M, phi.L, radius) if _kernel is None else _kernel
    local = np.fft.ifftn(np.fft.fftn(g6) * kern).real * phi.dV
    return float(max(local.max(), 0.0) ** (1.0 / 6.0))


def edge_mass(phi: Field) -> float:
    x = coords(phi.d, phi.M, phi.L)
    edge = np.zeros(phi.psi.shape, dtype=bool)
    for xi in x:
        edge |= np.abs(xi) >= 0.4 * phi.L
    return float(np.sum(np.abs(phi.psi[edge]) ** 2) * phi.dV)


def monitors(phi: Field, trap: TrapSchedule, a: float = 0.0, t: float = 0.0,
             prev: GpDiagnostics | None = None, radius: float = 1.0, _kernel=None) -> GpDiagnostics:
    sup = float(np.max(np.abs(phi.psi)))
    g6 = local_l6_grad(phi, radius, _kernel)
    lap = float(np.sqrt(np.sum(np.abs(laplacian(phi)) ** 2) * phi.dV))
    adot = float(np.max(np.abs(trap.A_dot(phi, t))))
    diag = GpDiagnostics(t, energy(phi, trap, a, t), phi.norm(), sup, g6, lap, adot, 0.0,
                         edge_mass(phi))
    if prev is not None:
        diag.gronwall = prev.gronwall + 0.5 * (t - prev.t) * (prev.integrand + diag.integrand)
    return diag


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

@dataclass
class GpRun:
    field: Field
    series: list
    dt: float
    snapshots: list = field(default_factory=list)
    snapshot_times: list = field(default_factory=list)


def evolve(phi: Field, trap: TrapSchedule, a: float, dt: float, T: float, *,
           every: int = 10, snapshot_every: int = 0, radius: float = 1.0, t0: float = 0.0) -> GpRun:
    """Run to ``t0 + T`` recording diagnostics every ``every`` steps.

    If the stability guard trips, ``dt`` is halved once and the run restarts.
    """
    for attempt in range(2):
        try:
            return _evolve(phi, trap, a, dt, T, every, snapshot_every, radius, t0)
        except StepSizeError:
            if attempt:
                raise
            dt *= 0.5
    raise AssertionError("unreachable")


def _evolve(phi, trap, a, dt, T, every, snapshot_every, radius, t0):
    nsteps = max(1, int(round(T / dt)))
    dt = T / nsteps
    cache: dict = {}
    kern = _ball_kernel(phi.d, phi.M, phi.L, radius)
    t = t0
    diag = monitors(phi, trap, a, t, None, radius, kern)
    run = GpRun(phi, [diag], dt)
    if snapshot_every:
        run.snapshots.append(np.abs(phi.psi) ** 2)
        run.snapshot_times.append(t)
    for n in range(1, nsteps + 1):
        phi = step(phi, trap, a, dt, t, cache)
        t = t0 + n * dt
        if n % every == 0 or n == nsteps:
            diag = monitors(phi, trap, a, t, diag, radius, kern)
            run.series.append(diag)
        if snapshot_every and (n % snapshot_every == 0 or n == nsteps):
            run.snapshots.append(np.abs(phi.psi) ** 2)
            run.snapshot_times.append(t)
    run.field = phi
    return run


def dump_density(run: GpRun, path) -> Path:
    """Write |phi|^2 snapshots as little-endian float64 plus a JSON sidecar."""
    path = Path(path)
    data = np.asarray(run.snapshots, dtype="<f8")
    data.tofile(path)
    side = path.with_suffix(path.suffix + ".json")
    side.write_text(json.dumps({"dtype": "<f8", "shape": list(data.shape),
                                "times": [float(t) for t in run.snapshot_times],
                                "L": run.field.L, "d": run.field.d}, indent=1))
    return side


def load_density(path) -> tuple:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return np.fromfile(path, dtype=meta["dtype"]).reshape(meta["shape"]), meta
