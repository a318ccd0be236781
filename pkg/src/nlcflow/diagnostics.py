"""
Energies, dissipation and the derived checks run on trajectories.

All quadratures reuse the solver stencils: the elastic energy is built from
the face gradient whose negative adjoint is the Neumann Laplacian of the
director solve, the velocity dissipation from the no-slip vector Laplacian,
and the reaction term from the same centred gradient as the director source.
Only with shared stencils does the discrete energy balance telescope.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np
import scipy.sparse.linalg as spla

from .director import gradient_energy_density, unit_norm_drift
from .fields import (
    FlowState,
    Grid,
    div,
    grad,
    laplacian,
    laplacian_matrix,
    same_grid,
    velocity_at_cells,
    velocity_gradient_sq,
)

CSV_COLUMNS = (
    "t",
    "e_kin",
    "e_elastic",
    "e_total",
    "dissipation",
    "energy_residual",
    "d_drift",
    "rho_min",
    "rho_max",
    "mass",
    "div_inf",
    "picard_iters",
)


# -- pointwise quantities ----------------------------------------------------------


def kinetic_energy(rho, u, v, grid: Grid) -> float:
    uc, vc = velocity_at_cells(u, v)
    return 0.5 * float(np.sum(rho * (uc * uc + vc * vc))) * grid.cell_volume


def director_gradient_sq(d, grid: Grid, bc="neumann") -> float:
    r""":math:`\int |\nabla d|^2` from face differences.

    Along a periodic axis the first and last faces coincide and are counted once.
    """
    gx, gy = grad(d, grid, bc)
    bx, by = (bc, bc) if isinstance(bc, str) else bc
    if bx == "periodic":
        gx = gx[..., :-1, :]
    if by == "periodic":
        gy = gy[..., :, :-1]
    return float(np.sum(gx * gx) + np.sum(gy * gy)) * grid.cell_volume


def energy(state: FlowState, lam=1.0, bc="neumann"):
    """Return ``(kinetic, elastic, total)``."""
    g = state.grid
    kin = kinetic_energy(state.rho, state.u, state.v, g)
    el = 0.5 * lam * director_gradient_sq(state.d, g, bc)
    return kin, el, kin + el


def harmonic_map_tension(d, grid: Grid, bc="neumann"):
    r""":math:`\Delta d + |\nabla d|^2 d` per cell, shape ``(3, nx, ny)``."""
    return laplacian(d, grid, bc) + gradient_energy_density(d, grid, bc) * d


def dissipation(state: FlowState, mu=1.0, lam=1.0, gamma=1.0, bc="neumann",
                velocity_closure="dirichlet") -> float:
    """``mu |grad u|^2 + lam gamma |Lap d + |grad d|^2 d|^2`` integrated.

    ``velocity_closure="extrapolate"`` integrates non-no-slip test fields
    (affine velocities exactly).
    """
    g = state.grid
    tension = harmonic_map_tension(state.d, g, bc)
    return mu * velocity_gradient_sq(state.u, state.v, g, velocity_closure) + lam * gamma * float(
        np.sum(tension * tension)
    ) * g.cell_volume


def cross_product_dissipation(d, grid: Grid, bc="neumann") -> float:
    r""":math:`\int |\Delta d \times d|^2`; equals the tension form only when :math:`|d| = 1`."""
    c = np.cross(laplacian(d, grid, bc), d, axis=0)
    return float(np.sum(c * c)) * grid.cell_volume


# -- energy balance ----------------------------------------------------------------


def energy_law_residual(times, e_total, dissipation_values):
    """Per-step ``(E[n+1] - E[n]) / dt + D[n+1]`` and its time integral.

    Returns ``(residual, integrated)`` with ``residual`` one shorter than
    ``times``. By telescoping, ``integrated`` equals
    ``E[-1] - E[0] + sum(dt * D[1:])``.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(e_total, dtype=float)
    dis = np.asarray(dissipation_values, dtype=float)
    dt = np.diff(t)
    res = np.diff(e) / dt + dis[1:]
    return res, float(np.sum(res * dt))


# -- decay ------------------------------------------------------------------------------


def dirichlet_eigenvalue(grid: Grid, tol=1e-12, max_iters=500) -> float:
    """Smallest eigenvalue of the discrete Dirichlet ``-Lap`` by inverse power iteration."""
    a = (-laplacian_matrix(grid, "dirichlet")).tocsc()
    lu = spla.splu(a)
    x, y = grid.cell_centers()
    q = (np.sin(np.pi * x / grid.lx) * np.sin(np.pi * y / grid.ly)).ravel()
    q += 1e-3 * np.cos(np.arange(q.size))  # keep a component outside any symmetry class
    q /= np.linalg.norm(q)
    lam = q @ (a @ q)
    for _ in range(max_iters):
        z = lu.solve(q)
        q = z / np.linalg.norm(z)
        new = q @ (a @ q)
        if abs(new - lam) <= tol * abs(new):
            return float(new)
        lam = new
    return float(lam)


@dataclass
class DecayReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margin: np.ndarray
    lambda1: float
    rho_hat: float
    atol: float

    @property
    def violations(self):
        return np.flatnonzero(self.margin < -self.atol)

    @property
    def ok(self) -> bool:
        return self.violations.size == 0


def decay_bound(times, initial, rho_hat, lambda1):
    """Right-hand side ``exp(-a t) X0 (1 + a t exp(a t))`` with ``a = 2 lambda1 / rho_hat``."""
    t = np.asarray(times, dtype=float)
    a = 2.0 * lambda1 / rho_hat
    return np.exp(-a * t) * initial * (1.0 + a * t * np.exp(a * t))


def decay_check(times, weighted_energy, rho_hat, lambda1, atol=1e-10) -> DecayReport:
    """Compare ``|sqrt(rho) u|^2 + |grad d|^2`` against the small-data decay bound.

    ``weighted_energy`` is that sum sampled at ``times``; the first sample is
    the initial value.
    """
    t = np.asarray(times, dtype=float)
    lhs = np.asarray(weighted_energy, dtype=float)
    rhs = decay_bound(t - t[0], lhs[0], rho_hat, lambda1)
    return DecayReport(t, lhs, rhs, rhs - lhs, float(lambda1), float(rho_hat), atol)


# -- stability ----------------------------------------------------------------------------


def relative_energy(a: FlowState, b: FlowState, bc="neumann") -> float:
    r"""Volume integral of :math:`\tilde\rho |u - \tilde u|^2 + |\nabla(d - \tilde d)|^2
    + |\rho - \tilde\rho|^2 + |d - \tilde d|^2`, with ``b`` as the tilde state.

    Asymmetric only through the density weight on the velocity difference.
    """
    g = same_grid(a, b)
    uc, vc = velocity_at_cells(a.u - b.u, a.v - b.v)
    dd = a.d - b.d
    drho = a.rho - b.rho
    return float(np.sum(b.rho * (uc * uc + vc * vc))) * g.cell_volume + director_gradient_sq(
        dd, g, bc
    ) + float(np.sum(drho * drho) + np.sum(dd * dd)) * g.cell_volume


@dataclass
class ConservationReport:
    times: np.ndarray
    mass_drift: np.ndarray
    lp_drift: dict
    rho_min: np.ndarray
    rho_max: np.ndarray
    bounds: tuple

    @property
    def within_bounds(self) -> bool:
        lo, hi = self.bounds
        return bool(np.all(self.rho_min >= lo) and np.all(self.rho_max <= hi))


def transport_conservation_report(states, p_list=(2,)) -> ConservationReport:
    """Relative drift of mass and of ``|rho|_{L^p}``, and extrema against the initial range."""
    states = list(states)
    g = states[0].grid
    rho0 = states[0].rho

    def lp(r, p):
        return float(np.sum(np.abs(r) ** p) * g.cell_volume) ** (1.0 / p)

    m0 = float(np.sum(rho0))
    times = np.array([s.t for s in states])
    mass = np.array([abs(float(np.sum(s.rho)) - m0) / m0 for s in states])
    lp_drift = {}
    for p in p_list:
        ref = lp(rho0, p)
        lp_drift[p] = np.array([abs(lp(s.rho, p) - ref) / ref for s in states])
    return ConservationReport(
        times,
        mass,
        lp_drift,
        np.array([s.rho.min() for s in states]),
        np.array([s.rho.max() for s in states]),
        (float(rho0.min()), float(rho0.max())),
    )


# -- time series -------------------------------------------------------------------------------


@dataclass
class DiagnosticsRecord:
    """Diagnostic time series, one entry per sampled time."""

    t: list = field(default_factory=list)
    e_kin: list = field(default_factory=list)
    e_elastic: list = field(default_factory=list)
    e_total: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    energy_residual: list = field(default_factory=list)
    d_drift: list = field(default_factory=list)
    rho_min: list = field(default_factory=list)
    rho_max: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    div_inf: list = field(default_factory=list)
    picard_iters: list = field(default_factory=list)

    def append(self, state: FlowState, mu=1.0, lam=1.0, gamma=1.0, picard_iters=0):
        g = state.grid
        kin, el, tot = energy(state, lam)
        dis = dissipation(state, mu, lam, gamma)
        if self.t:
            res = (tot - self.e_total[-1]) / (state.t - self.t[-1]) + dis
        else:
            res = 0.0
        self.t.append(float(state.t))
        self.e_kin.append(kin)
        self.e_elastic.append(el)
        self.e_total.append(tot)
        self.dissipation.append(dis)
        self.energy_residual.append(float(res))
        self.d_drift.append(unit_norm_drift(state.d))
        self.rho_min.append(float(state.rho.min()))
        self.rho_max.append(float(state.rho.max()))
        self.mass.append(float(np.sum(state.rho)) * g.cell_volume)
        self.div_inf.append(float(np.abs(div(state.u, state.v, g)).max()))
        self.picard_iters.append(int(picard_iters))

    def __len__(self):
        return len(self.t)

    def column(self, name) -> np.ndarray:
        return np.asarray(getattr(self, name))

    def rows(self):
        cols = [getattr(self, f.name) for f in fields(self)]
        return list(zip(*cols))

    def integrated_residual(self, absolute=True) -> float:
        """``sum |r_n| dt_n`` over the recorded steps (signed sum if ``absolute`` is false)."""
        t = self.column("t")
        r = self.column("energy_residual")[1:]
        w = np.diff(t)
        return float(np.sum((np.abs(r) if absolute else r) * w))

    @classmethod
    def from_states(cls, states, mu=1.0, lam=1.0, gamma=1.0, picard_iters=None):
        rec = cls()
        for k, s in enumerate(states):
            it = 0 if picard_iters is None else picard_iters[k]
            rec.append(s, mu, lam, gamma, it)
        return rec
