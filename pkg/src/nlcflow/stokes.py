r"""
Variable-density generalized Stokes step on the MAC grid.

One backward-Euler step solves the saddle system

.. math::

    \frac{\rho_f}{\Delta t} u - \mu \Delta_h u + \nabla_h P
        = f + \frac{\rho_f}{\Delta t} u^{\mathrm{old}},
    \qquad \nabla_h \cdot u = 0,

with no-slip walls, face densities ``rho_f`` taken as the arithmetic mean of
the two adjacent cells, and the pressure shifted to zero mean afterwards.

:class:`StokesSolver` keeps an LU factorisation of the saddle matrix for a
reference density and corrects it by iterative refinement when the density
moves. The continuity rows do not depend on the density, so every corrected
iterate satisfies the discrete constraint to round-off; only the momentum
residual needs iterations. When refinement slows, the matrix is refactorised
at the current density.

For spatially constant density, :func:`solve_stokes_uniform` takes an
independent route: conjugate gradients on the pressure Schur complement,
preconditioned by ``mu I + (rho / dt) (-Lap_N)^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonPositiveDensity, SaddleSolveDiverged
from .fields import (
    Grid,
    _pad_axis,
    cell_gradient,
    cell_to_xface,
    cell_to_yface,
    div,
    grad,
    laplacian,
    laplacian_matrix,
    velocity_laplacian,
    xface_to_yface,
    yface_to_xface,
)


@dataclass(frozen=True)
class StokesOptions:
    """
    Parameters
    ----------
    mu : float
        Viscosity.
    lam : float
        Elastic coupling constant (``lambda`` is a Python keyword).
    saddle_tol : float
        Bound on ``|div u|`` and, scaled by ``1 + |f|``, on the momentum residual.
    max_outer_iters : int
        Refinement sweeps (or CG iterations on the uniform path) before giving up.
    """

    mu: float = 1.0
    lam: float = 1.0
    saddle_tol: float = 1e-10
    max_outer_iters: int = 50

    def __post_init__(self):
        if self.mu <= 0 or self.lam <= 0:
            raise ValueError("mu and lambda must be positive")
        if self.saddle_tol <= 0:
            raise ValueError("saddle_tol must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")


# -- forcing terms -------------------------------------------------------------


def elastic_force_cells(f, grid: Grid, lam=1.0, bc="neumann"):
    r"""Cell-centred :math:`-\lambda (\nabla f)^T \Delta f` as ``(wx, wy)``.

    The companion gradient :math:`\nabla |\nabla f|^2 / 2` of the full
    stress divergence is left out; the pressure absorbs it.
    """
    gx, gy = cell_gradient(f, grid, bc)
    lap = laplacian(f, grid, bc)
    return -lam * np.sum(gx * lap, axis=0), -lam * np.sum(gy * lap, axis=0)


def elastic_force(f, grid: Grid, lam=1.0, bc="neumann"):
    """Elastic forcing averaged onto x- and y-faces."""
    wx, wy = elastic_force_cells(f, grid, lam, bc)
    face_bc = "periodic" if bc == "periodic" else "neumann"
    return cell_to_xface(wx, face_bc), cell_to_yface(wy, face_bc)


def face_density(rho):
    """Arithmetic means on interior faces; wall faces copy the adjacent cell."""
    return cell_to_xface(rho, "neumann"), cell_to_yface(rho, "neumann")


def convection(rho, u, v, grid: Grid):
    r"""Face values of :math:`-\rho (w \cdot \nabla) w`, zero on wall-normal faces.

    Centred differences; tangential walls use the no-slip odd reflection.
    """
    rfx, rfy = face_density(rho)
    cx = np.zeros_like(u)
    cy = np.zeros_like(v)

    ui = u[1:-1, :]
    dudx = (u[2:, :] - u[:-2, :]) / (2 * grid.hx)
    gy_ = _pad_axis(ui, -1, "dirichlet")
    dudy = (gy_[:, 2:] - gy_[:, :-2]) / (2 * grid.hy)
    cx[1:-1, :] = -rfx[1:-1, :] * (ui * dudx + yface_to_xface(v) * dudy)

    vi = v[:, 1:-1]
    dvdy = (v[:, 2:] - v[:, :-2]) / (2 * grid.hy)
    gx_ = _pad_axis(vi, -2, "dirichlet")
    dvdx = (gx_[2:, :] - gx_[:-2, :]) / (2 * grid.hx)
    cy[:, 1:-1] = -rfy[:, 1:-1] * (xface_to_yface(u) * dvdx + vi * dvdy)
    return cx, cy


def face_kinetic_energy(rho, u, v, grid: Grid) -> float:
    """``1/2 sum rho_f |u|^2`` over faces: the form the implicit step dissipates."""
    rfx, rfy = face_density(rho)
    return 0.5 * float(np.sum(rfx * u * u) + np.sum(rfy * v * v)) * grid.cell_volume


# -- residuals ------------------------------------------------------------------


def saddle_residuals(u, v, p, rho, u_old, v_old, fx, fy, grid: Grid, dt, opts=None):
    """Max-norm momentum and divergence residuals of a candidate solution.

    Computed with the array operators, independently of the assembled matrix.
    """
    opts = opts or StokesOptions()
    rfx, rfy = face_density(rho)
    lu, lv = velocity_laplacian(u, v, grid)
    px, py = grad(p, grid, "neumann")
    rx = rfx * (u - u_old) / dt - opts.mu * lu + px - fx
    ry = rfy * (v - v_old) / dt - opts.mu * lv + py - fy
    mom = max(np.abs(rx[1:-1, :]).max(), np.abs(ry[:, 1:-1]).max())
    dv = np.abs(div(u, v, grid)).max()
    return float(mom), float(dv)


# -- assembled operators ---------------------------------------------------------


def _d2(n, h, wall):
    main = -2.0 * np.ones(n)
    if wall == "reflect":
        main[0] = main[-1] = -3.0
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1]) / h**2


def _d1(n, h):
    # cells -> interior faces, shape (n-1, n)
    return sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n)) / h


@dataclass
class _Operators:
    grid: Grid
    lap: sp.csr_matrix = field(init=False)
    G: sp.csr_matrix = field(init=False)
    nu: int = field(init=False)
    nv: int = field(init=False)
    npr: int = field(init=False)

    def __post_init__(self):
        g = self.grid
        nx, ny = g.nx, g.ny
        lu = sp.kron(_d2(nx - 1, g.hx, "node"), sp.identity(ny)) + sp.kron(
            sp.identity(nx - 1), _d2(ny, g.hy, "reflect")
        )
        lv = sp.kron(_d2(nx, g.hx, "reflect"), sp.identity(ny - 1)) + sp.kron(
            sp.identity(nx), _d2(ny - 1, g.hy, "node")
        )
        self.lap = sp.block_diag([lu, lv]).tocsr()
        gx = sp.kron(_d1(nx, g.hx), sp.identity(ny))
        gy = sp.kron(sp.identity(nx), _d1(ny, g.hy))
        self.G = sp.vstack([gx, gy]).tocsr()
        self.nu = (nx - 1) * ny
        self.nv = nx * (ny - 1)
        self.npr = nx * ny

    def pack(self, ax, ay):
        return np.concatenate([ax[1:-1, :].ravel(), ay[:, 1:-1].ravel()])

    def unpack(self, x):
        g = self.grid
        u = np.zeros(g.xface_shape)
        v = np.zeros(g.yface_shape)
        u[1:-1, :] = x[: self.nu].reshape(g.nx - 1, g.ny)
        v[:, 1:-1] = x[self.nu : self.nu + self.nv].reshape(g.nx, g.ny - 1)
        return u, v


class StokesSolver:
    """Reusable variable-density Stokes solver for one grid, viscosity and ``dt``.

    Parameters
    ----------
    refactor_after : int
        Refinement sweeps tolerated before the saddle matrix is refactorised
        at the current density.
    """

    def __init__(self, grid: Grid, dt: float, opts: StokesOptions | None = None, refactor_after=4):
        self.grid = grid
        self.dt = float(dt)
        self.opts = opts or StokesOptions()
        self.refactor_after = refactor_after
        self.ops = _Operators(grid)
        self._lu = None
        self._mass_ref = None
        self._K = None
        self.n_factorizations = 0
        self.last_sweeps = 0

    def _mass(self, rho):
        rfx, rfy = face_density(rho)
        return self.ops.pack(rfx, rfy) / self.dt

    def _factorize(self, mass):
        ops = self.ops
        a = sp.diags(mass) - self.opts.mu * ops.lap
        k = sp.bmat([[a, ops.G], [ops.G.T, None]], format="lil")
        # continuity rows sum to zero; trade the first for the gauge p_0 = 0
        row = ops.nu + ops.nv
        k.rows[row] = [row]
        k.data[row] = [1.0]
        self._K = k.tocsc()
        self._lu = spla.splu(self._K)
        self._mass_ref = mass
        self.n_factorizations += 1

    def _apply(self, x, mass):
        nvel = self.ops.nu + self.ops.nv
        y = self._K @ x
        y[:nvel] += (mass - self._mass_ref) * x[:nvel]
        return y

    def solve(self, rho, u_old, v_old, fx, fy):
        """Return ``(u, v, p)`` for one implicit step; ``p`` has zero mean."""
        rho = np.asarray(rho, dtype=np.float64)
        if not np.all(rho > 0):
            raise NonPositiveDensity(f"min density {rho.min():.3e} is not positive")
        ops = self.ops
        nvel = ops.nu + ops.nv
        mass = self._mass(rho)
        f = ops.pack(fx, fy)
        b = np.zeros(nvel + ops.npr)
        b[:nvel] = f + mass * ops.pack(u_old, v_old)
        target = 0.1 * self.opts.saddle_tol * (1.0 + np.abs(f).max())

        if self._lu is None:
            self._factorize(mass)
        x = self._lu.solve(b)
        best = np.inf
        for sweep in range(1, self.opts.max_outer_iters + 1):
            r = b - self._apply(x, mass)
            res = np.abs(r[:nvel]).max()
            if res <= target:
                break
            if sweep == self.refactor_after:
                self._factorize(mass)
            elif sweep > self.refactor_after and res > 0.5 * best:
                # refinement has hit its round-off floor
                if res <= 10 * target:
                    break
                raise SaddleSolveDiverged(f"momentum residual stalled at {res:.3e}")
            best = min(best, res)
            x += self._lu.solve(r)
        else:
            raise SaddleSolveDiverged(
                f"no convergence in {self.opts.max_outer_iters} refinement sweeps"
            )
        self.last_sweeps = sweep

        u, v = ops.unpack(x)
        p = x[nvel:].reshape(self.grid.cell_shape)
        p = p - p.mean()
        dv = np.abs(div(u, v, self.grid)).max()
        if dv > self.opts.saddle_tol:
            raise SaddleSolveDiverged(f"|div u| = {dv:.3e} exceeds {self.opts.saddle_tol:.1e}")
        return u, v, p


def solve_stokes(rho, u_old, v_old, fx, fy, grid: Grid, dt: float, opts=None, solver=None):
    """One implicit variable-density Stokes step; see :class:`StokesSolver`."""
    if solver is None:
        solver = StokesSolver(grid, dt, opts)
    return solver.solve(rho, u_old, v_old, fx, fy)


# -- constant-density path -------------------------------------------------------


def solve_stokes_uniform(rho0: float, u_old, v_old, fx, fy, grid: Grid, dt: float, opts=None):
    """Constant-density Stokes step by preconditioned CG on the pressure.

    Uses nothing from :class:`StokesSolver` except the operator assembly, and
    serves as a cross-check of the variable-density path.
    """
    opts = opts or StokesOptions()
    rho0 = float(rho0)
    if rho0 <= 0:
        raise NonPositiveDensity("density must be positive")
    ops = _Operators(grid)
    a = (sp.identity(ops.nu + ops.nv) * (rho0 / dt) - opts.mu * ops.lap).tocsc()
    a_lu = spla.splu(a)
    G = ops.G
    b = ops.pack(fx, fy) + (rho0 / dt) * ops.pack(u_old, v_old)

    poisson = (-laplacian_matrix(grid, "neumann")).tolil()
    poisson.rows[0] = [0]
    poisson.data[0] = [1.0]
    poisson[1:, 0] = 0.0
    p_lu = spla.splu(poisson.tocsc())

    def proj(z):
        return z - z.mean()

    def schur(q):
        return G.T @ a_lu.solve(G @ q)

    def precond(r):
        r = proj(r)
        return proj(opts.mu * r + (rho0 / dt) * p_lu.solve(r))

    p = np.zeros(ops.npr)
    r = proj(G.T @ a_lu.solve(b))
    tol = 0.1 * opts.saddle_tol
    z = precond(r)
    d = z.copy()
    rz = r @ z
    for _ in range(opts.max_outer_iters):
        if np.abs(r).max() <= tol:
            break
        sd = schur(d)
        alpha = rz / (d @ sd)
        p += alpha * d
        r -= alpha * sd
        z = precond(r)
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    else:
        raise SaddleSolveDiverged("Schur-complement CG did not converge")

    u, v = ops.unpack(a_lu.solve(b - G @ p))
    p = p.reshape(grid.cell_shape)
    return u, v, p - p.mean()
