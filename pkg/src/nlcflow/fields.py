r"""
Staggered (MAC) grid, field containers and discrete operators.

Layout on a rectangle :math:`[0, l_x] \times [0, l_y]` split into
``nx * ny`` cells:

* cell-centred scalars (density, pressure) have shape ``(nx, ny)``;
* the director is cell-centred with shape ``(3, nx, ny)``;
* the x-velocity ``u`` lives on x-faces, shape ``(nx + 1, ny)``;
* the y-velocity ``v`` lives on y-faces, shape ``(nx, ny + 1)``.

Arrays are indexed ``[i, j]`` with ``i`` along x. Operators act on the last
two axes, so stacked components (the director) go through unchanged.

Boundary closures are given per axis by name, either as one string or as an
``(x_closure, y_closure)`` pair:

``"neumann"``
    mirror ghost, zero normal derivative;
``"dirichlet"``
    odd reflection, value zero on the wall;
``"periodic"``
    wrap-around (used only by test problems);
``"extrapolate"``
    linear extrapolation, exact for affine data.

The face gradient and MAC divergence are adjoint under the cell-volume
weighted inner product whenever the normal velocity vanishes on the walls,
and ``laplacian`` is literally ``div(grad(.))`` so the two never drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatch

CLOSURES = ("neumann", "dirichlet", "periodic", "extrapolate")


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular MAC grid."""

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("cell counts must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need at least 4x4 cells, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_volume(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def cell_shape(self):
        return (self.nx, self.ny)

    @property
    def xface_shape(self):
        return (self.nx + 1, self.ny)

    @property
    def yface_shape(self):
        return (self.nx, self.ny + 1)

    def cell_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def xface_centers(self):
        x = np.arange(self.nx + 1) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def yface_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def nodes(self):
        x = np.arange(self.nx + 1) * self.hx
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def refined(self, factor: int = 2) -> "Grid":
        return replace(self, nx=self.nx * factor, ny=self.ny * factor)


@dataclass
class FlowState:
    """The quadruplet (density, velocity, pressure, director) at time ``t``."""

    grid: Grid
    rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    d: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        g = self.grid
        expected = {
            "rho": g.cell_shape,
            "u": g.xface_shape,
            "v": g.yface_shape,
            "p": g.cell_shape,
            "d": (3,) + g.cell_shape,
        }
        for name, shape in expected.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)

    def copy(self, **changes) -> "FlowState":
        kw = dict(
            grid=self.grid,
            rho=self.rho.copy(),
            u=self.u.copy(),
            v=self.v.copy(),
            p=self.p.copy(),
            d=self.d.copy(),
            t=self.t,
        )
        kw.update(changes)
        return FlowState(**kw)

    def is_finite(self) -> bool:
        return all(
            np.isfinite(a).all() for a in (self.rho, self.u, self.v, self.p, self.d)
        )

    def check(self, div_tol: float = 1e-10) -> None:
        """Raise ``ValueError`` if the state is not admissible."""
        if not self.is_finite():
            raise ValueError("state contains non-finite values")
        if self.rho.min() <= 0:
            raise ValueError("density must be positive")
        pmean = abs(self.p.mean())
        if pmean > 1e-10 * (1.0 + np.abs(self.p).max()):
            raise ValueError(f"pressure mean {pmean:.3e} is not zero")
        dv = np.abs(div(self.u, self.v, self.grid)).max()
        if dv > div_tol:
            raise ValueError(f"velocity divergence {dv:.3e} exceeds {div_tol:.1e}")


def same_grid(a: FlowState, b: FlowState) -> Grid:
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")
    return a.grid


def rest_state(grid: Grid, rho=1.0, director=(1.0, 0.0, 0.0), t=0.0) -> FlowState:
    d = np.empty((3,) + grid.cell_shape)
    d[:] = np.asarray(director, dtype=float)[:, None, None]
    return FlowState(
        grid=grid,
        rho=np.full(grid.cell_shape, float(rho)),
        u=np.zeros(grid.xface_shape),
        v=np.zeros(grid.yface_shape),
        p=np.zeros(grid.cell_shape),
        d=d,
        t=t,
    )


# -- ghost cells ------------------------------------------------------------


def _closures(bc):
    if isinstance(bc, str):
        bc = (bc, bc)
    for b in bc:
        if b not in CLOSURES:
            raise ValueError(f"unknown boundary closure {b!r}")
    return bc


def _pad_axis(a, axis, bc):
    a = np.moveaxis(a, axis, -1)
    out = np.empty(a.shape[:-1] + (a.shape[-1] + 2,))
    out[..., 1:-1] = a
    if bc == "neumann":
        out[..., 0] = a[..., 0]
        out[..., -1] = a[..., -1]
    elif bc == "dirichlet":
        out[..., 0] = -a[..., 0]
        out[..., -1] = -a[..., -1]
    elif bc == "periodic":
        out[..., 0] = a[..., -1]
        out[..., -1] = a[..., 0]
    else:  # extrapolate
        out[..., 0] = 2.0 * a[..., 0] - a[..., 1]
        out[..., -1] = 2.0 * a[..., -1] - a[..., -2]
    return np.moveaxis(out, -1, axis)


def pad(s, bc="neumann"):
    """Add one ghost layer on each side of the last two axes.

    Corner ghosts are filled but never used by the 5-point stencils.
    """
    bcx, bcy = _closures(bc)
    s = np.asarray(s, dtype=np.float64)
    return _pad_axis(_pad_axis(s, -2, bcx), -1, bcy)


# -- first-order operators ----------------------------------------------------


def grad(s, grid: Grid, bc="neumann"):
    """Face gradient of a cell field; returns ``(gx, gy)`` on x- and y-faces.

    Interior faces take the two-point difference of the adjacent cells;
    boundary faces difference against the ghost value of ``bc``.
    """
    g = pad(s, bc)
    gx = np.diff(g[..., :, 1:-1], axis=-2) / grid.hx
    gy = np.diff(g[..., 1:-1, :], axis=-1) / grid.hy
    return gx, gy


def div(u, v, grid: Grid):
    """MAC divergence of a face field, evaluated at cell centres."""
    return np.diff(u, axis=-2) / grid.hx + np.diff(v, axis=-1) / grid.hy


def laplacian(s, grid: Grid, bc="neumann"):
    """Five-point Laplacian, defined as ``div(grad(s, bc))``."""
    return div(*grad(s, grid, bc), grid)


def cell_gradient(s, grid: Grid, bc="neumann"):
    """Centred gradient at cell centres (face gradient averaged back)."""
    gx, gy = grad(s, grid, bc)
    return xface_to_cell(gx), yface_to_cell(gy)


def curl_of_nodes(psi, grid: Grid):
    """Velocity ``(d psi/dy, -d psi/dx)`` from a node-based stream function.

    Divergence-free to round-off by construction; the wall-normal faces
    vanish whenever ``psi`` is constant along the boundary.
    """
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape != (grid.nx + 1, grid.ny + 1):
        raise ValueError("stream function must live on the (nx+1, ny+1) nodes")
    u = np.diff(psi, axis=1) / grid.hy
    v = -np.diff(psi, axis=0) / grid.hx
    return u, v


# -- interpolation -------------------------------------------------------------


def xface_to_cell(a):
    return 0.5 * (a[..., :-1, :] + a[..., 1:, :])


def yface_to_cell(a):
    return 0.5 * (a[..., :, :-1] + a[..., :, 1:])


def cell_to_xface(s, bc="extrapolate"):
    g = _pad_axis(np.asarray(s, dtype=np.float64), -2, _closures(bc)[0])
    return 0.5 * (g[..., :-1, :] + g[..., 1:, :])


def cell_to_yface(s, bc="extrapolate"):
    g = _pad_axis(np.asarray(s, dtype=np.float64), -1, _closures(bc)[1])
    return 0.5 * (g[..., :, :-1] + g[..., :, 1:])


def yface_to_xface(v):
    """Four-point average of ``v`` onto the interior x-faces, shape (nx-1, ny)."""
    c = yface_to_cell(v)
    return 0.5 * (c[..., :-1, :] + c[..., 1:, :])


def xface_to_yface(u):
    """Four-point average of ``u`` onto the interior y-faces, shape (nx, ny-1)."""
    c = xface_to_cell(u)
    return 0.5 * (c[..., :, :-1] + c[..., :, 1:])


def interpolate(a, source: str, target: str, bc="extrapolate"):
    """Arithmetic-mean interpolation between ``"cell"``, ``"xface"`` and ``"yface"``."""
    if source == target:
        return np.array(a, dtype=np.float64)
    key = (source, target)
    if key == ("xface", "cell"):
        return xface_to_cell(a)
    if key == ("yface", "cell"):
        return yface_to_cell(a)
    if key == ("cell", "xface"):
        return cell_to_xface(a, bc)
    if key == ("cell", "yface"):
        return cell_to_yface(a, bc)
    if key == ("xface", "yface"):
        return cell_to_yface(xface_to_cell(a), bc)
    if key == ("yface", "xface"):
        return cell_to_xface(yface_to_cell(a), bc)
    raise ValueError(f"unknown layouts {source!r} -> {target!r}")


def velocity_at_cells(u, v):
    return xface_to_cell(u), yface_to_cell(v)


# -- velocity (no-slip) operators -----------------------------------------------


def velocity_laplacian(u, v, grid: Grid):
    """Vector Laplacian of a no-slip face velocity.

    Wall-normal faces are taken as zero; tangential walls use odd reflection.
    Returns full face arrays with zero on the wall-normal faces.
    """
    hx2, hy2 = grid.hx**2, grid.hy**2
    lu = np.zeros_like(u)
    uy = _pad_axis(u[1:-1, :], -1, "dirichlet")
    lu[1:-1, :] = (u[2:, :] - 2.0 * u[1:-1, :] + u[:-2, :]) / hx2 + (
        uy[:, 2:] - 2.0 * uy[:, 1:-1] + uy[:, :-2]
    ) / hy2
    lv = np.zeros_like(v)
    vx = _pad_axis(v[:, 1:-1], -2, "dirichlet")
    lv[:, 1:-1] = (vx[2:, :] - 2.0 * vx[1:-1, :] + vx[:-2, :]) / hx2 + (
        v[:, 2:] - 2.0 * v[:, 1:-1] + v[:, :-2]
    ) / hy2
    return lu, lv


def velocity_gradient_sq(u, v, grid: Grid, closure="dirichlet"):
    r"""Quadrature of :math:`\int |\nabla u|^2` for a face velocity.

    Difference quotients sit at cell centres (normal derivatives) and at
    nodes (tangential derivatives); boundary rows get half weight. With the
    default no-slip closure and vanishing wall-normal faces this equals
    ``-<u, velocity_laplacian(u)>`` exactly. ``closure="extrapolate"`` treats
    the field as unconstrained, for quadrature checks on affine fields.
    """
    w = grid.cell_volume
    total = 0.0
    # u: x-derivative at cells, y-derivative at nodes
    total += np.sum((np.diff(u, axis=0) / grid.hx) ** 2) * w
    total += _tangential_sq(u, axis=1, h=grid.hy, closure=closure, w=w)
    total += np.sum((np.diff(v, axis=1) / grid.hy) ** 2) * w
    total += _tangential_sq(v, axis=0, h=grid.hx, closure=closure, w=w)
    return total


def _tangential_sq(a, axis, h, closure, w):
    a = np.moveaxis(a, axis, -1)
    # rows of faces lying on the walls normal to the other direction get half weight
    row_w = np.ones(a.shape[0])
    row_w[0] = row_w[-1] = 0.5
    inner = (np.diff(a, axis=-1) / h) ** 2
    g = _pad_axis(a, -1, closure)
    lo = ((g[..., 1] - g[..., 0]) / h) ** 2
    hi = ((g[..., -1] - g[..., -2]) / h) ** 2
    s = np.sum(inner, axis=-1) + 0.5 * (lo + hi)
    return float(np.sum(row_w * s) * w)


# -- inner products ------------------------------------------------------------


def inner(a, b, grid: Grid) -> float:
    """Cell-volume weighted inner product over every entry of ``a`` and ``b``."""
    return float(np.sum(np.asarray(a) * np.asarray(b)) * grid.cell_volume)


def norm_l2(a, grid: Grid) -> float:
    return float(np.sqrt(inner(a, a, grid)))


def velocity_norm_l2(u, v, grid: Grid) -> float:
    return float(np.sqrt((np.sum(u * u) + np.sum(v * v)) * grid.cell_volume))


# -- assembled matrices --------------------------------------------------------


def _second_difference(n, h, bc):
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    m = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if bc == "neumann":
        m[0, 0] = m[n - 1, n - 1] = -1.0
    elif bc == "dirichlet":
        m[0, 0] = m[n - 1, n - 1] = -3.0
    elif bc == "periodic":
        m[0, n - 1] = m[n - 1, 0] = 1.0
    elif bc == "extrapolate":
        # linear ghost: 2 s0 - s1 cancels the stencil at the wall
        m[0, 0] = m[n - 1, n - 1] = 0.0
        m[0, 1] = m[n - 1, n - 2] = 0.0
    return m.tocsr() / h**2


@lru_cache(maxsize=32)
def laplacian_matrix(grid: Grid, bc="neumann") -> sp.csr_matrix:
    """Sparse five-point Laplacian on cell-centred data, C-order flattening."""
    bcx, bcy = _closures(bc)
    dx = _second_difference(grid.nx, grid.hx, bcx)
    dy = _second_difference(grid.ny, grid.hy, bcy)
    return (
        sp.kron(dx, sp.identity(grid.ny)) + sp.kron(sp.identity(grid.nx), dy)
    ).tocsr()
