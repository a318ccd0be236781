"""
Initial-data presets.

Presets are applied in order onto the rest state (unit density, no flow,
director along ``e1``); each one overwrites only the fields it owns, so
``["small_vortex_twist", "density_bump"]`` combines a vortex and director
twist with a non-uniform density. Velocities always come from a node stream
function vanishing on the walls, so they are discretely divergence-free with
zero wall-normal flux. Directors are normalised per cell.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidPreset
from .fields import FlowState, Grid, curl_of_nodes, rest_state, velocity_norm_l2


def _director_from_angles(theta, phi):
    d = np.stack(
        [np.cos(theta) * np.cos(phi), np.sin(theta) * np.cos(phi), np.sin(phi)]
    )
    return d / np.sqrt(np.sum(d * d, axis=0))


def _equilibrium(state, grid, cfg):
    return rest_state(grid)


def _pin_walls(psi):
    # sin(pi) is not exactly zero; pin the wall nodes so the normal velocity is
    psi[0] = psi[-1] = 0.0
    psi[:, 0] = psi[:, -1] = 0.0
    return psi


def _small_vortex_twist(state, grid, cfg):
    xn, yn = grid.nodes()
    sx, sy = np.sin(np.pi * xn / grid.lx), np.sin(np.pi * yn / grid.ly)
    psi = cfg.velocity_amplitude * sx**2 * sy**2
    u, v = curl_of_nodes(_pin_walls(psi), grid)
    x, y = grid.cell_centers()
    cx, cy = np.cos(np.pi * x / grid.lx), np.cos(np.pi * y / grid.ly)
    theta = cfg.twist_amplitude * cx * cy
    phi = cfg.tilt_amplitude * cy * np.cos(2 * np.pi * x / grid.lx)
    return state.copy(u=u, v=v, d=_director_from_angles(theta, phi))


def _density_bump(state, grid, cfg):
    x, y = grid.cell_centers()
    r2 = (x - cfg.bump_x * grid.lx) ** 2 + (y - cfg.bump_y * grid.ly) ** 2
    g = np.exp(-r2 / cfg.bump_width**2)
    g = (g - g.min()) / (g.max() - g.min())
    rho = cfg.rho_min + (cfg.rho_max - cfg.rho_min) * g
    return state.copy(rho=rho)


PRESETS = {
    "equilibrium": _equilibrium,
    "small_vortex_twist": _small_vortex_twist,
    "density_bump": _density_bump,
}


def perturbation_fields(grid: Grid):
    """Unit-L2 divergence-free velocity and a Neumann-compatible angle field."""
    xn, yn = grid.nodes()
    psi = np.sin(2 * np.pi * xn / grid.lx) * np.sin(np.pi * yn / grid.ly) ** 2
    psi *= np.sin(np.pi * xn / grid.lx)
    u, v = curl_of_nodes(_pin_walls(psi), grid)
    n = velocity_norm_l2(u, v, grid)
    x, y = grid.cell_centers()
    eta = np.cos(2 * np.pi * x / grid.lx) * np.cos(np.pi * y / grid.ly)
    return u / n, v / n, eta


def make_initial_data(cfg, grid: Grid | None = None) -> FlowState:
    """Build the initial state described by ``cfg.presets`` and preset parameters.

    A non-zero ``cfg.perturb_eps`` adds ``eps`` times a unit divergence-free
    velocity and rotates the director in-plane by ``eps * eta(x, y)``.
    """
    grid = grid or cfg.grid
    state = rest_state(grid)
    for name in cfg.presets:
        try:
            build = PRESETS[name]
        except KeyError:
            raise InvalidPreset(f"presets: unknown preset {name!r}", key="presets") from None
        state = build(state, grid, cfg)
    if cfg.perturb_eps:
        pu, pv, eta = perturbation_fields(grid)
        c, s = np.cos(cfg.perturb_eps * eta), np.sin(cfg.perturb_eps * eta)
        d = state.d.copy()
        d[0], d[1] = c * state.d[0] - s * state.d[1], s * state.d[0] + c * state.d[1]
        state = state.copy(u=state.u + cfg.perturb_eps * pu, v=state.v + cfg.perturb_eps * pv, d=d)
    rho = state.rho
    if not rho.min() > 0:
        raise InvalidPreset("rho_min: initial density must be positive", key="rho_min")
    return state
