"""Density transport: the upwind scheme keeps the density inside its initial range.

A density bump is advected by a small vortex for one time unit. The printed
extrema never leave [0.5, 2.0] and the mass changes only by round-off.
"""

from nlcflow.config import SolverConfig
from nlcflow.presets import make_initial_data
from nlcflow.transport import courant_number, solve_transport

cfg = SolverConfig(nx=64, ny=64, velocity_amplitude=0.2)
state = make_initial_data(cfg)
g = state.grid
rho = state.rho
m0 = rho.sum()
print(f"Courant number {courant_number(state.u, state.v, g, cfg.dt):.3f}")
for k in range(1, cfg.n_steps + 1):
    rho = solve_transport(rho, state.u, state.v, g, cfg.dt)
    if k % 64 == 0:
        print(f"t={k * cfg.dt:5.2f}  min {rho.min():.17g}  max {rho.max():.17g}  mass drift {abs(rho.sum() - m0) / m0:.1e}")
