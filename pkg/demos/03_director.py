"""Director flow: a tilted director relaxes towards a uniform state.

Without flow the director obeys a heat flow with the unit-length source. The
gradient energy falls every step and the distance from the unit sphere stays
small without any renormalisation.
"""

import numpy as np

from nlcflow.config import SolverConfig
from nlcflow.diagnostics import director_gradient_sq
from nlcflow.director import solve_director, unit_norm_drift
from nlcflow.presets import make_initial_data

cfg = SolverConfig(nx=48, ny=48, dt=1 / 200, twist_amplitude=0.8)
state = make_initial_data(cfg)
g = state.grid
u, v = np.zeros(g.xface_shape), np.zeros(g.yface_shape)
d = state.d
for k in range(101):
    if k % 20 == 0:
        print(f"t={k * cfg.dt:5.2f}  |grad d|^2 {director_gradient_sq(d, g):.6e}  drift {unit_norm_drift(d):.2e}")
    # the lagged director supplies the nonlinear source, as in one Picard sweep
    d = solve_director(d, u, v, d, g, cfg.dt)
