"""Generalised Stokes solve: gradient forcing is absorbed entirely by the pressure.

Forcing the momentum equation by a discrete gradient must leave the velocity at
rest with the pressure equal to the potential. The second part shows a vortex
decaying at the rate of the slowest Stokes mode.
"""

import numpy as np

from nlcflow.fields import Grid, curl_of_nodes, grad
from nlcflow.stokes import StokesSolver, face_kinetic_energy, solve_stokes

g = Grid(64, 64)
rng = np.random.default_rng(1)
phi = rng.standard_normal(g.cell_shape)
fx, fy = grad(phi, g)
zu, zv = np.zeros(g.xface_shape), np.zeros(g.yface_shape)
rho = rng.uniform(0.5, 2.0, g.cell_shape)
u, v, p = solve_stokes(rho, zu, zv, fx, fy, g, 1 / 256)
print(f"gradient forcing: max|u| {max(np.abs(u).max(), np.abs(v).max()):.1e}, "
      f"max|P - phi| {np.abs(p - phi + phi.mean()).max():.1e}")

g = Grid(32, 32)
xn, yn = g.nodes()
u, v = curl_of_nodes(np.sin(np.pi * xn) ** 2 * np.sin(np.pi * yn) ** 2, g)
zu, zv = np.zeros(g.xface_shape), np.zeros(g.yface_shape)
dt = 1e-3
solver = StokesSolver(g, dt)
ones = np.ones(g.cell_shape)
e = [face_kinetic_energy(ones, u, v, g)]
for _ in range(200):
    u, v, _ = solver.solve(ones, u, v, zu, zv)
    e.append(face_kinetic_energy(ones, u, v, g))
rate = np.log(e[-2] / e[-1]) / (2 * dt)
# backward Euler decays at log(1 + lam dt) / dt, slightly below the eigenvalue lam
print(f"vortex decay rate {rate:.2f}, implied eigenvalue {np.expm1(rate * dt) / dt:.2f} (extrapolated ~ 52.34)")
