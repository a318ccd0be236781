"""Discrete MAC operators: summation by parts and the five-point Laplacian.

Builds random cell and face fields on a few grids and prints the defect of the
discrete integration-by-parts identity and of div(grad) against the assembled
sparse matrix.
"""

import numpy as np

from nlcflow.fields import Grid, div, grad, inner, laplacian_matrix

rng = np.random.default_rng(0)
print(f"{'grid':>12} {'bc':>10} {'sbp defect':>12} {'lap rel.':>12}")
for grid in (Grid(16, 16), Grid(32, 24, 1.0, 0.75), Grid(64, 64)):
    for bc in ("neumann", "dirichlet"):
        s = rng.standard_normal(grid.cell_shape)
        u = rng.standard_normal(grid.xface_shape)
        v = rng.standard_normal(grid.yface_shape)
        u[0] = u[-1] = 0.0
        v[:, 0] = v[:, -1] = 0.0
        gx, gy = grad(s, grid, bc)
        sbp = inner(div(u, v, grid), s, grid) + float(np.sum(u * gx) + np.sum(v * gy)) * grid.cell_volume
        lap = div(gx, gy, grid) - (laplacian_matrix(grid, bc) @ s.ravel()).reshape(grid.cell_shape)
        print(f"{grid.nx:>5} x {grid.ny:<4} {bc:>10} {abs(sbp):12.2e} {np.abs(lap).max() / np.abs(gx).max() * grid.hx:12.2e}")
