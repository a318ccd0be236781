"""Acceptance suite on the reference configuration.

Reference: unit square, 64 x 64, dt = 1/256, mu = lam = gamma = 1, presets
small_vortex_twist + density_bump with density range [0.5, 2.0], T = 1.
Each test prints one PASS/FAIL line; the lines are repeated in the terminal
summary.
"""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from nlcflow.config import SolverConfig, load_config
from nlcflow.coupling import run, trajectory_iteration
from nlcflow.diagnostics import decay_check, dirichlet_eigenvalue, relative_energy
from nlcflow.fields import Grid, div, grad, inner, laplacian, laplacian_matrix
from nlcflow.stokes import solve_stokes

pytestmark = pytest.mark.slow

ROOT = Path(__file__).resolve().parent.parent
REFERENCE = SolverConfig()

# fitted once on the reference run (C ~ -10.64 at eps = 1e-2) and frozen
STABILITY_RATE = -10.0


@pytest.fixture(scope="module")
def reference():
    return run(REFERENCE)


@pytest.fixture(scope="module")
def refined():
    return run(REFERENCE.refined())


def test_reference_configuration_is_pinned():
    cfg = load_config(ROOT / "configs" / "reference.toml")
    assert cfg.with_(output_dir="out", sample_stride=1) == REFERENCE
    assert (REFERENCE.nx, REFERENCE.dt, REFERENCE.t_final, REFERENCE.picard_tol) == (64, 1 / 256, 1.0, 1e-8)


def test_c01_discrete_operator_identities(acceptance_line):
    rng = np.random.default_rng(20240101)
    worst_sbp = worst_lap = 0.0
    for grid in (Grid(16, 16), Grid(32, 24, 1.0, 0.75), Grid(64, 64)):
        for bc in ("neumann", "dirichlet"):
            s = rng.standard_normal(grid.cell_shape)
            u = rng.standard_normal(grid.xface_shape)
            v = rng.standard_normal(grid.yface_shape)
            u[0] = u[-1] = 0.0
            v[:, 0] = v[:, -1] = 0.0
            gx, gy = grad(s, grid, bc)
            lhs = inner(div(u, v, grid), s, grid)
            rhs = -float(np.sum(u * gx) + np.sum(v * gy)) * grid.cell_volume
            scale = float(np.sum(np.abs(u * gx)) + np.sum(np.abs(v * gy))) * grid.cell_volume
            worst_sbp = max(worst_sbp, abs(lhs - rhs) / scale)
            # div(grad) against the independently assembled five-point matrix
            a = div(*grad(s, grid, bc), grid)
            b = (laplacian_matrix(grid, bc) @ s.ravel()).reshape(grid.cell_shape)
            assert np.array_equal(a, laplacian(s, grid, bc))
            worst_lap = max(worst_lap, np.abs(a - b).max() / np.abs(a).max())
    ok = worst_sbp <= 1e-12 and worst_lap <= 1e-12
    acceptance_line(1, "operator identities", ok, f"sbp {worst_sbp:.2e}, div.grad vs matrix {worst_lap:.2e} (tol 1e-12)")
    assert ok


def test_c02_incompressibility(reference, acceptance_line):
    _, rec = reference
    worst = rec.column("div_inf").max()
    ok = len(rec) == REFERENCE.n_steps + 1 and worst <= 1e-10
    acceptance_line(2, "incompressibility", ok, f"max |div u| {worst:.2e} over {len(rec) - 1} solves (tol 1e-10)")
    assert ok


def test_c03_density_maximum_principle(reference, acceptance_line):
    _, rec = reference
    lo, hi = rec.column("rho_min").min(), rec.column("rho_max").max()
    mass = rec.column("mass")
    drift = np.abs(mass - mass[0]).max() / mass[0]
    ok = rec.rho_min[0] == 0.5 and rec.rho_max[0] == 2.0 and lo >= 0.5 and hi <= 2.0 and drift <= 1e-12
    acceptance_line(3, "density maximum principle", ok, f"range [{float(lo)!r}, {float(hi)!r}], mass drift {drift:.2e}")
    assert ok


def test_c04_energy_dissipation(reference, refined, acceptance_line):
    _, rec = reference
    _, fine = refined
    increments = np.diff(rec.column("e_total"))
    coarse_res, fine_res = rec.integrated_residual(), fine.integrated_residual()
    factor = coarse_res / fine_res
    ok = bool(np.all(increments <= 0.0)) and 1.5 <= factor <= 3.0
    acceptance_line(
        4,
        "energy dissipation",
        ok,
        f"max increment {increments.max():.2e}, residual {coarse_res:.4e} -> {fine_res:.4e} (factor {factor:.3f})",
    )
    assert ok


def test_c05_unit_sphere_constraint(reference, refined, acceptance_line):
    _, rec = reference
    _, fine = refined
    coarse, f = rec.d_drift[-1], fine.d_drift[-1]
    ok = not REFERENCE.renormalize and coarse <= 5e-3 and coarse / f >= 1.5
    acceptance_line(5, "unit-sphere drift", ok, f"d_drift(T) {coarse:.3e} -> {f:.3e} (factor {coarse / f:.3f})")
    assert ok


def test_c06_small_data_decay(reference, acceptance_line):
    _, rec = reference
    lambda1 = dirichlet_eigenvalue(REFERENCE.grid)
    target = 2 * np.pi**2
    weighted = 2 * rec.column("e_kin") + 2 * rec.column("e_elastic") / REFERENCE.lam
    report = decay_check(rec.t, weighted, rho_hat=rec.rho_max[0], lambda1=lambda1, atol=1e-10)
    eig_ok = abs(lambda1 - target) <= 0.02 * target
    ok = eig_ok and report.ok
    acceptance_line(
        6,
        "small-data decay",
        ok,
        f"lambda1 {lambda1:.4f} vs {target:.4f}, min margin {report.margin.min():.2e}, "
        f"violations {len(report.violations)}",
    )
    assert ok


def test_c07_picard_contraction(reference, acceptance_line):
    _, rec = reference
    distances = trajectory_iteration(REFERENCE.with_(t_final=0.1), 6)
    ratios = np.array(distances[1:]) / np.array(distances[:-1])
    # ratios[k - 1] = D_{k+1} / D_k, so k >= 2 starts at index 1
    contraction = ratios[1:].max()
    per_step = max(rec.picard_iters)
    ok = contraction <= 0.5 and per_step <= 5 and REFERENCE.picard_tol == 1e-8
    acceptance_line(
        7,
        "Picard contraction",
        ok,
        f"max D(k+1)/D(k) for k>=2 {contraction:.3e}, D(2)/D(1) {ratios[0]:.3e}, per-step max {per_step} sweeps",
    )
    assert ok


def test_c08_weak_strong_stability(reference, acceptance_line):
    ref_traj, _ = reference
    series = {}
    for eps in (1e-2, 5e-3):
        traj, _ = run(REFERENCE.with_(perturb_eps=eps))
        series[eps] = np.array([relative_energy(a, b) for a, b in zip(traj.states, ref_traj.states)])
    times = ref_traj.times
    ratio = series[1e-2][-1] / series[5e-3][-1]
    worst = -np.inf
    bound_ok = True
    for re in series.values():
        bound = np.exp(STABILITY_RATE * times) * re[0]
        bound_ok &= bool(np.all(re <= bound))
        worst = max(worst, float(np.max(np.log(re[1:] / re[0]) / times[1:])))
    ok = 3.0 <= ratio <= 5.0 and bound_ok
    acceptance_line(
        8,
        "weak-strong stability",
        ok,
        f"RE(T) ratio {ratio:.3f}, fitted rate {worst:.3f} vs frozen C = {STABILITY_RATE}",
    )
    assert ok


def test_c09_gradient_absorption(acceptance_line):
    rng = np.random.default_rng(9)
    g = REFERENCE.grid
    phi = rng.standard_normal(g.cell_shape)
    fx, fy = grad(phi, g, "neumann")
    zu, zv = np.zeros(g.xface_shape), np.zeros(g.yface_shape)
    worst_u = worst_p = 0.0
    for rho in (np.ones(g.cell_shape), rng.uniform(0.5, 2.0, g.cell_shape)):
        u, v, p = solve_stokes(rho, zu, zv, fx, fy, g, REFERENCE.dt)
        worst_u = max(worst_u, np.abs(u).max(), np.abs(v).max())
        worst_p = max(worst_p, np.abs(p - (phi - phi.mean())).max())
    ok = worst_u <= 1e-10 and worst_p <= 1e-10
    acceptance_line(9, "gradient absorption", ok, f"max |u| {worst_u:.2e}, max |P - phi| {worst_p:.2e} (tol 1e-10)")
    assert ok


def test_c10_determinism(tmp_path, acceptance_line):
    outputs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        proc = subprocess.run(
            [sys.executable, "-m", "nlcflow", "run", "--config", str(ROOT / "configs" / "reference.toml"), "--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append((out / "diagnostics.csv").read_bytes())
    ok = outputs[0] == outputs[1] and len(outputs[0]) > 0
    acceptance_line(10, "determinism", ok, f"diagnostics.csv {len(outputs[0])} bytes, identical: {outputs[0] == outputs[1]}")
    assert ok
