"""
Coupled time stepping by Picard iteration on the three linear sub-problems.

Given frozen velocity ``w`` and director ``f``, one sweep solves, in order,

1. density transport by ``w`` from the old density,
2. the director heat step with source ``-(w . grad) f + gamma |grad f|^2 f``,
3. the Stokes step with the *new* density and forcing
   ``-rho_new (w . grad) w - lam (grad f)^T Lap f``,

and then freezes the result for the next sweep. :func:`step_coupled` iterates
this within one time step (the production mode). :func:`trajectory_iteration`
instead iterates whole trajectories on ``[0, T]``, each solving the linear
problems with the previous trajectory as frozen data; its fixed point is the
same discrete solution that :func:`run` produces step by step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .diagnostics import DiagnosticsRecord
from .director import DirectorOptions, solve_director
from .errors import PicardDiverged
from .fields import FlowState, grad, norm_l2, same_grid, velocity_norm_l2
from .presets import make_initial_data
from .stokes import StokesOptions, StokesSolver, convection, elastic_force
from .transport import TransportOptions, solve_transport


@dataclass(frozen=True)
class PicardOptions:
    tol: float = 1e-8
    max_iters: int = 50
    mode: str = "per_step"

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.mode not in ("per_step", "trajectory"):
            raise ValueError(f"unknown Picard mode {self.mode!r}")


@dataclass(frozen=True)
class SchemeOptions:
    """Sub-solver options bundled for one coupled scheme."""

    picard: PicardOptions = field(default_factory=PicardOptions)
    transport: TransportOptions = field(default_factory=TransportOptions)
    director: DirectorOptions = field(default_factory=DirectorOptions)
    stokes: StokesOptions = field(default_factory=StokesOptions)

    @classmethod
    def from_config(cls, cfg: SolverConfig) -> "SchemeOptions":
        return cls(
            picard=PicardOptions(cfg.picard_tol, cfg.picard_max_iters, cfg.picard_mode),
            transport=TransportOptions(
                cfl_max=cfg.cfl_max, scheme=cfg.transport_scheme, div_tol=cfg.saddle_tol
            ),
            director=DirectorOptions(cfg.gamma, cfg.director_tol, cfg.renormalize),
            stokes=StokesOptions(cfg.mu, cfg.lam, cfg.saddle_tol, cfg.stokes_max_iters),
        )


@dataclass
class StepReport:
    iterations: int
    distances: list


def iterate_distance(a: FlowState, b: FlowState) -> float:
    """Sum of the L2 distances of velocity, director, director gradient and density."""
    g = same_grid(a, b)
    dd = a.d - b.d
    gx, gy = grad(dd, g, "neumann")
    return (
        velocity_norm_l2(a.u - b.u, a.v - b.v, g)
        + norm_l2(dd, g)
        + float(np.sqrt((np.sum(gx * gx) + np.sum(gy * gy)) * g.cell_volume))
        + norm_l2(a.rho - b.rho, g)
    )


def linear_step(state: FlowState, frozen: FlowState, dt: float, opts: SchemeOptions,
                solver: StokesSolver) -> FlowState:
    """Solve the three linear sub-problems from ``state`` with frozen ``(u, d)`` from ``frozen``."""
    g = state.grid
    w_u, w_v, f = frozen.u, frozen.v, frozen.d
    rho = solve_transport(state.rho, w_u, w_v, g, dt, opts.transport)
    d = solve_director(state.d, w_u, w_v, f, g, dt, opts.director)
    cx, cy = convection(rho, w_u, w_v, g)
    ex, ey = elastic_force(f, g, opts.stokes.lam)
    u, v, p = solver.solve(rho, state.u, state.v, cx + ex, cy + ey)
    return FlowState(g, rho, u, v, p, d, state.t + dt)


def step_coupled(state: FlowState, dt: float, opts: SchemeOptions | None = None,
                 solver: StokesSolver | None = None):
    """Advance one time step; returns ``(new_state, StepReport)``.

    Raises
    ------
    PicardDiverged
        The inter-iterate distance grew three times in a row, or ``max_iters``
        sweeps did not bring it below ``tol``.
    """
    opts = opts or SchemeOptions()
    if solver is None:
        solver = StokesSolver(state.grid, dt, opts.stokes)
    tol, max_iters = opts.picard.tol, opts.picard.max_iters
    frozen = state
    distances = []
    growth = 0
    for k in range(1, max_iters + 1):
        new = linear_step(state, frozen, dt, opts, solver)
        dist = iterate_distance(new, frozen)
        distances.append(dist)
        if dist < tol:
            return new, StepReport(k, distances)
        if k > 1 and dist > distances[-2]:
            growth += 1
            if growth >= 3:
                raise PicardDiverged(
                    f"t={state.t:.4g}: distance grew 3 times in a row ({dist:.3e})"
                )
        else:
            growth = 0
        frozen = new
    raise PicardDiverged(
        f"t={state.t:.4g}: {max_iters} sweeps left distance {distances[-1]:.3e} > {tol:.1e}"
    )


@dataclass
class Trajectory:
    """Sampled states on a uniform time grid plus per-step Picard counts.

    ``states`` holds every ``stride``-th state (always including the first and
    last); ``picard_iters[n]`` is the count used to reach step ``n``.
    """

    dt: float
    stride: int = 1
    states: list = field(default_factory=list)
    picard_iters: list = field(default_factory=list)

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    def sampled_iters(self):
        """Picard counts aligned with ``states``."""
        idx = [int(round(s.t / self.dt)) for s in self.states]
        return [self.picard_iters[i] for i in idx]


def run(cfg: SolverConfig, keep_states=True, initial: FlowState | None = None,
        progress=None):
    """Integrate from the configured initial data to ``t_final``.

    Diagnostics are recorded at every step. States are kept every
    ``cfg.sample_stride`` steps when ``keep_states`` is true (the initial and
    final states always).
    """
    opts = SchemeOptions.from_config(cfg)
    state = initial if initial is not None else make_initial_data(cfg)
    traj = Trajectory(cfg.dt, cfg.sample_stride, [state], [0])
    rec = DiagnosticsRecord()
    rec.append(state, cfg.mu, cfg.lam, cfg.gamma, 0)
    solver = StokesSolver(state.grid, cfg.dt, opts.stokes)
    n_steps = cfg.n_steps
    for n in range(1, n_steps + 1):
        state, report = step_coupled(state, cfg.dt, opts, solver)
        state.t = n * cfg.dt
        traj.picard_iters.append(report.iterations)
        rec.append(state, cfg.mu, cfg.lam, cfg.gamma, report.iterations)
        if keep_states and (n % cfg.sample_stride == 0 or n == n_steps):
            traj.states.append(state)
        if progress is not None:
            progress(n, state, report)
    if not keep_states and n_steps > 0:
        traj.states.append(state)
    return traj, rec


def _trajectory_sweeps(cfg: SolverConfig, init: FlowState):
    """Yield ``(D_k, states_k)`` for ``k = 1, 2, ...``."""
    opts = SchemeOptions.from_config(cfg)
    n_steps = cfg.n_steps
    prev = [init.copy(t=n * cfg.dt) for n in range(n_steps + 1)]
    solver = StokesSolver(init.grid, cfg.dt, opts.stokes)
    while True:
        cur = [init]
        for n in range(n_steps):
            nxt = linear_step(cur[-1], prev[n + 1], cfg.dt, opts, solver)
            nxt.t = (n + 1) * cfg.dt
            cur.append(nxt)
        dist = max(iterate_distance(a, b) for a, b in zip(cur, prev))
        yield dist, cur
        prev = cur


def trajectory_iteration(cfg: SolverConfig, n_iters: int, return_trajectories=False):
    """Iterate whole trajectories on ``[0, t_final]``.

    Trajectory 0 is the initial data held constant in time. Trajectory
    ``k + 1`` takes the velocity and director of trajectory ``k`` at the new
    time level as frozen data in every step. Returns the list
    ``D[k - 1] = max_n iterate_distance(traj_k(t_n), traj_{k-1}(t_n))`` for
    ``k = 1 .. n_iters``, and the final trajectory's states if requested.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be at least 1")
    distances = []
    states = None
    for k, (dist, states) in enumerate(_trajectory_sweeps(cfg, make_initial_data(cfg)), 1):
        distances.append(dist)
        if k == n_iters:
            break
    if return_trajectories:
        return distances, states
    return distances


def run_trajectory_mode(cfg: SolverConfig, initial: FlowState | None = None):
    """Trajectory iteration until ``D_k < picard_tol``; same return shape as :func:`run`.

    Raises
    ------
    PicardDiverged
        ``picard_max_iters`` sweeps did not converge.
    """
    init = initial if initial is not None else make_initial_data(cfg)
    distances = []
    for k, (dist, states) in enumerate(_trajectory_sweeps(cfg, init), 1):
        distances.append(dist)
        if dist < cfg.picard_tol:
            break
        if k == cfg.picard_max_iters:
            raise PicardDiverged(
                f"trajectory iteration: {k} sweeps left distance {dist:.3e} > {cfg.picard_tol:.1e}"
            )
    iters = [0] + [k] * (len(states) - 1)
    rec = DiagnosticsRecord.from_states(states, cfg.mu, cfg.lam, cfg.gamma, iters)
    n = len(states) - 1
    kept = [s for i, s in enumerate(states) if i % cfg.sample_stride == 0 or i == n]
    return Trajectory(cfg.dt, cfg.sample_stride, kept, iters), rec


def simulate(cfg: SolverConfig, initial: FlowState | None = None):
    """Dispatch on ``cfg.picard_mode``."""
    if cfg.picard_mode == "trajectory":
        return run_trajectory_mode(cfg, initial)
    return run(cfg, initial=initial)
