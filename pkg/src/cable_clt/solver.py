"""Explicit Euler-Maruyama solver for the stochastic cable equation.

Cell-centered finite differences on [0, L] with space-time white noise:

    u_i^{n+1} = u_i^n + dt [ (beta/2)(u_{i+1} - 2 u_i + u_{i-1}) / dx^2
                             - alpha u_i ] + sigma(u_i) xi_i^n sqrt(dt / dx)

with xi_i^n independent standard normals.  Boundaries enter through ghost
cells: mirrored for Neumann, negated for Dirichlet (zero value at the wall),
wrapped for periodic.  Stability requires beta dt / dx^2 <= 1/4.

Each replicate owns a counter-based Philox stream keyed by
(master_seed, replicate), so ensembles are bit-identical for any chunking,
execution order, or worker count.  The recorded observable is the centered
spatial average

    F_L(t) = (1/L) sum_i (u_i - I_0(t, x_i)) dx

with the kernel mass I_0 from the kernels module.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .model import ConfigurationError, ModelParams, NumericalFailureError

_BLOWUP_LIMIT = 1e6
_NOISE_BLOCK_STEPS = 64
# target footprint of one chunk's noise block, in floats
_CHUNK_NOISE_FLOATS = 4_194_304


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid.

    ``stability_ratio`` is beta dt / dx^2 and must not exceed 1/4.
    Acceptance-grade runs keep dx <= 0.1.
    """

    n_space: int
    n_time: int
    length: float
    horizon: float
    stability_ratio: float

    @property
    def dx(self) -> float:
        return self.length / self.n_space

    @property
    def dt(self) -> float:
        return self.horizon / self.n_time

    @classmethod
    def build(cls, params: ModelParams, dx: float = 0.1,
              stability: float = 0.25) -> "Grid":
        """Finest grid with spacing <= dx meeting the stability target."""
        if not 0 < stability <= 0.25:
            raise ConfigurationError(f"stability target must be in (0, 0.25], got {stability}")
        n_space = max(8, math.ceil(params.length / dx))
        dx_actual = params.length / n_space
        n_time = math.ceil(params.horizon * params.beta / (stability * dx_actual**2))
        dt = params.horizon / n_time
        return cls(
            n_space=n_space,
            n_time=n_time,
            length=params.length,
            horizon=params.horizon,
            stability_ratio=params.beta * dt / dx_actual**2,
        )

    def validate(self, params: ModelParams) -> None:
        if self.n_space < 8:
            raise ConfigurationError(f"grid needs >= 8 cells, got {self.n_space}")
        if self.length != params.length or self.horizon != params.horizon:
            raise ConfigurationError("grid extent does not match params")
        ratio = params.beta * self.dt / self.dx**2
        if ratio > 0.25 + 1e-12:
            raise ConfigurationError(
                f"unstable grid: beta dt/dx^2 = {ratio:.4g} > 0.25"
            )

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_space) + 0.5) * self.dx


@dataclass(frozen=True)
class Trajectory:
    """One realized solution: field snapshots and centered averages F_L."""

    times: np.ndarray       # (n_out,)
    field: np.ndarray       # (n_out, n_space)
    f_l: np.ndarray         # (n_out,)
    seed: int


@dataclass(frozen=True)
class Ensemble:
    """Seeded collection of independent F_L paths (fields are discarded)."""

    params: ModelParams
    grid: Grid
    times: np.ndarray       # (n_out,)
    f_l: np.ndarray         # (n_rep, n_out)
    master_seed: int

    @property
    def n_rep(self) -> int:
        return self.f_l.shape[0]


def _output_steps(grid: Grid, output_times: Sequence[float]) -> np.ndarray:
    """Snap requested times to grid steps; they must be sorted and in [0, T]."""
    times = np.asarray(output_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ConfigurationError("output_times must be a nonempty 1-d list")
    if np.any(np.diff(times) <= 0):
        raise ConfigurationError("output_times must be strictly increasing")
    if times[0] < 0 or times[-1] > grid.horizon + 1e-12:
        raise ConfigurationError(f"output_times must lie in [0, T={grid.horizon}]")
    steps = np.rint(times / grid.dt).astype(int)
    steps = np.clip(steps, 0, grid.n_time)
    if np.any(np.diff(steps) <= 0):
        raise ConfigurationError("output_times collide on the grid; refine dt or space them")
    return steps


def _centering_means(params: ModelParams, grid: Grid, out_times: np.ndarray) -> np.ndarray:
    """Cell-averaged I_0(t, .) at each output time: the mean of F_L's centering."""
    centers = grid.cell_centers()
    return np.array([
        float(np.mean(kernels.green_mass_profile(params, t, centers)))
        for t in out_times
    ])


def _centering_profiles(params: ModelParams, grid: Grid, out_times: np.ndarray) -> np.ndarray:
    centers = grid.cell_centers()
    return np.stack([
        kernels.green_mass_profile(params, t, centers) for t in out_times
    ])


def _advance_chunk(params: ModelParams, grid: Grid, out_steps: np.ndarray,
                   master_seed: int, replicates: np.ndarray,
                   keep_fields: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Step a chunk of replicates; returns (mean paths, fields or None).

    Row r uses the Philox stream keyed (master_seed, replicates[r]); the
    arithmetic per row never mixes rows, so results do not depend on how
    replicates are grouped into chunks.
    """
    n_rep = len(replicates)
    n, m = grid.n_space, grid.n_time
    dt, dx = grid.dt, grid.dx
    beta_half, alpha = 0.5 * params.beta, params.alpha
    sigma = params.sigma
    noise_scale = math.sqrt(dt / dx)
    bc = params.bc.value

    gens = [
        np.random.Generator(np.random.Philox(key=np.array(
            [master_seed & 0xFFFFFFFFFFFFFFFF, int(r)], dtype=np.uint64)))
        for r in replicates
    ]
    u = np.ones((n_rep, n))
    pad = np.empty((n_rep, n + 2))
    means = np.empty((n_rep, len(out_steps)))
    fields = np.empty((n_rep, len(out_steps), n)) if keep_fields else None

    out_pos = 0
    if len(out_steps) and out_steps[0] == 0:
        means[:, 0] = u.mean(axis=1)
        if keep_fields:
            fields[:, 0, :] = u
        out_pos = 1

    noise = None
    block_start = 0
    for step in range(m):
        if noise is None or step - block_start >= noise.shape[1]:
            block_start = step
            nb = min(_NOISE_BLOCK_STEPS, m - step)
            noise = np.stack([g.standard_normal((nb, n)) for g in gens])
        xi = noise[:, step - block_start, :]

        pad[:, 1:-1] = u
        if bc == "neumann":
            pad[:, 0] = u[:, 0]
            pad[:, -1] = u[:, -1]
        elif bc == "dirichlet":
            pad[:, 0] = -u[:, 0]
            pad[:, -1] = -u[:, -1]
        else:  # periodic
            pad[:, 0] = u[:, -1]
            pad[:, -1] = u[:, 0]
        lap = pad[:, 2:] - 2.0 * u + pad[:, :-2]
        u = u + dt * (beta_half * lap / dx**2 - alpha * u) + sigma(u) * xi * noise_scale

        peak = max(u.max(), -u.min())
        if not peak < _BLOWUP_LIMIT:
            bad = int(np.argmax(np.abs(u).max(axis=1) >= _BLOWUP_LIMIT))
            raise NumericalFailureError(
                f"field blow-up (|u| >= {_BLOWUP_LIMIT:g}) at step {step + 1}",
                step=step + 1,
                replicate=int(replicates[bad]),
            )
        if out_pos < len(out_steps) and step + 1 == out_steps[out_pos]:
            means[:, out_pos] = u.mean(axis=1)
            if keep_fields:
                fields[:, out_pos, :] = u
            out_pos += 1
    return means, fields


def _chunk_size(n_space: int) -> int:
    return max(1, min(64, _CHUNK_NOISE_FLOATS // (n_space * _NOISE_BLOCK_STEPS)))


def simulate_path(params: ModelParams, grid: Grid, output_times: Sequence[float],
                  seed: int) -> Trajectory:
    """Simulate one realization; keeps field snapshots at the output times."""
    grid.validate(params)
    out_steps = _output_steps(grid, output_times)
    out_times = out_steps * grid.dt
    means, fields = _advance_chunk(
        params, grid, out_steps, master_seed=seed,
        replicates=np.array([0]), keep_fields=True,
    )
    centering = _centering_means(params, grid, out_times)
    return Trajectory(
        times=out_times,
        field=fields[0],
        f_l=means[0] - centering,
        seed=seed,
    )


def run_trajectories(params: ModelParams, grid: Grid, output_times: Sequence[float],
                     n_rep: int, master_seed: int, n_jobs: int = 1) -> list[Trajectory]:
    """Independent field-retaining replicates (for mean-field checks)."""
    grid.validate(params)
    out_steps = _output_steps(grid, output_times)
    out_times = out_steps * grid.dt
    centering = _centering_means(params, grid, out_times)
    chunks = _make_chunks(n_rep, _chunk_size(grid.n_space))
    results = _run_chunks(params, grid, out_steps, master_seed, chunks, True, n_jobs)
    out: list[Trajectory] = []
    for (start, stop), (means, fields) in zip(chunks, results):
        for i, rep in enumerate(range(start, stop)):
            out.append(Trajectory(
                times=out_times, field=fields[i],
                f_l=means[i] - centering, seed=rep,
            ))
    return out


def _make_chunks(n_rep: int, size: int) -> list[tuple[int, int]]:
    return [(a, min(a + size, n_rep)) for a in range(0, n_rep, size)]


def _chunk_job(args) -> tuple[np.ndarray, np.ndarray | None]:
    params, grid, out_steps, master_seed, start, stop, keep_fields = args
    try:
        return _advance_chunk(params, grid, out_steps, master_seed,
                              np.arange(start, stop), keep_fields)
    except NumericalFailureError:
        raise
    except Exception as exc:  # annotate unexpected failures with the chunk
        raise NumericalFailureError(
            f"replicates [{start}, {stop}) failed: {exc}", replicate=start
        ) from exc


def _run_chunks(params, grid, out_steps, master_seed, chunks, keep_fields, n_jobs):
    jobs = [(params, grid, out_steps, master_seed, a, b, keep_fields) for a, b in chunks]
    if n_jobs <= 1 or len(jobs) <= 1:
        return [_chunk_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_chunk_job, jobs))


def run_ensemble(params: ModelParams, grid: Grid, output_times: Sequence[float],
                 n_rep: int, master_seed: int, n_jobs: int = 1) -> Ensemble:
    """n_rep independent F_L paths; fields are discarded to bound memory.

    Replicate i draws from the stream keyed (master_seed, i); the assembled
    matrix is bit-identical for any n_jobs.
    """
    if n_rep < 2:
        raise ConfigurationError(f"n_rep must be >= 2, got {n_rep}")
    grid.validate(params)
    out_steps = _output_steps(grid, output_times)
    out_times = out_steps * grid.dt
    centering = _centering_means(params, grid, out_times)
    chunks = _make_chunks(n_rep, _chunk_size(grid.n_space))
    results = _run_chunks(params, grid, out_steps, master_seed, chunks, False, n_jobs)
    f_l = np.concatenate([means for means, _ in results], axis=0) - centering
    return Ensemble(params=params, grid=grid, times=out_times, f_l=f_l,
                    master_seed=master_seed)


@dataclass(frozen=True)
class MeanFieldReport:
    """Empirical mean of u(t, x) against the kernel mass I_0(t, x)."""

    t: float
    x: float
    empirical_mean: float
    expected: float
    discrepancy: float
    std_error: float
    n_rep: int


def mean_field_check(trajectories: Sequence[Trajectory], params: ModelParams,
                     t: float, x: float) -> MeanFieldReport:
    """E[u(t, x)] should equal I_0(t, x); reports the discrepancy and its SE."""
    if len(trajectories) < 1000:
        raise ConfigurationError(
            f"mean_field_check needs >= 1000 field-retaining replicates, got {len(trajectories)}"
        )
    times = trajectories[0].times
    ti = int(np.argmin(np.abs(times - t)))
    if abs(times[ti] - t) > 1e-9 * max(1.0, params.horizon):
        raise ConfigurationError(f"time {t} not among retained output times {times}")
    n_space = trajectories[0].field.shape[1]
    dx = params.length / n_space
    xi = int(np.clip(round(x / dx - 0.5), 0, n_space - 1))
    x_cell = (xi + 0.5) * dx
    vals = np.array([tr.field[ti, xi] for tr in trajectories])
    expected = kernels.green_mass(params, float(times[ti]), x_cell)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return MeanFieldReport(
        t=float(times[ti]), x=x_cell, empirical_mean=mean, expected=expected,
        discrepancy=mean - expected, std_error=se, n_rep=len(vals),
    )
