"""Symplectic integration of H = h + f and trajectory observables.

Two schemes: Strang splitting (exact sub-flows, requires f = f(theta)) and
implicit midpoint (fixed-point solve, covers action-dependent coefficients).
Action deviation and threshold exits are accumulated online every step inside
the kernels; stored samples are decoupled from the step count by the stride.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import backend_name, kernels
from .models import HamiltonianSystem, Perturbation

SPLIT_STRANG = "split_strang"
IMPLICIT_MIDPOINT = "implicit_midpoint"

TWO_PI = 2.0 * math.pi


class FixedPointError(RuntimeError):
    """Implicit-midpoint fixed point failed to reach tolerance."""

    def __init__(self, time: float, residual: float):
        self.time = time
        self.residual = residual
        super().__init__(
            f"fixed-point iteration did not converge at t={time:.6g} "
            f"(residual {residual:.3e})"
        )


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = SPLIT_STRANG
    step: float = 1e-2
    fixed_point_tol: float = 1e-12
    max_fixed_point_iters: int = 50
    sample_stride: int = 1

    def __post_init__(self):
        if self.scheme not in (SPLIT_STRANG, IMPLICIT_MIDPOINT):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.step <= 0.0:
            raise ValueError("step must be positive")
        if self.fixed_point_tol <= 0.0:
            raise ValueError("fixed_point_tol must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be at least 1")


@dataclass(frozen=True)
class State:
    theta: np.ndarray
    action: np.ndarray

    def __post_init__(self):
        th = np.mod(np.asarray(self.theta, dtype=float), TWO_PI)
        I = np.asarray(self.action, dtype=float)
        if th.shape != I.shape or th.ndim != 1:
            raise ValueError("theta and action must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(I))):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "action", I)

    @property
    def n(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class Trajectory:
    """Sampled orbit with optional per-step online observables."""

    times: np.ndarray
    thetas: np.ndarray
    actions: np.ndarray
    energies: np.ndarray | None = None
    system: HamiltonianSystem | None = None
    config: IntegratorConfig | None = None
    drift_sup_online: float | None = None
    exit_rho: float | None = None
    exit_time_online: float | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.shape[0] == 0:
            raise ValueError("empty trajectory")
        if t[0] != 0.0:
            raise ValueError("first sample must be at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def n(self) -> int:
        return self.actions.shape[1]


def _pack_theta_only(pert: Perturbation, n: int):
    if not pert.theta_only:
        raise ValueError(
            "split_strang requires action-independent coefficients; "
            "use implicit_midpoint"
        )
    m = len(pert.terms)
    kmat = np.zeros((m, n))
    amps = np.zeros(m)
    phases = np.zeros(m)
    for i, t in enumerate(pert.terms):
        kmat[i] = t.mode.entries
        amps[i] = complex(t.coeff.constant_value()).real
        phases[i] = t.phase
    return kmat, amps, phases


def _pack_general(pert: Perturbation, n: int):
    m = len(pert.terms)
    kmat = np.zeros((m, n))
    c0 = np.zeros(m)
    c1 = np.zeros((m, n))
    c2 = np.zeros((m, n, n))
    phases = np.zeros(m)
    for idx, t in enumerate(pert.terms):
        kmat[idx] = t.mode.entries
        phases[idx] = t.phase
        for expo, c in t.coeff.coeffs.items():
            c = complex(c).real
            deg = sum(expo)
            if deg == 0:
                c0[idx] += c
            elif deg == 1:
                j = expo.index(1)
                c1[idx, j] += c
            else:
                nz = [j for j, e in enumerate(expo) if e]
                if len(nz) == 1:
                    c2[idx, nz[0], nz[0]] += c
                else:
                    c2[idx, nz[0], nz[1]] += 0.5 * c
                    c2[idx, nz[1], nz[0]] += 0.5 * c
    return kmat, c0, c1, c2, phases


def _run(system: HamiltonianSystem, state0: State, n_steps: int,
         config: IntegratorConfig, rho: float):
    n = system.n
    stride = config.sample_stride
    ns = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    thetas = np.empty((ns, n))
    actions = np.empty((ns, n))
    energies = np.empty(ns)
    theta = state0.theta.copy()
    action = state0.action.copy()
    # Copies: the model arrays are read-only and the kernels take writable views.
    A = np.array(system.model.quadratic, dtype=float, order="C")
    b = np.array(system.model.linear, dtype=float, order="C")

    if config.scheme == SPLIT_STRANG:
        kmat, amps, phases = _pack_theta_only(system.perturbation, n)
        drift, exit_step = kernels.split_strang(
            A, b, kmat, amps, phases, theta, action, config.step, n_steps,
            stride, rho, thetas, actions, energies)
    else:
        kmat, c0, c1, c2, phases = _pack_general(system.perturbation, n)
        drift, exit_step, fail_step, residual = kernels.implicit_midpoint(
            A, b, kmat, c0, c1, c2, phases, theta, action, config.step,
            n_steps, stride, rho, config.fixed_point_tol,
            config.max_fixed_point_iters, thetas, actions, energies)
        if fail_step >= 0:
            raise FixedPointError(fail_step * config.step, residual)

    sample_steps = list(range(0, n_steps + 1, stride))
    if n_steps % stride:
        sample_steps.append(n_steps)
    times = config.step * np.array(sample_steps, dtype=float)
    return times, thetas, actions, energies, theta, action, drift, exit_step


def step(system: HamiltonianSystem, state: State, config: IntegratorConfig) -> State:
    """Advance one symplectic step."""
    out = _run(system, state, 1, config, math.inf)
    return State(out[4], out[5])


def integrate(system: HamiltonianSystem, state0: State, T: float,
              config: IntegratorConfig, exit_rho: float | None = None) -> Trajectory:
    """Integrate for time T (deterministic for fixed inputs).

    When `exit_rho` is given, the first per-step time with sup-norm action
    deviation exceeding it is recorded online (exit_time_online).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    n_steps = max(1, int(round(T / config.step)))
    rho = math.inf if exit_rho is None else float(exit_rho)
    times, thetas, actions, energies, _, _, drift, exit_step = _run(
        system, state0, n_steps, config, rho)
    return Trajectory(
        times=times, thetas=thetas, actions=actions, energies=energies,
        system=system, config=config, drift_sup_online=drift,
        exit_rho=exit_rho,
        exit_time_online=(exit_step * config.step if exit_step >= 0 else None)
        if exit_rho is not None else None,
    )


# -- observables -----------------------------------------------------------------


def action_drift(traj: Trajectory) -> float:
    """Max sup-norm deviation |I(t) - I(0)|; per-step value when available."""
    if traj.drift_sup_online is not None:
        return traj.drift_sup_online
    dev = np.abs(traj.actions - traj.actions[0])
    return float(dev.max())


def energy_drift(traj: Trajectory) -> float:
    """Max |H(t) - H(0)| over the stored samples."""
    if traj.energies is None:
        raise ValueError("trajectory carries no energies")
    return float(np.max(np.abs(traj.energies - traj.energies[0])))


def exit_time(traj: Trajectory, rho: float) -> float | None:
    """First sample time with |I(t) - I(0)| > rho; None if never.

    Uses the online (per-step) record when the trajectory was integrated with
    the same threshold.
    """
    if traj.exit_rho is not None and traj.exit_rho == rho:
        return traj.exit_time_online
    dev = np.max(np.abs(traj.actions - traj.actions[0]), axis=1)
    hits = np.nonzero(dev > rho)[0]
    if hits.size == 0:
        return None
    return float(traj.times[hits[0]])


# -- export -----------------------------------------------------------------------


def trajectory_to_csv(traj: Trajectory, path) -> None:
    n = traj.n
    header = (["t"] + [f"theta{i + 1}" for i in range(n)]
              + [f"I{i + 1}" for i in range(n)] + ["H"])
    energies = traj.energies
    if energies is None:
        energies = np.full(traj.times.shape, np.nan)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(traj.times.shape[0]):
            row = ([repr(float(traj.times[i]))]
                   + [repr(float(x)) for x in traj.thetas[i]]
                   + [repr(float(x)) for x in traj.actions[i]]
                   + [repr(float(energies[i]))])
            fh.write(",".join(row) + "\n")


def trajectory_from_csv(path) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    cols = data.shape[1]
    if cols < 4 or (cols - 2) % 2 != 0:
        raise ValueError("trajectory CSV must have columns t, theta*, I*, H")
    n = (cols - 2) // 2
    return Trajectory(
        times=data[:, 0],
        thetas=data[:, 1:1 + n],
        actions=data[:, 1 + n:1 + 2 * n],
        energies=data[:, -1],
    )


def trajectory_to_binary(traj: Trajectory, path) -> None:
    """Rows of little-endian float64: t, theta_1..n, I_1..n, H (row-major)."""
    n = traj.n
    energies = traj.energies
    if energies is None:
        energies = np.full(traj.times.shape, np.nan)
    block = np.column_stack([traj.times, traj.thetas, traj.actions, energies])
    block.astype("<f8").tofile(path)


def trajectory_from_binary(path, n: int) -> Trajectory:
    raw = np.fromfile(path, dtype="<f8")
    width = 2 * n + 2
    if raw.size % width:
        raise ValueError("binary trajectory has wrong record width")
    block = raw.reshape(-1, width)
    return Trajectory(
        times=block[:, 0], thetas=block[:, 1:1 + n],
        actions=block[:, 1 + n:1 + 2 * n], energies=block[:, -1],
    )


__all__ = [
    "SPLIT_STRANG", "IMPLICIT_MIDPOINT", "IntegratorConfig", "State",
    "Trajectory", "FixedPointError", "step", "integrate", "action_drift",
    "energy_drift", "exit_time", "trajectory_to_csv", "trajectory_from_csv",
    "trajectory_to_binary", "trajectory_from_binary", "backend_name",
]
