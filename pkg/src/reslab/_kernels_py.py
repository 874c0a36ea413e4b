"""Pure-numpy integration kernels (fallback backend).

Signature-compatible with the compiled `_kernels` extension; the compiled
module is preferred at import time when available.  Sample arrays are
allocated by the caller; `theta` and `action` are updated in place and hold
the final state on return.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def _energy_theta_only(A, b, kmat, amps, phases, theta, action):
    h = 0.5 * action @ A @ action + b @ action
    return h + float(amps @ np.cos(kmat @ theta + phases))


def split_strang(A, b, kmat, amps, phases, theta, action, dt, n_steps, stride,
                 rho, thetas, actions, energies):
    """Strang splitting for H = h(I) + f(theta): kick / drift / kick.

    Returns (drift_sup, exit_step); exit_step is -1 when the sup-norm action
    deviation never exceeds rho.  Deviation and exit are tracked every step;
    samples land every `stride` steps plus the final step.
    """
    action0 = action.copy()
    drift = 0.0
    exit_step = -1

    thetas[0] = theta
    actions[0] = action
    energies[0] = _energy_theta_only(A, b, kmat, amps, phases, theta, action)
    row = 1
    half = 0.5 * dt
    for step in range(1, n_steps + 1):
        # Half kick: I += (dt/2) * sum_k a_k sin(k.theta + phi) k.
        s = np.sin(kmat @ theta + phases)
        action += half * ((amps * s) @ kmat)
        # Drift.
        theta += dt * (A @ action + b)
        theta %= TWO_PI
        # Half kick.
        s = np.sin(kmat @ theta + phases)
        action += half * ((amps * s) @ kmat)

        dev = float(np.max(np.abs(action - action0)))
        if dev > drift:
            drift = dev
        if exit_step < 0 and dev > rho:
            exit_step = step
        if step % stride == 0 or step == n_steps:
            thetas[row] = theta
            actions[row] = action
            energies[row] = _energy_theta_only(A, b, kmat, amps, phases, theta, action)
            row += 1
    return drift, exit_step


def _field_general(A, b, kmat, c0, c1, c2, phases, theta, action):
    """Hamiltonian vector field for H = h + f with degree<=2 coefficients."""
    arg = kmat @ theta + phases
    co = np.cos(arg)
    si = np.sin(arg)
    cvals = c0 + c1 @ action + np.einsum("kij,i,j->k", c2, action, action)
    gradc = c1 + 2.0 * (c2 @ action)
    theta_dot = A @ action + b + gradc.T @ co
    action_dot = (cvals * si) @ kmat
    return theta_dot, action_dot


def _energy_general(A, b, kmat, c0, c1, c2, phases, theta, action):
    arg = kmat @ theta + phases
    cvals = c0 + c1 @ action + np.einsum("kij,i,j->k", c2, action, action)
    return 0.5 * action @ A @ action + b @ action + float(cvals @ np.cos(arg))


def implicit_midpoint(A, b, kmat, c0, c1, c2, phases, theta, action, dt, n_steps,
                      stride, rho, tol, max_iters, thetas, actions, energies):
    """Implicit midpoint with fixed-point solve for general f(theta, I).

    Returns (drift_sup, exit_step, fail_step, residual): fail_step >= 0 marks
    the first step where the fixed-point iteration missed the tolerance.
    """
    action0 = action.copy()
    drift = 0.0
    exit_step = -1

    thetas[0] = theta
    actions[0] = action
    energies[0] = _energy_general(A, b, kmat, c0, c1, c2, phases, theta, action)
    row = 1
    half = 0.5 * dt
    for step in range(1, n_steps + 1):
        mid_t = theta.copy()
        mid_a = action.copy()
        residual = np.inf
        for _ in range(max_iters):
            td, ad = _field_general(A, b, kmat, c0, c1, c2, phases, mid_t, mid_a)
            new_t = theta + half * td
            new_a = action + half * ad
            residual = max(float(np.max(np.abs(new_t - mid_t))),
                           float(np.max(np.abs(new_a - mid_a))))
            mid_t, mid_a = new_t, new_a
            if residual < tol:
                break
        else:
            return drift, exit_step, step, residual
        theta[:] = 2.0 * mid_t - theta
        action[:] = 2.0 * mid_a - action
        theta %= TWO_PI

        dev = float(np.max(np.abs(action - action0)))
        if dev > drift:
            drift = dev
        if exit_step < 0 and dev > rho:
            exit_step = step
        if step % stride == 0 or step == n_steps:
            thetas[row] = theta
            actions[row] = action
            energies[row] = _energy_general(A, b, kmat, c0, c1, c2, phases, theta, action)
            row += 1
    return drift, exit_step, -1, 0.0
