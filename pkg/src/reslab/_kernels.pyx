# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernels (preferred backend).

Same contracts as `_kernels_py`; see that module for documentation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, floor, sin

cnp.import_array()

cdef double TWO_PI = 6.283185307179586476925286766559


cdef inline double _reduce_angle(double x) noexcept:
    x = x - TWO_PI * floor(x / TWO_PI)
    if x >= TWO_PI:
        x -= TWO_PI
    return x


cdef double _energy_theta_only(double[:, ::1] A, double[::1] b,
                               double[:, ::1] kmat, double[::1] amps,
                               double[::1] phases, double[::1] theta,
                               double[::1] action) noexcept:
    cdef Py_ssize_t n = b.shape[0], m = amps.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double h = 0.0, arg
    for i in range(n):
        arg = 0.0
        for j in range(n):
            arg += A[i, j] * action[j]
        h += (0.5 * arg + b[i]) * action[i]
    for k in range(m):
        arg = phases[k]
        for i in range(n):
            arg += kmat[k, i] * theta[i]
        h += amps[k] * cos(arg)
    return h


def split_strang(double[:, ::1] A, double[::1] b, double[:, ::1] kmat,
                 double[::1] amps, double[::1] phases, double[::1] theta,
                 double[::1] action, double dt, long n_steps, long stride,
                 double rho, double[:, ::1] thetas, double[:, ::1] actions,
                 double[::1] energies):
    cdef Py_ssize_t n = b.shape[0], m = amps.shape[0]
    cdef Py_ssize_t i, j, k
    cdef long step, row, exit_step = -1
    cdef double drift = 0.0, dev, half = 0.5 * dt, arg, s, d
    cdef double[::1] action0 = np.array(action, dtype=np.float64)

    for i in range(n):
        thetas[0, i] = theta[i]
        actions[0, i] = action[i]
    energies[0] = _energy_theta_only(A, b, kmat, amps, phases, theta, action)
    row = 1
    for step in range(1, n_steps + 1):
        for k in range(m):
            arg = phases[k]
            for i in range(n):
                arg += kmat[k, i] * theta[i]
            s = half * amps[k] * sin(arg)
            for i in range(n):
                action[i] += s * kmat[k, i]
        for i in range(n):
            arg = b[i]
            for j in range(n):
                arg += A[i, j] * action[j]
            theta[i] = _reduce_angle(theta[i] + dt * arg)
        for k in range(m):
            arg = phases[k]
            for i in range(n):
                arg += kmat[k, i] * theta[i]
            s = half * amps[k] * sin(arg)
            for i in range(n):
                action[i] += s * kmat[k, i]

        dev = 0.0
        for i in range(n):
            d = fabs(action[i] - action0[i])
            if d > dev:
                dev = d
        if dev > drift:
            drift = dev
        if exit_step < 0 and dev > rho:
            exit_step = step
        if step % stride == 0 or step == n_steps:
            for i in range(n):
                thetas[row, i] = theta[i]
                actions[row, i] = action[i]
            energies[row] = _energy_theta_only(A, b, kmat, amps, phases,
                                               theta, action)
            row += 1
    return drift, exit_step


cdef void _field_general(double[:, ::1] A, double[::1] b, double[:, ::1] kmat,
                         double[::1] c0, double[:, ::1] c1,
                         double[:, :, ::1] c2, double[::1] phases,
                         double[::1] theta, double[::1] action,
                         double[::1] theta_dot, double[::1] action_dot) noexcept:
    cdef Py_ssize_t n = b.shape[0], m = c0.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double arg, cval, co, si, g, q
    for i in range(n):
        arg = b[i]
        for j in range(n):
            arg += A[i, j] * action[j]
        theta_dot[i] = arg
        action_dot[i] = 0.0
    for k in range(m):
        arg = phases[k]
        for i in range(n):
            arg += kmat[k, i] * theta[i]
        co = cos(arg)
        si = sin(arg)
        cval = c0[k]
        for i in range(n):
            q = 0.0
            for j in range(n):
                q += c2[k, i, j] * action[j]
            cval += (c1[k, i] + q) * action[i]
            g = c1[k, i] + 2.0 * q
            theta_dot[i] += g * co
        for i in range(n):
            action_dot[i] += cval * si * kmat[k, i]


cdef double _energy_general(double[:, ::1] A, double[::1] b,
                            double[:, ::1] kmat, double[::1] c0,
                            double[:, ::1] c1, double[:, :, ::1] c2,
                            double[::1] phases, double[::1] theta,
                            double[::1] action) noexcept:
    cdef Py_ssize_t n = b.shape[0], m = c0.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double h = 0.0, arg, cval, q
    for i in range(n):
        arg = 0.0
        for j in range(n):
            arg += A[i, j] * action[j]
        h += (0.5 * arg + b[i]) * action[i]
    for k in range(m):
        arg = phases[k]
        for i in range(n):
            arg += kmat[k, i] * theta[i]
        cval = c0[k]
        for i in range(n):
            q = 0.0
            for j in range(n):
                q += c2[k, i, j] * action[j]
            cval += (c1[k, i] + q) * action[i]
        h += cval * cos(arg)
    return h


def implicit_midpoint(double[:, ::1] A, double[::1] b, double[:, ::1] kmat,
                      double[::1] c0, double[:, ::1] c1, double[:, :, ::1] c2,
                      double[::1] phases, double[::1] theta, double[::1] action,
                      double dt, long n_steps, long stride, double rho,
                      double tol, long max_iters, double[:, ::1] thetas,
                      double[:, ::1] actions, double[::1] energies):
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i
    cdef long step, row, it, exit_step = -1
    cdef double drift = 0.0, dev, half = 0.5 * dt, residual, r, d
    cdef bint converged
    cdef double[::1] action0 = np.array(action, dtype=np.float64)
    cdef double[::1] mid_t = np.empty(n, dtype=np.float64)
    cdef double[::1] mid_a = np.empty(n, dtype=np.float64)
    cdef double[::1] td = np.empty(n, dtype=np.float64)
    cdef double[::1] ad = np.empty(n, dtype=np.float64)

    for i in range(n):
        thetas[0, i] = theta[i]
        actions[0, i] = action[i]
    energies[0] = _energy_general(A, b, kmat, c0, c1, c2, phases, theta, action)
    row = 1
    for step in range(1, n_steps + 1):
        for i in range(n):
            mid_t[i] = theta[i]
            mid_a[i] = action[i]
        converged = False
        residual = 0.0
        for it in range(max_iters):
            _field_general(A, b, kmat, c0, c1, c2, phases, mid_t, mid_a, td, ad)
            residual = 0.0
            for i in range(n):
                r = theta[i] + half * td[i]
                d = fabs(r - mid_t[i])
                if d > residual:
                    residual = d
                mid_t[i] = r
                r = action[i] + half * ad[i]
                d = fabs(r - mid_a[i])
                if d > residual:
                    residual = d
                mid_a[i] = r
            if residual < tol:
                converged = True
                break
        if not converged:
            return drift, exit_step, step, residual
        for i in range(n):
            theta[i] = _reduce_angle(2.0 * mid_t[i] - theta[i])
            action[i] = 2.0 * mid_a[i] - action[i]

        dev = 0.0
        for i in range(n):
            d = fabs(action[i] - action0[i])
            if d > dev:
                dev = d
        if dev > drift:
            drift = dev
        if exit_step < 0 and dev > rho:
            exit_step = step
        if step % stride == 0 or step == n_steps:
            for i in range(n):
                thetas[row, i] = theta[i]
                actions[row, i] = action[i]
            energies[row] = _energy_general(A, b, kmat, c0, c1, c2, phases,
                                            theta, action)
            row += 1
    return drift, exit_step, -1, 0.0
