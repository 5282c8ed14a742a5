# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Fused pointwise nonlinear substep (exact closed form) + L^{alpha+2} accumulation.

Amplitude/phase update for du/dt = i*lambda*|u|^alpha*u restricted to the
pointwise ODE d|u|/dt = -lambda2 |u|^{alpha+1}, dtheta/dt = lambda1 |u|^alpha:

    A_new     = A * (1 + alpha*lambda2*A^alpha*dt)^(-1/alpha)
    theta_new = theta + (lambda1/(alpha*lambda2)) * log(1 + alpha*lambda2*A^alpha*dt)

(for lambda2 == 0 the amplitude is invariant and the phase advances by
lambda1*A^alpha*dt).  Returns sum |u_new|^(alpha+2) for the dissipation ledger.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, cos, hypot, log, pow, sin

cnp.import_array()


def nonlinear_substep(cnp.complex128_t[::1] u, double dt, double alpha,
                      double lambda1, double lambda2):
    """In-place exact nonlinear substep; returns sum(|u|^(alpha+2)) of the output."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t j
    cdef double re, im, A, g, ratio, dtheta, c, s
    cdef double acc = 0.0
    cdef double inv_alpha = 1.0 / alpha
    cdef double phase_coef = 0.0
    if lambda2 > 0.0:
        phase_coef = lambda1 / (alpha * lambda2)
    for j in range(n):
        re = u[j].real
        im = u[j].imag
        A = hypot(re, im)
        if A == 0.0:
            continue
        if lambda2 > 0.0:
            g = 1.0 + alpha * lambda2 * pow(A, alpha) * dt
            ratio = pow(g, -inv_alpha)
            dtheta = phase_coef * log(g)
        else:
            ratio = 1.0
            dtheta = lambda1 * pow(A, alpha) * dt
        c = cos(dtheta)
        s = sin(dtheta)
        u[j].real = ratio * (re * c - im * s)
        u[j].imag = ratio * (re * s + im * c)
        acc += pow(A * ratio, alpha + 2.0)
    return acc
