"""Pure-numpy implementation of the fused nonlinear substep.

Same contract as the compiled version in ``_nlstep.pyx``: exact closed-form
pointwise update, in place, returning sum(|u|^(alpha+2)) of the output.
"""

import numpy as np


def nonlinear_substep(u, dt, alpha, lambda1, lambda2):
    A = np.abs(u)
    nz = A > 0.0
    Aa = np.zeros_like(A)
    Aa[nz] = A[nz] ** alpha
    if lambda2 > 0.0:
        g = 1.0 + alpha * lambda2 * dt * Aa
        ratio = g ** (-1.0 / alpha)
        dtheta = (lambda1 / (alpha * lambda2)) * np.log(g)
    else:
        ratio = np.ones_like(A)
        dtheta = lambda1 * dt * Aa
    u *= ratio * np.exp(1j * dtheta)
    u[~nz] = 0.0
    Anew = A * ratio
    return float(np.sum(Anew[nz] ** (alpha + 2.0)))
