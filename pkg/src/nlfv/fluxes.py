"""Lax-Friedrichs-type numerical flux.

At interface x, given cell values rho_left/rho_right and the convolved
density c there,

    flux = (f(t,x,rho_left) + f(t,x,rho_right))/2 * v(c)
           - (rho_right - rho_left) / (6 lambda).

The local variant evaluates v at the interface mean instead of the
convolution, which turns the update into a scheme for the punctual equation
with the same numerical viscosity.
"""

from __future__ import annotations

import numpy as np


def numerical_flux(t, x_interface, rho_left, rho_right, c_interface, model, lam):
    """Nonlocal interface flux; broadcasts over array arguments."""
    f_mean = 0.5 * (model.f(t, x_interface, rho_left)
                    + model.f(t, x_interface, rho_right))
    return f_mean * model.v(c_interface) - (rho_right - rho_left) / (6.0 * lam)


def local_flux(t, x_interface, rho_left, rho_right, model, lam):
    """Interface flux for the local (punctual) equation."""
    c = 0.5 * (np.asarray(rho_left, dtype=float) + np.asarray(rho_right, dtype=float))
    return numerical_flux(t, x_interface, rho_left, rho_right, c, model, lam)
