"""Pure numpy lattice kernel (reference and fallback for the compiled one)."""

import numpy as np

_NORM = (2 * np.pi) ** -0.25


def component_tables(t, coef, x0, p0, sigma, hbar, mass):
    """Per (time, component) constants of the freely evolving Gaussians.

    Returns inv_A, X (center), k, and w = log(c * prefactor) plus the
    x-independent phase, each shaped (nt, N).
    """
    t = np.asarray(t, dtype=float)[:, None]
    A = sigma ** 2 + 1j * hbar * t / (2 * mass)
    inv_A = 1.0 / A
    pref = coef * _NORM * np.sqrt(sigma) / np.sqrt(A)
    w = np.log(pref) + 1j * (-p0 * x0 / hbar - p0 ** 2 * t / (2 * mass * hbar))
    X = x0 + p0 * t / mass
    k = np.zeros(inv_A.shape) + p0 / hbar
    return inv_A, X, k, w


def rho_lattice(x, t, coef, x0, p0, sigma, hbar=1.0, mass=1.0):
    """Free-evolution energy density of a Gaussian superposition on an (t, x) lattice.

    Returns (rho_scaled, log_scale), both (nt, nx), with
    rho = rho_scaled * exp(2 * log_scale); the scaling keeps the sign of rho
    meaningful far in the tails where rho itself underflows.
    """
    x = np.asarray(x, dtype=float)
    inv_A, X, k, w = component_tables(t, coef, x0, p0, sigma, hbar, mass)
    # axes: (nt, N, nx)
    u = x[None, None, :] - X[:, :, None]
    E = -0.25 * u ** 2 * inv_A[:, :, None] + 1j * k[:, :, None] * x[None, None, :] + w[:, :, None]
    L = np.max(E.real, axis=1)
    term = np.exp(E - L[:, None, :])
    D = -0.5 * u * inv_A[:, :, None] + 1j * k[:, :, None]
    psi = term.sum(axis=1)
    psi_xx = (term * (D ** 2 - 0.5 * inv_A[:, :, None])).sum(axis=1)
    rho = -hbar ** 2 / (2 * mass) * np.real(psi.conj() * psi_xx)
    return rho, L
