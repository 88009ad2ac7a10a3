# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled lattice kernel; same algorithm and outputs as _kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp

from ._kernels_py import component_tables

cnp.import_array()


def rho_lattice(x, t, coef, x0, p0, sigma, double hbar=1.0, double mass=1.0):
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    inv_A, X, k, w = component_tables(t, coef, x0, p0, sigma, hbar, mass)
    cdef double[:, ::1] iar = np.ascontiguousarray(inv_A.real)
    cdef double[:, ::1] iai = np.ascontiguousarray(inv_A.imag)
    cdef double[:, ::1] Xc = np.ascontiguousarray(X)
    cdef double[:, ::1] kc = np.ascontiguousarray(k)
    cdef double[:, ::1] wr = np.ascontiguousarray(w.real)
    cdef double[:, ::1] wi = np.ascontiguousarray(w.imag)
    cdef Py_ssize_t nt = iar.shape[0], nc = iar.shape[1], nx = xs.shape[0]
    rho_np = np.empty((nt, nx))
    L_np = np.empty((nt, nx))
    cdef double[:, ::1] rho = rho_np
    cdef double[:, ::1] Lv = L_np
    cdef Py_ssize_t it, ix, j
    cdef double xv, u, u2, er, ei, L, mag, tr, ti
    cdef double pr, pi_, qr, qi, dr, di, fr, fi
    cdef double scale = -hbar * hbar / (2.0 * mass)
    for it in range(nt):
        for ix in range(nx):
            xv = xs[ix]
            L = -1e308
            for j in range(nc):
                u = xv - Xc[it, j]
                er = -0.25 * u * u * iar[it, j] + wr[it, j]
                if er > L:
                    L = er
            pr = 0.0
            pi_ = 0.0
            qr = 0.0
            qi = 0.0
            for j in range(nc):
                u = xv - Xc[it, j]
                u2 = u * u
                er = -0.25 * u2 * iar[it, j] + wr[it, j]
                ei = -0.25 * u2 * iai[it, j] + kc[it, j] * xv + wi[it, j]
                mag = exp(er - L)
                tr = mag * cos(ei)
                ti = mag * sin(ei)
                pr += tr
                pi_ += ti
                # D = -u inv_A / 2 + i k ; factor = D^2 - inv_A / 2
                dr = -0.5 * u * iar[it, j]
                di = -0.5 * u * iai[it, j] + kc[it, j]
                fr = dr * dr - di * di - 0.5 * iar[it, j]
                fi = 2.0 * dr * di - 0.5 * iai[it, j]
                qr += tr * fr - ti * fi
                qi += tr * fi + ti * fr
            rho[it, ix] = scale * (pr * qr + pi_ * qi)
            Lv[it, ix] = L
    return rho_np, L_np
