"""Compiled stencil kernels.

All arrays are cell-centred with one ghost layer, shape ``(m + 2, n + 2)``,
first index along x.  Boundary codes: 0 periodic, 1 homogeneous Neumann.
"""

import numba as nb
import numpy as np

_jit = {"nogil": True, "cache": True}

PERIODIC = 0
NEUMANN = 1


@nb.njit(**_jit)
def fill_ghosts(a, bcx, bcy):
    m = a.shape[0] - 2
    n = a.shape[1] - 2
    # x-rule on j = 1..n first, then the y-rule over i = 0..m+1 sets corners
    if bcx == PERIODIC:
        for j in range(1, n + 1):
            a[0, j] = a[m, j]
            a[m + 1, j] = a[1, j]
    else:
        for j in range(1, n + 1):
            a[0, j] = a[1, j]
            a[m + 1, j] = a[m, j]
    if bcy == PERIODIC:
        for i in range(m + 2):
            a[i, 0] = a[i, n]
            a[i, n + 1] = a[i, 1]
    else:
        for i in range(m + 2):
            a[i, 0] = a[i, 1]
            a[i, n + 1] = a[i, n]


@nb.njit(**_jit)
def laplacian(f, h, out):
    m = f.shape[0] - 2
    n = f.shape[1] - 2
    # flux form, so that it agrees bitwise with divergence-of-gradient
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            dxp = (f[i + 1, j] - f[i, j]) / h
            dxm = (f[i, j] - f[i - 1, j]) / h
            dyp = (f[i, j + 1] - f[i, j]) / h
            dym = (f[i, j] - f[i, j - 1]) / h
            out[i, j] = (dxp - dxm + dyp - dym) / h


# --------------------------------------------------------------------------
# Nonlinear three-field system
#
#   N1 = phi - a * lap(mu)
#   N2 = mu - g(phi; phik) - lin * phi - lap(kap)
#   N3 = kap - c3 * lap(phi)
#
# order 1: g = phi^3;  order 2: g = (phi^2 + phik^2)(phi + phik) / 4.
# --------------------------------------------------------------------------

@nb.njit(**_jit)
def _cubic(order, p, pk):
    if order == 1:
        return p * p * p
    return 0.25 * (p * p + pk * pk) * (p + pk)


@nb.njit(**_jit)
def apply_operator(phi, mu, kap, phik, lin, a, c3, h, order, n1, n2, n3):
    m = phi.shape[0] - 2
    n = phi.shape[1] - 2
    ih2 = 1.0 / (h * h)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            lmu = (mu[i + 1, j] + mu[i - 1, j] + mu[i, j + 1] + mu[i, j - 1]
                   - 4.0 * mu[i, j]) * ih2
            lka = (kap[i + 1, j] + kap[i - 1, j] + kap[i, j + 1] + kap[i, j - 1]
                   - 4.0 * kap[i, j]) * ih2
            lph = (phi[i + 1, j] + phi[i - 1, j] + phi[i, j + 1] + phi[i, j - 1]
                   - 4.0 * phi[i, j]) * ih2
            p = phi[i, j]
            n1[i, j] = p - a * lmu
            n2[i, j] = mu[i, j] - _cubic(order, p, phik[i, j]) - lin[i, j] * p - lka
            n3[i, j] = kap[i, j] - c3 * lph


@nb.njit(**_jit)
def residual(phi, mu, kap, phik, lin, s1, s2, s3, a, c3, h, order, r1, r2, r3):
    """Write S - N(u) into r1..r3 and return the max of the three inf-norms."""
    apply_operator(phi, mu, kap, phik, lin, a, c3, h, order, r1, r2, r3)
    m = phi.shape[0] - 2
    n = phi.shape[1] - 2
    big = 0.0
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            v1 = s1[i, j] - r1[i, j]
            v2 = s2[i, j] - r2[i, j]
            v3 = s3[i, j] - r3[i, j]
            r1[i, j] = v1
            r2[i, j] = v2
            r3[i, j] = v3
            big = max(big, abs(v1), abs(v2), abs(v3))
    return big


@nb.njit(**_jit)
def smooth(phi, mu, kap, phik, lin, s1, s2, s3, a, c3, h, order, newton,
           bcx, bcy, passes, omega):
    """Nonlinear red-black Gauss-Seidel with a 3x3 Cramer solve per cell.

    ``omega`` relaxes the collective update (1.0 is plain Gauss-Seidel).
    Returns the smallest local determinant encountered.
    """
    m = phi.shape[0] - 2
    n = phi.shape[1] - 2
    ih2 = 1.0 / (h * h)
    A = 4.0 * a * ih2
    B = 4.0 * c3 * ih2
    C = 4.0 * ih2
    detmin = np.inf
    for _ in range(passes):
        for color in range(2):
            fill_ghosts(phi, bcx, bcy)
            fill_ghosts(mu, bcx, bcy)
            fill_ghosts(kap, bcx, bcy)
            for i in range(1, m + 1):
                j0 = 1 + (i + 1 + color) % 2
                for j in range(j0, n + 1, 2):
                    smu = mu[i + 1, j] + mu[i - 1, j] + mu[i, j + 1] + mu[i, j - 1]
                    ska = kap[i + 1, j] + kap[i - 1, j] + kap[i, j + 1] + kap[i, j - 1]
                    sph = phi[i + 1, j] + phi[i - 1, j] + phi[i, j + 1] + phi[i, j - 1]
                    pl = phi[i, j]
                    if order == 1:
                        if newton:
                            p = 3.0 * pl * pl
                            q = -2.0 * pl * pl * pl
                        else:
                            p = pl * pl
                            q = 0.0
                    else:
                        pk = phik[i, j]
                        if newton:
                            g = 0.25 * (pl * pl + pk * pk) * (pl + pk)
                            p = 0.25 * (3.0 * pl * pl + 2.0 * pl * pk + pk * pk)
                            q = g - p * pl
                        else:
                            p = 0.25 * (pl * pl + pk * pk)
                            q = p * pk
                    P = lin[i, j] + p
                    b1 = s1[i, j] + a * ih2 * smu
                    b2 = s2[i, j] + q + ih2 * ska
                    b3 = s3[i, j] + c3 * ih2 * sph
                    # [[1, A, 0], [-P, 1, C], [B, 0, 1]] (phi, mu, kap) = b
                    det = 1.0 + A * P + A * B * C
                    if abs(det) < detmin:
                        detmin = abs(det)
                    if abs(det) < 1e-300:
                        return 0.0
                    xp = (b1 - A * b2 + A * C * b3) / det
                    xm = (b2 - C * b3 + b1 * (P + B * C)) / det
                    xk = (b3 + A * P * b3 + A * B * b2 - B * b1) / det
                    if omega == 1.0:
                        phi[i, j] = xp
                        mu[i, j] = xm
                        kap[i, j] = xk
                    else:
                        phi[i, j] += omega * (xp - phi[i, j])
                        mu[i, j] += omega * (xm - mu[i, j])
                        kap[i, j] += omega * (xk - kap[i, j])
    fill_ghosts(phi, bcx, bcy)
    fill_ghosts(mu, bcx, bcy)
    fill_ghosts(kap, bcx, bcy)
    return detmin


# --------------------------------------------------------------------------
# Inter-grid transfer (cell-centred, factor-two coarsening)
# --------------------------------------------------------------------------

@nb.njit(**_jit)
def restrict(fine, coarse):
    mc = coarse.shape[0] - 2
    nc = coarse.shape[1] - 2
    for I in range(1, mc + 1):
        i = 2 * I - 1
        for J in range(1, nc + 1):
            j = 2 * J - 1
            coarse[I, J] = 0.25 * (fine[i, j] + fine[i + 1, j]
                                   + fine[i, j + 1] + fine[i + 1, j + 1])


@nb.njit(**_jit)
def prolong_add(coarse, fine):
    """fine += bilinear interpolation of coarse (coarse ghosts must be set)."""
    mc = coarse.shape[0] - 2
    nc = coarse.shape[1] - 2
    for I in range(1, mc + 1):
        for J in range(1, nc + 1):
            c = coarse[I, J]
            for di in range(2):
                i = 2 * I - 1 + di
                In = I - 1 + 2 * di
                for dj in range(2):
                    j = 2 * J - 1 + dj
                    Jn = J - 1 + 2 * dj
                    fine[i, j] += (0.5625 * c + 0.1875 * coarse[In, J]
                                   + 0.1875 * coarse[I, Jn] + 0.0625 * coarse[In, Jn])


# --------------------------------------------------------------------------
# Linear Poisson problem -lap(psi) = f
# --------------------------------------------------------------------------

@nb.njit(**_jit)
def poisson_smooth(psi, f, h, bcx, bcy, passes):
    m = psi.shape[0] - 2
    n = psi.shape[1] - 2
    h2 = h * h
    for _ in range(passes):
        for color in range(2):
            fill_ghosts(psi, bcx, bcy)
            for i in range(1, m + 1):
                j0 = 1 + (i + 1 + color) % 2
                for j in range(j0, n + 1, 2):
                    psi[i, j] = 0.25 * (psi[i + 1, j] + psi[i - 1, j] + psi[i, j + 1]
                                        + psi[i, j - 1] + h2 * f[i, j])
    fill_ghosts(psi, bcx, bcy)


@nb.njit(**_jit)
def poisson_residual(psi, f, h, r):
    """r = f + lap(psi); returns sqrt(sum r^2) over the interior."""
    m = psi.shape[0] - 2
    n = psi.shape[1] - 2
    ih2 = 1.0 / (h * h)
    acc = 0.0
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            v = f[i, j] + (psi[i + 1, j] + psi[i - 1, j] + psi[i, j + 1]
                           + psi[i, j - 1] - 4.0 * psi[i, j]) * ih2
            r[i, j] = v
            acc += v * v
    return np.sqrt(acc)


@nb.njit(**_jit)
def interior_mean(a):
    m = a.shape[0] - 2
    n = a.shape[1] - 2
    acc = 0.0
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            acc += a[i, j]
    return acc / (m * n)
