"""Independent reference solvers used to cross-check the main modules.

Nothing here imports the discretization of ``discrete``; grids and
quadratures are rebuilt from scratch so agreement is a genuine check.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import minimize


def _layer_grid(length, n, k, eps):
    t = np.linspace(0.0, length, n)
    h = t[1] - t[0]
    weight = 1.0 - eps * k * t
    mid = 1.0 - eps * k * (t[:-1] + h / 2)
    trap = np.full(n, h)
    trap[[0, -1]] = h / 2
    return t, h, weight, mid, trap


def profile_energy_oracle(f, k, alpha, eps, b, length, n):
    """Energy and gradient of the 1D functional, written out directly."""
    t, h, weight, mid, trap = _layer_grid(length, n, k, eps)
    pot = ((t + alpha - eps * k * t**2 / 2) / weight) ** 2
    df = np.diff(f)
    mass = trap * weight
    e = np.sum(mid * df**2) / h + np.sum(mass * ((pot - 1 / b) * f**2 + f**4 / (2 * b)))
    g = 2 * mass * ((pot - 1 / b) * f + f**3 / b)
    flux = 2 * mid * df / h
    g[:-1] -= flux
    g[1:] += flux
    return e, g


def _bounded_descent(f0, args, gtol, maxiter):
    return minimize(profile_energy_oracle, f0, args=args, jac=True, method="L-BFGS-B",
                    bounds=[(0.0, None)] * f0.size,
                    options={"maxiter": maxiter, "maxfun": 2 * maxiter, "ftol": 1e-16,
                             "gtol": gtol, "maxcor": 30})


def projected_profile_oracle(k, alpha, eps, b, length, n, restarts=3, seed=0,
                             gtol=1e-13, maxiter=200000, coarse_min=65):
    """Bound-constrained (f >= 0) quasi-Newton minimization with nested grids.

    Random positive starts are compared on the coarsest nested grid; the best
    one is prolongated by linear interpolation and re-minimized on each finer
    grid up to n nodes.  Nesting needs n = 2^m (n_coarse - 1) + 1; otherwise
    the run is single-level.
    """
    rng = np.random.default_rng(seed)
    sizes = [n]
    while (sizes[-1] - 1) % 2 == 0 and (sizes[-1] - 1) // 2 + 1 >= coarse_min:
        sizes.append((sizes[-1] - 1) // 2 + 1)
    sizes.reverse()
    t = np.linspace(0.0, length, sizes[0])
    best = None
    for _ in range(restarts):
        f0 = rng.uniform(0.2, 1.0, t.size) * np.exp(-0.5 * (t + alpha) ** 2)
        f0 += 1e-3 * rng.uniform(size=t.size)
        res = _bounded_descent(f0, (k, alpha, eps, b, length, t.size), gtol, maxiter)
        if best is None or res.fun < best.fun:
            best = res
    f = best.x
    for m in sizes[1:]:
        fine = np.empty(m)
        fine[::2] = f
        fine[1::2] = 0.5 * (f[1:] + f[:-1])
        best = _bounded_descent(fine, (k, alpha, eps, b, length, m), gtol, maxiter)
        f = best.x
    return f, float(best.fun)


def dense_oscillator_ground(alpha, length, n, k=0.0, eps=0.0, dirichlet_end=True):
    """Lowest generalized eigenvalue of the assembled stiffness/mass pair (dense)."""
    t, h, weight, mid, trap = _layer_grid(length, n, k, eps)
    stiff = np.zeros((n, n))
    for j in range(n - 1):
        a = mid[j] / h
        stiff[j, j] += a
        stiff[j + 1, j + 1] += a
        stiff[j, j + 1] -= a
        stiff[j + 1, j] -= a
    pot = ((t + alpha - eps * k * t**2 / 2) / weight) ** 2
    mass = trap * weight
    stiff += np.diag(mass * pot)
    if dirichlet_end:
        stiff, mass = stiff[:-1, :-1], mass[:-1]
    return float(eigh(stiff, np.diag(mass), eigvals_only=True, subset_by_index=[0, 0])[0])


def alpha_scan(fun, lo, hi, step):
    """Argmin of fun on a uniform grid of step ``step``."""
    grid = np.arange(lo, hi + step / 2, step)
    vals = np.array([fun(a) for a in grid])
    j = int(np.argmin(vals))
    return float(grid[j]), float(vals[j])


def synthetic_vortex(n_s, n_t, length_s, t_max, centre=(0.5, 0.5), core=0.6):
    """Periodic-in-s field with one vortex of degree +1 (and its image pushed outside).

    Phase of sin(pi (z - z1) / L) / sin(pi (z - z2) / L), z = s + i t, with the
    antivortex z2 placed below t = 0 so only z1 lies inside the strip.
    Modulus is tanh(d / core) with d the periodic distance (L/pi)|sin(pi (z - z1)/L)|.
    """
    s = np.arange(n_s) * length_s / n_s
    t = np.linspace(0.0, t_max, n_t)
    z = s[:, None] + 1j * t[None, :]
    z1 = centre[0] * length_s + 1j * centre[1] * t_max
    z2 = centre[0] * length_s - 1j * 2.0 * t_max
    w = np.sin(math.pi * (z - z1) / length_s) / np.sin(math.pi * (z - z2) / length_s)
    phase = w / np.abs(w)
    dist = length_s / math.pi * np.abs(np.sin(math.pi * (z - z1) / length_s))
    return np.tanh(dist / core) * phase, s, t
