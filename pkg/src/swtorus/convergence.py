"""Discretization error of the lattice operators on analytic single-harmonic data."""

import numpy as np

from . import quat
from .lattice import Grid4
from .sw_ops import covariant_derivative, curvature, PAIRS

TWO_PI = 2.0 * np.pi
# connection amplitudes per axis and the spinor profile (cos, sin, cos/2, sin/2)
_AMPS = np.array([1.0, 0.7, -0.5, 0.3])


def harmonic_fields(grid, wave=(1, 1, 1, 1), amplitude=1.0, constant=False):
    """A_mu = a_mu cos(phase), u = (cos, sin, cos/2, sin/2)(phase) and their exact derivatives.

    phase = 2 pi sum_mu wave_mu x_mu / L_mu.  With ``constant`` every field
    is constant (wave ignored), the connection vanishes and so do all
    derivatives.
    """
    x = grid.coords()
    if constant:
        A = np.zeros((4,) + tuple(grid.shape))
        u = np.broadcast_to(np.array([0.3, -0.2, 0.5, 0.1]), tuple(grid.shape) + (4,)).copy()
        zeros = np.zeros_like(u)
        return A, u, [zeros] * 4, [np.zeros(grid.shape)] * 6
    kvec = [TWO_PI * w / L for w, L in zip(wave, grid.lengths)]
    ph = sum(k * xx for k, xx in zip(kvec, x))
    c, s = np.cos(ph), np.sin(ph)
    A = np.stack([a * amplitude * c for a in _AMPS])
    u = np.stack([c, s, 0.5 * c, 0.5 * s], axis=-1)
    du = [k * np.stack([-s, c, -0.5 * s, 0.5 * c], axis=-1) for k in kvec]
    # F_{mu nu} = d_mu A_nu - d_nu A_mu
    dA = lambda mu, nu: -kvec[mu] * _AMPS[nu] * amplitude * s
    F = [dA(mu, nu) - dA(nu, mu) for mu, nu in PAIRS]
    return A, u, du, F


def _rms(err):
    """Root mean square of the per-site Euclidean norm."""
    if err.ndim and err.shape[-1] == 4:
        err = np.sqrt(np.sum(err ** 2, axis=-1))
    return float(np.sqrt(np.mean(err ** 2)))


def dirac_error(n, scheme, constant=False):
    grid = Grid4((n,) * 4)
    A, u, du, _ = harmonic_fields(grid, constant=constant)
    errs = []
    for mu in range(4):
        exact = du[mu] + quat.mul_i(A[mu][..., None] * u)
        errs.append(_rms(covariant_derivative(A, u, grid, mu, scheme) - exact))
    return max(errs)


def curvature_error(n, constant=False):
    """Forward-difference curvature with A_nu sampled at link midpoints, against
    the exact curvature at plaquette centres (a second-order pairing)."""
    grid = Grid4((n,) * 4)
    if constant:
        A, _, _, F = harmonic_fields(grid, constant=True)
        return max(_rms(c) for c in curvature(A, grid).comps - np.asarray(F))
    h = np.asarray(grid.spacing)
    kvec = TWO_PI / np.asarray(grid.lengths, dtype=float)
    x = grid.coords()
    phase_at = lambda shift: sum(k * (xx + s) for k, xx, s in zip(kvec, x, shift))
    A = np.stack([_AMPS[nu] * np.cos(phase_at(0.5 * h * np.eye(4)[nu])) for nu in range(4)])
    approx = curvature(A, grid).comps
    errs = []
    for n_pair, (mu, nu) in enumerate(PAIRS):
        centre = phase_at(0.5 * h * (np.eye(4)[mu] + np.eye(4)[nu]))
        exact = -np.sin(centre) * (kvec[mu] * _AMPS[nu] - kvec[nu] * _AMPS[mu])
        errs.append(_rms(approx[n_pair] - exact))
    return max(errs)


def fitted_order(sizes, errors):
    """Least-squares slope of log(error) against log(h); nan if any error is zero."""
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0):
        return float("nan")
    h = 1.0 / np.asarray(sizes, dtype=float)
    return float(np.polyfit(np.log(h), np.log(errors), 1)[0])


def pairwise_orders(errors):
    errors = np.asarray(errors, dtype=float)
    return [float(np.log2(errors[i] / errors[i + 1])) for i in range(len(errors) - 1)]


def convergence_table(sizes=(4, 8, 16), constant=False):
    """Rows (n, h, link, central, curvature errors) plus fitted orders per operator."""
    rows = []
    for n in sizes:
        rows.append({
            "n": n,
            "h": 1.0 / n,
            "dirac_link": dirac_error(n, "link", constant),
            "dirac_central": dirac_error(n, "central", constant),
            "curvature_midpoint": curvature_error(n, constant),
        })
    orders = {}
    for key in ("dirac_link", "dirac_central", "curvature_midpoint"):
        errs = [r[key] for r in rows]
        orders[key] = {"fitted": fitted_order(sizes, errs), "pairwise": pairwise_orders(errs)
                       if all(e > 0 for e in errs) else []}
    return rows, orders


NOMINAL_ORDER = {"dirac_link": 1.0, "dirac_central": 2.0, "curvature_midpoint": 2.0}
