"""Gradient flow on the Seiberg-Witten residual energy.

E(A, u) = int |Fhat_A - mu o u|^2 + sum_mu |D_mu u|^2 over the plain
coordinate volume.  The prefixes of the Dirac components are unit
quaternions, so they drop out of the norm.  Gradients are L2 gradients
(derivative per unit cell volume) built from the adjoint stencils.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import quat
from .lattice import bwd_diff
from .sw_ops import (PAIRS, ReducedConfig, covariant_derivative, curvature,
                     fhat_from_curvature, thin_grid)

# rows: components of Fhat, columns: F_{mu nu} in PAIRS order
_FHAT_COEFFS = {
    "paper": np.array([[1, 0, 0, 0, 0, -1], [0, 1, 0, 0, -1, 0], [0, 0, 1, 1, 0, 0]], float),
    "standard": np.array([[1, 0, 0, 0, 0, 1], [0, 1, 0, 0, -1, 0], [0, 0, 1, 1, 0, 0]], float),
}


@dataclass
class SolveSettings:
    max_steps: int = 10000
    step_size: float = 1e-2
    tol: float = 1e-8
    scheme: str = "link"
    convention: str = "paper"
    report_every: int = 100
    min_step: float = 1e-14

    def __post_init__(self):
        if self.step_size <= 0 or self.tol <= 0:
            raise ValueError("step_size and tol must be positive")
        if self.max_steps < 0 or self.report_every < 1:
            raise ValueError("max_steps must be >= 0 and report_every >= 1")


@dataclass
class SolveTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    stalled: bool = False
    steps: int = 0

    COLUMNS = ("step", "energy", "curvature_residual", "dirac_residual", "grad_norm")

    def add(self, step, energy, curv, dirac, gnorm):
        self.records.append({"step": step, "energy": energy, "curvature_residual": curv,
                             "dirac_residual": dirac, "grad_norm": gnorm})

    def energies(self):
        return [r["energy"] for r in self.records]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for r in self.records:
            writer.writerow([r["step"]] + [repr(float(r[c])) for c in self.COLUMNS[1:]])
        return buf.getvalue()


def _schemes(scheme, grid, continuum):
    # on a unit axis the central stencil vanishes, leaving the pointwise i A u
    return ["central" if mu in continuum else scheme for mu in range(grid.ndim)]


def _parts(A, u, grid, settings, continuum=()):
    F = curvature(A, grid)
    R = fhat_from_curvature(F, settings.convention) - quat.moment_map(u)
    schemes = _schemes(settings.scheme, grid, continuum)
    D = [covariant_derivative(A, u, grid, mu, schemes[mu]) for mu in range(grid.ndim)]
    return R, D, schemes


def _residual_norms(R, D, grid):
    curv = float(np.sum(R ** 2) * grid.cell)
    dirac = float(sum(np.sum(d ** 2) for d in D) * grid.cell)
    return curv, dirac


def energy(A, u, grid, settings=SolveSettings(), continuum=()):
    R, D, _ = _parts(A, u, grid, settings, continuum)
    curv, dirac = _residual_norms(R, D, grid)
    return curv + dirac


def residual_rms(A, u, grid, settings=SolveSettings(), continuum=()):
    """sqrt(E / volume); equal for a reduced configuration and its lift."""
    return math.sqrt(energy(A, u, grid, settings, continuum) / grid.volume)


def _gradient(A, u, grid, settings, R, D, schemes):
    h = grid.spacing
    gA = np.zeros_like(A)
    coeffs = _FHAT_COEFFS[settings.convention]
    for n, (mu, nu) in enumerate(PAIRS):
        G = 2.0 * np.tensordot(R, coeffs[:, n], axes=([-1], [0]))
        if grid.sizes[mu] > 1:
            gA[nu] -= bwd_diff(G, mu, h[mu])
        if grid.sizes[nu] > 1:
            gA[mu] += bwd_diff(G, nu, h[nu])
    gu = -2.0 * np.einsum("...a,...ab->...b", R, quat.moment_map_gradients(u))
    for mu in range(grid.ndim):
        Dm = D[mu]
        if schemes[mu] == "link":
            up = np.roll(u, -1, axis=mu)
            gA[mu] += 2.0 * quat.qdot(Dm, quat.mul_i(quat.phase_mul(h[mu] * A[mu], up)))
            back = np.roll(quat.phase_mul(-h[mu] * A[mu], Dm), 1, axis=mu)
            gu += 2.0 * (back - Dm) / h[mu]
        else:
            gA[mu] += 2.0 * quat.qdot(Dm, quat.mul_i(u))
            if grid.sizes[mu] > 1:
                gu += (np.roll(Dm, 1, axis=mu) - np.roll(Dm, -1, axis=mu)) / h[mu]
            gu -= 2.0 * quat.mul_i(A[mu][..., None] * Dm)
    return gA, gu


def gradient(A, u, grid, settings=SolveSettings(), continuum=()):
    """L2 gradient of ``energy``: (dE/dA, dE/du) per unit cell volume."""
    R, D, schemes = _parts(A, u, grid, settings, continuum)
    return _gradient(A, u, grid, settings, R, D, schemes)


def _inner(gA, gu, dA, du, grid):
    return float((np.sum(gA * dA) + np.sum(gu * du)) * grid.cell)


def descend(A, u, grid, settings=SolveSettings(), continuum=()):
    """Fixed-step gradient descent, halving the step whenever the energy would rise.

    Returns ``(A, u, trace)``; non-convergence is recorded in the trace.
    """
    A = np.array(A, dtype=float)
    u = np.array(u, dtype=float)
    tau = settings.step_size
    trace = SolveTrace()
    vol = grid.volume

    R, D, schemes = _parts(A, u, grid, settings, continuum)
    curv, dirac = _residual_norms(R, D, grid)
    E = curv + dirac
    step = 0
    while True:
        gA, gu = _gradient(A, u, grid, settings, R, D, schemes)
        gnorm = math.sqrt(_inner(gA, gu, gA, gu, grid))
        converged = math.sqrt(E / vol) <= settings.tol
        if step % settings.report_every == 0 or converged or step >= settings.max_steps:
            trace.add(step, E, math.sqrt(curv / vol), math.sqrt(dirac / vol), gnorm)
        if converged:
            trace.converged = True
            break
        if step >= settings.max_steps:
            break
        while True:
            A_new, u_new = A - tau * gA, u - tau * gu
            R_new, D_new, _ = _parts(A_new, u_new, grid, settings, continuum)
            c_new, d_new = _residual_norms(R_new, D_new, grid)
            if c_new + d_new <= E:
                break
            tau *= 0.5
            if tau < settings.min_step:
                break
        if tau < settings.min_step:
            trace.stalled = True
            trace.add(step, E, math.sqrt(curv / vol), math.sqrt(dirac / vol), gnorm)
            break
        A, u, R, D, curv, dirac = A_new, u_new, R_new, D_new, c_new, d_new
        E = curv + dirac
        step += 1
    trace.steps = step
    return A, u, trace


def _thin_setup(c, transverse):
    grid = thin_grid(c.grid, transverse or (1.0, 1.0))
    continuum = (2, 3) if transverse is None else ()
    return grid, c.gauge_array()[..., None, None], c.u[:, :, None, None], continuum


def reduced_energy(c, settings=SolveSettings(), transverse=None):
    """Energy of the reduced equations on Sigma (plain area measure).

    ``transverse`` = (h2, h3) selects the lattice phase form of the Higgs
    coupling, (exp(i h phi) - 1) u / h, matching the link scheme on a lifted
    grid with those spacings; ``None`` uses i phi u.
    """
    grid, A, u, continuum = _thin_setup(c, transverse)
    return energy(A, u, grid, settings, continuum) / (grid.spacing[2] * grid.spacing[3])


def reduced_gradient(c, settings=SolveSettings(), transverse=None):
    """L2 gradient of ``reduced_energy`` as (d/d(a, phi), d/du) on Sigma."""
    grid, A, u, continuum = _thin_setup(c, transverse)
    gA, gu = gradient(A, u, grid, settings, continuum)
    return gA[..., 0, 0], gu[:, :, 0, 0]


def solve_reduced(c, settings=SolveSettings(), transverse=None):
    """Descend the reduced energy; returns ``(ReducedConfig, SolveTrace)``."""
    grid, A, u, continuum = _thin_setup(c, transverse)
    A, u, trace = descend(A, u, grid, settings, continuum)
    # report energy and gradient norm in the area measure of Sigma
    area = grid.spacing[2] * grid.spacing[3]
    for r in trace.records:
        r["energy"] /= area
        r["grad_norm"] /= math.sqrt(area)
    out = ReducedConfig(c.grid, A[:2, :, :, 0, 0].copy(), A[2:, :, :, 0, 0].copy(),
                        u[:, :, 0, 0].copy())
    return out, trace
