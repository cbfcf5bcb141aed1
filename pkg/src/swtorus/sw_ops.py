"""Seiberg-Witten operators on the lattice 4-torus and their dimensional reduction.

Layout conventions:

* gauge field ``A``: shape ``(4, *grid.shape)``, real coefficients of
  A = i (A0 dx0 + A1 dx1 + A2 dx2 + A3 dx3)
* spinor ``u``: shape ``(*grid.shape, 4)``, one quaternion per site
* self-dual triples and moment values: shape ``(*grid.shape, 3)``

The covariant derivative is D_mu u = d_mu u + i A_mu u with i acting by
left multiplication.  In the ``link`` scheme it is discretized as
(exp(i h A_mu(x)) u(x + e_mu) - u(x)) / h, which is exactly covariant
under u -> exp(-i theta) u, A_mu -> A_mu + fwd_diff(theta).
"""

from dataclasses import dataclass

import numpy as np

from . import quat
from .lattice import Grid, Grid2, fwd_diff, central_diff, diff, lift1

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
PAIR_INDEX = {p: n for n, p in enumerate(PAIRS)}

# left prefixes -1, i, j, k of the dx0..dx3 components of the Dirac operator
DIRAC_PREFIX = np.array([-quat.ONE, quat.I, quat.J, quat.K])

CONVENTIONS = ("paper", "standard")
SCHEMES = ("link", "central")


def _check_config(A, u, grid):
    if A.shape != (4,) + tuple(grid.shape):
        raise ValueError(f"gauge field shape {A.shape} does not match grid {grid.shape}")
    if u is not None and u.shape != tuple(grid.shape) + (4,):
        raise ValueError(f"spinor shape {u.shape} does not match grid {grid.shape}")


def zero_config(grid):
    return np.zeros((4,) + tuple(grid.shape)), np.zeros(tuple(grid.shape) + (4,))


class Curvature:
    """The six components F_{mu nu}, mu < nu, stored as an array (6, *shape)."""

    def __init__(self, comps):
        self.comps = comps

    def __getitem__(self, pair):
        mu, nu = pair
        if mu == nu:
            return np.zeros_like(self.comps[0])
        if mu < nu:
            return self.comps[PAIR_INDEX[(mu, nu)]]
        return -self.comps[PAIR_INDEX[(nu, mu)]]


def curvature(A, grid, kind="forward"):
    """F_{mu nu} = d_mu A_nu - d_nu A_mu."""
    _check_config(A, None, grid)
    zero = np.zeros(A.shape[1:])
    # derivatives along unit axes vanish identically
    d = [[diff(A[nu], mu, grid, kind) if grid.sizes[mu] > 1 and nu != mu else zero
          for nu in range(4)] for mu in range(4)]
    return Curvature(np.stack([d[mu][nu] - d[nu][mu] for mu, nu in PAIRS]))


def fhat_from_curvature(F, convention="paper"):
    if convention == "paper":
        first = F[0, 1] - F[2, 3]
    elif convention == "standard":
        first = F[0, 1] + F[2, 3]
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return np.stack([first, F[0, 2] - F[1, 3], F[0, 3] + F[1, 2]], axis=-1)


def fhat(A, grid, convention="paper", kind="forward"):
    """Components of the self-dual curvature as a triple per site.

    ``paper``: (F01 - F23, F02 - F13, F03 + F12), read off the local form
    of the curvature equation; ``standard``: (F01 + F23, F02 - F13, F03 + F12).
    """
    return fhat_from_curvature(curvature(A, grid, kind), convention)


def covariant_derivative(A, u, grid, mu, scheme="link"):
    h = grid.spacing[mu]
    if scheme == "link":
        up = np.roll(u, -1, axis=mu)
        return (quat.phase_mul(h * A[mu], up) - u) / h
    if scheme == "central":
        return central_diff(u, mu, h) + quat.mul_i(A[mu][..., None] * u)
    raise ValueError(f"unknown scheme {scheme!r}")


def dirac(A, u, grid, scheme="link"):
    """The dx0..dx3 coefficient fields of D_A u, shape (4, *shape, 4).

    Component mu is prefix_mu * D_mu u with prefixes (-1, i, j, k).
    """
    _check_config(A, u, grid)
    return np.stack([
        quat.qmul(DIRAC_PREFIX[mu], covariant_derivative(A, u, grid, mu, scheme))
        for mu in range(4)
    ])


def dirac_sum(components):
    """Sum of the four Dirac components (the quaternion-valued form of the operator)."""
    return np.sum(components, axis=0)


def residual_chi(A, u, grid, convention="paper"):
    """chi(A, u) = (Fhat_A - mu o u) / 8 per site."""
    _check_config(A, u, grid)
    return 0.125 * (fhat(A, grid, convention) - quat.moment_map(u))


def gauge_transform(theta, A, u, grid):
    """A_mu -> A_mu + fwd_diff(theta, mu), u -> exp(-i theta) u."""
    _check_config(A, u, grid)
    dtheta = np.stack([fwd_diff(theta, mu, grid.spacing[mu]) for mu in range(4)])
    return A + dtheta, quat.phase_mul(-theta, u)


@dataclass
class Tangent:
    """Tangent vector (alpha - eta, zeta) at a configuration.

    ``form`` holds (alpha0, alpha1, c2, c3), the real coefficients of
    alpha = i(alpha0 dx0 + alpha1 dx1) and eta = -i(c2 dx2 + c3 dx3), so
    alpha - eta = i sum_mu form[mu] dx_mu is the variation of A.
    ``zeta`` is the spinor variation.
    """

    form: np.ndarray
    zeta: np.ndarray

    @property
    def alpha(self):
        return self.form[:2]

    @property
    def eta(self):
        return self.form[2:]

    def __add__(self, other):
        return Tangent(self.form + other.form, self.zeta + other.zeta)

    def __sub__(self, other):
        return Tangent(self.form - other.form, self.zeta - other.zeta)

    def __mul__(self, scalar):
        return Tangent(scalar * self.form, scalar * self.zeta)

    __rmul__ = __mul__

    def __neg__(self):
        return Tangent(-self.form, -self.zeta)

    def norm(self, grid):
        """L2 norm over the plain coordinate volume."""
        total = np.sum(self.form ** 2) + np.sum(self.zeta ** 2)
        return float(np.sqrt(total * grid.cell))

    @classmethod
    def zeros(cls, grid):
        A, u = zero_config(grid)
        return cls(A, u)


def gauge_tangent(eps, u, grid):
    """Infinitesimal gauge action: (fwd_diff(eps), -i eps u)."""
    form = np.stack([fwd_diff(eps, mu, grid.spacing[mu]) for mu in range(4)])
    return Tangent(form, -quat.mul_i(eps[..., None] * u))


# -- dimensional reduction ------------------------------------------------

@dataclass
class ReducedConfig:
    """Fields on Sigma: connection (a0, a1), Higgs (phi1, phi2) = (A2, A3), spinor u."""

    grid: Grid2
    a: np.ndarray
    phi: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        shape = tuple(self.grid.shape)
        if self.a.shape != (2,) + shape or self.phi.shape != (2,) + shape:
            raise ValueError("reduced connection/Higgs fields do not match grid")
        if self.u.shape != shape + (4,):
            raise ValueError("reduced spinor does not match grid")

    @classmethod
    def zeros(cls, grid):
        shape = tuple(grid.shape)
        return cls(grid, np.zeros((2,) + shape), np.zeros((2,) + shape), np.zeros(shape + (4,)))

    def gauge_array(self):
        """(a0, a1, phi1, phi2) stacked like a gauge field on Sigma."""
        return np.concatenate([self.a, self.phi])

    def lift(self, grid4):
        """Constant extension along (x2, x3): A = (a0, a1, phi1, phi2), u = u~."""
        if tuple(grid4.sizes[:2]) != tuple(self.grid.sizes) or \
                tuple(grid4.lengths[:2]) != tuple(self.grid.lengths):
            raise ValueError(f"cannot lift {self.grid} onto {grid4}")
        return lift1(self.gauge_array(), grid4, lead=1), lift1(self.u, grid4)


def thin_grid(grid2, transverse):
    """Grid (N0, N1, 1, 1) whose unit axes carry the transverse spacings."""
    return Grid(tuple(grid2.sizes) + (1, 1), tuple(grid2.lengths) + tuple(transverse))


def reduced_curvature(c, convention="paper"):
    """Left-hand sides of the reduced curvature equations, shape (N0, N1, 3).

    (d0 a1 - d1 a0, d0 phi1 - d1 phi2, d0 phi2 + d1 phi1).  The two
    conventions coincide here since F23 vanishes on x2, x3 independent data.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    h0, h1 = c.grid.spacing
    a0, a1 = c.a
    p1, p2 = c.phi
    k1 = fwd_diff(a1, 0, h0) - fwd_diff(a0, 1, h1)
    k2 = fwd_diff(p1, 0, h0) - fwd_diff(p2, 1, h1)
    k3 = fwd_diff(p2, 0, h0) + fwd_diff(p1, 1, h1)
    return np.stack([k1, k2, k3], axis=-1)


def reduced_dirac(c, scheme="link", transverse=None):
    """Components -(D0 u), i (D1 u), j (i phi1 u), k (i phi2 u) on Sigma.

    Their sum is the reduced Dirac operator.  With ``transverse`` spacings
    (h2, h3) and the link scheme the Higgs terms become the lattice phases
    (exp(i h phi) - 1) u / h, matching the 4D link operator on lifted data.
    """
    h0, h1 = c.grid.spacing
    u = c.u
    if scheme == "link":
        d0 = (quat.phase_mul(h0 * c.a[0], np.roll(u, -1, axis=0)) - u) / h0
        d1 = (quat.phase_mul(h1 * c.a[1], np.roll(u, -1, axis=1)) - u) / h1
    elif scheme == "central":
        d0 = central_diff(u, 0, h0) + quat.mul_i(c.a[0][..., None] * u)
        d1 = central_diff(u, 1, h1) + quat.mul_i(c.a[1][..., None] * u)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    higgs = []
    for n in range(2):
        if scheme == "link" and transverse is not None:
            h = transverse[n]
            higgs.append((quat.phase_mul(h * c.phi[n], u) - u) / h)
        else:
            higgs.append(quat.mul_i(c.phi[n][..., None] * u))
    return np.stack([
        -d0,
        quat.mul_i(d1),
        quat.qmul(quat.J, higgs[0]),
        quat.qmul(quat.K, higgs[1]),
    ])


def reduced_residual(c, scheme="link", convention="paper", transverse=None):
    """(curvature residual, Dirac components) of the reduced equations on Sigma."""
    curv = reduced_curvature(c, convention) - quat.moment_map(c.u)
    return curv, reduced_dirac(c, scheme, transverse)


def full_residual(A, u, grid, scheme="link", convention="paper"):
    """(Fhat_A - mu o u, Dirac components) on X."""
    return fhat(A, grid, convention) - quat.moment_map(u), dirac(A, u, grid, scheme)
