"""The 2-form Omega on configuration space, its slice restriction and the reduced form.

Tangent vectors are ``sw_ops.Tangent`` objects.  The form parts are
i R-valued, so wedging two of them picks up a factor ``wedge_sign``
(i^2 = -1 by default); that sign and the signs used by ``twist`` live in
``FormConventions`` so they can be audited and flipped on purpose.
"""

from dataclasses import dataclass, asdict
from itertools import permutations

import numpy as np

from . import quat
from .lattice import restrict1, restrict2
from .sw_ops import Tangent, residual_chi, gauge_tangent


@dataclass(frozen=True)
class FormConventions:
    wedge_sign: int = -1
    twist_signs: tuple = (-1, 1)
    metric_sign: int = 1
    orientation: str = "dx0^dx1^dx2^dx3"

    def __post_init__(self):
        signs = (self.wedge_sign, self.metric_sign) + tuple(self.twist_signs)
        if any(s not in (-1, 1) for s in signs):
            raise ValueError(f"convention signs must be +-1, got {signs}")

    def as_dict(self):
        d = asdict(self)
        d["twist_signs"] = list(self.twist_signs)
        return d


DEFAULT_CONVENTIONS = FormConventions()


@dataclass
class ReducedTangent:
    """Tangent (alpha, xi, eta) to the reduced configuration space on Sigma."""

    alpha: np.ndarray
    xi: np.ndarray
    eta: np.ndarray

    def __add__(self, other):
        return ReducedTangent(self.alpha + other.alpha, self.xi + other.xi, self.eta + other.eta)

    def __mul__(self, s):
        return ReducedTangent(s * self.alpha, s * self.xi, s * self.eta)

    __rmul__ = __mul__


def _check_pair(a, b):
    if a.form.shape != b.form.shape or a.zeta.shape != b.zeta.shape:
        raise ValueError("tangent vectors live on different grids")


def _wedge2(p, q):
    """Coefficient of dx^dy in (p0 dx + p1 dy) ^ (q0 dx + q1 dy)."""
    return p[0] * q[1] - p[1] * q[0]


def _spin(z1, z2):
    """g(I z1, z2) per site."""
    return quat.kahler_pairing(z1, z2)


def omega_terms(a, b, grid, k, conv=DEFAULT_CONVENTIONS):
    """The alpha, eta and spinor contributions to Omega(a, b)."""
    _check_pair(a, b)
    f1, f2 = k.on_grid()
    s = conv.wedge_sign
    alpha = 0.25 * s * np.sum(_wedge2(a.alpha, b.alpha) * f2) * grid.cell
    eta = 0.25 * s * np.sum(_wedge2(a.eta, b.eta) * f1) * grid.cell
    spinor = 0.125 * np.sum(_spin(a.zeta, b.zeta) * 2.0 * f1 * f2) * grid.cell
    return {"alpha": float(alpha), "eta": float(eta), "spinor": float(spinor)}


def omega(a, b, grid, k, conv=DEFAULT_CONVENTIONS, base=None):
    """Omega(a, b) = 1/4 int (alpha-eta)^(alpha-eta)'^omega + 1/8 int g(I z, z') omega^omega.

    ``base`` is the configuration (A, u) the tangents sit at.  It is only
    shape-checked: the metric on H is flat, so the value does not depend on it.
    """
    if base is not None:
        A, u = base
        if A.shape != a.form.shape or u.shape != a.zeta.shape:
            raise ValueError("base point does not match the tangent vectors")
    t = omega_terms(a, b, grid, k, conv)
    return t["alpha"] + t["eta"] + t["spinor"]


def _levi_civita():
    eps = np.zeros((4, 4, 4, 4))
    for perm in permutations(range(4)):
        inversions = sum(perm[i] > perm[j] for i in range(4) for j in range(i + 1, 4))
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


_EPS = _levi_civita()


def _two_form(p, q):
    """Full antisymmetric components (p ^ q)_{mu nu} of two 1-forms, shape (4, 4, ...)."""
    return p[:, None] * q[None, :] - p[None, :] * q[:, None]


def _kahler_two_form(k, shape):
    """omega_{mu nu} on the 4D grid: f1 on (0, 1), f2 on (2, 3)."""
    f1, f2 = k.on_grid()
    w = np.zeros((4, 4) + tuple(shape))
    w[0, 1] = f1
    w[1, 0] = -f1
    w[2, 3] = f2
    w[3, 2] = -f2
    return w


def _wedge22(P, Q):
    """Coefficient of dx0^dx1^dx2^dx3 in P ^ Q for full-component 2-forms."""
    return 0.25 * np.einsum("abcd,ab...,cd...->...", _EPS, P, Q, optimize=True)


def omega_cross_check(a, b, grid, k, conv=DEFAULT_CONVENTIONS):
    """Omega two ways: expanding (alpha-eta)^(alpha-eta)' with every cross term,
    and from the cross-term-free formula.  Returns ``(full, decomposed)``."""
    _check_pair(a, b)
    s = conv.wedge_sign
    w = _kahler_two_form(k, grid.shape)
    full_form = s * _wedge22(_two_form(a.form, b.form), w)
    full_spin = _spin(a.zeta, b.zeta) * _wedge22(w, w)
    full = (0.25 * np.sum(full_form) + 0.125 * np.sum(full_spin)) * grid.cell

    f1, f2 = k.on_grid()
    aa = s * _wedge2(a.alpha, b.alpha) * f2
    ee = s * _wedge2(a.eta, b.eta) * f1
    # (pi1* omega_Sigma + pi2* omega_Sigma) ^ omega with omega_Sigma = f / 2
    sigma_weight = 0.5 * f1 * f2 + 0.5 * f2 * f1
    spin = _spin(a.zeta, b.zeta) * sigma_weight
    decomposed = (0.25 * np.sum(aa) + 0.25 * np.sum(ee) + 0.25 * np.sum(spin)) * grid.cell
    return float(full), float(decomposed)


def omega_y_terms(a, b, p, q, grid, k, conv=DEFAULT_CONVENTIONS):
    """Slice integrals over Sigma x {p} and {q} x Sigma.

    On each slice both form parts are read as 1-forms in the slice
    coframe through their coefficient pairs.  The spinor weight on a slice
    is (i/2) f dz ^ dz-bar = f dx ^ dy.
    """
    _check_pair(a, b)
    s = conv.wedge_sign
    h = grid.spacing
    cell1, cell2 = h[0] * h[1], h[2] * h[3]
    out = {}
    for tag, cut, f, cell in (("p", lambda x, lead=0: restrict1(x, p, lead), k.f1, cell1),
                              ("q", lambda x, lead=0: restrict2(x, q, lead), k.f2, cell2)):
        fa, fb = cut(a.form, 1), cut(b.form, 1)
        za, zb = cut(a.zeta), cut(b.zeta)
        out[tag + ".alpha"] = 0.25 * s * float(np.sum(_wedge2(fa[:2], fb[:2]))) * cell
        out[tag + ".eta"] = 0.25 * s * float(np.sum(_wedge2(fa[2:], fb[2:]))) * cell
        out[tag + ".spinor"] = 0.25 * float(np.sum(_spin(za, zb) * f)) * cell
    return out


def omega_y(a, b, p, q, grid, k, conv=DEFAULT_CONVENTIONS):
    return float(sum(omega_y_terms(a, b, p, q, grid, k, conv).values()))


def hodge2(form):
    """Hodge star on 1-forms of a flat surface: *dx = dy, *dy = -dx."""
    return np.stack([-form[1], form[0]])


def metric_terms(X, Y, grid2, f, conv=DEFAULT_CONVENTIONS):
    """g^C(X, Y) split into its connection, spinor and Higgs parts.

    omega_Sigma = f/2 dx ^ dy.  The form parts use the real coefficient
    inner product a ^ *b = (a . b) dx ^ dy times ``metric_sign``.
    """
    m = conv.metric_sign
    cell = grid2.cell
    return {
        "alpha": 0.5 * m * float(np.sum(X.alpha * Y.alpha)) * cell,
        "xi": 0.5 * float(np.sum(quat.qdot(X.xi, Y.xi) * 0.5 * f)) * cell,
        "eta": 0.5 * m * float(np.sum(X.eta * Y.eta)) * cell,
    }


def metric_sigma(X, Y, grid2, f, conv=DEFAULT_CONVENTIONS):
    return float(sum(metric_terms(X, Y, grid2, f, conv).values()))


def complex_structure1(X):
    """I_1 = diag(*, I, -*)."""
    return ReducedTangent(hodge2(X.alpha), quat.qmul(quat.I, X.xi), -hodge2(X.eta))


def omega1_terms(X, Y, grid2, f, conv=DEFAULT_CONVENTIONS):
    return metric_terms(complex_structure1(X), Y, grid2, f, conv)


def omega1_sigma(X, Y, grid2, f, conv=DEFAULT_CONVENTIONS):
    """Omega_1(X, Y) = g^C(I_1 X, Y)."""
    return float(sum(omega1_terms(X, Y, grid2, f, conv).values()))


def pushforward_psi1(a, p):
    """Restriction to Sigma x {p}: connection (alpha0, alpha1), Higgs (c2, c3)."""
    form = restrict1(a.form, p, lead=1)
    return ReducedTangent(form[:2].copy(), restrict1(a.zeta, p), form[2:].copy())


def pushforward_psi2(a, q):
    """Restriction to {q} x Sigma: connection (c2, c3), Higgs (alpha0, alpha1)."""
    form = restrict2(a.form, q, lead=1)
    return ReducedTangent(form[2:].copy(), restrict2(a.zeta, q), form[:2].copy())


def pullback_terms(a, b, p, q, grid, k, conv=DEFAULT_CONVENTIONS):
    g1, g2 = grid.factor1(), grid.factor2()
    t1 = omega1_terms(pushforward_psi1(a, p), pushforward_psi1(b, p), g1, k.f1, conv)
    t2 = omega1_terms(pushforward_psi2(a, q), pushforward_psi2(b, q), g2, k.f2, conv)
    out = {"p." + key: v for key, v in t1.items()}
    out.update({"q." + key: v for key, v in t2.items()})
    return out


def pullback_sum(a, b, p, q, grid, k, conv=DEFAULT_CONVENTIONS):
    """(Psi_1^* Omega_1 + Psi_2^* Omega_1)(a, b)."""
    return float(sum(pullback_terms(a, b, p, q, grid, k, conv).values()))


def pullback_identity_defect(a, b, p, q, grid, k, conv=DEFAULT_CONVENTIONS, kappa=1.0):
    return abs(omega_y(a, b, p, q, grid, k, conv) - kappa * pullback_sum(a, b, p, q, grid, k, conv))


def twist(a, conv=DEFAULT_CONVENTIONS):
    """Partner (s1 *alpha - s1 *eta, s2 I zeta) used to show nondegeneracy."""
    s1, s2 = conv.twist_signs
    form = np.concatenate([s1 * hodge2(a.alpha), s1 * hodge2(a.eta)])
    return Tangent(form, s2 * quat.qmul(quat.I, a.zeta))


def moment_pairing(eps, A, u, grid, k, convention="paper"):
    """int_X eps chi_1(A, u) omega ^ omega."""
    chi = residual_chi(A, u, grid, convention)
    f1, f2 = k.on_grid()
    return float(np.sum(eps * chi[..., 0] * 2.0 * f1 * f2) * grid.cell)


def pairing_derivative(eps, b, A, u, grid, k, convention="paper", step=1e-4):
    """Central difference of ``moment_pairing`` along the line (A + t b.form, u + t b.zeta)."""
    plus = moment_pairing(eps, A + step * b.form, u + step * b.zeta, grid, k, convention)
    minus = moment_pairing(eps, A - step * b.form, u - step * b.zeta, grid, k, convention)
    return (plus - minus) / (2.0 * step)


def moment_identity_sides(eps, b, A, u, grid, k, conv=DEFAULT_CONVENTIONS,
                          convention="paper", step=1e-4):
    """(Omega(V_eps, b), D_b P_eps) for the gauge generator V_eps at (A, u)."""
    lhs = omega(gauge_tangent(eps, u, grid), b, grid, k, conv)
    return lhs, pairing_derivative(eps, b, A, u, grid, k, convention, step)


def moment_identity_defect(eps, b, A, u, grid, k, conv=DEFAULT_CONVENTIONS,
                           convention="paper", kappa_m=1.0, step=1e-4):
    lhs, rhs = moment_identity_sides(eps, b, A, u, grid, k, conv, convention, step)
    return abs(lhs - kappa_m * rhs)


def fit_constant(lhs, rhs):
    """Least-squares kappa minimising sum (lhs - kappa rhs)^2."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    denom = float(np.dot(rhs, rhs))
    if denom == 0.0:
        return float("nan")
    return float(np.dot(lhs, rhs) / denom)
