"""Quaternion algebra on arrays of shape (..., 4).

A quaternion h = w + x i + y j + z k is stored as the last axis
``[w, x, y, z]``, so a whole spinor field is just an array of shape
``(*grid.shape, 4)`` and every function here is vectorized over the
leading axes.  Moment values are stored as arrays of shape (..., 3)
holding the coefficients of i, j, k.
"""

import numpy as np

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])

_AXES = {"I": I, "J": J, "K": K}

# generator h -> i c h of h -> exp(i c t) h; fixed by the Hamiltonian identity
FIELD_SIGN = 1.0


def quat(w=0.0, x=0.0, y=0.0, z=0.0):
    return np.array([w, x, y, z], dtype=float)


def qmul(p, q):
    """Hamilton product, broadcasting over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def qconj(h):
    h = np.asarray(h, dtype=float)
    return h * np.array([1.0, -1.0, -1.0, -1.0])


def qnorm(h):
    return np.sqrt(np.sum(np.asarray(h, dtype=float) ** 2, axis=-1))


def qdot(v, w):
    """Euclidean pairing on R^4, equal to Re(v conj(w))."""
    return np.sum(np.asarray(v, dtype=float) * np.asarray(w, dtype=float), axis=-1)


def qreal(h):
    return np.asarray(h, dtype=float)[..., 0]


def phase(theta):
    """Unit complex quaternion exp(i theta), elementwise in theta."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (4,))
    out[..., 0] = np.cos(theta)
    out[..., 1] = np.sin(theta)
    return out


_MUL_I_PERM = [1, 0, 3, 2]
_MUL_I_SIGN = np.array([-1.0, 1.0, -1.0, 1.0])


def mul_i(v):
    """Left multiplication by i, i (w + x i + y j + z k) = -x + w i - z j + y k."""
    return np.asarray(v, dtype=float)[..., _MUL_I_PERM] * _MUL_I_SIGN


def phase_mul(theta, v):
    """exp(i theta) v for real theta broadcast against the sites of v."""
    theta = np.asarray(theta, dtype=float)[..., None]
    return np.cos(theta) * v + np.sin(theta) * mul_i(v)


def cstruct(axis, v):
    """Left multiplication by i, j or k (``axis`` is "I", "J" or "K")."""
    try:
        unit = _AXES[axis]
    except KeyError:
        raise ValueError(f"unknown complex structure {axis!r}") from None
    return qmul(unit, v)


def moment_map(h):
    """Coefficients of i, j, k in (1/2) conj(h) i h."""
    h = np.asarray(h, dtype=float)
    w, x, y, z = np.moveaxis(h, -1, 0)
    return np.stack(
        [0.5 * (w * w + x * x - y * y - z * z), x * y - w * z, x * z + w * y],
        axis=-1,
    )


def moment_map_gradients(h):
    """Euclidean gradients of the three moment components, shape (..., 3, 4)."""
    h = np.asarray(h, dtype=float)
    w, x, y, z = np.moveaxis(h, -1, 0)
    g1 = np.stack([w, x, -y, -z], axis=-1)
    g2 = np.stack([-z, y, x, -w], axis=-1)
    g3 = np.stack([y, z, w, x], axis=-1)
    return np.stack([g1, g2, g3], axis=-2)


def moment_diff(h, v):
    """Directional derivative of ``moment_map`` at h along v (exact)."""
    grads = moment_map_gradients(h)
    return np.sum(grads * np.asarray(v, dtype=float)[..., None, :], axis=-1)


def kahler_pairing(v, w):
    """omega_H(v, w) = <i v, w> for the complex structure I."""
    return qdot(qmul(I, v), w)


def fundamental_field(c, h):
    """Tangent vector at h generated by the Lie algebra element i c."""
    c = np.asarray(c, dtype=float)
    return FIELD_SIGN * qmul(c[..., None] * I, h)


def moment_pairing_scalar(c, h, v):
    """The scalar pairing (c/2)(conj(v) h + conj(h) v) = c Re(conj(h) v)."""
    return np.asarray(c, dtype=float) * qdot(h, v)
