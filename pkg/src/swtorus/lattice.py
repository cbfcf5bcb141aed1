"""Periodic grids on flat tori, finite differences, quadrature, slices and lifts.

Scalar fields are plain arrays of shape ``grid.shape``.  Multi-component
fields put their component axis first for gauge-like data,
``(4, *grid.shape)``, and last for quaternion data, ``(*grid.shape, 4)``.
Site order is C order, so the last coordinate varies fastest.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

GENERATOR = "numpy.PCG64"


@dataclass(frozen=True)
class Grid:
    """Periodic lattice with ``sizes[mu]`` sites over side length ``lengths[mu]``."""

    sizes: tuple
    lengths: tuple = None

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        lengths = self.lengths
        if lengths is None:
            lengths = (1.0,) * len(sizes)
        lengths = tuple(float(v) for v in lengths)
        if len(lengths) != len(sizes):
            raise ValueError("sizes and lengths differ in dimension")
        if any(n < 1 for n in sizes) or any(v <= 0 for v in lengths):
            raise ValueError(f"invalid grid {sizes} x {lengths}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "lengths", lengths)

    @property
    def ndim(self):
        return len(self.sizes)

    @property
    def shape(self):
        return self.sizes

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.sizes))

    @property
    def cell(self):
        return float(np.prod(self.spacing))

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def nsites(self):
        return int(np.prod(self.sizes))

    def coords(self):
        """Coordinate arrays x_mu = n_mu h_mu, broadcast to the full grid."""
        axes = [np.arange(n) * h for n, h in zip(self.sizes, self.spacing)]
        return np.meshgrid(*axes, indexing="ij")

    def linear_index(self, site):
        idx = 0
        for x, n in zip(site, self.sizes):
            idx = idx * n + (int(x) % n)
        return idx


class Grid4(Grid):
    """Grid on the flat 4-torus X = Sigma x Sigma (axes x0, x1 | x2, x3)."""

    def __post_init__(self):
        super().__post_init__()
        if self.ndim != 4 or min(self.sizes) < 4:
            raise ValueError(f"Grid4 needs four axes of at least 4 sites, got {self.sizes}")

    def factor1(self):
        return Grid2(self.sizes[:2], self.lengths[:2])

    def factor2(self):
        return Grid2(self.sizes[2:], self.lengths[2:])


class Grid2(Grid):
    """Grid on the flat 2-torus Sigma."""

    def __post_init__(self):
        super().__post_init__()
        if self.ndim != 2 or min(self.sizes) < 4:
            raise ValueError(f"Grid2 needs two axes of at least 4 sites, got {self.sizes}")


@dataclass(frozen=True)
class KahlerData:
    """Conformal factors f1(x0, x1) and f2(x2, x3) of omega = f1 dx01 + f2 dx23."""

    f1: np.ndarray = field(repr=False)
    f2: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(self.f1 <= 0) or np.any(self.f2 <= 0):
            raise ValueError("conformal factors must be positive")

    @classmethod
    def flat(cls, grid):
        return cls(np.ones(grid.sizes[:2]), np.ones(grid.sizes[2:]))

    def check(self, grid):
        if self.f1.shape != tuple(grid.sizes[:2]) or self.f2.shape != tuple(grid.sizes[2:]):
            raise ValueError("Kahler data does not match grid")

    def on_grid(self):
        """f1 and f2 broadcastable against a 4D scalar field."""
        return self.f1[:, :, None, None], self.f2[None, None, :, :]


def _shift(f, axis, step):
    return np.roll(f, -step, axis=axis)


def fwd_diff(f, axis, h):
    """(f(x + e_axis) - f(x)) / h with periodic wraparound."""
    return (_shift(f, axis, 1) - f) / h


def bwd_diff(f, axis, h):
    return (f - _shift(f, axis, -1)) / h


def central_diff(f, axis, h):
    return (_shift(f, axis, 1) - _shift(f, axis, -1)) / (2.0 * h)


def diff(f, axis, grid, kind="forward"):
    h = grid.spacing[axis]
    if kind == "forward":
        return fwd_diff(f, axis, h)
    if kind == "backward":
        return bwd_diff(f, axis, h)
    if kind == "central":
        return central_diff(f, axis, h)
    raise ValueError(f"unknown difference {kind!r}")


def integrate(s, grid):
    """Plain coordinate-volume integral of a scalar field."""
    return float(np.sum(s) * grid.cell)


def integrate4(s, k, grid, weight="omega2"):
    """Integral over X with weight ``omega2`` (omega ^ omega = 2 f1 f2 d^4x) or ``plain``."""
    if weight == "plain":
        return integrate(s, grid)
    if weight != "omega2":
        raise ValueError(f"unknown weight {weight!r}")
    f1, f2 = k.on_grid()
    return float(np.sum(s * (2.0 * f1 * f2)) * grid.cell)


def integrate2(s, grid2, f=None):
    if f is None:
        return integrate(s, grid2)
    return float(np.sum(s * f) * grid2.cell)


def _check_site(site, sizes):
    site = tuple(int(v) for v in site)
    if len(site) != 2 or any(not 0 <= v < n for v, n in zip(site, sizes)):
        raise IndexError(f"slice index {site} out of range for {sizes}")
    return site


def restrict1(field4, p, lead=0):
    """Slice Sigma x {p}: fix (x2, x3) = p.

    ``lead`` counts component axes placed before the spatial axes.
    """
    spatial = field4.shape[lead:lead + 4]
    p = _check_site(p, spatial[2:])
    idx = (slice(None),) * (lead + 2) + p
    return np.array(field4[idx])


def restrict2(field4, q, lead=0):
    """Slice {q} x Sigma: fix (x0, x1) = q."""
    spatial = field4.shape[lead:lead + 4]
    q = _check_site(q, spatial[:2])
    idx = (slice(None),) * lead + q
    return np.array(field4[idx])


def lift1(field2, grid4, lead=0):
    """Extend a Sigma field constantly along (x2, x3)."""
    spatial = field2.shape[lead:lead + 2]
    if tuple(spatial) != tuple(grid4.sizes[:2]):
        raise ValueError(f"cannot lift field of shape {spatial} onto {grid4.sizes}")
    expanded = np.expand_dims(field2, axis=(lead + 2, lead + 3))
    target = field2.shape[:lead + 2] + tuple(grid4.sizes[2:]) + field2.shape[lead + 2:]
    return np.array(np.broadcast_to(expanded, target))


def lift2(field2, grid4, lead=0):
    """Extend a Sigma field constantly along (x0, x1)."""
    spatial = field2.shape[lead:lead + 2]
    if tuple(spatial) != tuple(grid4.sizes[2:]):
        raise ValueError(f"cannot lift field of shape {spatial} onto {grid4.sizes}")
    expanded = np.expand_dims(field2, axis=(lead, lead + 1))
    target = field2.shape[:lead] + tuple(grid4.sizes[:2]) + field2.shape[lead:]
    return np.array(np.broadcast_to(expanded, target))


def random_smooth_field(grid, seed, modes=3, amplitude=1.0, kmax=2):
    """Sum of ``modes`` random low-frequency harmonics on ``grid``.

    ``seed`` is an integer or a ``numpy.random.Generator``; integer seeds
    give bit-identical fields.  Every harmonic has a nonzero wave vector,
    so the field has zero mean.
    """
    rng = np.random.default_rng(seed)
    out = np.zeros(grid.shape)
    if modes <= 0:
        return out
    # stay below the Nyquist wave number on every axis
    kcap = np.array([min(kmax, (n - 1) // 2) for n in grid.sizes])
    if not kcap.any():
        return out
    kvecs = rng.integers(-kcap, kcap + 1, size=(modes, grid.ndim))
    while True:
        bad = ~kvecs.any(axis=1)
        if not bad.any():
            break
        kvecs[bad] = rng.integers(-kcap, kcap + 1, size=(int(bad.sum()), grid.ndim))
    coef = rng.normal(size=(modes, 2))
    # separable phases exp(2 pi i k n / N), one 1D table per axis
    ndim = grid.ndim
    tables = [np.exp(2j * np.pi * np.outer(np.arange(-c, c + 1), np.arange(n) / n))
              for c, n in zip(kcap, grid.sizes)]
    acc = np.zeros(grid.shape, dtype=complex)
    for kvec, (a, b) in zip(kvecs, coef):
        term = complex(a, -b)
        for ax, (kk, c) in enumerate(zip(kvec, kcap)):
            row = tables[ax][kk + c]
            term = term * row.reshape((1,) * ax + (-1,) + (1,) * (ndim - ax - 1))
        acc += term
    # a cos + b sin = Re((a - i b) exp(i arg))
    out = acc.real
    return amplitude * out / np.sqrt(modes)


def random_positive_field(grid, seed, modes=2, spread=0.3):
    """Smooth conformal factor 1 + spread * tanh(harmonics), bounded away from 0."""
    return 1.0 + spread * np.tanh(random_smooth_field(grid, seed, modes))


# -- SWF1 snapshots -------------------------------------------------------

SWF_MAGIC = b"SWF1"
SCALAR, GAUGE, SPINOR = 1, 2, 3
_NARRAYS = {SCALAR: 1, GAUGE: 4, SPINOR: 4}


class SnapshotError(ValueError):
    pass


def _pad4(shape):
    shape = tuple(int(n) for n in shape)
    if not 1 <= len(shape) <= 4:
        raise SnapshotError(f"unsupported field rank {len(shape)}")
    return shape + (1,) * (4 - len(shape))


def write_swf(path, kind, data):
    """Write a field as an SWF1 snapshot.

    ``data`` is a scalar field, a gauge field ``(4, *shape)`` or a spinor
    field ``(*shape, 4)``; fields on fewer than four axes are padded with
    unit axes.
    """
    data = np.asarray(data, dtype=float)
    if kind == SCALAR:
        arrays = [data]
    elif kind == GAUGE:
        arrays = list(data)
    elif kind == SPINOR:
        arrays = list(np.moveaxis(data, -1, 0))
    else:
        raise SnapshotError(f"unknown snapshot kind {kind}")
    if len(arrays) != _NARRAYS[kind]:
        raise SnapshotError(f"kind {kind} needs {_NARRAYS[kind]} arrays")
    dims = _pad4(arrays[0].shape)
    with open(path, "wb") as fh:
        fh.write(SWF_MAGIC)
        fh.write(struct.pack("<5I", kind, *dims))
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_swf(path, ndim=None):
    """Read an SWF1 snapshot; returns ``(kind, data)`` in the layout of ``write_swf``.

    With ``ndim=2`` the two trailing unit axes are dropped.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != SWF_MAGIC:
        raise SnapshotError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 24:
        raise SnapshotError(f"{path}: truncated header")
    kind, *dims = struct.unpack("<5I", raw[4:24])
    if kind not in _NARRAYS:
        raise SnapshotError(f"{path}: unknown kind {kind}")
    count = _NARRAYS[kind] * int(np.prod(dims))
    if len(raw) != 24 + 8 * count:
        raise SnapshotError(f"{path}: payload size mismatch")
    flat = np.frombuffer(raw, dtype="<f8", offset=24, count=count).astype(float)
    arrays = flat.reshape((_NARRAYS[kind],) + tuple(dims))
    if ndim == 2:
        if dims[2] != 1 or dims[3] != 1:
            raise SnapshotError(f"{path}: not a 2D snapshot (sizes {dims})")
        arrays = arrays[..., 0, 0]
    if kind == SCALAR:
        return kind, arrays[0]
    if kind == GAUGE:
        return kind, arrays
    return kind, np.moveaxis(arrays, 0, -1)
