import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swtorus import lattice as L
from swtorus.lattice import Grid2, Grid4, KahlerData

seeds = st.integers(0, 2 ** 63 - 1)


def test_grid_geometry():
    g = Grid4((4, 5, 6, 8), (1.0, 2.0, 3.0, 4.0))
    assert g.spacing == pytest.approx((0.25, 0.4, 0.5, 0.5))
    assert g.cell == pytest.approx(0.25 * 0.4 * 0.5 * 0.5)
    assert g.volume == pytest.approx(24.0)
    assert g.nsites == 4 * 5 * 6 * 8
    assert g.factor1() == Grid2((4, 5), (1.0, 2.0))
    assert g.factor2() == Grid2((6, 8), (3.0, 4.0))


@pytest.mark.parametrize("sizes", [(3, 4, 4, 4), (4, 4, 4), (4, 4, 4, 4, 4)])
def test_grid4_rejects_bad_sizes(sizes):
    with pytest.raises(ValueError):
        Grid4(sizes)


def test_grid_rejects_bad_lengths():
    with pytest.raises(ValueError):
        Grid4((4, 4, 4, 4), (1.0, 0.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        Grid2((4, 4), (1.0,))


def test_linear_index_is_c_order_and_periodic():
    g = Grid4((4, 5, 6, 7))
    flat = np.arange(g.nsites).reshape(g.shape)
    for site in [(0, 0, 0, 1), (1, 2, 3, 4), (3, 4, 5, 6)]:
        x0, x1, x2, x3 = site
        assert g.linear_index(site) == ((x0 * 5 + x1) * 6 + x2) * 7 + x3
        assert g.linear_index(site) == flat[site]
        shifted = (x0 + 4, x1 - 5, x2 + 12, x3 + 7)
        assert g.linear_index(shifted) == g.linear_index(site)


def test_kahler_data_positive():
    g = Grid4((4, 4, 4, 4))
    k = KahlerData.flat(g)
    k.check(g)
    with pytest.raises(ValueError):
        KahlerData(np.zeros((4, 4)), np.ones((4, 4)))
    with pytest.raises(ValueError):
        KahlerData(np.ones((5, 4)), np.ones((4, 4))).check(g)


def test_fwd_diff_constant_is_zero(grid4):
    f = np.full(grid4.shape, 3.7)
    for mu in range(4):
        np.testing.assert_array_equal(L.fwd_diff(f, mu, grid4.spacing[mu]), 0.0)


def _sine_error(n):
    g = Grid4((n, 4, 4, 4))
    x0 = g.coords()[0]
    f = np.sin(2 * np.pi * x0)
    return np.max(np.abs(L.fwd_diff(f, 0, g.spacing[0]) - 2 * np.pi * np.cos(2 * np.pi * x0)))


def test_fwd_diff_first_order():
    # Taylor remainder: error <= (h/2) max|f''| = (h/2)(2 pi)^2, halving with h
    errs = [_sine_error(n) for n in (16, 32, 64)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 1.0) < 0.1)
    assert errs[-1] <= 0.5 * (1 / 64) * (2 * np.pi) ** 2 * 1.01


def test_fwd_diff_axis_relabeling():
    g = Grid4((6, 6, 6, 6))
    f = L.random_smooth_field(g, 3, modes=4)
    ft = np.transpose(f, (1, 0, 2, 3))
    np.testing.assert_array_equal(np.transpose(L.fwd_diff(f, 0, g.spacing[0]), (1, 0, 2, 3)),
                                  L.fwd_diff(ft, 1, g.spacing[1]))


def test_diff_kinds(grid4):
    f = L.random_smooth_field(grid4, 1)
    np.testing.assert_array_equal(L.diff(f, 2, grid4, "forward"), L.fwd_diff(f, 2, grid4.spacing[2]))
    np.testing.assert_array_equal(L.diff(f, 2, grid4, "central"),
                                  L.central_diff(f, 2, grid4.spacing[2]))
    with pytest.raises(ValueError):
        L.diff(f, 2, grid4, "spectral")


@given(seeds)
def test_fwd_diff_telescopes(seed):
    g = Grid4((4, 5, 4, 6), (1.0, 1.3, 0.9, 1.1))
    rng = np.random.default_rng(seed)
    f = rng.normal(size=g.shape) * 5
    for mu in range(4):
        d = L.fwd_diff(f, mu, g.spacing[mu])
        scale = g.nsites * np.max(np.abs(f)) / g.spacing[mu]
        assert abs(np.sum(d)) <= 1e-12 * scale


@given(seeds)
def test_summation_by_parts(seed):
    g = Grid4((4, 5, 4, 6), (1.0, 1.3, 0.9, 1.1))
    rng = np.random.default_rng(seed)
    f, h = rng.normal(size=(2,) + g.shape)
    for mu in range(4):
        lhs = L.integrate4(L.fwd_diff(f, mu, g.spacing[mu]) * h, None, g, weight="plain")
        rhs = -L.integrate4(f * L.bwd_diff(h, mu, g.spacing[mu]), None, g, weight="plain")
        scale = np.sum(np.abs(L.fwd_diff(f, mu, g.spacing[mu]) * h)) * g.cell
        assert abs(lhs - rhs) <= 1e-12 * scale


def test_integrate4_examples(grid4, harmonic_kahler):
    flat = KahlerData.flat(grid4)
    assert L.integrate4(np.ones(grid4.shape), flat, grid4) == pytest.approx(2 * grid4.volume)
    assert L.integrate4(np.zeros(grid4.shape), harmonic_kahler(grid4), grid4) == 0.0
    assert L.integrate4(np.zeros(grid4.shape), flat, grid4, weight="plain") == 0.0
    x = grid4.coords()
    harmonic = np.cos(2 * np.pi * x[1] / grid4.lengths[1]) * np.sin(2 * np.pi * x[3] / grid4.lengths[3])
    assert abs(L.integrate4(harmonic, flat, grid4)) < 1e-15
    with pytest.raises(ValueError):
        L.integrate4(harmonic, flat, grid4, weight="volume")


def test_integrate4_weight_is_two_f1_f2(grid4, harmonic_kahler):
    k = harmonic_kahler(grid4)
    s = L.random_smooth_field(grid4, 5)
    f1, f2 = k.on_grid()
    expect = float(np.sum(s * 2 * f1 * f2)) * grid4.cell
    assert L.integrate4(s, k, grid4) == pytest.approx(expect, rel=1e-14)


def test_restrict_lift_examples(grid4, grid2):
    rng = np.random.default_rng(0)
    g = Grid4((6, 5, 4, 6), (1.0, 1.2, 0.9, 1.1))
    f2 = rng.normal(size=(6, 5))
    lifted = L.lift1(f2, g)
    np.testing.assert_array_equal(L.lift1(np.zeros((6, 5)), g), 0.0)
    np.testing.assert_array_equal(L.fwd_diff(lifted, 2, g.spacing[2]), 0.0)
    for p in [(0, 0), (3, 5), (2, 1)]:
        np.testing.assert_array_equal(L.restrict1(lifted, p), f2)
    f34 = rng.normal(size=(4, 6))
    np.testing.assert_array_equal(L.restrict2(L.lift2(f34, g), (5, 4)), f34)
    # a field of (x2, x3) only restricts to a constant on Sigma x {p}
    const = L.restrict1(L.lift2(f34, g), (1, 2))
    np.testing.assert_array_equal(const, f34[1, 2])


def test_restrict_matches_slice_sum_oracle():
    g = Grid4((4, 5, 4, 6))
    f = L.random_smooth_field(g, 9, modes=5)
    p = (2, 3)
    direct = sum(f[a, b, 2, 3] for a in range(4) for b in range(5)) * g.spacing[0] * g.spacing[1]
    assert L.integrate2(L.restrict1(f, p), g.factor1()) == pytest.approx(direct, rel=1e-14)


def test_restrict_and_lift_errors():
    g = Grid4((4, 5, 4, 6))
    f = np.zeros(g.shape)
    with pytest.raises(IndexError):
        L.restrict1(f, (4, 0))
    with pytest.raises(IndexError):
        L.restrict2(f, (0, -1))
    with pytest.raises(ValueError):
        L.lift1(np.zeros((5, 5)), g)
    with pytest.raises(ValueError):
        L.lift2(np.zeros((4, 5)), g)


def test_restrict_lift_with_component_axes():
    g = Grid4((4, 5, 4, 6))
    rng = np.random.default_rng(2)
    gauge2 = rng.normal(size=(4, 4, 5))
    spin2 = rng.normal(size=(4, 5, 4))
    np.testing.assert_array_equal(L.restrict1(L.lift1(gauge2, g, lead=1), (1, 1), lead=1), gauge2)
    np.testing.assert_array_equal(L.restrict1(L.lift1(spin2, g), (3, 5)), spin2)
    assert L.lift1(spin2, g).shape == (4, 5, 4, 6, 4)


def test_random_smooth_field_contract():
    g = Grid4((6, 5, 4, 8))
    a = L.random_smooth_field(g, 11, modes=4)
    b = L.random_smooth_field(g, 11, modes=4)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, L.random_smooth_field(g, 12, modes=4))
    np.testing.assert_array_equal(L.random_smooth_field(g, 11, modes=0), 0.0)
    assert abs(np.mean(a)) < 1e-13
    g2 = Grid2((16, 16))
    assert abs(np.mean(L.random_smooth_field(g2, 3, modes=1))) < 1e-13


def test_random_positive_field():
    g = Grid2((8, 8))
    f = L.random_positive_field(g, 4)
    assert np.all(f > 0.6)


# -- SWF1 ------------------------------------------------------------------------

def test_swf_header_and_layout(tmp_path):
    g = Grid4((4, 5, 4, 6))
    f = np.arange(g.nsites, dtype=float).reshape(g.shape)
    path = tmp_path / "s.swf"
    L.write_swf(path, L.SCALAR, f)
    raw = path.read_bytes()
    assert raw[:4] == b"SWF1"
    assert raw[4:24] == struct.pack("<5I", 1, 4, 5, 4, 6)
    # payload in linear site order, x3 fastest
    payload = np.frombuffer(raw[24:], dtype="<f8")
    site = (1, 2, 3, 4)
    assert payload[g.linear_index(site)] == f[site]
    assert len(raw) == 24 + 8 * g.nsites


def test_swf_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    shape = (4, 5, 4, 6)
    cases = [(L.SCALAR, rng.normal(size=shape)), (L.GAUGE, rng.normal(size=(4,) + shape)),
             (L.SPINOR, rng.normal(size=shape + (4,)))]
    for kind, data in cases:
        path = tmp_path / f"k{kind}.swf"
        L.write_swf(path, kind, data)
        got_kind, got = L.read_swf(path)
        assert got_kind == kind
        assert got.shape == data.shape
        assert got.tobytes() == data.tobytes()


def test_swf_2d_padding(tmp_path):
    rng = np.random.default_rng(6)
    spin = rng.normal(size=(6, 5, 4))
    path = tmp_path / "s2.swf"
    L.write_swf(path, L.SPINOR, spin)
    assert path.read_bytes()[4:24] == struct.pack("<5I", 3, 6, 5, 1, 1)
    kind, got = L.read_swf(path, ndim=2)
    np.testing.assert_array_equal(got, spin)
    kind, got4 = L.read_swf(path)
    assert got4.shape == (6, 5, 1, 1, 4)


def test_swf_errors(tmp_path):
    bad = tmp_path / "bad.swf"
    bad.write_bytes(b"SWF2" + struct.pack("<5I", 1, 4, 4, 4, 4))
    with pytest.raises(L.SnapshotError, match="magic"):
        L.read_swf(bad)
    bad.write_bytes(b"SWF1" + struct.pack("<3I", 1, 4, 4))
    with pytest.raises(L.SnapshotError):
        L.read_swf(bad)
    bad.write_bytes(b"SWF1" + struct.pack("<5I", 1, 4, 4, 4, 4) + b"\0" * 8)
    with pytest.raises(L.SnapshotError, match="size"):
        L.read_swf(bad)
    bad.write_bytes(b"SWF1" + struct.pack("<5I", 7, 1, 1, 1, 1) + b"\0" * 8)
    with pytest.raises(L.SnapshotError, match="kind"):
        L.read_swf(bad)
    g = tmp_path / "g.swf"
    L.write_swf(g, L.SCALAR, np.zeros((4, 4, 4, 4)))
    with pytest.raises(L.SnapshotError):
        L.read_swf(g, ndim=2)
    with pytest.raises(L.SnapshotError):
        L.write_swf(g, 9, np.zeros((4, 4)))
