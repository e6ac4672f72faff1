import numpy as np
import pytest

from imbq.grid import (
    BandWindow,
    EmptyWindowWarning,
    FrequencyGrid,
    SpectralField,
    lambda_symbol,
    make_grid,
    pointwise_power,
    pointwise_product,
    random_real_field,
    restricted_norm,
    sobolev_norm,
    sup_norm,
    to_frequency,
    to_position,
)


def direct_transform(grid, samples):
    # literal trapezoid sum, the oracle for the FFT-based path
    xi = grid.xi[:, None]
    x = grid.x[None, :]
    return grid.dx * np.sum(samples[None, :] * np.exp(-1j * xi * x), axis=1)


def test_make_grid_spacing_and_zero_node():
    g = make_grid(32.0, 4096)
    assert g.dxi == pytest.approx(1.0 / 64.0, abs=0)
    assert 0.0 in g.xi
    assert g.xi[g.node_count // 2] == 0.0


def test_make_grid_small_example_nodes():
    g = make_grid(1.0, 8)
    assert np.allclose(g.xi, [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75])


@pytest.mark.parametrize("extent,m", [(32.0, 4095), (32.0, 4), (0.0, 8), (-1.0, 64)])
def test_make_grid_rejects_bad_arguments(extent, m):
    with pytest.raises(ValueError):
        make_grid(extent, m)


def test_grid_dual_period_and_spacing():
    g = make_grid(4.0, 64)
    assert g.period == pytest.approx(2 * np.pi / g.dxi)
    assert g.dx == pytest.approx(2 * np.pi / (g.node_count * g.dxi))
    assert np.allclose(np.diff(g.x), g.dx)


def test_lambda_symbol_values():
    assert lambda_symbol(0.0) == 0.0
    assert lambda_symbol(1.0) == pytest.approx(0.7071067811865475, rel=1e-15)
    xi = np.linspace(-100, 100, 2001)
    vals = lambda_symbol(xi)
    assert np.all(vals >= 0.0)
    assert np.all(vals < 1.0)
    # strictly increasing in |xi|
    pos = lambda_symbol(np.linspace(0.001, 1e4, 5000))
    assert np.all(np.diff(pos) > 0)


def test_transform_round_trip_and_against_direct_sum():
    rng = np.random.default_rng(7)
    g = make_grid(8.0, 64)
    f = random_real_field(g, rng)
    pos = to_position(f)
    back = to_frequency(pos)
    scale = np.max(np.abs(f.amplitudes))
    assert np.max(np.abs(back.amplitudes - f.amplitudes)) < 1e-12 * scale
    direct = direct_transform(g, pos.samples)
    assert np.max(np.abs(direct - f.amplitudes)) < 1e-10 * scale


def test_point_mass_inverts_to_plane_wave():
    g = make_grid(4.0, 32)
    k = 1.0
    amp = np.zeros(g.node_count, dtype=complex)
    amp[g.index_of(k)] = 1.0
    pos = to_position(SpectralField(g, amp))
    expected = (g.dxi / (2 * np.pi)) * np.exp(1j * k * g.x)
    assert np.max(np.abs(pos.samples - expected)) < 1e-14


def test_parseval_identity_on_random_corpus():
    rng = np.random.default_rng(11)
    g = make_grid(16.0, 256)
    for _ in range(100):
        f = random_real_field(g, rng, decay=rng.uniform(0.5, 2.0))
        pos = to_position(f)
        lhs = np.sum(np.abs(pos.samples) ** 2) * g.dx
        rhs = np.sum(np.abs(f.amplitudes) ** 2) * g.dxi / (2 * np.pi)
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_transform_grid_mismatch_rejected():
    g1 = make_grid(4.0, 32)
    g2 = make_grid(4.0, 64)
    f = SpectralField.zero(g1)
    with pytest.raises(ValueError):
        SpectralField(g2, f.amplitudes)


def test_hermitian_validation():
    g = make_grid(4.0, 32)
    amp = np.zeros(g.node_count, dtype=complex)
    amp[g.index_of(1.0)] = 1.0 + 1j  # no mirror partner
    with pytest.raises(ValueError):
        SpectralField(g, amp, real_valued=True)
    amp[g.index_of(-1.0)] = np.conj(amp[g.index_of(1.0)])
    SpectralField(g, amp, real_valued=True)  # now fine


def test_sobolev_norm_zero_field():
    g = make_grid(4.0, 32)
    assert sobolev_norm(SpectralField.zero(g), 0.0) == 0.0


def test_sobolev_norm_two_unit_boxes():
    # |u_hat| = indicator of [N, N+1) and its mirror, dxi = 1/64
    g = FrequencyGrid(1.0 / 64.0, 4096)
    xi = g.xi
    amp = (((xi >= 16) & (xi < 17)) | ((xi > -17) & (xi <= -16))).astype(complex)
    f = SpectralField(g, amp, real_valued=True)
    assert sobolev_norm(f, 0.0) == pytest.approx(np.sqrt(2 / (2 * np.pi)), rel=1e-12)
    assert sobolev_norm(f, 0.0) == pytest.approx(0.5641895835477563, rel=1e-12)


def test_sup_norm_zero_and_cosine():
    g = make_grid(4.0, 64)
    assert sup_norm(SpectralField.zero(g)) == 0.0
    amp = np.zeros(g.node_count, dtype=complex)
    scale = np.pi / g.dxi
    amp[g.index_of(1.0)] = scale
    amp[g.index_of(-1.0)] = scale
    f = SpectralField(g, amp, real_valued=True)  # cos(x) with amplitude 1
    assert sup_norm(f) == pytest.approx(1.0, rel=1e-9)


def test_sup_norm_matches_dense_resampling():
    rng = np.random.default_rng(3)
    g = make_grid(16.0, 128)
    for _ in range(10):
        f = random_real_field(g, rng, decay=1.5, band_fraction=0.5)
        dense = np.max(np.abs(to_position(SpectralField(
            FrequencyGrid(g.dxi, 128 * 64),
            _embed(f.amplitudes, 128 * 64),
        )).samples))
        assert sup_norm(f) == pytest.approx(dense, rel=1e-3)


def _embed(amp, padded):
    out = np.zeros(padded, dtype=complex)
    lo = padded // 2 - amp.shape[0] // 2
    out[lo : lo + amp.shape[0]] = amp
    return out


def test_restricted_norm_full_window_equals_sobolev():
    rng = np.random.default_rng(5)
    g = make_grid(8.0, 128)
    f = random_real_field(g, rng)
    w = BandWindow(-g.extent, g.extent)
    for s in (-0.5, 0.0, 1.0):
        assert restricted_norm(f, w, s) == sobolev_norm(f, s)


def test_restricted_norm_outside_support_and_empty():
    g = FrequencyGrid(1.0 / 64.0, 4096)
    xi = g.xi
    amp = ((xi >= 16) & (xi < 17)).astype(complex)
    f = SpectralField(g, amp)
    assert restricted_norm(f, BandWindow(0.25, 0.5), 0.0) == 0.0
    with pytest.warns(EmptyWindowWarning):
        v = restricted_norm(f, BandWindow(100.0, 101.0), 0.0)
    assert v == 0.0


def test_restricted_norm_indicator_quarter_half():
    g = FrequencyGrid(1.0 / 64.0, 4096)
    xi = g.xi
    amp = ((xi >= 0.25) & (xi < 0.5)).astype(complex)
    f = SpectralField(g, amp)
    # sum over [1/4, 1/2) of dxi/2pi -> (1/4)/(2pi); the closed window picks
    # up the right endpoint node, one extra dxi
    expected = np.sqrt((0.25 + g.dxi * 0) / (2 * np.pi))
    got = restricted_norm(f, BandWindow(0.25, 0.5), 0.0)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.19947114020071635, rel=1e-12)


def test_pointwise_power_zero_and_cos_squared():
    g = make_grid(4.0, 64)
    z = pointwise_power(SpectralField.zero(g), 3, 1)
    assert np.all(z.amplitudes == 0)
    amp = np.zeros(g.node_count, dtype=complex)
    scale = np.pi / g.dxi
    k = 1.0
    amp[g.index_of(k)] = scale
    amp[g.index_of(-k)] = scale
    f = SpectralField(g, amp, real_valued=True)
    sq = pointwise_power(f, 2, 1)
    # cos^2(kx) = 1/2 + cos(2kx)/2
    expected = np.zeros(g.node_count, dtype=complex)
    expected[g.index_of(0.0)] = 2 * np.pi / g.dxi / 2
    expected[g.index_of(2 * k)] = scale / 2
    expected[g.index_of(-2 * k)] = scale / 2
    assert np.max(np.abs(sq.amplitudes - expected)) < 1e-10 * scale


def test_pointwise_power_matches_direct_convolution():
    # (u^3)^hat = (1/2pi)^2 * threefold discrete line convolution
    rng = np.random.default_rng(13)
    g = make_grid(8.0, 64)
    f = random_real_field(g, rng, band_fraction=0.3)
    got = pointwise_power(f, 3, 1).amplitudes
    a = f.amplitudes
    m = g.node_count
    conv2 = np.zeros(m, dtype=complex)
    for i in range(m):
        for j in range(m):
            k = i + j - m // 2
            if 0 <= k < m:
                conv2[k] += a[i] * a[j] * g.dxi
    conv3 = np.zeros(m, dtype=complex)
    for i in range(m):
        for j in range(m):
            k = i + j - m // 2
            if 0 <= k < m:
                conv3[k] += conv2[i] * a[j] * g.dxi
    expected = conv3 / (2 * np.pi) ** 2
    assert np.max(np.abs(got - expected)) < 1e-10 * np.max(np.abs(expected))


def test_pointwise_power_rejects_small_dealias_factor():
    g = make_grid(4.0, 32)
    f = SpectralField.zero(g)
    with pytest.raises(ValueError):
        pointwise_power(f, 3, 1, dealias_factor=1.5)


def test_pointwise_power_overflow_detected():
    g = make_grid(4.0, 32)
    amp = np.zeros(g.node_count, dtype=complex)
    amp[g.index_of(0.0)] = 1e300
    f = SpectralField(g, amp, real_valued=True)
    with pytest.raises(OverflowError):
        pointwise_power(f, 3, 1)


def test_hermitian_symmetry_preserved_by_operations():
    rng = np.random.default_rng(17)
    g = make_grid(8.0, 128)
    for _ in range(20):
        f = random_real_field(g, rng, band_fraction=0.4)
        assert pointwise_power(f, 2, -1).hermitian_defect() < 1e-12
        assert pointwise_power(f, 3, 1).hermitian_defect() < 1e-12
        w = random_real_field(g, rng, band_fraction=0.4)
        assert pointwise_product(f, w).hermitian_defect() < 1e-12


def test_moser_product_bound_s0():
    # provable case: |vw|_{L^2} <= |v|_{L^2} * sup|w|
    rng = np.random.default_rng(23)
    g = make_grid(8.0, 128)
    for _ in range(50):
        v = random_real_field(g, rng, decay=rng.uniform(0.5, 2.0))
        w = random_real_field(g, rng, decay=rng.uniform(0.5, 2.0))
        vw = pointwise_product(v, w, dealias_factor=2.0)
        assert sobolev_norm(vw, 0.0) <= sobolev_norm(v, 0.0) * sup_norm(w) + 1e-9


def test_position_field_real_samples_residue():
    rng = np.random.default_rng(29)
    g = make_grid(8.0, 64)
    f = random_real_field(g, rng)
    pos = to_position(f)
    r = pos.real_samples()
    assert r.dtype == np.float64
