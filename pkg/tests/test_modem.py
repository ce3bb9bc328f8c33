import itertools

import numpy as np
import pytest

from rqssk.channel import ChannelMatrix, RngStream, complex_normal, generate_channel
from rqssk.errors import ConfigurationError, DimensionError, MappingError
from rqssk.modem import (
    TransmitSymbol,
    bits_per_symbol,
    demap_batch,
    demap_symbol,
    greedy_detect,
    greedy_detect_batch,
    map_bits,
    map_bits_batch,
    synthesize_rx,
)
from rqssk.optimizer import optimize


def test_map_example_distinct_antennas():
    assert map_bits([0, 0, 0, 1, 1, 1], 4) == TransmitSymbol(m=0, n=3, d_r=1, d_i=-1)


def test_map_example_same_antenna():
    assert map_bits([1, 0, 1, 1, 0, 1], 4) == TransmitSymbol(m=2, n=2, d_r=-1, d_i=-1)


@pytest.mark.parametrize("n_rx", [2, 4, 8])
def test_round_trip_every_symbol(n_rx):
    r = bits_per_symbol(n_rx)
    for bits in itertools.product((0, 1), repeat=r):
        sym = map_bits(bits, n_rx)
        assert demap_symbol(sym, n_rx) == list(bits)


def test_all_zero_symbol():
    assert demap_symbol(TransmitSymbol(0, 0, 1, 1), 4) == [0] * 6


def test_two_antennas_use_one_index_bit():
    assert bits_per_symbol(2) == 4
    assert map_bits([1, 1, 0, 0], 2) == TransmitSymbol(1, 0, -1, 1)


def test_no_polarity_variant():
    m, n, dr, di = map_bits_batch(np.array([[1, 0, 0, 1]]), 4, polarity=False)
    assert (m[0], n[0], dr[0], di[0]) == (2, 1, 1, 1)
    assert demap_batch(m, n, dr, di, 4, polarity=False).tolist() == [[1, 0, 0, 1]]


@pytest.mark.parametrize("bits", [[0, 1, 0], [0] * 7, [0, 1, 2, 0, 1, 0]])
def test_bad_bits_rejected(bits):
    with pytest.raises(MappingError):
        map_bits(bits, 4)


def test_bad_symbol_rejected():
    with pytest.raises(MappingError):
        demap_symbol(TransmitSymbol(4, 0), 4)
    with pytest.raises(MappingError):
        demap_symbol(TransmitSymbol(0, 0, 0, 1), 4)


def test_bad_antenna_count_rejected():
    with pytest.raises(ConfigurationError):
        map_bits([0, 0, 0, 0], 3)


def test_synthesize_scalar_example():
    y = synthesize_rx(np.array([[1 + 0j]]), np.array([1 + 0j]), es=4.0, n0=0.0)
    assert y.tolist() == [2 + 0j]


def test_synthesize_validation():
    with pytest.raises(DimensionError):
        synthesize_rx(np.ones((2, 3)), np.ones(4), 1.0, 0.0)
    with pytest.raises(ConfigurationError):
        synthesize_rx(np.ones((2, 3)), np.ones(3), 1.0, 1.0)  # noise needs an rng
    with pytest.raises(ConfigurationError):
        synthesize_rx(np.ones((2, 3)), np.ones(3), 0.0, 0.0)


def test_synthesize_matches_component_expansion():
    H = generate_channel(4, 32, RngStream(3))
    theta = np.exp(1j * RngStream(4).generator().uniform(0, 2 * np.pi, 32))
    y = synthesize_rx(H, theta, es=2.0, n0=0.0)
    hr, hi = H.entries.real, H.entries.imag
    tr, ti = theta.real, theta.imag
    # real part: sum(h^R t^R - h^I t^I); imaginary part: sum(h^R t^I + h^I t^R)
    np.testing.assert_allclose(y.real, np.sqrt(2) * (hr @ tr - hi @ ti), rtol=1e-12)
    np.testing.assert_allclose(y.imag, np.sqrt(2) * (hr @ ti + hi @ tr), rtol=1e-12)


def test_synthesize_noise_statistics():
    H = ChannelMatrix(np.zeros((4, 8), complex))
    y = synthesize_rx(H, np.ones(8), 1.0, 2.0, RngStream(5))
    assert y.shape == (4,)
    ys = synthesize_rx(np.zeros((50_000, 4, 8)), np.ones((50_000, 8)), 1.0, 2.0, RngStream(6))
    assert np.var(ys.real) == pytest.approx(1.0, rel=0.02)


@pytest.mark.parametrize("seed", range(8))
def test_noiseless_signs_follow_polarity(seed):
    gen = RngStream(seed).generator()
    H = complex_normal(gen, (4, 64))
    m, n = gen.integers(0, 4, 2)
    for d_r, d_i in itertools.product((1, -1), repeat=2):
        theta = optimize(H[m], H[n], d_r, d_i)
        y = synthesize_rx(H, theta, 1.0, 0.0)
        assert np.sign(y[m].real) == d_r and np.sign(y[n].imag) == d_i


def test_detect_examples():
    assert greedy_detect(np.array([3 + 1j, -1 + 2j])) == TransmitSymbol(0, 1, 1, 1)
    sym = greedy_detect(np.array([-5 + 0j, 2 + 0j]))
    assert (sym.m, sym.d_r, sym.n, sym.d_i) == (0, -1, 0, 1)


def test_detect_rejects_short_input():
    with pytest.raises(DimensionError):
        greedy_detect(np.array([1 + 1j]))


def test_detect_matches_exhaustive_scan():
    gen = RngStream(7).generator()
    Y = complex_normal(gen, (10_000, 8))
    m, n, dr, di = greedy_detect_batch(Y)
    for k in range(0, 10_000, 7):
        y = Y[k]
        best_m = max(range(8), key=lambda l: (y[l].real ** 2, -l))
        best_n = max(range(8), key=lambda l: (y[l].imag ** 2, -l))
        assert (m[k], n[k]) == (best_m, best_n)
        assert dr[k] == (1 if y[best_m].real >= 0 else -1)
        assert di[k] == (1 if y[best_n].imag >= 0 else -1)


def test_detector_is_a_pure_function_of_y():
    y = complex_normal(RngStream(1).generator(), (16,))
    copy = y.copy()
    assert greedy_detect(y) == greedy_detect(copy)
    np.testing.assert_array_equal(y, copy)


@pytest.mark.parametrize("n_rx", [2, 4])
def test_noiseless_detection_of_every_symbol(n_rx):
    r = bits_per_symbol(n_rx)
    gen = RngStream(n_rx).generator()
    trials = 200
    for bits in itertools.product((0, 1), repeat=r):
        sym = map_bits(bits, n_rx)
        H = complex_normal(gen, (trials, n_rx, 32))
        theta = optimize(H[:, sym.m], H[:, sym.n], sym.d_r, sym.d_i)
        y = synthesize_rx(H, theta, 1.0, 0.0)
        m, n, dr, di = greedy_detect_batch(y)
        ok = (m == sym.m) & (n == sym.n) & (dr == sym.d_r) & (di == sym.d_i)
        assert ok.mean() >= 0.99


def test_target_energy_grows_quadratically():
    energies = {}
    for n in (64, 256):
        gen = RngStream(n).generator()
        H = complex_normal(gen, (4000, 4, n))
        theta = optimize(H[:, 0], H[:, 1], mode="fixed_half")
        y = synthesize_rx(H, theta, 1.0, 0.0)
        energies[n] = (np.mean(y[:, 0].real ** 2), np.mean(y[:, 2].real ** 2))
    target_ratio = energies[256][0] / energies[64][0]
    other_ratio = energies[256][1] / energies[64][1]
    assert target_ratio == pytest.approx(16, rel=0.05)
    assert other_ratio == pytest.approx(4, rel=0.1)
    # the per-element moments of the target component
    assert energies[256][0] == pytest.approx(256 ** 2 * np.pi / 8 + 256 * (6 - np.pi) / 8, rel=0.02)
    assert energies[256][1] == pytest.approx(256 / 2, rel=0.05)
