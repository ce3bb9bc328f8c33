import math

import numpy as np
import pytest
from scipy import stats

from rqssk.analytic import abep_no_polarity, craig_avg_q, pep_polarity_given_correct
from rqssk.errors import ConfigurationError
from rqssk.montecarlo import (
    BerResult,
    Scheme,
    SimConfig,
    lambda_samples,
    polarity_statistics,
    run_ber,
    run_rqrm_benchmark,
    run_ssk_benchmark,
    simulate_block,
)


def _cfg(**kw):
    base = dict(scheme="rqssk", n_rx=4, n_ris=64, snr_grid_db=[-22.0], master_seed=1,
                min_bit_errors=100, max_symbols=200_000, block_size=1024)
    base.update(kw)
    return SimConfig(**base)


@pytest.mark.parametrize(
    "kw, param",
    [
        (dict(min_bit_errors=0), "min_bit_errors"),
        (dict(max_symbols=0), "max_symbols"),
        (dict(snr_grid_db=[]), "snr_grid_db"),
        (dict(n_rx=3), "n_rx"),
        (dict(scheme="rqrm_benchmark", n_ris=63), "n_ris"),
        (dict(block_size=0), "block_size"),
    ],
)
def test_config_validation(kw, param):
    with pytest.raises(ConfigurationError) as info:
        _cfg(**kw)
    assert info.value.param == param


def test_unknown_scheme_rejected():
    with pytest.raises(ValueError):
        _cfg(scheme="rism")


def test_rqrm_runner_rejects_odd_array():
    cfg = _cfg(scheme="rqssk", n_ris=63)
    with pytest.raises(ConfigurationError):
        run_rqrm_benchmark(cfg)


@pytest.mark.parametrize(
    "scheme, n_rx, bits", [("rqssk", 4, 6), ("rqssk_no_polarity", 4, 4), ("rqrm_benchmark", 8, 8), ("ssk_benchmark", 8, 3)]
)
def test_bits_per_symbol(scheme, n_rx, bits):
    assert _cfg(scheme=scheme, n_rx=n_rx).bits_per_symbol == bits


@pytest.mark.parametrize("scheme", list(Scheme))
def test_noiseless_runs_are_error_free(scheme):
    res = run_ber(_cfg(scheme=scheme, noiseless=True, max_symbols=1000, n_ris=64))[0]
    assert res.symbols == 1000 and res.bit_errors == 0 and res.ber == 0.0


def test_noiseless_rqrm_small_setup():
    res = run_ber(_cfg(scheme="rqrm_benchmark", n_rx=2, n_ris=32, noiseless=True, max_symbols=1000))[0]
    assert res.bit_errors == 0


def test_high_snr_no_polarity_ber_is_small():
    res = run_ber(_cfg(scheme="rqssk_no_polarity", snr_grid_db=[-18.0], min_bit_errors=50))[0]
    assert res.ber < 1e-3


def test_result_bookkeeping():
    res = run_ber(_cfg(snr_grid_db=[-24.0, -22.0]))
    assert [r.snr_db for r in res] == [-24.0, -22.0]
    for r in res:
        assert isinstance(r, BerResult)
        assert r.bits_simulated == 6 * r.symbols
        assert r.ber == r.bit_errors / r.bits_simulated and 0 <= r.ber <= 1
        ci = stats.binomtest(r.bit_errors, r.bits_simulated).proportion_ci(0.99)
        assert ci.low <= r.ber <= ci.high
        assert r.counters["real_bit_errors"] + r.counters["imag_bit_errors"] == r.bit_errors


def test_stopping_rule_is_block_granular():
    cfg = _cfg(snr_grid_db=[-24.0], min_bit_errors=300, block_size=256)
    r = run_ber(cfg)[0]
    assert r.bit_errors >= 300 and r.symbols % 256 == 0
    # dropping the last block would fall short of the target
    last = simulate_block(cfg, 0, r.symbols // 256 - 1, 256)
    assert r.bit_errors - last["bit_errors"] < 300


def test_symbol_cap():
    r = run_ber(_cfg(snr_grid_db=[-10.0], max_symbols=2500, block_size=1000))[0]
    assert r.symbols == 2500


def test_same_seed_same_results():
    cfg = _cfg(snr_grid_db=[-24.0, -22.0], block_size=512)
    assert [r.to_dict() for r in run_ber(cfg)] == [r.to_dict() for r in run_ber(cfg)]


def test_worker_count_does_not_change_results():
    cfg = _cfg(snr_grid_db=[-24.0, -22.0], block_size=256, min_bit_errors=150)
    one = [r.to_dict() for r in run_ber(cfg, workers=1)]
    three = [r.to_dict() for r in run_ber(cfg, workers=3)]
    assert one == three


def test_different_seeds_differ():
    a = run_ber(_cfg(master_seed=1))[0]
    b = run_ber(_cfg(master_seed=2))[0]
    assert a.to_dict() != b.to_dict()


def test_workers_validated():
    with pytest.raises(ConfigurationError):
        run_ber(_cfg(), workers=0)


def _two_sigma_ge(a, b):
    sigma = math.hypot(a.std_error, b.std_error)
    return a.ber >= b.ber - 2 * sigma


def test_fixed_half_no_better_than_exact():
    grid = [-24.0, -22.0, -20.0]
    common = dict(scheme="rqssk_no_polarity", snr_grid_db=grid, min_bit_errors=200)
    fixed = run_ber(_cfg(lambda_mode="fixed_half", **common))
    exact = run_ber(_cfg(lambda_mode="exact", **common))
    for f, e in zip(fixed, exact):
        assert _two_sigma_ge(f, e)


def test_ber_non_increasing_in_snr():
    res = run_ber(_cfg(snr_grid_db=[-26.0, -24.0, -22.0, -20.0], min_bit_errors=200))
    for lo, hi in zip(res, res[1:]):
        assert _two_sigma_ge(lo, hi)


def test_branches_are_symmetric():
    r = run_ber(_cfg(snr_grid_db=[-24.0], min_bit_errors=3000))[0]
    re, im = r.counters["real_bit_errors"], r.counters["imag_bit_errors"]
    half_bits = r.bits_simulated / 2
    p = (re + im) / r.bits_simulated
    sigma = math.sqrt(2 * p * (1 - p) / half_bits)
    assert abs(re - im) / half_bits < 3 * sigma


def test_union_bound_above_fixed_half_simulation():
    grid = [-26.0, -24.0, -22.0, -20.0, -18.0]
    res = run_ber(_cfg(scheme="rqssk_no_polarity", lambda_mode="fixed_half", snr_grid_db=grid, min_bit_errors=200))
    for r in res:
        bound = abep_no_polarity(4, 64, 1.0, 10 ** (-r.snr_db / 10))
        assert bound >= r.ber - 2 * r.std_error


def test_ssk_improves_with_array_size():
    bers = [run_ssk_benchmark(_cfg(n_ris=n, snr_grid_db=[-30.0], min_bit_errors=250))[0] for n in (64, 128, 256)]
    for a, b in zip(bers, bers[1:]):
        assert a.ber > b.ber - 2 * math.hypot(a.std_error, b.std_error)
    assert bers[0].ber > bers[2].ber


def test_rqssk_beats_rqrm():
    cfg = _cfg(n_ris=128, snr_grid_db=[-30.0, -28.0], min_bit_errors=200)
    for q, r in zip(run_ber(cfg), run_rqrm_benchmark(cfg)):
        assert q.ber <= r.ber


def test_unconditioned_polarity_flips_follow_gaussian_model():
    n, db = 128, -34.0
    n0 = 10 ** (-db / 10)
    cfg = _cfg(n_ris=n, snr_grid_db=[db], lambda_mode="fixed_half", min_bit_errors=10 ** 9, max_symbols=60_000,
               block_size=4096)
    stats_ = polarity_statistics(run_ber(cfg)[0])
    p, se, _ = stats_["target"]
    assert abs(p - pep_polarity_given_correct(4, n, 1.0, n0)) < 3 * se
    # a non-targeted antenna is the other branch's target for 1 in Nr cases
    expect = craig_avg_q(0, n / 4, 2 / n0) / 4 + 3 / 4 * craig_avg_q(0, n / 2, 2 / n0)
    p, se, _ = stats_["other"]
    assert abs(p - expect) < 3 * se


def test_polarity_statistics_without_polarity_bits():
    r = run_ber(_cfg(scheme="rqssk_no_polarity", max_symbols=1024))[0]
    assert math.isnan(polarity_statistics(r)["given_wrong"][0])


def test_lambda_samples():
    lam, code = lambda_samples(4, 64, 2500, master_seed=3, block_size=1000)
    again, _ = lambda_samples(4, 64, 2500, master_seed=3, block_size=1000)
    np.testing.assert_array_equal(lam, again)
    assert lam.shape == (2500,) and np.all((lam >= 0) & (lam <= 1))
    assert np.all(code == 0)
    assert abs(lam.mean() - 0.5) < 0.01
    same, _ = lambda_samples(2, 64, 500, master_seed=3, distinct=False)
    assert np.isclose(same, 0.5).sum() > 100  # m == n half of the time for two antennas
