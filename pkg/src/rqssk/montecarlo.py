"""Monte Carlo bit error rate of RQSSK and two reconstructed benchmarks.

Each symbol sees a fresh channel. Symbols are simulated in fixed-size
blocks; block ``b`` of SNR point ``k`` draws from its own ``RngStream``
keyed by ``(seed, k, b)`` and blocks are merged in index order, so the stopping point
and every counter are the same whatever the number of workers.

Benchmarks (reconstructed from their one-line descriptions):

* ``rqrm_benchmark``: the first N/2 elements co-phase antenna m onto the
  real axis (times d_r), the rest co-phase antenna n onto the imaginary
  axis (times d_i); greedy per-dimension detection.
* ``ssk_benchmark``: all elements co-phase antenna m; the detector picks
  ``argmax |y_l|^2``; log2(Nr) bits per symbol.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import RngStream, check_dimensions, complex_normal
from .errors import ConfigurationError
from .modem import (
    _bits_to_int,
    _int_to_bits,
    antenna_bits,
    bits_per_symbol,
    demap_batch,
    greedy_detect_batch,
    map_bits_batch,
)
from .optimizer import LambdaMode, case_coefficients, compute_phases, solve_lambda_batch

DEFAULT_BLOCK = 2048

# first spawn-key component, so different experiment kinds never share streams
DOMAIN_BER, DOMAIN_LAMBDA, DOMAIN_MOMENTS = 0, 1, 2


class Scheme(str, enum.Enum):
    RQSSK = "rqssk"
    RQSSK_NO_POLARITY = "rqssk_no_polarity"
    RQRM = "rqrm_benchmark"
    SSK = "ssk_benchmark"


@dataclass(frozen=True)
class SimConfig:
    scheme: Scheme
    n_rx: int
    n_ris: int
    snr_grid_db: tuple
    lambda_mode: LambdaMode = LambdaMode.EXACT
    min_bit_errors: int = 200
    max_symbols: int = 10_000_000
    master_seed: int = 0
    block_size: int = DEFAULT_BLOCK
    noiseless: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "lambda_mode", LambdaMode(self.lambda_mode))
        object.__setattr__(self, "snr_grid_db", tuple(float(x) for x in self.snr_grid_db))
        check_dimensions(self.n_rx, self.n_ris)
        if not self.snr_grid_db:
            raise ConfigurationError("snr_grid_db", "must not be empty")
        if self.min_bit_errors < 1:
            raise ConfigurationError("min_bit_errors", "must be >= 1")
        if self.max_symbols < 1:
            raise ConfigurationError("max_symbols", "must be >= 1")
        if self.block_size < 1:
            raise ConfigurationError("block_size", "must be >= 1")
        if self.scheme is Scheme.RQRM and self.n_ris % 2:
            raise ConfigurationError("n_ris", "the RQRM benchmark needs an even number of elements")

    @property
    def bits_per_symbol(self):
        if self.scheme is Scheme.SSK:
            return antenna_bits(self.n_rx)
        return bits_per_symbol(self.n_rx, polarity=self.scheme is not Scheme.RQSSK_NO_POLARITY)


# integer counters produced by one block; merging is element-wise addition
COUNTERS = (
    "symbols",
    "bit_errors",
    "real_bit_errors",
    "imag_bit_errors",
    "pol_correct_events",
    "pol_correct_flips",
    "pol_wrong_events",
    "pol_wrong_flips",
    "target_events",
    "target_flips",
    "other_events",
    "other_flips",
)


@dataclass
class BerResult:
    snr_db: float
    bit_errors: int
    bits_simulated: int
    ber: float
    symbols: int
    counters: dict = field(default_factory=dict, repr=False)

    @property
    def std_error(self):
        p = self.ber
        return math.sqrt(max(p * (1 - p), 0.0) / self.bits_simulated) if self.bits_simulated else math.nan

    def to_dict(self):
        return asdict(self)


def snr_from_db(snr_db):
    return 10.0 ** (snr_db / 10.0)


def _rqrm_phases(h_m, h_n, d_r, d_i):
    n = h_m.shape[-1]
    half = n // 2
    theta = np.empty(h_m.shape, dtype=complex)
    g1 = np.conj(h_m[..., :half])
    g2 = 1j * np.conj(h_n[..., half:])
    theta[..., :half] = d_r[..., None] * g1 / np.abs(g1)
    theta[..., half:] = d_i[..., None] * g2 / np.abs(g2)
    return theta


def _sign(x):
    return np.where(x < 0, -1, 1)


def simulate_block(config, snr_index, block_index, n_symbols):
    """Simulate ``n_symbols`` symbols of one block; returns a counter dict."""
    stream = RngStream(config.master_seed, block_index, path=(DOMAIN_BER, snr_index))
    gen = stream.generator()
    nr, n = config.n_rx, config.n_ris
    r = config.bits_per_symbol
    es = 1.0
    n0 = 0.0 if config.noiseless else 1.0 / snr_from_db(config.snr_grid_db[snr_index])

    bits = gen.integers(0, 2, size=(n_symbols, r), dtype=np.int8)
    H = complex_normal(gen, (n_symbols, nr, n))
    noise = complex_normal(gen, (n_symbols, nr), n0) if n0 > 0 else 0.0
    rows = np.arange(n_symbols)
    c = dict.fromkeys(COUNTERS, 0)
    c["symbols"] = n_symbols

    if config.scheme is Scheme.SSK:
        m = _bits_to_int(bits.astype(np.int64))
        h_m = H[rows, m]
        theta = np.conj(h_m) / np.abs(h_m)
        y = np.sqrt(es) * np.einsum("bln,bn->bl", H, theta) + noise
        m_hat = np.argmax(np.abs(y) ** 2, axis=-1)
        errs = np.count_nonzero(_int_to_bits(m_hat, r) != bits)
        c["bit_errors"] = c["real_bit_errors"] = int(errs)
        return c

    polarity = config.scheme is not Scheme.RQSSK_NO_POLARITY
    m, nn, d_r, d_i = map_bits_batch(bits, nr, polarity=polarity)
    h_m, h_n = H[rows, m], H[rows, nn]
    if config.scheme is Scheme.RQRM:
        theta = _rqrm_phases(h_m, h_n, d_r, d_i)
    else:
        coeffs = case_coefficients(h_m, h_n, d_r, d_i)
        if config.lambda_mode is LambdaMode.FIXED_HALF:
            lam = np.full(n_symbols, 0.5)
        else:
            lam, _ = solve_lambda_batch(coeffs)
        theta = compute_phases(lam, coeffs).complex

    clean = np.sqrt(es) * np.einsum("bln,bn->bl", H, theta)
    y = clean + noise
    m_hat, n_hat, dr_hat, di_hat = greedy_detect_batch(y)
    detected = demap_batch(m_hat, n_hat, dr_hat, di_hat, nr, polarity=polarity)
    wrong = detected != bits
    half = r // 2
    c["real_bit_errors"] = int(np.count_nonzero(wrong[:, :half]))
    c["imag_bit_errors"] = int(np.count_nonzero(wrong[:, half:]))
    c["bit_errors"] = c["real_bit_errors"] + c["imag_bit_errors"]

    if polarity:
        ok_r, ok_i = m_hat == m, n_hat == nn
        flip_r, flip_i = dr_hat != d_r, di_hat != d_i
        c["pol_correct_events"] = int(ok_r.sum() + ok_i.sum())
        c["pol_correct_flips"] = int(np.count_nonzero(ok_r & flip_r) + np.count_nonzero(ok_i & flip_i))
        c["pol_wrong_events"] = int((~ok_r).sum() + (~ok_i).sum())
        c["pol_wrong_flips"] = int(np.count_nonzero(~ok_r & flip_r) + np.count_nonzero(~ok_i & flip_i))
        # the same events without conditioning on the antenna decision:
        # sign of the targeted component, and noise-induced sign flips of
        # every non-targeted component
        c["target_events"] = 2 * n_symbols
        c["target_flips"] = int(
            np.count_nonzero(_sign(y.real[rows, m]) != d_r) + np.count_nonzero(_sign(y.imag[rows, nn]) != d_i)
        )
        others_r = np.arange(nr) != m[:, None]
        others_i = np.arange(nr) != nn[:, None]
        c["other_events"] = int(others_r.sum() + others_i.sum())
        c["other_flips"] = int(
            np.count_nonzero(others_r & (_sign(y.real) != _sign(clean.real)))
            + np.count_nonzero(others_i & (_sign(y.imag) != _sign(clean.imag)))
        )
    return c


def _run_block(args):
    return simulate_block(*args)


def _merge(total, part):
    for k, v in part.items():
        total[k] = total.get(k, 0) + v
    return total


def _point(config, snr_index, pool, workers):
    total = dict.fromkeys(COUNTERS, 0)
    block = 0
    done = False
    while not done:
        wave = []
        for b in range(block, block + workers):
            start = b * config.block_size
            if start >= config.max_symbols:
                break
            wave.append((config, snr_index, b, min(config.block_size, config.max_symbols - start)))
        if not wave:
            break
        parts = pool.map(_run_block, wave) if pool is not None else map(_run_block, wave)
        for part in parts:
            _merge(total, part)
            block += 1
            if total["bit_errors"] >= config.min_bit_errors or total["symbols"] >= config.max_symbols:
                done = True
                break
    bits = total["symbols"] * config.bits_per_symbol
    return BerResult(
        snr_db=config.snr_grid_db[snr_index],
        bit_errors=total["bit_errors"],
        bits_simulated=bits,
        ber=total["bit_errors"] / bits,
        symbols=total["symbols"],
        counters=total,
    )


def run_ber(config, workers=1):
    """BER at every grid point of ``config``.

    Results are identical for any ``workers``; blocks beyond the stopping
    point that a wave happened to compute are discarded.
    """
    if workers < 1:
        raise ConfigurationError("workers", "must be >= 1")
    if workers == 1:
        return [_point(config, k, None, 1) for k in range(len(config.snr_grid_db))]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [_point(config, k, pool, workers) for k in range(len(config.snr_grid_db))]


def run_rqrm_benchmark(config, workers=1):
    if config.n_ris % 2:
        raise ConfigurationError("n_ris", "the RQRM benchmark needs an even number of elements")
    return run_ber(_replace_scheme(config, Scheme.RQRM), workers)


def run_ssk_benchmark(config, workers=1):
    return run_ber(_replace_scheme(config, Scheme.SSK), workers)


def _replace_scheme(config, scheme):
    return replace(config, scheme=scheme)


def polarity_statistics(result):
    """Frequencies ``(p, std_error, events)`` of the instrumented polarity counters.

    ``given_correct`` / ``given_wrong`` condition on the antenna decision of
    the same branch; ``target`` and ``other`` are the unconditioned sign
    flips of the targeted and of the non-targeted components.
    """
    c = result.counters
    out = {}
    for name, flips, events in (
        ("given_correct", "pol_correct_flips", "pol_correct_events"),
        ("given_wrong", "pol_wrong_flips", "pol_wrong_events"),
        ("target", "target_flips", "target_events"),
        ("other", "other_flips", "other_events"),
    ):
        n = c.get(events, 0)
        p = c.get(flips, 0) / n if n else math.nan
        se = math.sqrt(p * (1 - p) / n) if n else math.nan
        out[name] = (p, se, n)
    return out


def lambda_samples(n_rx, n_ris, realizations, master_seed, distinct=True, block_size=1000):
    """Optimal ``lambda1`` for independent channels and random targets (m, n).

    With ``distinct`` (default) the two targets are drawn as an ordered
    pair of different antennas; ``m == n`` always gives exactly 1/2 and
    would only add a point mass at the centre.

    Returns ``(lambda1, code)`` with the boundary codes of
    :func:`solve_lambda_batch`. Block ``b`` draws from
    its own stream keyed by ``(master_seed, b)``.
    """
    check_dimensions(n_rx, n_ris)
    if realizations < 1:
        raise ConfigurationError("realizations", "must be >= 1")
    lams, codes = [], []
    for b, start in enumerate(range(0, realizations, block_size)):
        size = min(block_size, realizations - start)
        gen = RngStream(master_seed, b, path=(DOMAIN_LAMBDA,)).generator()
        m = gen.integers(0, n_rx, size)
        if distinct:
            nn = (m + gen.integers(1, n_rx, size)) % n_rx
        else:
            nn = gen.integers(0, n_rx, size)
        H = complex_normal(gen, (size, n_rx, n_ris))
        rows = np.arange(size)
        lam, code = solve_lambda_batch(case_coefficients(H[rows, m], H[rows, nn]))
        lams.append(lam)
        codes.append(code)
    return np.concatenate(lams), np.concatenate(codes)
