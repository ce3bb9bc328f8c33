"""Bit mapping, received-signal synthesis and greedy detection.

A super-symbol carries two packets of ``log2(Nr) + 1`` bits. In each
packet the leading bits pick an antenna (natural binary, MSB first) and
the last bit picks a polarity (0 -> +1, 1 -> -1). The first packet drives
the real part, the second the imaginary part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix, _as_generator, complex_normal
from .errors import ConfigurationError, DimensionError, MappingError
from .optimizer import PhaseVector


@dataclass(frozen=True)
class TransmitSymbol:
    m: int
    n: int
    d_r: int = 1
    d_i: int = 1


def antenna_bits(n_rx):
    if n_rx < 2 or n_rx & (n_rx - 1):
        raise ConfigurationError("n_rx", f"must be a power of two >= 2, got {n_rx!r}")
    return n_rx.bit_length() - 1


def bits_per_symbol(n_rx, polarity=True):
    k = antenna_bits(n_rx)
    return 2 * (k + 1) if polarity else 2 * k


def _bits_to_int(bits):
    # MSB first along the last axis
    k = bits.shape[-1]
    weights = 1 << np.arange(k - 1, -1, -1)
    return (bits * weights).sum(axis=-1)


def _int_to_bits(values, k):
    values = np.asarray(values)
    shifts = np.arange(k - 1, -1, -1)
    return (values[..., None] >> shifts) & 1


def map_bits_batch(bits, n_rx, polarity=True):
    """Vectorised mapping of ``(..., R)`` bit arrays to index/sign arrays."""
    bits = np.asarray(bits, dtype=np.int64)
    k = antenna_bits(n_rx)
    r = bits_per_symbol(n_rx, polarity)
    if bits.shape[-1] != r:
        raise MappingError(f"expected {r} bits per symbol for Nr={n_rx}, got {bits.shape[-1]}")
    if np.any((bits != 0) & (bits != 1)):
        raise MappingError("bits must be 0 or 1")
    half = r // 2
    m = _bits_to_int(bits[..., :k])
    n = _bits_to_int(bits[..., half:half + k])
    if polarity:
        d_r = 1 - 2 * bits[..., k]
        d_i = 1 - 2 * bits[..., half + k]
    else:
        d_r = np.ones_like(m)
        d_i = np.ones_like(m)
    return m, n, d_r, d_i


def demap_batch(m, n, d_r, d_i, n_rx, polarity=True):
    k = antenna_bits(n_rx)
    parts = [_int_to_bits(m, k)]
    if polarity:
        parts.append(((1 - np.asarray(d_r)) // 2)[..., None])
    parts.append(_int_to_bits(n, k))
    if polarity:
        parts.append(((1 - np.asarray(d_i)) // 2)[..., None])
    return np.concatenate(parts, axis=-1).astype(np.int8)


def map_bits(bits, n_rx):
    m, n, d_r, d_i = map_bits_batch(np.asarray(bits)[None, :], n_rx)
    return TransmitSymbol(int(m[0]), int(n[0]), int(d_r[0]), int(d_i[0]))


def demap_symbol(sym, n_rx):
    if not (0 <= sym.m < n_rx and 0 <= sym.n < n_rx):
        raise MappingError(f"antenna index out of range for Nr={n_rx}: {sym}")
    if sym.d_r not in (-1, 1) or sym.d_i not in (-1, 1):
        raise MappingError(f"polarity must be +1 or -1: {sym}")
    return demap_batch(sym.m, sym.n, sym.d_r, sym.d_i, n_rx).tolist()


def synthesize_rx(H, theta, es, n0, rng=None):
    """``y_l = sqrt(es) * h_l . theta + n_l`` for every receive antenna.

    ``H`` may be a :class:`ChannelMatrix` or an array ``(..., Nr, N)``;
    ``theta`` a :class:`PhaseVector` or complex array ``(..., N)``.
    ``n0 = 0`` gives the noiseless signal and needs no ``rng``.
    """
    H = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H)
    theta = theta.complex if isinstance(theta, PhaseVector) else np.asarray(theta)
    if H.shape[-1] != theta.shape[-1]:
        raise DimensionError(f"H has {H.shape[-1]} columns but theta has {theta.shape[-1]} entries")
    if not es > 0:
        raise ConfigurationError("es", "must be positive")
    if n0 < 0:
        raise ConfigurationError("n0", "must be non-negative")
    y = np.sqrt(es) * np.einsum("...ln,...n->...l", H, theta)
    if n0 > 0:
        if rng is None:
            raise ConfigurationError("rng", "required when n0 > 0")
        y = y + complex_normal(_as_generator(rng), y.shape, n0)
    return y


def _sign(x):
    return np.where(x < 0, -1, 1)


def greedy_detect_batch(y):
    """Per-dimension energy detection on ``(..., Nr)`` received vectors."""
    y = np.asarray(y)
    m_hat = np.argmax(y.real ** 2, axis=-1)
    n_hat = np.argmax(y.imag ** 2, axis=-1)
    re = np.take_along_axis(y.real, m_hat[..., None], axis=-1)[..., 0]
    im = np.take_along_axis(y.imag, n_hat[..., None], axis=-1)[..., 0]
    return m_hat, n_hat, _sign(re), _sign(im)


def greedy_detect(y):
    """Detect (m, n, d_r, d_i) from one received vector without CSI.

    Ties go to the lowest antenna index and a zero component reads as +1.
    """
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] < 2:
        raise DimensionError("greedy_detect expects a vector of length >= 2")
    m, n, dr, di = greedy_detect_batch(y)
    return TransmitSymbol(int(m), int(n), int(dr), int(di))
