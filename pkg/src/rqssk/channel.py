"""Random channel and noise synthesis.

All randomness in the package goes through :class:`RngStream`, a
(master_seed, stream_index) pair mapped onto an independent Philox
counter-based generator. The same pair always yields the same sequence,
which is what makes parallel Monte Carlo runs reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int = 0
    # extra spawn-key components, e.g. the SNR point a block belongs to
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if self.stream_index < 0:
            raise ConfigurationError("stream_index", "must be non-negative")

    def child(self, index):
        """Stream nested under this one (independent of all siblings)."""
        return RngStream(self.master_seed, index, self.path + (self.stream_index,))

    def generator(self):
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed) & _SEED_MASK,
            spawn_key=self.path + (self.stream_index,),
        )
        return np.random.Generator(np.random.Philox(seq))


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def check_dimensions(n_rx, n_ris):
    if not isinstance(n_rx, (int, np.integer)) or n_rx < 2 or not is_power_of_two(int(n_rx)):
        raise ConfigurationError("n_rx", f"must be a power of two >= 2, got {n_rx!r}")
    if not isinstance(n_ris, (int, np.integer)) or n_ris < 1:
        raise ConfigurationError("n_ris", f"must be a positive integer, got {n_ris!r}")


def complex_normal(gen, shape, variance=1.0):
    """Circularly-symmetric complex Gaussian with the given total variance."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    g = gen.standard_normal((2,) + shape)
    return np.sqrt(variance / 2.0) * (g[0] + 1j * g[1])


@dataclass(frozen=True)
class ChannelMatrix:
    entries: np.ndarray

    @property
    def n_rx(self):
        return self.entries.shape[-2]

    @property
    def n_ris(self):
        return self.entries.shape[-1]

    def row(self, l):
        return self.entries[..., l, :]


def generate_channel(n_rx, n_ris, rng, batch=None):
    """Draw an ``n_rx x n_ris`` matrix of i.i.d. CN(0, 1) gains.

    With ``batch`` set, returns a stacked array of shape
    ``(batch, n_rx, n_ris)`` instead of a single :class:`ChannelMatrix`.
    """
    check_dimensions(n_rx, n_ris)
    gen = _as_generator(rng)
    if batch is None:
        return ChannelMatrix(complex_normal(gen, (n_rx, n_ris)))
    return complex_normal(gen, (batch, n_rx, n_ris))


def draw_noise(n0, rng, size=None):
    """CN(0, n0) noise: real and imaginary parts each have variance n0/2.

    Returns a Python complex when ``size`` is None, else an array.
    """
    if not n0 > 0:
        raise ConfigurationError("n0", f"noise power must be positive, got {n0!r}")
    gen = _as_generator(rng)
    if size is None:
        return complex(complex_normal(gen, (1,), n0)[0])
    return complex_normal(gen, size, n0)
