"""Indoor MISO channel realizations: TGn-style breakpoint path loss with Rician fading.

Receiver 0 is the desired receiver; receivers 1..K-1 are idle (energy
harvesting, potential eavesdroppers).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sdp.program import DomainError
from .units import db_to_linear

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SystemConfig:
    """Physical-layer parameters. All quantities linear (not dB) and in SI units."""

    num_antennas: int = 6
    num_receivers: int = 3
    carrier_freq: float = 470e6
    reference_distance: float = 2.0
    max_distance: float = 10.0
    rician_factor: float = float(db_to_linear(3.0))
    antenna_gain: float = 10.0
    noise_power: float = 10 ** (-23 / 10) / 1000.0
    conversion_efficiency: tuple = (0.5, 0.5)
    breakpoint_distance: float = 5.0
    pathloss_exponent: float = 3.5

    def __post_init__(self):
        eps = self.conversion_efficiency
        if np.isscalar(eps):
            eps = (float(eps),) * max(self.num_receivers - 1, 0)
        object.__setattr__(self, "conversion_efficiency", tuple(float(e) for e in eps))
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 2:
            raise DomainError("num_antennas must be an integer > 1")
        if int(self.num_receivers) != self.num_receivers or self.num_receivers < 1:
            raise DomainError("num_receivers must be a positive integer")
        if len(self.conversion_efficiency) != self.num_receivers - 1:
            raise DomainError("need one conversion efficiency per idle receiver")
        if any(not 0.0 <= e <= 1.0 for e in self.conversion_efficiency):
            raise DomainError("conversion efficiencies must lie in [0, 1]")
        if not 0 < self.reference_distance < self.max_distance:
            raise DomainError("require 0 < reference_distance < max_distance")
        for name in ("carrier_freq", "antenna_gain", "noise_power", "breakpoint_distance"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")
        if self.rician_factor < 0:
            raise DomainError("rician_factor must be nonnegative")

    @property
    def eps(self) -> np.ndarray:
        return np.array(self.conversion_efficiency)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    g: tuple
    distances: tuple = field(default=())

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex).ravel()
        g = tuple(np.asarray(v, dtype=complex).ravel() for v in self.g)
        if any(v.shape != h.shape for v in g):
            raise DomainError("all channel vectors must have length N_t")
        if not (np.all(np.isfinite(h)) and all(np.all(np.isfinite(v)) for v in g)):
            raise DomainError("channel entries must be finite")
        h.setflags(write=False)
        for v in g:
            v.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "distances", tuple(float(d) for d in self.distances))

    @property
    def num_antennas(self) -> int:
        return self.h.size

    @property
    def num_receivers(self) -> int:
        return len(self.g) + 1


@dataclass(frozen=True)
class GramSet:
    H: np.ndarray
    G: tuple

    @property
    def num_antennas(self) -> int:
        return self.H.shape[0]

    @property
    def num_idle(self) -> int:
        return len(self.G)


def free_space_loss_db(distance, carrier_freq):
    return 20.0 * np.log10(4.0 * np.pi * np.asarray(distance, dtype=float) * carrier_freq / SPEED_OF_LIGHT)


def path_loss_db(distance, config: SystemConfig):
    d = np.asarray(distance, dtype=float)
    d_bp = config.breakpoint_distance
    fs = free_space_loss_db(d, config.carrier_freq)
    beyond = free_space_loss_db(d_bp, config.carrier_freq) + 10.0 * config.pathloss_exponent * np.log10(
        np.maximum(d, d_bp) / d_bp
    )
    return np.where(d <= d_bp, fs, beyond)


def path_loss_gain(distance, config: SystemConfig):
    """Linear large-scale power gain, antenna gain included.

    Free space up to the breakpoint, then ``10 * exponent`` dB per decade.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d < config.reference_distance):
        raise DomainError("distance below the path-loss reference distance")
    gain = config.antenna_gain * 10.0 ** (-path_loss_db(d, config) / 10.0)
    return float(gain) if gain.ndim == 0 else gain


def los_vector(num_antennas: int, angle: float) -> np.ndarray:
    """Unit-modulus half-wavelength array response."""
    return np.exp(1j * np.pi * np.arange(num_antennas) * np.sin(angle))


def small_scale(rng: np.random.Generator, num_antennas: int, kappa: float, angle: float) -> np.ndarray:
    if np.isinf(kappa):
        return los_vector(num_antennas, angle)
    n = (rng.standard_normal(num_antennas) + 1j * rng.standard_normal(num_antennas)) / np.sqrt(2.0)
    return np.sqrt(kappa / (kappa + 1.0)) * los_vector(num_antennas, angle) + np.sqrt(1.0 / (kappa + 1.0)) * n


def sample_channels(seed: int, config: SystemConfig) -> ChannelRealization:
    """Draw one realization; deterministic in ``seed``.

    Receivers are drawn in order (distance, LOS angle, fading), so the first
    K receivers of a larger-K draw coincide with a smaller-K draw on the same
    seed.
    """
    rng = np.random.default_rng(seed)
    vectors, distances = [], []
    for _ in range(config.num_receivers):
        d = rng.uniform(config.reference_distance, config.max_distance)
        angle = rng.uniform(-np.pi, np.pi)
        v = small_scale(rng, config.num_antennas, config.rician_factor, angle)
        vectors.append(np.sqrt(path_loss_gain(d, config)) * v)
        distances.append(d)
    return ChannelRealization(h=vectors[0], g=tuple(vectors[1:]), distances=tuple(distances))


def _outer(v: np.ndarray) -> np.ndarray:
    M = np.outer(v, v.conj())
    return 0.5 * (M + M.conj().T)


def gram_matrices(realization: ChannelRealization) -> GramSet:
    return GramSet(H=_outer(realization.h), G=tuple(_outer(g) for g in realization.g))
