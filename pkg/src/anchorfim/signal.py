"""Beamformers, transmit symbols and the noise-free received signal.

Two propagation models are provided. The near-field model evaluates the exact
element-to-element delay, the far-field model replaces it with the plane-wave
approximation built from steering vectors. Which one is used is an explicit
choice on the :class:`Scenario`, not a consequence of the link distance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateGeometryError, InvalidArgumentError
from .geometry import (
    ArrayGeometry,
    EulerAngles,
    Pose,
    direction_info,
    global_antenna_positions,
    rotation_matrix,
)

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CARRIER_HZ = 10e9
DEFAULT_GAIN = complex(1.0, 1.0) / math.sqrt(2.0)


class Regime(enum.Enum):
    NEAR = "near"
    FAR = "far"


@dataclass(frozen=True)
class ChannelParams:
    gain_real: float = DEFAULT_GAIN.real
    gain_imag: float = DEFAULT_GAIN.imag
    carrier_hz: float = DEFAULT_CARRIER_HZ
    snr_linear: float = 10.0
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not (self.carrier_hz > 0 and math.isfinite(self.carrier_hz)):
            raise InvalidArgumentError(f"carrier_hz must be positive, got {self.carrier_hz}")
        if not (self.snr_linear > 0 and math.isfinite(self.snr_linear)):
            raise InvalidArgumentError(f"snr_linear must be positive, got {self.snr_linear}")
        if not (math.isfinite(self.gain_real) and math.isfinite(self.gain_imag)):
            raise InvalidArgumentError("path gain must be finite")

    @property
    def wavelength(self) -> float:
        return self.speed_of_light / self.carrier_hz

    @property
    def gain(self) -> complex:
        return complex(self.gain_real, self.gain_imag)


@dataclass(frozen=True)
class TransmitPlan:
    """Per-transmission precoders ``F_t`` (N_B x N_D) and the symbol vector x."""

    beamformers: tuple
    symbols: np.ndarray

    def __post_init__(self):
        fs = tuple(np.array(f, dtype=complex) for f in self.beamformers)
        x = np.array(self.symbols, dtype=complex).reshape(-1)
        if not fs:
            raise InvalidArgumentError("a plan needs at least one transmission")
        n_b = fs[0].shape[0]
        for f in fs:
            if f.shape != (n_b, x.size):
                raise InvalidArgumentError(
                    f"beamformer shape {f.shape} inconsistent with ({n_b}, {x.size})"
                )
            if not np.all(np.isfinite(f)):
                raise InvalidArgumentError("beamformer has non-finite entries")
            f.setflags(write=False)
        if abs(np.vdot(x, x).real - 1.0) > 1e-12:
            raise InvalidArgumentError("symbol vector must have unit norm")
        x.setflags(write=False)
        object.__setattr__(self, "beamformers", fs)
        object.__setattr__(self, "symbols", x)

    @property
    def num_streams(self) -> int:
        return self.symbols.size

    @property
    def num_transmissions(self) -> int:
        return len(self.beamformers)

    @property
    def num_antennas(self) -> int:
        return self.beamformers[0].shape[0]

    def precoded(self, t: int) -> np.ndarray:
        """``F_t x``, the per-antenna transmit weights for transmission t."""
        return self.beamformers[t] @ self.symbols


@dataclass(frozen=True)
class Node:
    pose: Pose
    array: ArrayGeometry

    def antenna_positions(self) -> np.ndarray:
        return global_antenna_positions(self.pose, self.array)

    def with_position(self, position) -> "Node":
        return replace(self, pose=Pose(np.asarray(position, dtype=float), self.pose.angles))

    def with_angles(self, angles) -> "Node":
        return replace(self, pose=Pose(self.pose.position, EulerAngles.from_array(angles)))


@dataclass(frozen=True)
class Scenario:
    source: Node
    destination: Node
    channel: ChannelParams
    plan: TransmitPlan
    regime: Regime = Regime.NEAR

    def __post_init__(self):
        try:
            object.__setattr__(self, "regime", Regime(self.regime))
        except ValueError:
            raise InvalidArgumentError(f"unknown regime {self.regime!r}") from None
        if np.array_equal(self.source.pose.position, self.destination.pose.position):
            raise DegenerateGeometryError("source and destination centroids coincide")
        if self.plan.num_antennas != self.source.array.count:
            raise InvalidArgumentError(
                f"plan drives {self.plan.num_antennas} antennas, source has {self.source.array.count}"
            )

    def with_regime(self, regime: Regime) -> "Scenario":
        return replace(self, regime=regime)

    def with_gain(self, gain: complex) -> "Scenario":
        return replace(self, channel=replace(self.channel, gain_real=gain.real, gain_imag=gain.imag))


def default_symbols(n_streams: int) -> np.ndarray:
    """Unit-norm chirp: ``exp(j pi d^2 / N_D) / sqrt(N_D)``."""
    if n_streams < 1:
        raise InvalidArgumentError("need at least one stream")
    d = np.arange(n_streams)
    return np.exp(1j * np.pi * d**2 / n_streams) / math.sqrt(n_streams)


def dft_codebook(n_antennas: int, n_streams: int, transmission_index: int) -> np.ndarray:
    """Select ``n_streams`` columns of the unitary DFT matrix.

    Column ``d`` of the result is DFT column ``(t * N_D + d) mod N_B`` so the
    selection rotates from one transmission to the next.
    """
    if n_antennas < 1 or n_streams < 1:
        raise InvalidArgumentError("antenna and stream counts must be >= 1")
    if n_streams > n_antennas:
        raise InvalidArgumentError(f"n_streams={n_streams} exceeds n_antennas={n_antennas}")
    if transmission_index < 0:
        raise InvalidArgumentError("transmission_index must be >= 0")
    cols = (transmission_index * n_streams + np.arange(n_streams)) % n_antennas
    n = np.arange(n_antennas)[:, None]
    return np.exp(-2j * np.pi * n * cols[None, :] / n_antennas) / math.sqrt(n_antennas)


def dft_plan(n_antennas: int, n_streams: int, num_transmissions: int) -> TransmitPlan:
    return TransmitPlan(
        tuple(dft_codebook(n_antennas, n_streams, t) for t in range(num_transmissions)),
        default_symbols(n_streams),
    )


def identity_plan(n_antennas: int, num_transmissions: int) -> TransmitPlan:
    """No beamforming: ``F_t = I`` and ``x = 1 / sqrt(N_B)``."""
    if n_antennas < 1 or num_transmissions < 1:
        raise InvalidArgumentError("counts must be >= 1")
    eye = np.eye(n_antennas, dtype=complex)
    return TransmitPlan(
        tuple(eye for _ in range(num_transmissions)),
        np.full(n_antennas, 1.0 / math.sqrt(n_antennas), dtype=complex),
    )


def steering_vector(local_coords, angles, direction, wavelength: float) -> np.ndarray:
    """Plane-wave response ``exp(-j 2pi/lambda (Q s~_n)^T direction)``."""
    direction = np.asarray(direction, dtype=float).reshape(3)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
        raise InvalidArgumentError("direction must be a unit vector")
    rotated = rotation_matrix(angles) @ np.asarray(local_coords, dtype=float)
    return np.exp(-2j * np.pi / wavelength * (rotated.T @ direction))


def pair_distances(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Element-pair offsets ``p_u - p_b`` (3 x N_U x N_B) and distances (N_U x N_B)."""
    p_b = scenario.source.antenna_positions()
    p_u = scenario.destination.antenna_positions()
    diff = p_u[:, :, None] - p_b[:, None, :]
    dist = np.sqrt((diff**2).sum(axis=0))
    if np.any(dist == 0.0):
        raise DegenerateGeometryError("a transmit and a receive antenna coincide")
    return diff, dist


def nearfield_channel(scenario: Scenario) -> np.ndarray:
    """Gain-free channel ``exp(-j 2pi f_c tau_bu)``, N_U x N_B."""
    _, dist = pair_distances(scenario)
    return np.exp(-2j * np.pi * dist / scenario.channel.wavelength)


def farfield_channel(scenario: Scenario) -> np.ndarray:
    """Gain-free plane-wave channel ``a_UB a_BU^H exp(-j 2pi f_c tau_BU)``."""
    src, dst, lam = scenario.source, scenario.destination, scenario.channel.wavelength
    info = direction_info(src.pose.position, dst.pose.position)
    a_bu = steering_vector(src.array.local_coords, src.pose.angles, info.unit_vector, lam)
    a_ub = steering_vector(dst.array.local_coords, dst.pose.angles, info.unit_vector, lam)
    bulk = np.exp(-2j * np.pi * info.distance / lam)
    return bulk * np.outer(a_ub, a_bu.conj())


def channel_matrix(scenario: Scenario) -> np.ndarray:
    """Gain-free channel for the scenario's regime."""
    if scenario.regime is Regime.NEAR:
        return nearfield_channel(scenario)
    return farfield_channel(scenario)


def nearfield_mu(scenario: Scenario, transmission_index: int) -> np.ndarray:
    if scenario.regime is not Regime.NEAR:
        raise InvalidArgumentError("scenario regime is not near-field")
    return scenario.channel.gain * nearfield_channel(scenario) @ scenario.plan.precoded(transmission_index)


def farfield_mu(scenario: Scenario, transmission_index: int) -> np.ndarray:
    if scenario.regime is not Regime.FAR:
        raise InvalidArgumentError("scenario regime is not far-field")
    return scenario.channel.gain * farfield_channel(scenario) @ scenario.plan.precoded(transmission_index)


def received_mean(scenario: Scenario, transmission_index: int) -> np.ndarray:
    """Noise-free received signal under the scenario's own regime."""
    return scenario.channel.gain * channel_matrix(scenario) @ scenario.plan.precoded(transmission_index)
