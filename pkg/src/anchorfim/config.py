"""Run configuration: a flat ``key = value`` text format.

Blank lines and ``#`` comments are ignored. Vectors are comma-separated.
Unknown keys are rejected. Every key has a default, so an empty file
describes the reference scenario (100-element source, 4-element
destination, 20 DFT-beamformed transmissions).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .geometry import upa_shape
from .signal import DEFAULT_CARRIER_HZ, DEFAULT_GAIN, SPEED_OF_LIGHT, Regime

CASE_IDS = ("I", "II", "III", "IV")
PLANS = ("dft", "identity")


def _triple(text: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected 3 comma-separated numbers, got {text!r}")
    vals = tuple(float(p) for p in parts)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("non-finite entry")
    return vals


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in text.split(",") if p.strip())


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("non-finite value")
    return v


@dataclass(frozen=True)
class RunConfig:
    p_b: tuple = (1.5, 1.0, 4.0)
    phi_b: tuple = (1.1, 2.2, 0.7)
    p_u: tuple = (2.6, 2.15, 5.1)
    phi_u: tuple = (0.1, 0.2, 0.1)
    n_b: int = 100
    n_u: int = 4
    n_d: int = 16
    num_transmissions: int = 20
    plan: str = "dft"
    regime: str = "near"
    case: str = "II"
    carrier_hz: float = DEFAULT_CARRIER_HZ
    snr_db: float = 10.0
    gain_real: float = DEFAULT_GAIN.real
    gain_imag: float = DEFAULT_GAIN.imag
    spacing_wavelengths: float = 0.5
    nu_sweep: tuple = (4, 9, 16, 25, 36, 49, 64)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("n_b", "n_u", "num_transmissions"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be >= 1")
        if not 1 <= self.n_d <= self.n_b:
            raise ConfigError(f"n_d: must satisfy 1 <= n_d <= n_b ({self.n_b})")
        if self.plan not in PLANS:
            raise ConfigError(f"plan: must be one of {PLANS}")
        if self.regime not in ("near", "far"):
            raise ConfigError("regime: must be 'near' or 'far'")
        if self.case not in CASE_IDS:
            raise ConfigError(f"case: must be one of {CASE_IDS}")
        if not self.carrier_hz > 0:
            raise ConfigError("carrier_hz: must be positive")
        if not self.spacing_wavelengths > 0:
            raise ConfigError("spacing_wavelengths: must be positive")
        if not self.nu_sweep:
            raise ConfigError("nu_sweep: must not be empty")
        if any(n < 1 for n in self.nu_sweep):
            raise ConfigError("nu_sweep: entries must be >= 1")
        if any(b <= a for a, b in zip(self.nu_sweep, self.nu_sweep[1:])):
            raise ConfigError("nu_sweep: must be strictly increasing")
        for n in self.nu_sweep + (self.n_u, self.n_b):
            upa_shape(n)
        if tuple(self.p_b) == tuple(self.p_u):
            raise ConfigError("p_u: coincides with p_b")

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def regime_enum(self) -> Regime:
        return Regime(self.regime)

    def canonical(self) -> str:
        """Normalized ``key = value`` text; equal configs give equal text."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            else:
                v = repr(v) if not isinstance(v, str) else v
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()[:16]

    def updated(self, **changes) -> "RunConfig":
        return replace(self, **changes)


_PARSERS = {
    "p_b": _triple,
    "phi_b": _triple,
    "p_u": _triple,
    "phi_u": _triple,
    "n_b": int,
    "n_u": int,
    "n_d": int,
    "num_transmissions": int,
    "plan": str.lower,
    "regime": str.lower,
    "case": str.upper,
    "carrier_hz": _finite,
    "snr_db": _finite,
    "gain_real": _finite,
    "gain_imag": _finite,
    "spacing_wavelengths": _finite,
    "nu_sweep": _int_list,
}


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        if key in values:
            raise ConfigError(f"{key}: given twice (line {lineno})")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
