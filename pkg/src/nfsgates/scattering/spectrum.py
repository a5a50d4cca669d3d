"""Time grids, switching protocols and forward-scattered spectra."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..rotation import IDENTITY, Z_TO_X, EulerAngles

CSV_HEADER = ("t_ns", "re_sigma", "im_sigma", "re_pi", "im_pi", "intensity")
RAMP_WARNING_FRACTION = 0.1


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling of [t_start, t_end] in ns."""

    t_end: float = 200.0
    n_samples: int = 4096
    t_start: float = 0.0

    def __post_init__(self) -> None:
        if self.t_start != 0.0:
            raise ValueError("grids start at the excitation instant t = 0")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.n_samples - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_samples)


@dataclass(frozen=True)
class SwitchProtocol:
    """Abrupt rotation of the hyperfine field at ``t0``.

    A non-zero ``ramp_duration`` spreads the effective switching instant
    uniformly over [t0, t0 + ramp_duration]; spectra then become incoherent
    mixtures over that window.
    """

    t0: float
    angles: EulerAngles = Z_TO_X
    ramp_duration: float = 0.0
    mean_lifetime: float = field(default=141.0, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.t0 < 0:
            raise ValueError("t0 must be >= 0")
        if self.ramp_duration < 0:
            raise ValueError("ramp_duration must be >= 0")
        if self.ramp_duration > RAMP_WARNING_FRACTION * self.mean_lifetime:
            warnings.warn(
                f"ramp_duration {self.ramp_duration} ns is not small against the lifetime",
                stacklevel=2,
            )

    def instants(self, n_points: int = 16) -> np.ndarray:
        """Switching instants sampling the ramp window (midpoint rule)."""
        if self.ramp_duration == 0:
            return np.array([self.t0])
        return self.t0 + (np.arange(n_points) + 0.5) / n_points * self.ramp_duration


def null_protocol(t0: float = 0.0) -> SwitchProtocol:
    return SwitchProtocol(t0, IDENTITY)


@dataclass(frozen=True, eq=False)
class TimeSpectrum:
    """Jones envelope of the scattered field per unit incident delta pulse.

    ``envelope`` has shape (n_samples, 2) with (sigma, pi) columns, or
    (n_members, n_samples, 2) for an incoherent mixture of equally weighted
    members (finite switching ramps).
    """

    grid: TimeGrid
    envelope: np.ndarray
    input_pol: str
    optical_depth: float
    protocol: SwitchProtocol | None = None

    def __post_init__(self) -> None:
        env = np.asarray(self.envelope, dtype=complex)
        if env.shape[-2:] != (self.grid.n_samples, 2) or env.ndim not in (2, 3):
            raise ValueError(f"envelope shape {env.shape} does not match grid")
        if not np.all(np.isfinite(env)):
            raise FloatingPointError("non-finite values in spectrum envelope")
        object.__setattr__(self, "envelope", env)

    @property
    def is_mixture(self) -> bool:
        return self.envelope.ndim == 3

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def component_intensity(self, pol: str) -> np.ndarray:
        k = {"sigma": 0, "pi": 1}[pol]
        power = np.abs(self.envelope[..., k]) ** 2
        return power.mean(axis=0) if self.is_mixture else power

    def to_csv(self, path: str | Path | None = None) -> str:
        """Write the spectrum as CSV and return the text.

        For mixtures the amplitude columns hold the rms amplitude of each
        polarization (imaginary parts zero), so that the intensity column
        still equals the sum of squared amplitudes.
        """
        if self.is_mixture:
            env = np.sqrt(
                np.stack(
                    [self.component_intensity("sigma"), self.component_intensity("pi")], axis=1
                )
            ).astype(complex)
        else:
            env = self.envelope
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        total = intensity(self)
        for t, (es, ep), i in zip(self.times, env, total):
            writer.writerow(
                [repr(float(v)) for v in (t, es.real, es.imag, ep.real, ep.imag, i)]
            )
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def intensity(spectrum: TimeSpectrum) -> np.ndarray:
    """|E_sigma|^2 + |E_pi|^2 per sample."""
    return spectrum.component_intensity("sigma") + spectrum.component_intensity("pi")


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Columns of a spectrum CSV keyed by header name."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = np.array([[float(v) for v in row] for row in reader])
    return {name: rows[:, k] for k, name in enumerate(header)}
