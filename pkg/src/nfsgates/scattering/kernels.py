"""Single-scattering response of the nuclear ensemble.

The ensemble is a linear system whose state is the optical coherence
``X[e, g]`` between excited and ground sublevels.  In the eigenbasis of the
current field every coherence rotates at its line detuning and decays at
Gamma_0/2; a field rotation re-expresses ``X`` in the new eigenbasis.
Kernels are normalized so that an unsplit line gives ``K(0) = Gamma_0 * 1``;
with that choice the optical depth equals a quarter of the effective
resonant thickness.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from ..hyperfine import (
    FieldOrientation,
    NuclearSpecies,
    Transition,
    absorption_matrices,
    kernel_normalization,
    m_values,
    zeeman_detuning,
)
from ..rotation import EulerAngles, RotationPair


@dataclass(frozen=True, eq=False)
class LinearResponse:
    """State-space form ``K(tau) = C exp(diag(rates) tau) B`` of one field setting.

    Modes are the coherences (m_e, m_g) in row-major order.
    """

    rates: np.ndarray  # (n_modes,) complex, -i Delta - Gamma/2
    drive: np.ndarray  # (n_modes, 2) B
    emit: np.ndarray  # (2, n_modes) C = B^dagger

    @property
    def n_modes(self) -> int:
        return self.rates.size

    def kernel(self, tau: float) -> np.ndarray:
        return (self.emit * np.exp(self.rates * tau)) @ self.drive


@lru_cache(maxsize=64)
def linear_response(
    species: NuclearSpecies, orientation: FieldOrientation = FieldOrientation()
) -> LinearResponse:
    gamma = species.natural_width
    mg = m_values(species.spin_ground)
    me = m_values(species.spin_excited)
    detuning = np.array([zeeman_detuning(species, g, e) for e in me for g in mg])
    scale = np.sqrt(kernel_normalization(species) * gamma / mg.size)
    v = absorption_matrices(species, orientation)
    drive = scale * v.reshape(2, -1).T
    return LinearResponse(-1j * detuning - gamma / 2, drive, drive.conj().T)


@dataclass(frozen=True, eq=False)
class SwitchedResponse:
    """Field settings before and after a rotation plus the coherence map."""

    before: LinearResponse
    after: LinearResponse
    transfer: np.ndarray  # (n_modes, n_modes)


@lru_cache(maxsize=256)
def switched_response(species: NuclearSpecies, angles: EulerAngles) -> SwitchedResponse:
    pair = RotationPair.build(species.spin_ground, species.spin_excited, angles)
    return SwitchedResponse(
        linear_response(species),
        linear_response(species, FieldOrientation.from_angles(angles)),
        pair.coherence_map(),
    )


def _line_sum(transitions: Sequence[Transition], tau: float, gamma: float) -> np.ndarray:
    out = np.zeros((2, 2), dtype=complex)
    for line in transitions:
        c = np.asarray(line.coupling)
        out += line.weight * np.outer(c, c.conj()) * np.exp(-1j * line.detuning * tau)
    return gamma * out * np.exp(-gamma * tau / 2)


def static_kernel(transitions: Sequence[Transition], tau_delay: float, gamma: float) -> np.ndarray:
    """2x2 response to a delta excitation ``tau_delay`` ns earlier, fixed field.

    ``K = Gamma sum_l w_l c_l c_l^dagger exp(-i Delta_l tau - Gamma tau / 2)``.
    """
    if tau_delay < 0:
        raise ValueError("tau_delay must be >= 0")
    return _line_sum(transitions, tau_delay, gamma)


def _signed_root(line: Transition) -> float:
    # Clebsch-Gordan signs matter once coherences are mixed
    return float(np.copysign(np.sqrt(line.weight), line.amplitude))


def switched_kernel(
    transitions_I: Sequence[Transition],
    transitions_II: Sequence[Transition],
    rotation: RotationPair,
    t0: float,
    t_emit: float,
    t_excite: float,
    gamma: float,
) -> np.ndarray:
    """Two-time response when the field rotates at ``t0``.

    ``transitions_II`` must be enumerated in the frame produced by the same
    rotation (``FieldOrientation.from_angles``) so that phases agree with
    ``rotation``.
    """
    if not 0 <= t_excite <= t_emit:
        raise ValueError("need 0 <= t_excite <= t_emit")
    if t_emit <= t0:
        return _line_sum(transitions_I, t_emit - t_excite, gamma)
    if t_excite >= t0:
        return _line_sum(transitions_II, t_emit - t_excite, gamma)

    dim_g = rotation.d_ground.shape[0]
    dim_e = rotation.d_excited.shape[0]
    offset_g, offset_e = (dim_g - 1) / 2, (dim_e - 1) / 2
    d_g, d_e_dag = rotation.d_ground, rotation.d_excited.conj().T

    # coherence excited at t_excite in basis I, one 2-column block per input polarization
    coherence = np.zeros((dim_e, dim_g, 2), dtype=complex)
    for line in transitions_I:
        e, g = int(line.m_excited + offset_e), int(line.m_ground + offset_g)
        amp = _signed_root(line) * np.conj(np.asarray(line.coupling))
        coherence[e, g] = amp * np.exp(-1j * line.detuning * (t0 - t_excite))
    rotated = np.einsum("ae,egk,gb->abk", d_e_dag, coherence, d_g)

    out = np.zeros((2, 2), dtype=complex)
    for line in transitions_II:
        e, g = int(line.m_excited + offset_e), int(line.m_ground + offset_g)
        c = _signed_root(line) * np.asarray(line.coupling)
        out += np.outer(c, rotated[e, g]) * np.exp(-1j * line.detuning * (t_emit - t0))
    return gamma * out * np.exp(-gamma * (t_emit - t_excite) / 2)
