"""Wigner rotation operators for the ground and excited manifolds.

Euler angles follow the active z-y-z convention,
``R = Rz(alpha) Ry(beta) Rz(gamma)``, and
``D^j(alpha, beta, gamma) = exp(-i alpha Jz) exp(-i beta Jy) exp(-i gamma Jz)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, sqrt

import numpy as np


@dataclass(frozen=True)
class EulerAngles:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def canonical(self) -> EulerAngles:
        """Angles reduced to [0, 2 pi) for reporting."""
        two_pi = 2 * np.pi
        return EulerAngles(*(float(a % two_pi) for a in (self.alpha, self.beta, self.gamma)))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


IDENTITY = EulerAngles(0.0, 0.0, 0.0)
# 90 degree counterclockwise turn about y: carries the field from z to x.
Z_TO_X = EulerAngles(0.0, np.pi / 2, 0.0)


def _two_j(j: float) -> int:
    two_j = 2 * j
    if two_j < 0 or abs(two_j - round(two_j)) > 1e-9:
        raise ValueError(f"j must be a non-negative half-integer, got {j}")
    return int(round(two_j))


def wigner_small_d(j: float, beta: float) -> np.ndarray:
    """d^j_{m'm}(beta), rows m' and columns m ascending from -j."""
    two_j = _two_j(j)
    dim = two_j + 1
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    d = np.zeros((dim, dim))
    # integer offsets: j+m = a, j+m' = ap
    for ap in range(dim):
        for a in range(dim):
            jpm, jmm = a, two_j - a
            jpmp, jmmp = ap, two_j - ap
            norm = sqrt(factorial(jpmp) * factorial(jmmp) * factorial(jpm) * factorial(jmm))
            total = 0.0
            # k runs over values keeping every factorial argument >= 0
            for k in range(max(0, a - ap), min(jpm, jmmp) + 1):
                denom = (
                    factorial(jpm - k) * factorial(k) * factorial(jmmp - k) * factorial(k - a + ap)
                )
                sign = (-1) ** (k - a + ap)
                total += (
                    sign
                    * c ** (two_j - 2 * k + a - ap)
                    * s ** (2 * k - a + ap)
                    / denom
                )
            d[ap, a] = norm * total
    return d


def rotation_operator(j: float, angles: EulerAngles) -> np.ndarray:
    """Full Wigner D matrix for spin ``j``."""
    m = np.arange(-_two_j(j), _two_j(j) + 1, 2) / 2.0
    left = np.exp(-1j * m * angles.alpha)
    right = np.exp(-1j * m * angles.gamma)
    return left[:, None] * wigner_small_d(j, angles.beta) * right[None, :]


def rotation_matrix(angles: EulerAngles) -> np.ndarray:
    """Cartesian 3x3 active rotation for the same Euler angles."""

    def rz(t: float) -> np.ndarray:
        c, s = np.cos(t), np.sin(t)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    c, s = np.cos(angles.beta), np.sin(angles.beta)
    ry = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return rz(angles.alpha) @ ry @ rz(angles.gamma)


@dataclass(frozen=True)
class RotationPair:
    """Rotation operators acting on the ground and excited manifolds."""

    d_ground: np.ndarray
    d_excited: np.ndarray

    @classmethod
    def build(cls, spin_ground: float, spin_excited: float, angles: EulerAngles) -> RotationPair:
        return cls(rotation_operator(spin_ground, angles), rotation_operator(spin_excited, angles))

    def coherence_map(self) -> np.ndarray:
        """Matrix taking vec(X) to vec(D_e^dagger X D_g) for X[e, g] stored row-major.

        This re-expresses an optical coherence given in the old field
        eigenbasis in the eigenbasis of the rotated field.
        """
        return np.kron(self.d_excited.conj().T, self.d_ground.T)
