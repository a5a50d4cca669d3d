"""Multiple-scattering series evaluated exactly through a chain of linear systems.

The p-th scattering order is the p-fold Volterra composition of the
single-scattering kernel.  Stacking one coherence block per order gives a
lower block-bidiagonal generator whose matrix exponential propagates every
order at once, without time discretization:

    x_1' = A x_1,                 x_1(0+) = B e_in
    x_p' = A x_p + B C x_{p-1}
    E(t) = sum_p (-xi)^p / p! * C x_p(t)

A field rotation at t0 maps every block through the coherence transfer
matrix.  In the truncated picture the orders stop feeding one another after
t0 and simply radiate; in the complete picture the chain continues with the
rotated couplings.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from math import factorial, lgamma, log

import numpy as np
from scipy.linalg import expm

from ..hyperfine import NuclearSpecies
from ..rotation import EulerAngles
from .kernels import LinearResponse, linear_response, switched_response
from .spectrum import SwitchProtocol, TimeGrid, TimeSpectrum

DEFAULT_SPECIES = NuclearSpecies()
_BLOCK = 64
TRUNCATION_WARN = 1e-4


def pol_vector(pol: str) -> np.ndarray:
    if pol == "sigma":
        return np.array([1.0, 0.0], dtype=complex)
    if pol == "pi":
        return np.array([0.0, 1.0], dtype=complex)
    raise ValueError(f"input polarization must be 'sigma' or 'pi', got {pol!r}")


def order_weights(xi: float, p_max: int) -> np.ndarray:
    return np.array([(-xi) ** p / factorial(p) for p in range(1, p_max + 1)])


def truncation_bound(xi: float, gamma: float, t: float, p_max: int) -> float:
    """Bound on the first omitted order relative to the leading scale xi*Gamma_0.

    Uses ``||K(tau)|| <= Gamma_0 exp(-Gamma_0 tau / 2)``, so order p is at
    most ``xi Gamma_0 u^(p-1) / (p! (p-1)!)`` with ``u = xi Gamma_0 t``.
    """
    u = xi * gamma * t
    if u == 0:
        return 0.0
    p = p_max + 1
    return float(np.exp((p - 1) * log(u) - lgamma(p + 1) - lgamma(p)))


def chain_generator(resp: LinearResponse, p_max: int, *, coupled: bool = True) -> np.ndarray:
    n = resp.n_modes
    gen = np.zeros((p_max * n, p_max * n), dtype=complex)
    feed = resp.drive @ resp.emit
    for p in range(p_max):
        blk = slice(p * n, (p + 1) * n)
        gen[blk, blk] = np.diag(resp.rates)
        if coupled and p > 0:
            gen[blk, (p - 1) * n : p * n] = feed
    return gen


def _readout(resp: LinearResponse, weights: np.ndarray) -> np.ndarray:
    return np.hstack([w * resp.emit for w in weights])


class _Sampler:
    """Cached powers of ``expm(gen * h)`` projected on a readout."""

    def __init__(self, gen: np.ndarray, readout: np.ndarray, h: float):
        step = expm(gen * h)
        powers = [np.eye(gen.shape[0], dtype=complex)]
        for _ in range(1, _BLOCK):
            powers.append(step @ powers[-1])
        self.probes = np.stack([readout @ p for p in powers])
        self.jump = step @ powers[-1]

    def __call__(self, z0: np.ndarray, count: int) -> np.ndarray:
        out = np.empty((count, self.probes.shape[1]), dtype=complex)
        z = z0
        for start in range(0, count, _BLOCK):
            stop = min(start + _BLOCK, count)
            out[start:stop] = self.probes[: stop - start] @ z
            z = self.jump @ z
        return out


def sample_lti(
    gen: np.ndarray, readout: np.ndarray, z0: np.ndarray, h: float, count: int
) -> np.ndarray:
    """``readout @ expm(gen * k h) @ z0`` for k = 0..count-1."""
    return _Sampler(gen, readout, h)(z0, count)


@lru_cache(maxsize=32)
def _chain(
    species: NuclearSpecies, angles: EulerAngles | None, after: bool, p_max: int, xi: float, h: float
) -> tuple[np.ndarray, _Sampler]:
    if angles is None:
        resp = linear_response(species)
    else:
        sw = switched_response(species, angles)
        resp = sw.after if after else sw.before
    gen = chain_generator(resp, p_max)
    return gen, _Sampler(gen, _readout(resp, order_weights(xi, p_max)), h)


def _check_inputs(xi: float, p_max: int) -> None:
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    if xi < 0:
        raise ValueError("optical depth must be >= 0")


def series_spectrum(
    input_pol: str,
    xi: float,
    p_max: int,
    grid: TimeGrid,
    protocol: SwitchProtocol | None = None,
    *,
    species: NuclearSpecies = DEFAULT_SPECIES,
    after_switch: bool = False,
) -> TimeSpectrum:
    """Forward-scattered envelope from the truncated scattering series.

    With ``after_switch=False`` multiple scattering is confined to t < t0 and
    the orders only radiate after the switch.  ``after_switch=True`` keeps the
    chain coupled after t0, which is the complete solution up to the order
    truncation.  Grid samples at exactly t0 carry the post-switch value.
    """
    _check_inputs(xi, p_max)
    gamma = species.natural_width
    bound = truncation_bound(xi, gamma, grid.t_end, p_max)
    if bound > TRUNCATION_WARN:
        warnings.warn(f"p_max={p_max} may be too small (next order bound {bound:.2e})", stacklevel=2)
    if protocol is not None and protocol.ramp_duration > 0:
        members = [
            _series_single(input_pol, xi, p_max, grid, t, protocol, species, after_switch)
            for t in protocol.instants()
        ]
        return TimeSpectrum(grid, np.stack(members), input_pol, xi, protocol)
    t0 = None if protocol is None else protocol.t0
    env = _series_single(input_pol, xi, p_max, grid, t0, protocol, species, after_switch)
    return TimeSpectrum(grid, env, input_pol, xi, protocol)


def _series_single(input_pol, xi, p_max, grid, t0, protocol, species, after_switch):
    e_in = pol_vector(input_pol)
    times = grid.times
    if protocol is None:
        resp = linear_response(species)
        _, sampler = _chain(species, None, False, p_max, xi, grid.dt)
        z0 = np.zeros(p_max * resp.n_modes, dtype=complex)
        z0[: resp.n_modes] = resp.drive @ e_in
        return sampler(z0, grid.n_samples)

    sw = switched_response(species, protocol.angles)
    n = sw.before.n_modes
    n_pre = int(np.searchsorted(times, t0, side="left"))
    gen_pre, sampler_pre = _chain(species, protocol.angles, False, p_max, xi, grid.dt)
    z0 = np.zeros(gen_pre.shape[0], dtype=complex)
    z0[:n] = sw.before.drive @ e_in
    env = np.empty((grid.n_samples, 2), dtype=complex)
    env[:n_pre] = sampler_pre(z0, n_pre)
    if n_pre == grid.n_samples:
        return env
    z_switch = expm(gen_pre * t0) @ z0
    z_after = np.kron(np.eye(p_max), sw.transfer) @ z_switch
    if after_switch:
        gen_post, sampler_post = _chain(species, protocol.angles, True, p_max, xi, grid.dt)
        z_first = expm(gen_post * (times[n_pre] - t0)) @ z_after
        env[n_pre:] = sampler_post(z_first, grid.n_samples - n_pre)
    else:
        weights = order_weights(xi, p_max)
        current = (weights[:, None] * z_after.reshape(p_max, n)).sum(axis=0)
        tau = times[n_pre:] - t0
        env[n_pre:] = (np.exp(np.outer(tau, sw.after.rates)) * current) @ sw.after.emit.T
    return env


def coherence_scan(
    input_pol: str,
    xi: float,
    p_max: int,
    t_first: float,
    step: float,
    count: int,
    *,
    species: NuclearSpecies = DEFAULT_SPECIES,
) -> np.ndarray:
    """Order-summed coherence ``sum_p (-xi)^p/p! x_p(t)`` before any switch.

    Sampled at ``t_first + k step``; shape (count, n_modes).  This is the
    state a truncated-series switch acts on.
    """
    _check_inputs(xi, p_max)
    resp = linear_response(species)
    gen = chain_generator(resp, p_max)
    n = resp.n_modes
    weights = order_weights(xi, p_max)
    z0 = np.zeros(gen.shape[0], dtype=complex)
    z0[:n] = resp.drive @ pol_vector(input_pol)
    summing = np.hstack([w * np.eye(n) for w in weights])
    return sample_lti(gen, summing, expm(gen * t_first) @ z0, step, count)
