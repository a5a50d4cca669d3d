"""Layer-by-layer solution of the slab equation with switched fields.

The scattered envelope S(z, t) obeys

    dS/dz = -xi * K[delta e_in + S],    S(0, t) = 0,   z in [0, 1]

where K is the two-time Volterra operator of the ensemble.  K is applied
through the coherence state: between samples the drive is taken piecewise
linear and integrated exactly against the exponential modes, and at the
switching instant the state is carried into the rotated eigenbasis.  Each
layer of depth 1/n_slices is advanced with a classical Runge-Kutta step.
"""

from __future__ import annotations

import numpy as np

from ..hyperfine import NuclearSpecies
from .kernels import LinearResponse, linear_response, switched_response
from .series import DEFAULT_SPECIES, pol_vector
from .spectrum import SwitchProtocol, TimeGrid, TimeSpectrum

MAX_PHASE_STEP = 0.5  # rad per sample
_MAX_GROWTH = 30.0  # e-folds per cumulative-sum chunk


class ResolutionError(ValueError):
    """Raised when the time grid cannot resolve the hyperfine beats."""


def _phi12(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, stable near 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    ez = np.exp(zs)
    phi1 = (ez - 1) / zs
    phi2 = (ez - 1 - zs) / zs**2
    # Taylor series to z^6
    t1 = np.ones_like(z)
    t2 = np.full_like(z, 0.5)
    term1, term2 = np.ones_like(z), np.full_like(z, 0.5)
    for k in range(1, 7):
        term1 = term1 * z / (k + 1)
        term2 = term2 * z / (k + 2)
        t1 = t1 + term1
        t2 = t2 + term2
    return np.where(small, t1, phi1), np.where(small, t2, phi2)


class _Segment:
    """Exponential integrator for one field setting on a fixed node set."""

    def __init__(self, resp: LinearResponse, nodes: np.ndarray):
        self.resp = resp
        self.nodes = nodes
        h = np.diff(nodes)
        z = np.outer(resp.rates, h)  # (modes, intervals)
        phi1, phi2 = _phi12(z)
        self.w_left = h * (phi1 - phi2)
        self.w_right = h * phi2
        self.offset = nodes - nodes[0]
        span = float(np.max(-resp.rates.real) * self.offset[-1]) if nodes.size > 1 else 0.0
        n_chunks = max(1, int(np.ceil(span / _MAX_GROWTH)))
        self.chunks = []
        for idx in np.array_split(np.arange(nodes.size), n_chunks):
            growth = np.exp(np.outer(resp.rates, self.offset[idx] - self.offset[idx[0]]))
            self.chunks.append((idx, growth, 1.0 / growth[:, 1:]))
        self.step = np.exp(np.outer(resp.rates, h))

    def run(self, x0: np.ndarray, field: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Response C x(t) on the nodes for initial state x0 and drive field (nodes, 2)."""
        resp = self.resp
        f = resp.drive @ field.T  # (modes, nodes)
        g = self.w_left * f[:, :-1] + self.w_right * f[:, 1:]
        x = np.empty((resp.n_modes, self.nodes.size), dtype=complex)
        start_state = x0
        for idx, growth, shrink in self.chunks:
            # x_k = E_k (x_first + sum_{j<k} g_j / E_{j+1}) within the chunk
            acc = np.empty((resp.n_modes, idx.size), dtype=complex)
            acc[:, 0] = start_state
            if idx.size > 1:
                np.cumsum(g[:, idx[0] : idx[-1]] * shrink, axis=1, out=acc[:, 1:])
                acc[:, 1:] += start_state[:, None]
            x[:, idx] = growth * acc
            j = idx[-1]
            if j + 1 < self.nodes.size:
                start_state = self.step[:, j] * x[:, j] + g[:, j]
        return (resp.emit @ x).T, x[:, -1]


class VolterraOperator:
    """Two-time response operator on a time-node set, optionally switched once."""

    def __init__(
        self,
        species: NuclearSpecies,
        times: np.ndarray,
        protocol: SwitchProtocol | None,
        t0: float | None = None,
    ):
        if protocol is None or t0 is None or t0 >= times[-1]:
            self.pre = _Segment(linear_response(species), times)
            self.post = None
            self.split = times.size
            return
        sw = switched_response(species, protocol.angles)
        self.transfer = sw.transfer
        self.split = int(np.searchsorted(times, t0, side="left"))
        pre_nodes = np.append(times[: self.split], t0)
        post_nodes = times[self.split :]
        if post_nodes[0] > t0:
            post_nodes = np.insert(post_nodes, 0, t0)
            self._post_skip = 1
        else:
            self._post_skip = 0
        self.pre = _Segment(sw.before, pre_nodes)
        self.post = _Segment(sw.after, post_nodes)

    def layout(self, n_times: int) -> tuple[int, int]:
        """Node counts (pre, post) of the internal representation."""
        if self.post is None:
            return n_times, 0
        return self.pre.nodes.size, self.post.nodes.size

    def apply(self, x_delta: np.ndarray, field: np.ndarray) -> np.ndarray:
        """K[delta e + S] on internal nodes; ``field`` stacks pre and post nodes."""
        if self.post is None:
            out, _ = self.pre.run(x_delta, field)
            return out
        n_pre = self.pre.nodes.size
        out_pre, x_end = self.pre.run(x_delta, field[:n_pre])
        out_post, _ = self.post.run(self.transfer @ x_end, field[n_pre:])
        return np.vstack([out_pre, out_post])

    def to_grid(self, values: np.ndarray) -> np.ndarray:
        if self.post is None:
            return values
        n_pre = self.pre.nodes.size
        return np.vstack([values[: n_pre - 1], values[n_pre + self._post_skip :]])


def _check_resolution(species: NuclearSpecies, grid: TimeGrid) -> None:
    rates = linear_response(species).rates
    phase_step = grid.dt * float(np.max(np.abs(rates.imag)))
    if phase_step > MAX_PHASE_STEP:
        raise ResolutionError(
            f"dt={grid.dt:.4g} ns gives {phase_step:.3f} rad per sample "
            f"(limit {MAX_PHASE_STEP}); increase n_samples"
        )


def propagate(
    input_pol: str,
    xi: float,
    n_slices: int,
    grid: TimeGrid,
    protocol: SwitchProtocol | None = None,
    *,
    species: NuclearSpecies = DEFAULT_SPECIES,
) -> TimeSpectrum:
    """Scattered envelope behind the target, multiple scattering before and after t0."""
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    if xi < 0:
        raise ValueError("optical depth must be >= 0")
    _check_resolution(species, grid)
    if protocol is not None and protocol.ramp_duration > 0:
        members = [
            _propagate_single(input_pol, xi, n_slices, grid, protocol, t, species)
            for t in protocol.instants()
        ]
        return TimeSpectrum(grid, np.stack(members), input_pol, xi, protocol)
    t0 = None if protocol is None else protocol.t0
    env = _propagate_single(input_pol, xi, n_slices, grid, protocol, t0, species)
    return TimeSpectrum(grid, env, input_pol, xi, protocol)


def _propagate_single(input_pol, xi, n_slices, grid, protocol, t0, species):
    times = grid.times
    op = VolterraOperator(species, times, protocol, t0)
    n_nodes = sum(op.layout(times.size))
    x_delta = op.pre.resp.drive @ pol_vector(input_pol)
    zero = np.zeros((n_nodes, 2), dtype=complex)
    # response to the incident pulse alone: constant source term
    source = op.apply(x_delta, zero)
    no_delta = np.zeros_like(x_delta)

    def rhs(s: np.ndarray) -> np.ndarray:
        return -xi * (source + op.apply(no_delta, s))

    h = 1.0 / n_slices
    s = zero
    for _ in range(n_slices):
        k1 = rhs(s)
        k2 = rhs(s + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h * k2)
        k4 = rhs(s + h * k3)
        s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return op.to_grid(s)


def analytic_single_line(
    xi: float, grid: TimeGrid, *, gamma: float = DEFAULT_SPECIES.natural_width
) -> TimeSpectrum:
    """Closed-form envelope of an unsplit line for sigma input (test oracle).

    ``E(t) = -xi Gamma exp(-Gamma t / 2) J1(2 sqrt(u)) / sqrt(u)``, ``u = xi Gamma t``.
    """
    from scipy.special import j1

    if xi < 0:
        raise ValueError("optical depth must be >= 0")
    t = grid.times
    u = xi * gamma * t
    root = np.sqrt(u)
    ratio = np.where(u > 0, j1(2 * root) / np.where(u > 0, root, 1.0), 1.0)
    env = np.zeros((t.size, 2), dtype=complex)
    env[:, 0] = -xi * gamma * np.exp(-gamma * t / 2) * ratio
    return TimeSpectrum(grid, env, "sigma", xi, None)
