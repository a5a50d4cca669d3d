"""Unary gates, switching-time search, variant plans and the triggered CNOT.

Qubits are polarizations: "1" is sigma and "0" is pi.  A gate is realized by
one 90 degree field rotation at t0; photons emitted before t0 are lost and
the gate quality is the post-t0 purity toward the required output.

Switching times are chosen with the truncated series (multiple scattering
only before t0), which has a closed-form post-switch intensity.  Metrics are
then evaluated with the complete solution.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from scipy.linalg import expm

from .hyperfine import NuclearSpecies
from .rotation import Z_TO_X, EulerAngles
from .scattering.kernels import switched_response
from .scattering.series import chain_generator, order_weights, pol_vector, series_spectrum
from .scattering.slices import propagate
from .scattering.spectrum import SwitchProtocol, TimeGrid, TimeSpectrum, intensity

Pol = Literal["sigma", "pi"]
INPUTS: tuple[Pol, Pol] = ("sigma", "pi")
GATE_KINDS = ("identity", "negation", "true", "false")
OTHER = {"sigma": "pi", "pi": "sigma"}


class DegenerateWindowError(ValueError):
    """The integration window holds no scattered intensity."""


class SwitchTimeNotFound(LookupError):
    """No switching time in the window reaches the purity threshold."""


class InfeasiblePlan(LookupError):
    """A delay-line plan cannot align the inputs with non-negative delays."""


@dataclass(frozen=True)
class GateSpec:
    kind: str
    table: dict = field(compare=False, repr=False, default=None)

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate {self.kind!r}; expected one of {GATE_KINDS}")
        table = {
            "identity": {"sigma": "sigma", "pi": "pi"},
            "negation": {"sigma": "pi", "pi": "sigma"},
            "true": {"sigma": "sigma", "pi": "sigma"},
            "false": {"sigma": "pi", "pi": "pi"},
        }[self.kind]
        object.__setattr__(self, "table", table)

    def output(self, pol: Pol) -> Pol:
        return self.table[pol]

    @property
    def needs_switch(self) -> bool:
        return self.kind != "identity"


@dataclass(frozen=True)
class Setup:
    """Everything except the optical depth that fixes a simulation.

    ``solver`` selects the complete calculation used for metrics: the coupled
    scattering chain ("series") or the layer solver ("slices").
    """

    species: NuclearSpecies = NuclearSpecies()
    grid: TimeGrid = TimeGrid()
    p_max: int = 20
    angles: EulerAngles = Z_TO_X
    solver: Literal["series", "slices"] = "series"
    n_slices: int = 200

    def describe(self) -> dict:
        out = asdict(self)
        out["angles"] = list(self.angles.as_tuple())
        return out


DEFAULT_SETUP = Setup()


@lru_cache(maxsize=1024)
def full_spectrum(pol: Pol, xi: float, t0: float | None, setup: Setup = DEFAULT_SETUP) -> TimeSpectrum:
    """Complete forward-scattered spectrum, field rotated at ``t0`` (None: static)."""
    protocol = None if t0 is None else SwitchProtocol(t0, setup.angles)
    if setup.solver == "slices":
        return propagate(pol, xi, setup.n_slices, setup.grid, protocol, species=setup.species)
    return series_spectrum(
        pol, xi, setup.p_max, setup.grid, protocol, species=setup.species, after_switch=True
    )


# --- metrics -----------------------------------------------------------------


def _split_integral(times: np.ndarray, values: np.ndarray, t_cut: float) -> tuple[float, float]:
    """Integrals of ``values`` over [0, t_cut] and [t_cut, t_end].

    Intervals entirely on one side use the trapezoid rule.  The interval
    holding ``t_cut`` is split with each side held at its own end sample; a
    sample lying exactly at ``t_cut`` belongs to the right side, matching the
    spectra, whose sample at t0 carries the post-switch value.
    """
    if not times[0] <= t_cut <= times[-1]:
        raise ValueError(f"t_cut={t_cut} outside grid [{times[0]}, {times[-1]}]")
    k = int(np.searchsorted(times, t_cut, side="left"))  # first sample at or after t_cut
    if k == 0:
        return 0.0, float(np.trapezoid(values, times))
    left = float(np.trapezoid(values[:k], times[:k])) if k > 1 else 0.0
    right = float(np.trapezoid(values[k:], times[k:])) if times.size - k > 1 else 0.0
    left += values[k - 1] * (t_cut - times[k - 1])
    right += values[k] * (times[k] - t_cut)
    return float(left), float(right)


def purity(spectrum: TimeSpectrum, t_cut: float, target_pol: Pol) -> float:
    """Share of the post-``t_cut`` intensity carried by ``target_pol``."""
    times = spectrum.times
    _, wanted = _split_integral(times, spectrum.component_intensity(target_pol), t_cut)
    _, total = _split_integral(times, intensity(spectrum), t_cut)
    if total <= 0:
        raise DegenerateWindowError(f"no scattered intensity after t={t_cut} ns")
    return min(max(wanted / total, 0.0), 1.0)


def losses(spectrum: TimeSpectrum, t_cut: float) -> float:
    """Share of the scattered intensity emitted before ``t_cut``."""
    before, after = _split_integral(spectrum.times, intensity(spectrum), t_cut)
    if before + after <= 0:
        raise DegenerateWindowError("spectrum carries no intensity")
    return before / (before + after)


# --- truncated-series purity (selection model) ---------------------------------


class TruncatedPurity:
    """Post-switch purity in the truncated picture, as a function of t0.

    After the switch the order-summed coherence only radiates, so the
    post-t0 intensity of each polarization is a Hermitian form in that
    coherence with closed-form exponential integrals.
    """

    def __init__(self, pol: Pol, target: Pol, xi: float, setup: Setup = DEFAULT_SETUP):
        sw = switched_response(setup.species, setup.angles)
        self.setup = setup
        self.rates = sw.after.rates
        self.transfer = sw.transfer
        n = sw.before.n_modes
        self.gen = chain_generator(sw.before, setup.p_max)
        self.z0 = np.zeros(self.gen.shape[0], dtype=complex)
        self.z0[:n] = sw.before.drive @ pol_vector(pol)
        weights = order_weights(xi, setup.p_max)
        self.summing = np.hstack([w * np.eye(n) for w in weights])
        emit = sw.after.emit
        k = 0 if target == "sigma" else 1
        self.q_target = np.outer(emit[k].conj(), emit[k])
        self.q_total = emit.conj().T @ emit
        self.exponent = self.rates.conj()[:, None] + self.rates[None, :]

    def _from_state(self, coherence: np.ndarray, t0: np.ndarray) -> np.ndarray:
        y = coherence @ self.transfer.T  # (n_t0, modes) in the rotated eigenbasis
        span = self.setup.grid.t_end - t0
        factor = np.expm1(self.exponent[None] * span[:, None, None]) / self.exponent[None]
        num = np.einsum("ki,kij,kj->k", y.conj(), self.q_target[None] * factor, y).real
        den = np.einsum("ki,kij,kj->k", y.conj(), self.q_total[None] * factor, y).real
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)

    def __call__(self, t0: float) -> float:
        coherence = self.summing @ (expm(self.gen * t0) @ self.z0)
        return float(self._from_state(coherence[None], np.array([t0]))[0])

    def scan(self, start: float, step: float, count: int) -> np.ndarray:
        step_m = expm(self.gen * step)
        z = expm(self.gen * start) @ self.z0
        states = np.empty((count, self.summing.shape[0]), dtype=complex)
        for k in range(count):
            states[k] = self.summing @ z
            z = step_m @ z
        return self._from_state(states, start + step * np.arange(count))


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-4):
    """Maximize a unimodal ``f`` on [lo, hi]; returns (argmax, max)."""
    ratio = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - ratio * (b - a), a + ratio * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - ratio * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + ratio * (b - a)
            fd = f(d)
    x = (a + b) / 2
    best = max([(f(x), x), (f(lo), lo), (f(hi), hi)], key=lambda p: (p[0], -p[1]))
    return best[1], best[0]


@dataclass(frozen=True)
class Optimum:
    t0: float
    purity: float


@lru_cache(maxsize=256)
def local_optima(
    pol: Pol,
    target: Pol,
    xi: float,
    window: tuple[float, float],
    step: float,
    threshold: float,
    setup: Setup = DEFAULT_SETUP,
) -> tuple[Optimum, ...]:
    """Refined local maxima of the truncated purity that reach ``threshold``, earliest first."""
    lo, hi = window
    if step <= 0:
        raise ValueError("step must be > 0")
    if not 0 <= lo < hi <= setup.grid.t_end:
        raise ValueError(f"window {window} must lie inside the grid")
    model = TruncatedPurity(pol, target, xi, setup)
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    curve = model.scan(lo, step, count)
    ts = lo + step * np.arange(count)
    found = []
    for i in range(count):
        left = curve[i - 1] if i > 0 else -np.inf
        right = curve[i + 1] if i + 1 < count else -np.inf
        if not (curve[i] >= left and curve[i] > right):
            continue
        a, b = max(lo, ts[i] - step), min(hi, ts[i] + step)
        t_best, p_best = golden_section_max(model, a, b, tol=1e-4 * step)
        if p_best >= threshold:
            found.append(Optimum(float(t_best), float(p_best)))
    return tuple(found)


# --- gate search -------------------------------------------------------------


@dataclass
class GateReport:
    gate: str
    optical_depth: float
    protocol_free: bool
    t0_per_input: dict
    t0_average: float | None
    selection_purity: dict
    purity: dict
    probability_of_realization: dict
    losses: dict
    protocol: dict | None
    config: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _protocol_dict(t0: float, angles: EulerAngles) -> dict:
    return {"t0": t0, "angles": list(angles.as_tuple()), "ramp_duration": 0.0}


def _mutual_nearest(first, second) -> list[tuple[Optimum, Optimum]]:
    """Pairs of optima that are each other's nearest neighbour in time."""
    if not first or not second:
        return []

    def nearest(x: Optimum, pool) -> Optimum:
        return min(pool, key=lambda o: (abs(o.t0 - x.t0), o.t0))

    return [(a, nearest(a, second)) for a in first if nearest(nearest(a, second), first) is a]


def search_switch_time(
    gate: GateSpec,
    window: tuple[float, float] = (0.0, 100.0),
    step: float = 0.05,
    xi: float = 10.0,
    purity_threshold: float = 0.95,
    *,
    setup: Setup = DEFAULT_SETUP,
) -> GateReport:
    """Find a common switching time realizing ``gate`` for both inputs.

    Each input's local purity maxima are paired with the other input's
    nearest maximum (mutually nearest only); a pair qualifies when the
    truncated purity at the pair's mean time reaches the threshold for both
    inputs.  The earliest qualifying mean wins, since earlier switching
    loses fewer photons.  Reported purities are from the complete solution.
    """
    config = {
        "window": list(window),
        "step": step,
        "purity_threshold": purity_threshold,
        "setup": setup.describe(),
    }
    if not gate.needs_switch:
        metrics = {pol: purity(full_spectrum(pol, xi, None, setup), 0.0, pol) for pol in INPUTS}
        return GateReport(
            gate=gate.kind,
            optical_depth=xi,
            protocol_free=True,
            t0_per_input={pol: None for pol in INPUTS},
            t0_average=None,
            selection_purity=dict(metrics),
            purity=dict(metrics),
            probability_of_realization=dict(metrics),
            losses={pol: 0.0 for pol in INPUTS},
            protocol=None,
            config=config,
        )

    optima = {
        pol: local_optima(pol, gate.output(pol), xi, tuple(window), step, purity_threshold, setup)
        for pol in INPUTS
    }
    models = {pol: TruncatedPurity(pol, gate.output(pol), xi, setup) for pol in INPUTS}
    pairs = sorted(((a.t0 + b.t0) / 2, a, b) for a, b in _mutual_nearest(optima["sigma"], optima["pi"]))
    chosen = None
    for mean_t0, a, b in pairs:
        if min(models["sigma"](mean_t0), models["pi"](mean_t0)) >= purity_threshold:
            chosen = (mean_t0, a, b)
            break
    if chosen is None:
        raise SwitchTimeNotFound(
            f"no common switching time for {gate.kind} in {window} reaches {purity_threshold}"
        )
    mean_t0, best = chosen[0], {"sigma": chosen[1], "pi": chosen[2]}
    purities, realization, lost = {}, {}, {}
    for pol in INPUTS:
        target = gate.output(pol)
        purities[pol] = purity(full_spectrum(pol, xi, best[pol].t0, setup), best[pol].t0, target)
        at_mean = full_spectrum(pol, xi, mean_t0, setup)
        realization[pol] = purity(at_mean, mean_t0, target)
        lost[pol] = losses(at_mean, mean_t0)
    return GateReport(
        gate=gate.kind,
        optical_depth=xi,
        protocol_free=False,
        t0_per_input={pol: best[pol].t0 for pol in INPUTS},
        t0_average=mean_t0,
        selection_purity={pol: best[pol].purity for pol in INPUTS},
        purity=purities,
        probability_of_realization=realization,
        losses=lost,
        protocol=_protocol_dict(mean_t0, setup.angles),
        config=config,
    )


# --- timing jitter -----------------------------------------------------------


def _uniform(seed: int, *counter: int) -> float:
    # counter-based stream: each draw depends only on (seed, counter)
    return float(np.random.default_rng([seed, *counter]).random())


def realization_by_input(
    gate: GateSpec,
    t0: float,
    jitter_width: float,
    n_draws: int = 32,
    seed: int = 0,
    xi: float = 10.0,
    *,
    setup: Setup = DEFAULT_SETUP,
) -> dict:
    """Mean post-switch purity per input with the switch drawn from [t0, t0 + width]."""
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    if jitter_width < 0:
        raise ValueError("jitter_width must be >= 0")
    if jitter_width == 0:
        instants = [t0]
    else:
        instants = [t0 + jitter_width * _uniform(seed, k) for k in range(n_draws)]
    return {
        pol: float(
            np.mean(
                [purity(full_spectrum(pol, xi, t, setup), t, gate.output(pol)) for t in instants]
            )
        )
        for pol in INPUTS
    }


def realization_with_jitter(
    gate: GateSpec,
    t0: float,
    jitter_width: float,
    n_draws: int = 32,
    seed: int = 0,
    xi: float = 10.0,
    *,
    setup: Setup = DEFAULT_SETUP,
) -> float:
    """Probability of realization of the most affected input under switching jitter."""
    return min(realization_by_input(gate, t0, jitter_width, n_draws, seed, xi, setup=setup).values())


# --- delay line and split path -----------------------------------------------


@dataclass
class DelayLinePlan:
    gate: str
    common_t0: float
    delay: dict
    effective_t0: dict
    purity: dict
    losses_before: dict
    losses_after: dict
    config: dict

    def to_dict(self) -> dict:
        return asdict(self)


def delay_line_plan(
    gate: GateSpec,
    common_t0: float,
    xi: float = 10.0,
    *,
    window: tuple[float, float] = (0.0, 100.0),
    step: float = 0.05,
    purity_threshold: float = 0.95,
    tolerance: float = 0.5,
    setup: Setup = DEFAULT_SETUP,
) -> DelayLinePlan:
    """Delay each input so its own optimum coincides with the lab switch at ``common_t0``.

    An input excited ``d`` ns late sees the switch at ``common_t0 - d`` after
    its excitation.  Each input uses its latest optimum not after
    ``common_t0 + tolerance``; an optimum within ``tolerance`` after
    ``common_t0`` needs no delay.  Losses before are those of the
    single-target gate at its averaged switching time.
    """
    if not 0 <= common_t0 <= setup.grid.t_end:
        raise ValueError("common_t0 outside grid")
    baseline = search_switch_time(gate, window, step, xi, purity_threshold, setup=setup)
    delay, effective, purities, after = {}, {}, {}, {}
    for pol in INPUTS:
        if not gate.needs_switch:
            delay[pol], effective[pol] = 0.0, None
            purities[pol] = baseline.purity[pol]
            after[pol] = 0.0
            continue
        optima = local_optima(pol, gate.output(pol), xi, tuple(window), step, purity_threshold, setup)
        usable = [o for o in optima if o.t0 <= common_t0 + tolerance]
        if not usable:
            raise InfeasiblePlan(
                f"{pol} input has no optimum at or before {common_t0} ns; a negative delay is needed"
            )
        opt = usable[-1].t0
        delay[pol] = max(common_t0 - opt, 0.0)
        effective[pol] = common_t0 - delay[pol]
        spec = full_spectrum(pol, xi, effective[pol], setup)
        purities[pol] = purity(spec, effective[pol], gate.output(pol))
        after[pol] = losses(spec, effective[pol])
    return DelayLinePlan(
        gate=gate.kind,
        common_t0=common_t0,
        delay=delay,
        effective_t0=effective,
        purity=purities,
        losses_before=dict(baseline.losses),
        losses_after=after,
        config={"xi": xi, "window": list(window), "step": step, "tolerance": tolerance,
                "purity_threshold": purity_threshold, "setup": setup.describe()},
    )


@dataclass
class SplitPathPlan:
    gate: str
    t0: dict
    purity: dict
    losses: dict
    protocol_free: bool
    config: dict

    def to_dict(self) -> dict:
        return asdict(self)


def split_path_plan(
    gate: GateSpec,
    xi: float = 10.0,
    *,
    window: tuple[float, float] = (0.0, 100.0),
    step: float = 0.05,
    purity_threshold: float = 0.95,
    setup: Setup = DEFAULT_SETUP,
) -> SplitPathPlan:
    """Two targets, one per input polarization, each switched at its own optimum."""
    report = search_switch_time(gate, window, step, xi, purity_threshold, setup=setup)
    lost = {}
    for pol in INPUTS:
        t0 = report.t0_per_input[pol]
        lost[pol] = 0.0 if t0 is None else losses(full_spectrum(pol, xi, t0, setup), t0)
    return SplitPathPlan(
        gate=gate.kind,
        t0=dict(report.t0_per_input),
        purity=dict(report.purity),
        losses=lost,
        protocol_free=report.protocol_free,
        config=report.config,
    )


# --- triggered CNOT ----------------------------------------------------------


@dataclass(frozen=True)
class TriggerModel:
    """Detection of the control photon and the switch it fires.

    In ``predetermined_t0`` mode a detection schedules the rotation at
    ``switch_time``; in ``prompt_on_detection`` mode the rotation follows the
    control arrival after ``latency``.  ``jitter_sigma`` is the width of a
    uniform delay (or the standard deviation when ``jitter_distribution`` is
    "gaussian").
    """

    detection_probability: float = 1.0
    latency: float = 0.0
    jitter_sigma: float = 0.0
    mode: Literal["predetermined_t0", "prompt_on_detection"] = "predetermined_t0"
    switch_time: float = 22.3
    control_arrival: float = 22.3
    jitter_distribution: Literal["uniform", "gaussian"] = "uniform"

    def __post_init__(self) -> None:
        if not 0 <= self.detection_probability <= 1:
            raise ValueError("detection_probability must lie in [0, 1]")
        if self.latency < 0 or self.jitter_sigma < 0:
            raise ValueError("latency and jitter_sigma must be >= 0")
        if self.mode not in ("predetermined_t0", "prompt_on_detection"):
            raise ValueError(f"unknown trigger mode {self.mode!r}")
        if self.jitter_distribution not in ("uniform", "gaussian"):
            raise ValueError(f"unknown jitter distribution {self.jitter_distribution!r}")

    @property
    def nominal_t0(self) -> float:
        if self.mode == "predetermined_t0":
            return self.switch_time
        return self.control_arrival + self.latency

    def draw_t0(self, seed: int, *counter: int) -> float:
        if self.jitter_sigma == 0:
            return self.nominal_t0
        rng = np.random.default_rng([seed, *counter])
        if self.jitter_distribution == "uniform":
            offset = self.jitter_sigma * rng.random()
        else:
            offset = self.jitter_sigma * rng.standard_normal()
        return max(self.nominal_t0 + offset, 0.0)


@dataclass
class CnotOutcome:
    control: str
    target: str
    counts: dict
    probabilities: dict
    expected: dict
    success_probability: float
    n_trials: int
    seed: int
    trigger: dict

    def to_dict(self) -> dict:
        return asdict(self)


_ROW_CODE = {("sigma", "sigma"): 0, ("sigma", "pi"): 1, ("pi", "sigma"): 2, ("pi", "pi"): 3}


def simulate_cnot(
    control: Pol,
    target: Pol,
    trigger: TriggerModel = TriggerModel(),
    n_trials: int = 1000,
    seed: int = 0,
    xi: float = 10.0,
    *,
    setup: Setup = DEFAULT_SETUP,
) -> CnotOutcome:
    """Monte-Carlo run of the destructive CNOT for one (control, target) input.

    A sigma control passes the polarizer and, if detected, fires the
    negation rotation; a pi control never reaches the trigger.  Only target
    photons emitted after the nominal switching time are counted, and each
    is assigned an output polarization with its post-cut sigma share.
    ``expected`` mixes the triggered and untriggered shares analytically.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    pol_vector(control)
    pol_vector(target)
    t_cut = trigger.nominal_t0
    row = _ROW_CODE[(control, target)]
    counts = {"sigma": 0, "pi": 0}
    static_share = purity(full_spectrum(target, xi, None, setup), t_cut, "sigma")
    fired_shares = []
    for k in range(n_trials):
        fired = control == "sigma" and _uniform(seed, row, k, 0) < trigger.detection_probability
        if control == "sigma":
            t0 = trigger.draw_t0(seed, row, k, 1)
            fired_shares.append(purity(full_spectrum(target, xi, t0, setup), t_cut, "sigma"))
        share = fired_shares[-1] if fired else static_share
        out = "sigma" if _uniform(seed, row, k, 2) < share else "pi"
        counts[out] += 1
    # expectation over the trigger outcome, averaged over the drawn switching instants
    if control == "sigma":
        p_det = trigger.detection_probability
        expected_sigma = (1 - p_det) * static_share + p_det * float(np.mean(fired_shares))
    else:
        expected_sigma = static_share
    ideal = OTHER[target] if control == "sigma" else target
    return CnotOutcome(
        control=control,
        target=target,
        counts=counts,
        probabilities={pol: counts[pol] / n_trials for pol in INPUTS},
        expected={"sigma": expected_sigma, "pi": 1.0 - expected_sigma},
        success_probability=counts[ideal] / n_trials,
        n_trials=n_trials,
        seed=seed,
        trigger=asdict(trigger),
    )


def cnot_truth_table(
    trigger: TriggerModel = TriggerModel(),
    n_trials: int = 1000,
    seed: int = 0,
    xi: float = 10.0,
    *,
    setup: Setup = DEFAULT_SETUP,
) -> list[CnotOutcome]:
    return [
        simulate_cnot(c, t, trigger, n_trials, seed, xi, setup=setup)
        for c in INPUTS
        for t in INPUTS
    ]
