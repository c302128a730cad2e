"""Linear AC circuit simulator.

Two AC sources with a shared nominal amplitude but distinct phases drive a
series load (load 1) followed by two parallel loads (loads 2 and 3). Six
quantities are observable: both source voltages, their sum (the total emf),
the load-1 voltage, the shared parallel-load voltage, and the main-loop
current. A fault multiplies one intrinsic parameter (a source amplitude or
a load resistance) from a given onset timestep onward.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .util import rng_for

CHANNELS = ("v_src1", "v_src2", "emf_total", "v_load1", "v_load23", "current")
N_CHANNELS = len(CHANNELS)


class FaultTarget(enum.Enum):
    NONE = "none"
    SOURCE1_AMPLITUDE = "source1_amplitude"
    SOURCE2_AMPLITUDE = "source2_amplitude"
    LOAD1_RESISTANCE = "load1_resistance"
    LOAD2_RESISTANCE = "load2_resistance"
    LOAD3_RESISTANCE = "load3_resistance"


@dataclass(frozen=True)
class CircuitConfig:
    amplitude_nominal: float = 10.0
    phase1: float = 0.0
    phase2: float = math.pi / 3
    frequency: float = 50.0
    r1: float = 1.0
    r2: float = 2.0
    r3: float = 4.0
    sample_interval: float = 1e-3
    noise_sigma_rel: float = 0.005

    def __post_init__(self):
        if self.amplitude_nominal <= 0:
            raise ValueError("amplitude_nominal must be positive")
        if min(self.r1, self.r2, self.r3) <= 0:
            raise ValueError("resistances must be positive")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if self.sample_interval <= 0:
            raise ValueError("sample_interval must be positive")
        if not 0 <= self.noise_sigma_rel < 0.05:
            raise ValueError("noise_sigma_rel must lie in [0, 0.05)")

    @property
    def r_parallel(self) -> float:
        return self.r2 * self.r3 / (self.r2 + self.r3)

    def emf_amplitude(self, a1: float | None = None, a2: float | None = None) -> float:
        """Peak of a1*sin(wt+phi1) + a2*sin(wt+phi2) (phasor sum)."""
        a1 = self.amplitude_nominal if a1 is None else a1
        a2 = self.amplitude_nominal if a2 is None else a2
        dphi = self.phase1 - self.phase2
        return math.sqrt(a1 * a1 + a2 * a2 + 2 * a1 * a2 * math.cos(dphi))

    def nominal_channel_amplitudes(self) -> np.ndarray:
        """Noise-free peak value of each channel under nominal parameters."""
        a = self.amplitude_nominal
        e = self.emf_amplitude()
        i = e / (self.r1 + self.r_parallel)
        return np.array([a, a, e, i * self.r1, i * self.r_parallel, i])


@dataclass(frozen=True)
class FaultScenario:
    target: FaultTarget = FaultTarget.NONE
    multiplier: float = 1.0
    onset_index: int = 0

    def __post_init__(self):
        if self.multiplier <= 0:
            raise ValueError("multiplier must be positive")
        if self.target is FaultTarget.NONE and self.multiplier != 1.0:
            raise ValueError("target NONE requires multiplier 1.0")
        if self.onset_index < 0:
            raise ValueError("onset_index must be non-negative")

    def to_meta(self) -> dict:
        return {
            "target": self.target.value,
            "multiplier": self.multiplier,
            "onset": self.onset_index,
        }

    @staticmethod
    def from_meta(meta: dict) -> "FaultScenario":
        return FaultScenario(
            target=FaultTarget(meta["target"]),
            multiplier=float(meta["multiplier"]),
            onset_index=int(meta["onset"]),
        )


@dataclass(frozen=True)
class ActiveParams:
    a1: float
    a2: float
    r1: float
    r2: float
    r3: float

    @property
    def r_parallel(self) -> float:
        return self.r2 * self.r3 / (self.r2 + self.r3)


@dataclass(frozen=True)
class InstantState:
    v1: float
    v2: float
    e: float
    v_l1: float
    v_l23: float
    i: float

    def as_row(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.e, self.v_l1, self.v_l23, self.i])


@dataclass
class TimeSeriesWindow:
    """An M x 6 observation matrix plus the provenance needed to regenerate it."""

    values: np.ndarray
    config: CircuitConfig
    scenario: FaultScenario
    seed: int
    sample_id: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.values.shape[0]


def apply_fault(config: CircuitConfig, scenario: FaultScenario, t_index: int) -> ActiveParams:
    """Parameters in force at timestep t_index (fault active from its onset on)."""
    a1, a2 = config.amplitude_nominal, config.amplitude_nominal
    r1, r2, r3 = config.r1, config.r2, config.r3
    if scenario.target is not FaultTarget.NONE and t_index >= scenario.onset_index:
        m = scenario.multiplier
        if scenario.target is FaultTarget.SOURCE1_AMPLITUDE:
            a1 *= m
        elif scenario.target is FaultTarget.SOURCE2_AMPLITUDE:
            a2 *= m
        elif scenario.target is FaultTarget.LOAD1_RESISTANCE:
            r1 *= m
        elif scenario.target is FaultTarget.LOAD2_RESISTANCE:
            r2 *= m
        elif scenario.target is FaultTarget.LOAD3_RESISTANCE:
            r3 *= m
    return ActiveParams(a1=a1, a2=a2, r1=r1, r2=r2, r3=r3)


def solve_instant(active: ActiveParams, config: CircuitConfig, t: float) -> InstantState:
    """Kirchhoff solution of the loop at time t for the given parameters."""
    w = 2 * math.pi * config.frequency
    v1 = active.a1 * math.sin(w * t + config.phase1)
    v2 = active.a2 * math.sin(w * t + config.phase2)
    e = v1 + v2
    r_par = active.r_parallel
    i = e / (active.r1 + r_par)
    return InstantState(v1=v1, v2=v2, e=e, v_l1=i * active.r1, v_l23=i * r_par, i=i)


def simulate(
    config: CircuitConfig,
    scenario: FaultScenario,
    m: int,
    seed: int,
    noiseless: bool = False,
) -> TimeSeriesWindow:
    """Simulate m timesteps; same inputs always produce bit-identical output.

    Noise is i.i.d. Gaussian per element with std noise_sigma_rel times the
    nominal amplitude of the element's channel.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    t = np.arange(m) * config.sample_interval
    w = 2 * math.pi * config.frequency

    a1 = np.full(m, config.amplitude_nominal)
    a2 = np.full(m, config.amplitude_nominal)
    r1 = np.full(m, config.r1)
    r2 = np.full(m, config.r2)
    r3 = np.full(m, config.r3)
    if scenario.target is not FaultTarget.NONE:
        active = np.arange(m) >= scenario.onset_index
        mult = scenario.multiplier
        if scenario.target is FaultTarget.SOURCE1_AMPLITUDE:
            a1[active] *= mult
        elif scenario.target is FaultTarget.SOURCE2_AMPLITUDE:
            a2[active] *= mult
        elif scenario.target is FaultTarget.LOAD1_RESISTANCE:
            r1[active] *= mult
        elif scenario.target is FaultTarget.LOAD2_RESISTANCE:
            r2[active] *= mult
        elif scenario.target is FaultTarget.LOAD3_RESISTANCE:
            r3[active] *= mult

    v1 = a1 * np.sin(w * t + config.phase1)
    v2 = a2 * np.sin(w * t + config.phase2)
    e = v1 + v2
    r_par = r2 * r3 / (r2 + r3)
    i = e / (r1 + r_par)
    values = np.stack([v1, v2, e, i * r1, i * r_par, i], axis=1)

    if config.noise_sigma_rel > 0 and not noiseless:
        rng = rng_for(seed, "measurement-noise")
        sigma = config.noise_sigma_rel * config.nominal_channel_amplitudes()
        values = values + rng.standard_normal(values.shape) * sigma

    return TimeSeriesWindow(values=values, config=config, scenario=scenario, seed=seed)
