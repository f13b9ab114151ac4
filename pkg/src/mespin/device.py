"""ME-MTJ and ME-XNOR device models.

Writes drive the free layer(s) through the ME field; reads use transport
resistances. Polarity convention: a positive terminal voltage pushes the
magnet it drives toward -z, so on an ME-MTJ (pinned layer +z) positive writes
AP and negative writes P.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np
from scipy import constants

from . import magnetodynamics as md
from .transport import BarrierStack, LeadParams, resistances

EPS0 = constants.epsilon_0

WRITE_AXIS = (0.0, 0.0, -1.0)  # ME field direction for positive voltage
DEFAULT_V_WRITE = 0.2
DEFAULT_T_WRITE = 1.0e-9
SETTLED = 0.9

Mode = Literal["behavioral", "stochastic"]


class SequencingError(RuntimeError):
    """Operation issued while a magnet is still switching."""


@dataclass(frozen=True)
class CapacitorGeometry:
    area: float = md.MagnetParams().area
    t_ME: float = 1.0e-9
    eps_ME: float = 500.0

    def __post_init__(self):
        if self.area <= 0 or self.t_ME <= 0 or self.eps_ME <= 0:
            raise ValueError("capacitor area, thickness and permittivity must be > 0")

    @property
    def capacitance(self) -> float:
        return self.eps_ME * EPS0 * self.area / self.t_ME


def write_energy(cap: CapacitorGeometry, V: float, convention: str = "CV2") -> float:
    """Energy to charge and discharge the ME capacitor once (``"CV2"``) or ``"half"`` of it."""
    factor = {"CV2": 1.0, "half": 0.5}[convention]
    return factor * cap.capacitance * V * V


@dataclass
class EnergyReport:
    write_energy_per_bit: float = 0.0
    read_energy_per_bit: float = 0.0
    op_duration: float = 0.0
    n_bits: int = 1
    breakdown: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.write_energy_per_bit < 0 or self.read_energy_per_bit < 0:
            raise ValueError("energies must be non-negative")
        if any(v < 0 for v in self.breakdown.values()):
            raise ValueError("breakdown entries must be non-negative")

    @property
    def total(self) -> float:
        return (self.write_energy_per_bit + self.read_energy_per_bit) * self.n_bits

    @classmethod
    def from_parts(cls, write: dict[str, float], read: dict[str, float], n_bits: int, duration: float):
        """Build a report whose per-bit figures are the breakdown sums over ``n_bits``."""
        breakdown = {f"write:{k}": v for k, v in write.items()}
        breakdown.update({f"read:{k}": v for k, v in read.items()})
        n = max(1, n_bits)
        return cls(math.fsum(write.values()) / n, math.fsum(read.values()) / n, duration, n, breakdown)


@lru_cache(maxsize=128)
def nominal_resistances(stack: BarrierStack, leads: LeadParams, T_kelvin: float = 300.0) -> tuple[float, float]:
    return resistances(stack, leads, 0.0, T_kelvin)


def threshold_voltage(p: md.MagnetParams, stim: md.MEStimulus) -> float:
    """Voltage whose ME field equals the effective anisotropy field (collinear switching)."""
    if stim.alpha_ME == 0:
        return math.inf
    return max(p.H_K_eff, 0.0) * md.MU0 * stim.t_ME / stim.alpha_ME


@dataclass
class FreeLayer:
    params: md.MagnetParams = field(default_factory=md.MagnetParams)
    m: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        self.m = md.MagnetizationState(self.m).m

    @property
    def settled(self) -> bool:
        return abs(self.m[2]) >= SETTLED

    @property
    def up(self) -> bool:
        return self.m[2] > 0


def drive_layers(
    layers: Sequence[FreeLayer],
    voltages: Sequence[float],
    stimulus: md.MEStimulus,
    duration: float,
    cfg: md.SimConfig,
    trials: Sequence[int],
    mode: Mode = "behavioral",
) -> None:
    """Apply one write window to several magnets at once, in place.

    Behavioral mode flips a magnet to the polarity target when ``|V|`` exceeds
    the collinear threshold; stochastic mode integrates the LLG equation with an
    independent noise stream per ``trials`` entry. All layers must share params.
    """
    if not layers:
        return
    if mode == "behavioral":
        for layer, V in zip(layers, voltages):
            if V != 0 and abs(V) >= threshold_voltage(layer.params, stimulus):
                direction = np.asarray(stimulus.axis) * math.copysign(1.0, V)
                layer.m = direction.copy()
        return
    if mode != "stochastic":
        raise ValueError(f"unknown mode {mode!r}")
    p = layers[0].params
    if any(layer.params != p for layer in layers):
        raise ValueError("batched layers must share MagnetParams")
    m0 = np.stack([layer.m for layer in layers])
    m = md.evolve_batch(m0, p, [stimulus.with_voltage(V) for V in voltages], duration, cfg, trials)
    for layer, mm in zip(layers, m):
        layer.m = mm


@dataclass
class MEMTJDevice:
    magnet: FreeLayer = field(default_factory=FreeLayer)
    pinned: tuple[float, float, float] = (0.0, 0.0, 1.0)
    stack: BarrierStack = field(default_factory=BarrierStack)
    leads: LeadParams = field(default_factory=LeadParams)
    cap: CapacitorGeometry = field(default_factory=CapacitorGeometry)
    stimulus: md.MEStimulus = field(default_factory=lambda: md.MEStimulus(axis=WRITE_AXIS))
    energy_convention: str = "CV2"

    @property
    def state(self) -> str | None:
        """'P', 'AP', or None while in flight."""
        proj = float(np.dot(self.magnet.m, self.pinned))
        if proj >= SETTLED:
            return "P"
        if proj <= -SETTLED:
            return "AP"
        return None

    def resistance(self, state: str | None = None) -> float:
        state = state or self._settled_state()
        r_p, r_ap = nominal_resistances(self.stack, self.leads)
        return r_p if state == "P" else r_ap

    def _settled_state(self) -> str:
        s = self.state
        if s is None:
            raise SequencingError(f"free layer unsettled (m_z={self.magnet.m[2]:.3f})")
        return s

    def write_pulse(
        self,
        V: float,
        duration: float = DEFAULT_T_WRITE,
        cfg: md.SimConfig | None = None,
        mode: Mode = "stochastic",
        trial_index: int = 0,
    ) -> tuple[str | None, float]:
        """Apply a rectangular ME pulse; returns (new state, write energy in J)."""
        if duration <= 0:
            raise ValueError("duration must be > 0")
        cfg = cfg or md.SimConfig(duration=duration)
        drive_layers([self.magnet], [V], self.stimulus, duration, cfg, [trial_index], mode)
        return self.state, write_energy(self.cap, V, self.energy_convention)

    def read_current(self, V_read: float, R_series: float = 0.0, state: str | None = None) -> float:
        return V_read / (self.resistance(state) + R_series)

    def reference_current(self, V_read: float, R_series: float = 0.0) -> float:
        """Geometric mean of nominal P and AP read currents."""
        return math.sqrt(
            self.read_current(V_read, R_series, "P") * self.read_current(V_read, R_series, "AP")
        )

    def read(
        self, V_read: float, t_read: float, R_series: float = 0.0, I_ref: float | None = None
    ) -> tuple[str, float]:
        """Sense the stored state; returns ('P' | 'AP', read energy in J)."""
        I = self.read_current(V_read, R_series)
        if I_ref is None:
            I_ref = self.reference_current(V_read, R_series)
        bit = "P" if I > I_ref else "AP"
        return bit, V_read * I * t_read


@dataclass
class MEXNORDevice:
    top: FreeLayer = field(default_factory=FreeLayer)
    bottom: FreeLayer = field(default_factory=FreeLayer)
    top_cap: CapacitorGeometry = field(default_factory=CapacitorGeometry)
    bottom_cap: CapacitorGeometry = field(default_factory=CapacitorGeometry)
    stack: BarrierStack = field(default_factory=BarrierStack)
    leads: LeadParams = field(default_factory=LeadParams)
    stimulus: md.MEStimulus = field(default_factory=lambda: md.MEStimulus(axis=WRITE_AXIS))
    energy_convention: str = "CV2"

    @property
    def settled(self) -> bool:
        return self.top.settled and self.bottom.settled

    @property
    def config(self) -> str:
        if not self.settled:
            raise SequencingError("ME-XNOR magnets unsettled")
        return "P" if self.top.up == self.bottom.up else "AP"

    def write(
        self,
        V1: float,
        V2: float,
        duration: float = DEFAULT_T_WRITE,
        cfg: md.SimConfig | None = None,
        mode: Mode = "behavioral",
        trial_index: int = 0,
    ) -> float:
        """Drive terminal 1 (top) and terminal 2 (bottom); returns write energy in J.

        A zero voltage holds that magnet (in stochastic mode it still feels
        thermal noise). Stochastic trials use streams 2k and 2k+1.
        """
        cfg = cfg or md.SimConfig(duration=duration)
        drive_layers(
            [self.top, self.bottom], [V1, V2], self.stimulus, duration, cfg,
            [2 * trial_index, 2 * trial_index + 1], mode,
        )
        return write_energy(self.top_cap, V1, self.energy_convention) + write_energy(
            self.bottom_cap, V2, self.energy_convention
        )

    def resistance(self) -> float:
        r_p, r_ap = nominal_resistances(self.stack, self.leads)
        return r_p if self.config == "P" else r_ap

    def read(self, V_read: float = 0.0) -> tuple[str, float]:
        """('match' | 'mismatch', resistance); match is the low-resistance P state."""
        R = self.resistance()
        return ("match" if self.config == "P" else "mismatch"), R


def xnor_write(dev: MEXNORDevice, V1: float, V2: float, duration: float = DEFAULT_T_WRITE,
               cfg: md.SimConfig | None = None, mode: Mode = "behavioral", trial_index: int = 0):
    dev.write(V1, V2, duration, cfg, mode, trial_index)
    return dev


def xnor_write_batch(
    devs: Sequence[MEXNORDevice],
    V1s: Sequence[float],
    V2s: Sequence[float],
    duration: float = DEFAULT_T_WRITE,
    cfg: md.SimConfig | None = None,
    mode: Mode = "stochastic",
    trial_indices: Sequence[int] | None = None,
) -> list[float]:
    """Write many ME-XNOR devices in one window; same streams as ``MEXNORDevice.write``."""
    if not (len(devs) == len(V1s) == len(V2s)):
        raise ValueError("need one voltage pair per device")
    cfg = cfg or md.SimConfig(duration=duration)
    ks = list(range(len(devs))) if trial_indices is None else list(trial_indices)
    stim = devs[0].stimulus if devs else None
    if any(d.stimulus != stim for d in devs):
        raise ValueError("batched devices must share the ME stimulus template")
    layers, volts, trials = [], [], []
    for d, v1, v2, k in zip(devs, V1s, V2s, ks):
        layers += [d.top, d.bottom]
        volts += [v1, v2]
        trials += [2 * k, 2 * k + 1]
    drive_layers(layers, volts, stim, duration, cfg, trials, mode)
    return [
        write_energy(d.top_cap, v1, d.energy_convention) + write_energy(d.bottom_cap, v2, d.energy_convention)
        for d, v1, v2 in zip(devs, V1s, V2s)
    ]


def xnor_read(dev: MEXNORDevice, V_read: float = 0.0) -> tuple[str, float]:
    return dev.read(V_read)
