"""Content-addressable memory built from ME-XNOR cells.

The stored bit lives in the top magnet and the search key bit in the bottom
magnet, so each cell's tunnel junction is P exactly when the two agree. A
reference MTJ and the cell form a divider feeding an inverter; a row's
precharged match line falls only when every inverter in the row is high.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import magnetodynamics as md
from .device import (
    DEFAULT_T_WRITE,
    DEFAULT_V_WRITE,
    WRITE_AXIS,
    CapacitorGeometry,
    EnergyReport,
    FreeLayer,
    MEXNORDevice,
    Mode,
    drive_layers,
    nominal_resistances,
    write_energy,
)
from .memory_array import _bits
from .transport import BarrierStack, LeadParams

DEFAULT_V_READ = 1.0
DEFAULT_V_DD = 1.0
TARGET_READ_ENERGY = 15e-15  # J per bit, mean of match and mismatch cells
# read pulse width; calibrate_t_read() at default stack and V_READ = 1 V
T_READ = 5.491746383509244e-10


def reference_resistance(r_p: float, r_ap: float) -> float:
    """Geometric mean of the two junction states."""
    return math.sqrt(r_p * r_ap)


def divider_voltage(V_read: float, ref_mtj: float, R_cell: float) -> float:
    """Node between the reference (supply side) and the cell (ground side)."""
    return V_read * R_cell / (ref_mtj + R_cell)


def divider_margin(r_p: float, r_ap: float, ref_mtj: float | None = None) -> float:
    """Node separation between AP and P cells as a fraction of V_READ."""
    ref = reference_resistance(r_p, r_ap) if ref_mtj is None else ref_mtj
    return divider_voltage(1.0, ref, r_ap) - divider_voltage(1.0, ref, r_p)


def read_energy_per_bit(V_read: float, ref_mtj: float, R_cell: float, t_read: float, overhead: float = 0.0) -> float:
    return V_read * V_read / (ref_mtj + R_cell) * t_read + overhead


def calibrate_t_read(
    target: float = TARGET_READ_ENERGY,
    V_read: float = DEFAULT_V_READ,
    stack: BarrierStack | None = None,
    leads: LeadParams | None = None,
    overhead: float = 0.0,
) -> float:
    """Read pulse width giving ``target`` J per bit averaged over match and mismatch."""
    r_p, r_ap = nominal_resistances(stack or BarrierStack(), leads or LeadParams())
    ref = reference_resistance(r_p, r_ap)
    per_second = 0.5 * V_read * V_read * (1.0 / (ref + r_p) + 1.0 / (ref + r_ap))
    if target <= overhead:
        raise ValueError("target energy must exceed the fixed overhead")
    return (target - overhead) / per_second


@dataclass
class CAMCell:
    device: MEXNORDevice
    ref_mtj: float
    inverter_threshold: float = 0.5  # fraction of V_READ

    def __post_init__(self):
        r_p, r_ap = nominal_resistances(self.device.stack, self.device.leads)
        if not r_p < self.ref_mtj < r_ap:
            raise ValueError(f"ref_mtj {self.ref_mtj} must lie between R_P {r_p} and R_AP {r_ap}")
        if not 0 < self.inverter_threshold < 1:
            raise ValueError("inverter_threshold must be in (0, 1)")


def evaluate_cell(cell: CAMCell, V_read: float) -> tuple[bool, float]:
    """(inverter output high, divider node voltage); unsettled magnets raise SequencingError."""
    _, R = cell.device.read(V_read)
    v = divider_voltage(V_read, cell.ref_mtj, R)
    return v < cell.inverter_threshold * V_read, v


@dataclass(frozen=True)
class MatchResult:
    matchline_low: tuple[bool, ...]
    per_cell_inverter: tuple[tuple[bool, ...], ...]
    energy: EnergyReport

    @property
    def matches(self) -> list[int]:
        return [r for r, low in enumerate(self.matchline_low) if low]


@dataclass(eq=False)
class CAMArray:
    rows: int
    word_width: int
    params: md.MagnetParams = field(default_factory=md.MagnetParams)
    stack: BarrierStack = field(default_factory=BarrierStack)
    leads: LeadParams = field(default_factory=LeadParams)
    cap: CapacitorGeometry = field(default_factory=CapacitorGeometry)
    stimulus: md.MEStimulus = field(default_factory=lambda: md.MEStimulus(axis=WRITE_AXIS))
    V_READ: float = DEFAULT_V_READ
    t_read: float = T_READ
    V_DD: float = DEFAULT_V_DD
    V_write: float = DEFAULT_V_WRITE
    t_write: float = DEFAULT_T_WRITE
    ref_mtj: float | None = None
    inverter_threshold: float = 0.5
    read_overhead: float = 0.0  # J per bit for inverter and match line
    mode: Mode = "behavioral"
    cfg: md.SimConfig | None = None
    energy_convention: str = "CV2"

    def __post_init__(self):
        if self.rows < 1 or self.word_width < 1:
            raise ValueError("rows and word_width must be >= 1")
        if self.t_read <= 0 or self.t_write <= 0 or self.read_overhead < 0:
            raise ValueError("pulse widths must be > 0 and overhead >= 0")
        if self.mode not in ("behavioral", "stochastic"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.ref_mtj is None:
            self.ref_mtj = reference_resistance(*nominal_resistances(self.stack, self.leads))
        self.cells = [
            [
                CAMCell(
                    MEXNORDevice(
                        top=FreeLayer(self.params), bottom=FreeLayer(self.params),
                        top_cap=self.cap, bottom_cap=self.cap, stack=self.stack, leads=self.leads,
                        stimulus=self.stimulus, energy_convention=self.energy_convention,
                    ),
                    self.ref_mtj,
                    self.inverter_threshold,
                )
                for _ in range(self.word_width)
            ]
            for _ in range(self.rows)
        ]
        if self.cfg is None:
            self.cfg = md.SimConfig(duration=self.t_write)
        self._ops = 0

    def _check_row(self, row: int):
        if not 0 <= row < self.rows:
            raise IndexError(f"row {row} out of range [0, {self.rows})")

    def _drive(self, targets: list[tuple[FreeLayer, int]]) -> dict[str, float]:
        """One write window on the listed magnets; returns per-magnet energies."""
        volts = [self.V_write if b else -self.V_write for _, b in targets]
        base = self._ops * 2 * self.rows * self.word_width
        self._ops += 1
        drive_layers(
            [layer for layer, _ in targets], volts, self.stimulus, self.t_write, self.cfg,
            [base + k for k in range(len(targets))], self.mode,
        )
        return {str(k): write_energy(self.cap, v, self.energy_convention) for k, v in enumerate(volts)}

    def store_word(self, row: int, bits) -> float:
        """Write ``bits`` into the top magnets of ``row``; returns energy in J."""
        self._check_row(row)
        bits = _bits(bits, self.word_width)
        parts = self._drive([(cell.device.top, b) for cell, b in zip(self.cells[row], bits)])
        return math.fsum(parts.values())

    def input_key(self, bits) -> float:
        """Write ``bits`` into the bottom magnets of every row; returns energy in J."""
        bits = _bits(bits, self.word_width)
        targets = [(cell.device.bottom, b) for row in self.cells for cell, b in zip(row, bits)]
        return math.fsum(self._drive(targets).values())

    def stored_words(self) -> list[tuple[int, ...]]:
        return [tuple(int(not c.device.top.up) for c in row) for row in self.cells]

    def search(self, key) -> MatchResult:
        write = self.input_key(key)
        inverters, lows, read = [], [], {}
        for r, row in enumerate(self.cells):
            outs = []
            for c, cell in enumerate(row):
                high, _ = evaluate_cell(cell, self.V_READ)
                outs.append(high)
                R = cell.device.resistance()
                read[f"r{r}c{c}"] = read_energy_per_bit(
                    self.V_READ, cell.ref_mtj, R, self.t_read, self.read_overhead
                )
            inverters.append(tuple(outs))
            # any low inverter leaves its p-MOS on and holds the precharge
            lows.append(all(outs))
        n = self.rows * self.word_width
        report = EnergyReport.from_parts({"key": write}, read, n, self.t_write + self.t_read)
        return MatchResult(tuple(lows), tuple(inverters), report)

    def row_read_energy(self, result: MatchResult, row: int) -> float:
        """Mean per-bit read energy of one row of a search."""
        vals = [result.energy.breakdown[f"read:r{row}c{c}"] for c in range(self.word_width)]
        return math.fsum(vals) / self.word_width


def search(arr: CAMArray, key) -> MatchResult:
    return arr.search(key)


def brute_force_match(stored: list[tuple[int, ...]], key) -> tuple[bool, ...]:
    """Oracle: a row matches iff every stored bit equals the key bit."""
    key = tuple(key)
    return tuple(all(s == k for s, k in zip(word, key)) for word in stored)
