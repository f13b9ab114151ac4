"""Dual-port ME-MTJ memory array.

Each bit cell is one ME-MTJ with a write transistor (ME capacitor path) and a
read transistor (tunnel path). Bit 1 is stored as AP and written with a
positive voltage; bit 0 is P. Unselected cells float at 0 V and are untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import magnetodynamics as md
from .device import (
    DEFAULT_T_WRITE,
    DEFAULT_V_WRITE,
    WRITE_AXIS,
    CapacitorGeometry,
    EnergyReport,
    FreeLayer,
    MEMTJDevice,
    Mode,
    drive_layers,
    nominal_resistances,
    write_energy,
)
from .transport import BarrierStack, LeadParams, series_transistor_resistance

DEFAULT_V_READ = 0.2
DEFAULT_T_READ = 0.5e-9
DEFAULT_W_OVER_L = 4.0


class PortConflictError(ValueError):
    """Simultaneous read and write addressed to the same row."""


@dataclass(frozen=True)
class AccessResult:
    data: tuple[int, ...]
    energy: EnergyReport
    latency: float


def sense(I_cell: float, I_ref: float) -> str:
    """'P' when the cell conducts more than the reference, else 'AP'."""
    if I_cell < 0:
        raise ValueError("cell current must be >= 0")
    return "P" if I_cell > I_ref else "AP"


def _bits(data, n: int) -> tuple[int, ...]:
    if isinstance(data, str):
        data = [int(c) for c in data]
    bits = tuple(int(b) for b in data)
    if len(bits) != n:
        raise ValueError(f"expected {n} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    return bits


@dataclass(eq=False)
class DualPortArray:
    rows: int
    cols: int
    params: md.MagnetParams = field(default_factory=md.MagnetParams)
    stack: BarrierStack = field(default_factory=BarrierStack)
    leads: LeadParams = field(default_factory=LeadParams)
    cap: CapacitorGeometry = field(default_factory=CapacitorGeometry)
    stimulus: md.MEStimulus = field(default_factory=lambda: md.MEStimulus(axis=WRITE_AXIS))
    V_write: float = DEFAULT_V_WRITE
    V_read: float = DEFAULT_V_READ
    t_write: float = DEFAULT_T_WRITE
    t_read: float = DEFAULT_T_READ
    w_over_l_write: float = DEFAULT_W_OVER_L
    w_over_l_read: float = DEFAULT_W_OVER_L
    I_ref: float | None = None
    mode: Mode = "behavioral"
    cfg: md.SimConfig | None = None
    energy_convention: str = "CV2"

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if self.t_write <= 0 or self.t_read <= 0:
            raise ValueError("pulse durations must be > 0")
        if self.mode not in ("behavioral", "stochastic"):
            raise ValueError(f"unknown mode {self.mode!r}")
        self.R_write_tx = series_transistor_resistance(self.w_over_l_write)
        self.R_read_tx = series_transistor_resistance(self.w_over_l_read)
        self.cells = [
            [
                MEMTJDevice(
                    magnet=FreeLayer(self.params), stack=self.stack, leads=self.leads,
                    cap=self.cap, stimulus=self.stimulus, energy_convention=self.energy_convention,
                )
                for _ in range(self.cols)
            ]
            for _ in range(self.rows)
        ]
        if self.I_ref is None:
            self.I_ref = self.cells[0][0].reference_current(self.V_read, self.R_read_tx)
        if self.cfg is None:
            self.cfg = md.SimConfig(duration=self.t_write)
        self._ops = 0

    # -- helpers -----------------------------------------------------------

    def _check_row(self, row: int):
        if not 0 <= row < self.rows:
            raise IndexError(f"row {row} out of range [0, {self.rows})")

    @property
    def window(self) -> float:
        """Duration of one dual-port access window."""
        return max(self.t_write, self.t_read)

    def throughput(self, dual_port: bool = True) -> float:
        """Row operations per second: two per window dual-port, one single-port."""
        return (2.0 if dual_port else 1.0) / self.window

    def stored(self) -> list[tuple[int, ...]]:
        """Stored bits per row, read from the magnet states directly."""
        return [tuple(int(c._settled_state() == "AP") for c in row) for row in self.cells]

    # -- operations --------------------------------------------------------

    def write_row(self, row: int, data, latency: float | None = None) -> AccessResult:
        self._check_row(row)
        bits = _bits(data, self.cols)
        volts = [self.V_write if b else -self.V_write for b in bits]
        cells = self.cells[row]
        base = self._ops * self.rows * self.cols + row * self.cols
        self._ops += 1
        drive_layers(
            [c.magnet for c in cells], volts, self.stimulus, self.t_write, self.cfg,
            [base + k for k in range(self.cols)], self.mode,
        )
        parts = {
            f"r{row}c{k}": write_energy(self.cap, v, self.energy_convention) for k, v in enumerate(volts)
        }
        report = EnergyReport.from_parts(parts, {}, self.cols, self.t_write)
        return AccessResult(bits, report, self.t_write if latency is None else latency)

    def read_row(self, row: int, latency: float | None = None) -> AccessResult:
        self._check_row(row)
        bits, parts = [], {}
        for k, cell in enumerate(self.cells[row]):
            I = cell.read_current(self.V_read, self.R_read_tx)
            bits.append(int(sense(I, self.I_ref) == "AP"))
            parts[f"r{row}c{k}"] = self.V_read * I * self.t_read
        report = EnergyReport.from_parts({}, parts, self.cols, self.t_read)
        return AccessResult(tuple(bits), report, self.t_read if latency is None else latency)

    def simultaneous_access(self, write_row: int, data, read_row: int) -> tuple[AccessResult, AccessResult]:
        """Write one row and read another in the same window."""
        self._check_row(write_row)
        self._check_row(read_row)
        if write_row == read_row:
            raise PortConflictError(f"read and write both address row {write_row}")
        # distinct rows share no device, so evaluation order is immaterial
        r = self.read_row(read_row, latency=self.window)
        w = self.write_row(write_row, data, latency=self.window)
        return w, r


def sense_margin(arr: DualPortArray) -> float:
    """min(|I_P - I_ref|, |I_AP - I_ref|) for the array's nominal resistances."""
    r_p, r_ap = nominal_resistances(arr.stack, arr.leads)
    i_p = arr.V_read / (r_p + arr.R_read_tx)
    i_ap = arr.V_read / (r_ap + arr.R_read_tx)
    return min(abs(i_p - arr.I_ref), abs(i_ap - arr.I_ref))


def write_error_rate(arr: DualPortArray, patterns: Sequence[Sequence[int]], row: int = 0) -> float:
    """Fraction of cells not settled in the written state after each pattern write."""
    wrong = total = 0
    for bits in patterns:
        arr.write_row(row, bits)
        for b, cell in zip(bits, arr.cells[row]):
            wrong += cell.state != ("AP" if b else "P")
            total += 1
    return wrong / total if total else math.nan
