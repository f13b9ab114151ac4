"""1D spin-resolved tight-binding NEGF transport through an FM/MgO/FM stack.

Energies are in eV, measured from the majority band bottom of the left lead.
Each spin channel is a single 1D mode; junction conductance is the per-mode
value times a transverse mode count (``mode_density * cross_section``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Literal

import numpy as np
from scipy import constants, integrate

Q = constants.e
H_PLANCK = constants.h
G_QUANTUM = Q * Q / H_PLANCK  # conductance quantum per spin, S
KB_EV = constants.k / constants.e
HBAR2_2M0 = constants.hbar**2 / (2.0 * constants.m_e) / constants.e  # eV m^2

ETA = 1e-9  # eV, retry broadening at an exact pole

DEFAULT_CROSS_SECTION = math.pi * (11.25e-9) ** 2
# transverse modes per m^2; fixed by calibrate_mode_density so that R_P(1.2 nm, 300 K)
# plus a W/L = 4 read transistor gives the 15.4 kOhm read path
DEFAULT_MODE_DENSITY = 2.64963464976291e17
R_UNIT = 5.0e3  # ohm, transistor on-resistance at W/L = 1

Channel = Literal["up", "down"]
CHANNELS: tuple[Channel, Channel] = ("up", "down")


@dataclass(frozen=True)
class LeadParams:
    E_F: float = 2.25
    delta_ex: float = 2.15
    m_eff: float = 0.73

    def __post_init__(self):
        if self.E_F <= 0:
            raise ValueError("E_F must be > 0")
        if self.delta_ex < 0:
            raise ValueError("delta_ex must be >= 0")
        if self.m_eff <= 0:
            raise ValueError("m_eff must be > 0")

    def band_bottom(self, spin: Channel) -> float:
        return 0.0 if spin == "up" else self.delta_ex


@dataclass(frozen=True)
class BarrierStack:
    t_MgO: float = 1.2e-9
    U_B: float = 0.2
    m_barrier: float = 1.1
    a: float = 0.2e-9
    cross_section: float = DEFAULT_CROSS_SECTION
    magnetic_config: Literal["P", "AP"] = "P"
    mode_density: float = DEFAULT_MODE_DENSITY

    def __post_init__(self):
        if self.t_MgO <= 0 or self.a <= 0:
            raise ValueError("t_MgO and a must be > 0")
        n = self.t_MgO / self.a
        if abs(n - round(n)) > 1e-6 or round(n) < 1:
            raise ValueError(f"t_MgO={self.t_MgO} is not a positive multiple of a={self.a}")
        if self.U_B <= 0:
            raise ValueError("U_B must be > 0")
        if self.m_barrier <= 0:
            raise ValueError("m_barrier must be > 0")
        if self.cross_section <= 0 or self.mode_density <= 0:
            raise ValueError("cross_section and mode_density must be > 0")
        if self.magnetic_config not in ("P", "AP"):
            raise ValueError(f"magnetic_config must be 'P' or 'AP', got {self.magnetic_config!r}")

    @property
    def n_sites(self) -> int:
        return int(round(self.t_MgO / self.a))

    @property
    def n_modes(self) -> float:
        return self.mode_density * self.cross_section


@dataclass(frozen=True)
class TransmissionSpectrum:
    energies: np.ndarray
    T_per_channel: dict[str, np.ndarray]


def hopping(m_eff: float, a: float) -> float:
    """Nearest-neighbour hopping hbar^2 / (2 m a^2) in eV."""
    return HBAR2_2M0 / (m_eff * a * a)


# ---------------------------------------------------------------------------
# Green's function core
# ---------------------------------------------------------------------------


def lead_self_energy(E, band_bottom: float, t0: float) -> complex:
    """Surface self-energy of a semi-infinite 1D lead, -t0 exp(ika).

    Outside the band the decaying (|exp(ika)| < 1) real branch is returned.
    """
    if t0 <= 0:
        raise ValueError("t0 must be > 0")
    c = 1.0 - (E - band_bottom) / (2.0 * t0)
    if np.iscomplexobj(c) and np.imag(c) != 0:
        z = c + 1j * np.sqrt(1.0 - c * c)
        if abs(z) > 1:
            z = c - 1j * np.sqrt(1.0 - c * c)
        return complex(-t0 * z)
    c = float(np.real(c))
    if -1.0 <= c <= 1.0:
        return complex(-t0 * complex(c, math.sqrt(1.0 - c * c)))
    if c > 1.0:
        return complex(-t0 * (c - math.sqrt(c * c - 1.0)))
    return complex(-t0 * (c + math.sqrt(c * c - 1.0)))


@dataclass(frozen=True)
class Chain:
    """Device region between two semi-infinite leads.

    ``potential[i]`` is the band-bottom potential of site i, ``hop[i]`` couples
    site i-1 to site i (``hop[0]`` and ``hop[-1]`` couple to the leads, which
    share the hopping of their own material).
    """

    potential: np.ndarray
    hop: np.ndarray
    left_bottom: float
    right_bottom: float

    def hamiltonian(self) -> np.ndarray:
        n = len(self.potential)
        H = np.diag(self.potential + self.hop[:-1] + self.hop[1:])
        off = -self.hop[1:-1]
        H[np.arange(n - 1), np.arange(1, n)] = off
        H[np.arange(1, n), np.arange(n - 1)] = off
        return H

    def reversed(self) -> "Chain":
        return Chain(self.potential[::-1].copy(), self.hop[::-1].copy(), self.right_bottom, self.left_bottom)


def chain_transmission(E: float, chain: Chain) -> float:
    """Landauer transmission Gamma_1 |G_1N|^2 Gamma_2 at energy E."""
    t_l, t_r = chain.hop[0], chain.hop[-1]
    H = chain.hamiltonian()
    n = H.shape[0]
    for shift in (0.0, 1j * ETA):
        Ec = E + shift
        s1 = lead_self_energy(Ec, chain.left_bottom, t_l)
        s2 = lead_self_energy(Ec, chain.right_bottom, t_r)
        g1 = -2.0 * s1.imag
        g2 = -2.0 * s2.imag
        if g1 <= 0 or g2 <= 0:
            return 0.0
        A = Ec * np.eye(n, dtype=complex) - H
        A[0, 0] -= s1
        A[-1, -1] -= s2
        rhs = np.zeros(n, dtype=complex)
        rhs[-1] = 1.0
        try:
            col = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            continue
        T = g1 * g2 * abs(col[0]) ** 2
        return float(min(max(T, 0.0), 1.0))
    raise np.linalg.LinAlgError(f"singular device Green's function at E={E}")


def build_chain(
    stack: BarrierStack,
    leads: LeadParams,
    channel: Channel,
    V_bias: float = 0.0,
) -> Chain:
    """Discretize FM | MgO | FM for one spin channel.

    One ferromagnet site sits on each side of the barrier so that interfaces
    (mass and potential steps) are inside the device region. Hoppings across a
    mass step use the mean of the two masses. The bias drops linearly across the
    barrier; the right electrode sits at -V_bias.
    """
    nb = stack.n_sites
    left = leads.band_bottom(channel)
    if stack.magnetic_config == "P":
        right = left
    else:
        right = leads.band_bottom("down" if channel == "up" else "up")
    right -= V_bias

    t_f = hopping(leads.m_eff, stack.a)
    t_b = hopping(stack.m_barrier, stack.a)
    t_c = hopping(0.5 * (leads.m_eff + stack.m_barrier), stack.a)

    top = leads.E_F + stack.U_B
    ramp = -V_bias * np.arange(1, nb + 1) / (nb + 1)
    potential = np.concatenate(([left], top + ramp, [right]))
    hop = np.concatenate(([t_f, t_c], np.full(nb - 1, t_b), [t_c, t_f]))
    return Chain(potential, hop, left, right)


def transmission(
    E: float,
    stack: BarrierStack,
    leads: LeadParams,
    channel: Channel,
    V_bias: float = 0.0,
) -> float:
    return chain_transmission(E, build_chain(stack, leads, channel, V_bias))


def transmission_spectrum(
    energies: Iterable[float], stack: BarrierStack, leads: LeadParams, V_bias: float = 0.0
) -> TransmissionSpectrum:
    E = np.asarray(list(energies), dtype=float)
    T = {ch: np.array([transmission(e, stack, leads, ch, V_bias) for e in E]) for ch in CHANNELS}
    return TransmissionSpectrum(E, T)


# ---------------------------------------------------------------------------
# conductance and resistance
# ---------------------------------------------------------------------------


def _fermi(E, mu, kT):
    return 0.5 * (1.0 - np.tanh((E - mu) / (2.0 * kT)))


def _thermal_kernel(E, mu, kT):
    # -df/dE
    return 1.0 / (4.0 * kT * np.cosh((E - mu) / (2.0 * kT)) ** 2)


def _breakpoints(chain: Chain, lo: float, hi: float) -> list[float]:
    pts = []
    for bottom, t in ((chain.left_bottom, chain.hop[0]), (chain.right_bottom, chain.hop[-1])):
        for edge in (bottom, bottom + 4.0 * t):
            if lo < edge < hi:
                pts.append(edge)
    return sorted(pts)


def mode_conductance(
    stack: BarrierStack, leads: LeadParams, T_kelvin: float = 300.0, channel: Channel | None = None
) -> float:
    """Linear-response conductance of one transverse mode, summed over spin, S."""
    channels = CHANNELS if channel is None else (channel,)
    total = 0.0
    for ch in channels:
        chain = build_chain(stack, leads, ch)
        if T_kelvin == 0:
            total += chain_transmission(leads.E_F, chain)
            continue
        kT = KB_EV * T_kelvin
        lo, hi = leads.E_F - 10 * kT, leads.E_F + 10 * kT
        val, _ = integrate.quad(
            lambda e: chain_transmission(e, chain) * _thermal_kernel(e, leads.E_F, kT),
            lo, hi, points=_breakpoints(chain, lo, hi) or None, epsrel=1e-6, epsabs=0.0, limit=200,
        )
        total += val
    return G_QUANTUM * total


def mode_current(stack: BarrierStack, leads: LeadParams, V_bias: float, T_kelvin: float = 300.0) -> float:
    """Current of one transverse mode at finite bias, A (left at E_F, right at E_F - V)."""
    mu1, mu2 = leads.E_F, leads.E_F - V_bias
    total = 0.0
    for ch in CHANNELS:
        chain = build_chain(stack, leads, ch, V_bias)
        if T_kelvin == 0:
            lo, hi = min(mu1, mu2), max(mu1, mu2)
            f = lambda e: chain_transmission(e, chain) * math.copysign(1.0, mu1 - mu2)
        else:
            kT = KB_EV * T_kelvin
            lo, hi = min(mu1, mu2) - 10 * kT, max(mu1, mu2) + 10 * kT
            f = lambda e: chain_transmission(e, chain) * (_fermi(e, mu1, kT) - _fermi(e, mu2, kT))
        val, _ = integrate.quad(
            f, lo, hi, points=_breakpoints(chain, lo, hi) or None, epsrel=1e-6, epsabs=0.0, limit=200
        )
        total += val
    # integral over energy in eV: (q/h) * q * val
    return G_QUANTUM * total


def mtj_resistance(
    stack: BarrierStack, leads: LeadParams, V_bias: float = 0.0, T_kelvin: float = 300.0
) -> float:
    """Junction resistance in ohms; linear response when ``V_bias == 0``."""
    if V_bias == 0:
        G = mode_conductance(stack, leads, T_kelvin) * stack.n_modes
        if G <= 0:
            raise ArithmeticError("non-positive conductance")
        return 1.0 / G
    I = mode_current(stack, leads, V_bias, T_kelvin) * stack.n_modes
    if I * V_bias <= 0:
        raise ArithmeticError(f"non-positive current {I} at bias {V_bias}: energy grid fault")
    return V_bias / I


def resistances(
    stack: BarrierStack, leads: LeadParams, V_bias: float = 0.0, T_kelvin: float = 300.0
) -> tuple[float, float]:
    """(R_P, R_AP) for the given stack geometry."""
    r_p = mtj_resistance(replace(stack, magnetic_config="P"), leads, V_bias, T_kelvin)
    r_ap = mtj_resistance(replace(stack, magnetic_config="AP"), leads, V_bias, T_kelvin)
    return r_p, r_ap


def tmr(stack: BarrierStack, leads: LeadParams, V_bias: float = 0.0, T_kelvin: float = 300.0) -> float:
    r_p, r_ap = resistances(stack, leads, V_bias, T_kelvin)
    return (r_ap - r_p) / r_p


def bitcell_tmr(R_P: float, R_AP: float, R_series: float) -> float:
    """TMR seen through a series access transistor: (R_AP - R_P) / (R_P + R_series)."""
    if R_P <= 0 or R_AP <= 0 or R_series < 0:
        raise ValueError("resistances must be positive (R_series >= 0)")
    return (R_AP - R_P) / (R_P + R_series)


def series_transistor_resistance(w_over_l: float, R_unit: float = R_UNIT) -> float:
    """Lumped linear-region on-resistance of an access transistor."""
    if w_over_l <= 0:
        raise ValueError("w_over_l must be > 0")
    if math.isinf(w_over_l):
        return 0.0
    return R_unit / w_over_l


def calibrate_mode_density(
    target_R_P: float, stack: BarrierStack | None = None, leads: LeadParams | None = None,
    T_kelvin: float = 300.0,
) -> float:
    """Mode density (per m^2) giving ``R_P == target_R_P`` in linear response."""
    stack = stack or BarrierStack()
    leads = leads or LeadParams()
    g = mode_conductance(replace(stack, magnetic_config="P"), leads, T_kelvin)
    return 1.0 / (g * target_R_P * stack.cross_section)


def tmr_sweep(
    t_values: Iterable[float],
    w_over_l: Iterable[float],
    stack: BarrierStack | None = None,
    leads: LeadParams | None = None,
    V_bias: float = 0.0,
    T_kelvin: float = 300.0,
    R_unit: float = R_UNIT,
) -> list[dict]:
    """Rows of the TMR-vs-thickness table, ordered by (t_MgO, W/L)."""
    stack = stack or BarrierStack()
    leads = leads or LeadParams()
    wl = list(w_over_l)
    rows = []
    for t in t_values:
        st = replace(stack, t_MgO=t)
        r_p, r_ap = resistances(st, leads, V_bias, T_kelvin)
        for w in wl:
            r_s = series_transistor_resistance(w, R_unit)
            rows.append(
                {
                    "t_mgo_nm": t * 1e9,
                    "w_over_l": w,
                    "r_p_ohm": r_p,
                    "r_ap_ohm": r_ap,
                    "tmr_device": (r_ap - r_p) / r_p,
                    "tmr_bitcell": bitcell_tmr(r_p, r_ap, r_s),
                }
            )
    return rows
