import cmath
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mespin import transport as tr

LEADS = tr.LeadParams()
STACK = tr.BarrierStack()


def uniform_chain(n, t0, potential=0.0):
    return tr.Chain(np.full(n, potential, dtype=float), np.full(n + 1, t0), 0.0, 0.0)


# -- self-energy ---------------------------------------------------------------


def test_self_energy_band_edge_and_centre():
    t0 = 0.8
    assert tr.lead_self_energy(0.3, 0.3, t0) == pytest.approx(-t0)
    assert tr.lead_self_energy(0.3 + 2 * t0, 0.3, t0) == pytest.approx(-1j * t0)


@pytest.mark.parametrize("ka", np.linspace(0.05, math.pi - 0.05, 9))
def test_self_energy_broadening_matches_dispersion(ka):
    t0, bottom = 1.3, -0.2
    E = bottom + 2 * t0 * (1 - math.cos(ka))
    sigma = tr.lead_self_energy(E, bottom, t0)
    assert sigma == pytest.approx(-t0 * cmath.exp(1j * ka), abs=1e-12)
    gamma = 1j * (sigma - sigma.conjugate())
    assert gamma.real == pytest.approx(2 * t0 * math.sin(ka), abs=1e-12)
    assert sigma.imag < 0


@pytest.mark.parametrize("E", [-0.5, -0.01, 4.2, 7.0])
def test_self_energy_outside_band_decays(E):
    t0 = 1.0
    sigma = tr.lead_self_energy(E, 0.0, t0)
    assert sigma.imag == 0
    assert abs(sigma) < t0


def test_self_energy_rejects_bad_hopping():
    with pytest.raises(ValueError):
        tr.lead_self_energy(1.0, 0.0, 0.0)


# -- transmission -----------------------------------------------------------------


@pytest.mark.parametrize("E", [0.05, 0.7, 2.0, 3.9])
def test_perfect_wire_transmits_fully(E):
    assert tr.chain_transmission(E, uniform_chain(6, 1.0)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("ka", [0.3, 1.0, 1.9, 2.8])
@pytest.mark.parametrize("U", [0.1, 0.5, 2.0])
def test_single_impurity_matches_analytic(ka, U):
    # one site of extra potential U in a uniform chain: T = v^2 / (v^2 + U^2), v = 2 t sin ka
    t0 = 1.0
    E = 2 * t0 * (1 - math.cos(ka))
    v = 2 * t0 * math.sin(ka)
    got = tr.chain_transmission(E, uniform_chain(1, t0, U))
    assert got == pytest.approx(v * v / (v * v + U * U), rel=1e-10)


def trace_formula(E, chain):
    """Independent route: T = Tr(Gamma1 G Gamma2 G^dagger) with an explicit inverse."""
    H = chain.hamiltonian()
    n = H.shape[0]
    s1 = tr.lead_self_energy(E, chain.left_bottom, chain.hop[0])
    s2 = tr.lead_self_energy(E, chain.right_bottom, chain.hop[-1])
    S1 = np.zeros((n, n), complex)
    S2 = np.zeros((n, n), complex)
    S1[0, 0], S2[-1, -1] = s1, s2
    G = np.linalg.inv(E * np.eye(n) - H - S1 - S2)
    G1 = 1j * (S1 - S1.conj().T)
    G2 = 1j * (S2 - S2.conj().T)
    return float(np.trace(G1 @ G @ G2 @ G.conj().T).real)


@pytest.mark.parametrize("config", ["P", "AP"])
@pytest.mark.parametrize("channel", ["up", "down"])
@pytest.mark.parametrize("E", [2.2, 2.25, 2.3, 2.41])
def test_transmission_matches_trace_formula(config, channel, E):
    chain = tr.build_chain(replace(STACK, magnetic_config=config), LEADS, channel)
    assert tr.chain_transmission(E, chain) == pytest.approx(trace_formula(E, chain), rel=1e-9)


@pytest.mark.parametrize("config", ["P", "AP"])
@pytest.mark.parametrize("E", [2.2, 2.25, 2.6, 3.5])
def test_reciprocity(config, E):
    chain = tr.build_chain(replace(STACK, magnetic_config=config), LEADS, "up")
    assert abs(tr.chain_transmission(E, chain) - tr.chain_transmission(E, chain.reversed())) <= 1e-12


def test_no_transmission_outside_contact_band():
    # below the minority band bottom the minority channel has no states
    assert tr.transmission(1.0, STACK, LEADS, "down") == 0.0
    assert tr.transmission(-0.1, STACK, LEADS, "up") == 0.0


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.05, 2.0),
    st.floats(0.0, 2.2),
    st.floats(0.2, 1.5),
    st.integers(1, 12),
    st.floats(-0.5, 6.0),
    st.sampled_from(["P", "AP"]),
)
def test_transmission_bounded(U_B, dex, m_b, n, E, config):
    stack = tr.BarrierStack(t_MgO=n * 0.2e-9, U_B=U_B, m_barrier=m_b, magnetic_config=config)
    leads = tr.LeadParams(delta_ex=dex)
    for ch in tr.CHANNELS:
        T = tr.transmission(E, stack, leads, ch)
        assert 0.0 <= T <= 1.0


def kappa(stack, leads, E):
    """Continuum decay constant sqrt(2 m (U_B + E_F - E)) / hbar, 1/m."""
    return math.sqrt(stack.m_barrier * (stack.U_B + leads.E_F - E) / tr.HBAR2_2M0)


def test_thick_barrier_single_site_decay():
    E = LEADS.E_F
    a = STACK.a
    T1 = tr.transmission(E, replace(STACK, t_MgO=20 * a), LEADS, "up")
    T2 = tr.transmission(E, replace(STACK, t_MgO=21 * a), LEADS, "up")
    assert T2 / T1 == pytest.approx(math.exp(-2 * kappa(STACK, LEADS, E) * a), rel=0.1)


def test_resistance_slope_is_two_kappa():
    ts = np.arange(15, 21) * STACK.a
    lnR = [math.log(tr.mtj_resistance(replace(STACK, t_MgO=t), LEADS, 0.0, 0.0)) for t in ts]
    slope = np.polyfit(ts, lnR, 1)[0]
    assert slope == pytest.approx(2 * kappa(STACK, LEADS, LEADS.E_F), rel=0.1)


# -- conductance and resistance -------------------------------------------------


def test_conductance_quantum_value():
    assert tr.G_QUANTUM == pytest.approx(3.874045865e-5, rel=1e-9)


def test_zero_barrier_conductance_is_one_quantum():
    # U_B = 0 and identical leads: a uniform wire; BarrierStack forbids U_B = 0
    t0 = tr.hopping(LEADS.m_eff, STACK.a)
    chain = uniform_chain(8, t0, 0.0)
    for E in (0.5, LEADS.E_F, 3.0):
        G = tr.G_QUANTUM * tr.chain_transmission(E, chain)
        assert G == pytest.approx(tr.G_QUANTUM, rel=1e-3)


def test_mode_density_reproduces_calibration():
    assert tr.calibrate_mode_density(14150.0) == pytest.approx(tr.DEFAULT_MODE_DENSITY, rel=1e-9)


def test_golden_resistances_at_default_stack():
    r_p, r_ap = tr.resistances(STACK, LEADS)
    assert r_p == pytest.approx(14150.0, rel=1e-6)
    assert r_ap == pytest.approx(23682.197362219755, rel=1e-6)
    assert tr.tmr(STACK, LEADS) == pytest.approx(0.67365352, rel=1e-5)


def test_read_path_resistance_target():
    r_p, _ = tr.resistances(STACK, LEADS)
    assert r_p + tr.series_transistor_resistance(4) == pytest.approx(15.4e3, rel=1e-6)


def test_doubling_cross_section_halves_resistance():
    r1 = tr.mtj_resistance(STACK, LEADS)
    r2 = tr.mtj_resistance(replace(STACK, cross_section=2 * STACK.cross_section), LEADS)
    assert r2 == pytest.approx(r1 / 2, rel=1e-9)


def test_resistance_grows_with_thickness():
    rs = [tr.mtj_resistance(replace(STACK, t_MgO=n * STACK.a), LEADS) for n in range(3, 12)]
    assert all(b > a for a, b in zip(rs, rs[1:]))


def test_no_exchange_no_tmr():
    leads = replace(LEADS, delta_ex=0.0)
    assert tr.tmr(STACK, leads) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 2.2), st.floats(0.05, 1.5), st.floats(0.3, 1.5), st.integers(2, 10))
def test_ap_resistance_exceeds_p(dex, U_B, m_b, n):
    stack = tr.BarrierStack(t_MgO=n * 0.2e-9, U_B=U_B, m_barrier=m_b)
    r_p, r_ap = tr.resistances(stack, tr.LeadParams(delta_ex=dex), 0.0, 0.0)
    assert r_ap > r_p
    assert tr.tmr(stack, tr.LeadParams(delta_ex=dex), 0.0, 0.0) >= 0


def test_small_bias_matches_linear_response():
    r0 = tr.mtj_resistance(STACK, LEADS, 0.0)
    r1 = tr.mtj_resistance(STACK, LEADS, 1e-3)
    assert r1 == pytest.approx(r0, rel=0.01)


def test_finite_bias_current_positive_and_odd():
    i_pos = tr.mode_current(STACK, LEADS, 0.1)
    i_neg = tr.mode_current(STACK, LEADS, -0.1)
    assert i_pos > 0 and i_neg < 0


def test_zero_temperature_conductance_is_fermi_level_transmission():
    g = tr.mode_conductance(STACK, LEADS, 0.0)
    t_sum = sum(tr.transmission(LEADS.E_F, STACK, LEADS, ch) for ch in tr.CHANNELS)
    assert g == pytest.approx(tr.G_QUANTUM * t_sum, rel=1e-12)


def test_thermal_conductance_close_to_zero_temperature():
    g0 = tr.mode_conductance(STACK, LEADS, 0.0)
    g300 = tr.mode_conductance(STACK, LEADS, 300.0)
    assert g300 == pytest.approx(g0, rel=0.2)


# -- bit-cell TMR ------------------------------------------------------------------


def test_bitcell_tmr_examples():
    assert tr.bitcell_tmr(10e3, 20e3, 10e3) == pytest.approx(0.5)
    assert tr.bitcell_tmr(10e3, 20e3, 0.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        tr.bitcell_tmr(-1, 2, 0)


@given(st.floats(1e3, 1e5), st.floats(1.01, 5.0), st.floats(0, 1e5), st.floats(1.0, 1e5))
def test_bitcell_tmr_strictly_decreasing_in_series(r_p, ratio, r_s, dr):
    r_ap = r_p * ratio
    assert tr.bitcell_tmr(r_p, r_ap, r_s + dr) < tr.bitcell_tmr(r_p, r_ap, r_s)


def test_series_transistor_resistance():
    assert tr.series_transistor_resistance(1) == 5e3
    assert tr.series_transistor_resistance(2) == 2.5e3
    assert tr.series_transistor_resistance(math.inf) == 0.0
    with pytest.raises(ValueError):
        tr.series_transistor_resistance(0)


def test_sweep_rows_and_infinite_width_limit():
    rows = tr.tmr_sweep([1.0e-9, 1.4e-9], [1, 4, math.inf])
    assert [r["w_over_l"] for r in rows] == [1, 4, math.inf] * 2
    for r in rows:
        if math.isinf(r["w_over_l"]):
            assert r["tmr_bitcell"] == r["tmr_device"]
        assert r["tmr_bitcell"] <= r["tmr_device"]


def test_spectrum_shapes():
    spec = tr.transmission_spectrum(np.linspace(0, 4, 21), STACK, LEADS)
    assert set(spec.T_per_channel) == {"up", "down"}
    for T in spec.T_per_channel.values():
        assert T.shape == (21,)
        assert np.all((T >= 0) & (T <= 1))


def test_stack_validation():
    with pytest.raises(ValueError):
        tr.BarrierStack(t_MgO=1.1e-9)
    with pytest.raises(ValueError):
        tr.BarrierStack(U_B=0.0)
    with pytest.raises(ValueError):
        tr.BarrierStack(magnetic_config="X")
    with pytest.raises(ValueError):
        tr.LeadParams(E_F=0)
    assert tr.BarrierStack(t_MgO=1.2e-9).n_sites == 6
