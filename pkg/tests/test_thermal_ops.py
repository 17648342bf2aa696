import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from gge_thermo.core import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    ChargeSet,
    expectation,
    gge_state,
    gibbs_state,
    maximally_mixed,
    operator_to_json,
    random_density_matrix,
    random_unitary,
    trace_distance,
)
from gge_thermo.errors import DimensionError, NonUnitaryError
from gge_thermo.thermal_ops import (
    QUTRIT_H,
    ThermalOpSpec,
    apply_thermal_operation,
    average_preservation_check,
    coherence_injection_demo,
    coherent_gibbs_vector,
    conservation_residuals,
    is_commutant_free,
    is_gge_free,
    is_member,
    joint_charge_drift,
    load_thermal_op_bundle,
    qutrit_injection_unitary,
)

SWAP = np.eye(4)[[0, 2, 1, 3]].astype(complex)


def _energy_conserving_partial_swap(theta):
    """Rotation inside the degenerate {|01>, |10>} block of H x 1 + 1 x H."""
    u = np.eye(4, dtype=complex)
    c, s = np.cos(theta), np.sin(theta)
    u[1:3, 1:3] = [[c, -s], [s, c]]
    return u


def test_time_evolution_conserves_energy():
    h = np.diag([0.0, 1.3])
    hr = np.diag([0.0, 0.4, 2.0])
    total = np.kron(h, np.eye(3)) + np.kron(np.eye(2), hr)
    spec = ThermalOpSpec(ChargeSet([h], [1.0]), ChargeSet([hr], [1.0]), sla.expm(-1j * 0.7 * total))
    assert conservation_residuals(spec)[0] < 1e-12
    assert is_member(spec)


def test_swap_identical_systems_conserves_all():
    charges = [PAULI_Z, PAULI_X]
    spec = ThermalOpSpec(ChargeSet(charges, [1.0, 0.5]), ChargeSet(charges, [1.0, 0.5]), SWAP)
    assert max(conservation_residuals(spec)) < 1e-15


def test_identity_channel(rng):
    cs = ChargeSet([PAULI_Z], [1.0])
    spec = ThermalOpSpec(cs, cs, np.eye(4))
    rho = random_density_matrix(2, rng)
    np.testing.assert_allclose(apply_thermal_operation(spec, rho).matrix, rho.matrix, atol=1e-14)


def test_swap_moves_bath_state_onto_system(rng):
    bath = ChargeSet([PAULI_Z, PAULI_X], [0.8, -0.3])
    rho = random_density_matrix(2, rng)
    spec = ThermalOpSpec(ChargeSet([PAULI_Z, PAULI_X], [0, 0]), bath, SWAP)
    out = apply_thermal_operation(spec, rho)
    np.testing.assert_allclose(out.matrix, gge_state(bath).matrix, atol=1e-14)
    # discarding the first factor instead keeps the input, now sitting in the second slot
    spec_r = ThermalOpSpec(ChargeSet([PAULI_Z, PAULI_X], [0, 0]), bath, SWAP, traced_out=(0,))
    np.testing.assert_allclose(apply_thermal_operation(spec_r, rho).matrix, rho.matrix, atol=1e-14)


def test_partial_swap_moves_populations_toward_gibbs():
    h = np.diag([0.0, 1.0])
    beta = 1.0
    cs = ChargeSet([h], [beta])
    spec = ThermalOpSpec(cs, cs, _energy_conserving_partial_swap(0.4))
    assert is_member(spec)
    rho = np.diag([0.2, 0.8])
    gibbs = gibbs_state(h, beta)
    out = apply_thermal_operation(spec, rho)
    # explicit channel: p1' = cos^2 p1 + sin^2 g1 (mixing of the excited population with the bath's)
    c2, s2 = np.cos(0.4) ** 2, np.sin(0.4) ** 2
    g1 = gibbs.populations()[1]
    assert out.populations()[1] == pytest.approx(c2 * 0.8 + s2 * g1, abs=1e-14)
    assert trace_distance(out, gibbs) < trace_distance(rho, gibbs)
    # the Gibbs state is a fixed point
    np.testing.assert_allclose(apply_thermal_operation(spec, gibbs).matrix, gibbs.matrix, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_output_is_state_for_any_unitary(seed):
    g = np.random.default_rng(seed)
    cs = ChargeSet([PAULI_Z], [1.0])
    bath = ChargeSet([np.diag([0.0, 1.0, 2.0])], [0.5])
    spec = ThermalOpSpec(cs, bath, random_unitary(6, g))
    out = apply_thermal_operation(spec, random_density_matrix(2, g))
    assert abs(np.trace(out.matrix) - 1) < 1e-12
    assert out.spectrum()[0] > -1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(0.1, 3))
def test_conserving_unitary_has_zero_drift(seed, t, mu):
    g = np.random.default_rng(seed)
    h = np.diag([0.0, 1.0])
    cs = ChargeSet([h], [mu])
    total = np.kron(h, np.eye(2)) + np.kron(np.eye(2), h)
    # any unitary block-diagonal in the eigenspaces of the total charge
    u = _energy_conserving_partial_swap(t) @ sla.expm(-1j * g.normal() * total)
    spec = ThermalOpSpec(cs, cs, u)
    assert is_member(spec)
    assert max(joint_charge_drift(spec, random_density_matrix(2, g))) < 1e-10


def test_three_factor_dilation():
    # system qubit, bath = qubit (x) qubit; discard the first bath qubit only
    cs = ChargeSet([PAULI_Z], [0.0])
    bath = ChargeSet([np.kron(PAULI_Z, np.eye(2))], [0.0])
    u = np.kron(SWAP, np.eye(2))
    spec = ThermalOpSpec(cs, bath, u, traced_out=(1,), factor_dims=(2, 2, 2))
    assert spec.kept == (0, 2)
    out = apply_thermal_operation(spec, np.diag([1.0, 0.0]))
    np.testing.assert_allclose(out.matrix, np.eye(4) / 4, atol=1e-15)


def test_spec_validation():
    cs = ChargeSet([PAULI_Z], [1.0])
    with pytest.raises(NonUnitaryError):
        ThermalOpSpec(cs, cs, 2 * np.eye(4))
    with pytest.raises(DimensionError):
        ThermalOpSpec(cs, cs, np.eye(3))
    with pytest.raises(DimensionError):
        ThermalOpSpec(cs, cs, np.eye(4), traced_out=(2,))
    with pytest.raises(ValueError):
        ThermalOpSpec(cs, ChargeSet([PAULI_Z, PAULI_X], [1, 1]), np.eye(4))
    spec = ThermalOpSpec(cs, cs, np.eye(4))
    with pytest.raises(DimensionError):
        apply_thermal_operation(spec, maximally_mixed(3))


# -- average vs strict conservation ------------------------------------------


def test_qutrit_unitary_columns():
    u = qutrit_injection_unitary()
    np.testing.assert_allclose(u.conj().T @ u, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(u[:, 1], np.array([1, 0, 1]) / np.sqrt(2))
    # every image vector sits at energy 1
    for k in range(3):
        assert expectation(np.outer(u[:, k], u[:, k].conj()), QUTRIT_H) == pytest.approx(1.0, abs=1e-15)


def test_coherence_from_excited_input():
    demo = coherence_injection_demo()
    assert demo["conservation_residual"] >= 0.5
    assert demo["energy_residual_excited_input"] <= 1e-12
    assert demo["offdiag_from_excited"] == pytest.approx(0.5, abs=1e-15)
    assert demo["maximally_mixed_change"] <= 1e-15


def test_gibbs_input_energy_change_matches_closed_form():
    beta = 1.0
    demo = coherence_injection_demo(beta)
    z = 1 + np.exp(-beta) + np.exp(-2 * beta)
    e_gibbs = (np.exp(-beta) + 2 * np.exp(-2 * beta)) / z
    assert demo["energy_residual_gibbs_input"] == pytest.approx(1.0 - e_gibbs, abs=1e-14)
    assert demo["offdiag_from_gibbs"] > 0.1


def test_moment_report_for_pure_gibbs_vector():
    beta = 0.7
    psi = coherent_gibbs_vector(QUTRIT_H, beta)
    np.testing.assert_allclose(np.abs(psi) ** 2, gibbs_state(QUTRIT_H, beta).populations(), atol=1e-15)
    demo = coherence_injection_demo(beta)
    assert max(demo["gibbs_to_pure"]["moment_residuals"]) < 1e-12
    assert demo["gibbs_to_pure"]["purity_after"] == pytest.approx(1.0, abs=1e-12)


def test_average_preservation_check():
    u = qutrit_injection_unitary()
    rep = average_preservation_check(u, np.diag([0.0, 1.0, 0.0]), QUTRIT_H, k_max=3)
    assert rep.k == (1, 2, 3)
    assert rep.residuals[0] < 1e-12
    # <H^2> goes from 1 to (0 + 4)/2 = 2
    assert rep.residuals[1] == pytest.approx(1.0, abs=1e-14)
    commuting = sla.expm(-1j * 0.3 * QUTRIT_H)
    rep = average_preservation_check(commuting, gibbs_state(QUTRIT_H, 1.0), QUTRIT_H)
    assert max(rep.residuals) < 1e-14


# -- free-state sets ---------------------------------------------------------


def test_free_state_sets_disagree_for_xy():
    gge = gge_state(ChargeSet([PAULI_X, PAULI_Y], [0.5, 0.2]))
    assert is_gge_free(gge, [PAULI_X, PAULI_Y])
    assert not is_commutant_free(gge, [PAULI_X, PAULI_Y])
    mixed = maximally_mixed(2)
    assert is_gge_free(mixed, [PAULI_X, PAULI_Y])
    assert is_commutant_free(mixed, [PAULI_X, PAULI_Y])


def test_free_state_sets_agree_for_commuting():
    gibbs = gibbs_state(PAULI_Z, 0.9)
    assert is_gge_free(gibbs, [PAULI_Z])
    assert is_commutant_free(gibbs, [PAULI_Z])
    assert not is_commutant_free(gge_state(ChargeSet([PAULI_Y], [1.0])), [PAULI_Z])


# -- JSON --------------------------------------------------------------------


def test_bundle_loading():
    bundle = {
        "system_charges": [operator_to_json(PAULI_Z)],
        "bath_charges": [operator_to_json(PAULI_Z)],
        "bath_multipliers": [1.0],
        "unitary": operator_to_json(SWAP),
        "state": operator_to_json(np.diag([1.0, 0.0])),
    }
    spec, state = load_thermal_op_bundle(bundle)
    assert spec.traced_out == (1,)
    out = apply_thermal_operation(spec, state)
    np.testing.assert_allclose(out.matrix, gibbs_state(PAULI_Z, 1.0).matrix, atol=1e-14)


def test_bundle_errors_name_field():
    with pytest.raises(ValueError, match="unitary"):
        load_thermal_op_bundle({"system_charges": [operator_to_json(PAULI_Z)], "bath_charges": [operator_to_json(PAULI_Z)]})
    with pytest.raises(ValueError, match="bath_charges\\[0\\]"):
        load_thermal_op_bundle({
            "system_charges": [operator_to_json(PAULI_Z)],
            "bath_charges": [{"dim": 2, "re": [[1]]}],
            "unitary": operator_to_json(SWAP),
        })
