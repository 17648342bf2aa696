import numpy as np
import pytest
import scipy.optimize as sopt
from hypothesis import given, settings, strategies as st

from gge_thermo.core import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    ChargeSet,
    entropy,
    expectation,
    gge_state,
    gibbs_state,
    random_density_matrix,
    random_hermitian,
    spin_operators,
    trace_distance,
)
from gge_thermo.errors import (
    DegenerateChargesError,
    InfeasibleTargetsError,
    MaxIterationsError,
)
from gge_thermo.maxent import (
    BlochMapSpec,
    choi,
    cp_boundary_scan,
    independent_charges,
    is_completely_positive,
    maxent_project,
    solve_gge,
)


def _feasible_instance(g, d, n):
    charges = [random_hermitian(d, g).matrix for _ in range(n)]
    mu_true = g.normal(size=n)
    targets = [expectation(gge_state(ChargeSet(charges, mu_true)), c) for c in charges]
    return charges, targets, mu_true


# -- solver ------------------------------------------------------------------


def test_single_charge_matches_gibbs():
    h = np.diag([0.0, 1.0, 2.5])
    beta = 1.3
    target = expectation(gibbs_state(h, beta), h)
    sol = solve_gge([h], [target])
    assert sol.converged
    assert sol.multipliers[0] == pytest.approx(beta, abs=1e-8)
    np.testing.assert_allclose(sol.state.matrix, gibbs_state(h, beta).matrix, atol=1e-10)


def test_recovers_multipliers_noncommuting(rng):
    charges, targets, mu_true = _feasible_instance(rng, 4, 3)
    sol = solve_gge(charges, targets, tol=1e-11)
    assert sol.residual <= 1e-11
    np.testing.assert_allclose(sol.multipliers, mu_true, atol=1e-7)


def test_zero_targets_give_maximally_mixed():
    charges = [PAULI_X, PAULI_Y, PAULI_Z]
    sol = solve_gge(charges, [0.0, 0.0, 0.0])
    np.testing.assert_allclose(sol.state.matrix, np.eye(2) / 2, atol=1e-12)
    assert sol.iterations == 0


def test_solution_matches_scipy_dual_minimizer(rng):
    charges, targets, _ = _feasible_instance(rng, 5, 2)

    def dual(mu):
        k = sum(m * c for m, c in zip(mu, charges))
        w = np.linalg.eigvalsh(k)
        return -w.min() + np.log(np.sum(np.exp(-(w - w.min())))) + mu @ targets

    ref = sopt.minimize(dual, np.zeros(2), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
    sol = solve_gge(charges, targets)
    np.testing.assert_allclose(sol.multipliers, ref.x, atol=1e-5)


def test_maxent_has_maximal_entropy(rng):
    charges = [random_hermitian(3, rng).matrix for _ in range(2)]
    rho = random_density_matrix(3, rng)
    targets = [expectation(rho, c) for c in charges]
    sol = solve_gge(charges, targets)
    assert entropy(sol.state) >= entropy(rho) - 1e-12


def test_objective_history_decreases(rng):
    charges, targets, _ = _feasible_instance(rng, 6, 4)
    sol = solve_gge(charges, targets)
    h = np.array(sol.objective_history)
    assert np.all(np.diff(h) <= 1e-12 * (1 + np.abs(h[:-1])))


def test_infeasible_outside_spectrum():
    with pytest.raises(InfeasibleTargetsError, match="infeasible targets"):
        solve_gge([PAULI_Z], [1.5])


def test_infeasible_outside_joint_range():
    # each target is in range but (<X>, <Y>) = (.8, .8) lies outside the Bloch ball
    with pytest.raises(InfeasibleTargetsError):
        solve_gge([PAULI_X, PAULI_Y], [0.8, 0.8])


def test_boundary_target_reached_within_tolerance():
    # the extreme eigenvalue is only reached as mu -> -inf, but a finite mu
    # gets within tol of it
    sol = solve_gge([PAULI_Z], [1.0], tol=1e-9)
    assert sol.residual <= 1e-9
    assert sol.multipliers[0] < -10


def test_degenerate_charges_rejected():
    with pytest.raises(DegenerateChargesError):
        solve_gge([PAULI_Z, 2 * PAULI_Z], [0.1, 0.2])
    with pytest.raises(DegenerateChargesError):
        solve_gge([PAULI_Z, np.eye(2)], [0.1, 1.0])


def test_max_iterations():
    charges = [random_hermitian(6, np.random.default_rng(3)).matrix for _ in range(3)]
    g = np.random.default_rng(4)
    charges, targets, _ = _feasible_instance(g, 6, 3)
    with pytest.raises(MaxIterationsError) as info:
        solve_gge(charges, targets, tol=1e-14, max_iter=1)
    assert info.value.solution is not None
    sol = solve_gge(charges, targets, tol=1e-14, max_iter=1, strict=False)
    assert not sol.converged


def test_independent_charges():
    assert independent_charges([PAULI_Z, PAULI_X, PAULI_Z + PAULI_X, np.eye(2)]) == [0, 1]


def test_maxent_project_is_idempotent(rng):
    lx, ly, lz = spin_operators(1.0)
    rho = random_density_matrix(3, rng)
    once = maxent_project(rho, [lx, lz])
    twice = maxent_project(once, [lx, lz])
    assert trace_distance(once, twice) < 1e-8
    for c in (lx, lz):
        assert expectation(once, c) == pytest.approx(expectation(rho, c), abs=1e-9)


def test_maxent_project_drops_dependent_charges(rng):
    rho = random_density_matrix(2, rng)
    proj = maxent_project(rho, [PAULI_X, np.eye(2), 3 * PAULI_X])
    assert expectation(proj, PAULI_X) == pytest.approx(expectation(rho, PAULI_X), abs=1e-9)


def test_pancake_projection_keeps_xy_and_zeroes_z(rng):
    rho = random_density_matrix(2, rng)
    proj = maxent_project(rho, [PAULI_X, PAULI_Y])
    assert expectation(proj, PAULI_Z) == pytest.approx(0.0, abs=1e-9)
    # on the Bloch sphere the MaxEnt projection matches the linear pancake map
    np.testing.assert_allclose(proj.matrix, BlochMapSpec.pancake().apply(rho), atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(1, 4))
def test_round_trip_property(seed, d, n):
    g = np.random.default_rng(seed)
    n = min(n, d * d - 1)
    charges, targets, _ = _feasible_instance(g, d, n)
    sol = solve_gge(charges, targets)
    assert sol.residual <= 1e-9
    np.testing.assert_allclose(sol.achieved, targets, atol=1e-9)


# -- Choi / complete positivity ---------------------------------------------


def test_choi_identity_is_bell_projector():
    j = choi(BlochMapSpec.identity())
    np.testing.assert_allclose(j.eigenvalues, [0, 0, 0, 1], atol=1e-15)


def test_choi_depolarizing_is_maximally_mixed():
    j = choi(BlochMapSpec.depolarizing())
    np.testing.assert_allclose(j.entries, np.eye(4) / 4, atol=1e-15)


def test_choi_pancake_eigenvalues():
    j = choi(BlochMapSpec.pancake())
    np.testing.assert_allclose(j.eigenvalues, [-0.25, 0.25, 0.25, 0.75], atol=1e-12)
    assert j.trace_preservation_residual < 1e-15
    assert not is_completely_positive(BlochMapSpec.pancake()).completely_positive


def test_choi_matches_kraus_oracle():
    # amplitude damping with gamma = 0.3 as Bloch map, compared against Kraus operators
    gam = 0.3
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gam)]])
    k1 = np.array([[0, np.sqrt(gam)], [0, 0]])
    s = np.sqrt(1 - gam)
    spec = BlochMapSpec(np.diag([s, s, 1 - gam]), [0, 0, gam])
    omega = np.zeros(4)
    omega[[0, 3]] = 1 / np.sqrt(2)
    bell = np.outer(omega, omega)
    oracle = sum(np.kron(k, np.eye(2)) @ bell @ np.kron(k, np.eye(2)).conj().T for k in (k0, k1))
    np.testing.assert_allclose(choi(spec).entries, oracle, atol=1e-14)
    assert is_completely_positive(spec).completely_positive


def test_pancake_is_positive_on_states(rng):
    spec = BlochMapSpec.pancake()
    for _ in range(50):
        out = spec.apply(random_density_matrix(2, rng))
        assert np.linalg.eigvalsh(out)[0] >= -1e-14


@pytest.mark.parametrize("eps", [0.0, 0.2, 0.5, 0.8, 1.0])
def test_boundary_scan_matches_closed_form(eps):
    # Choi eigenvalues of the (r, eps) disc are (1 +- eps)/4 and (1 +- sqrt(eps^2 + 4 r^2))/4
    exact = np.sqrt(1 - eps**2) / 2
    r_star = cp_boundary_scan(eps, 1001)
    assert exact - 1e-3 - 1e-12 <= r_star <= exact + 1e-12


def test_boundary_scan_below_necessary_bound():
    for eps in (0.0, 0.2, 0.5, 1.0):
        assert cp_boundary_scan(eps) <= (1 + eps) / 2 + 1e-3


def test_bloch_map_validation():
    with pytest.raises(ValueError):
        BlochMapSpec(np.eye(2), [0, 0, 0])
    with pytest.raises(ValueError):
        cp_boundary_scan(1.5)
