"""Operator construction against the published matrix forms."""

import numpy as np
import pytest

from cascaded_qubits import (
    InvalidParams,
    SystemParams,
    Unsupported,
    build_liouvillian,
    build_operators,
    nojump_eigensystem,
)
from cascaded_qubits import model
from cascaded_qubits.model import (
    KET_00,
    KET_01,
    KET_10,
    KET_11,
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    named_state,
    unvectorize_density,
    vectorize_density,
)

from oracles import liouvillian_by_basis_application


def test_params_validation():
    SystemParams(r=0.0, epsilon=0.0)
    SystemParams(r=2.5, epsilon=1.0)
    with pytest.raises(InvalidParams):
        SystemParams(r=-0.1)
    with pytest.raises(InvalidParams):
        SystemParams(r=1.0, epsilon=1.2)
    with pytest.raises(InvalidParams):
        SystemParams(r=np.inf)


def test_params_from_rates():
    p = SystemParams.from_rates(beta_r=2.0, beta_s=1.0, kappa=4.0, epsilon=0.9)
    assert p.r == 0.5
    assert p.epsilon == 0.9
    with pytest.raises(InvalidParams):
        SystemParams.from_rates(beta_r=0.0, beta_s=1.0)


def test_raman_matrix_forms():
    ops = build_operators(SystemParams(r=0.7))
    r = 0.7
    want_r1 = np.array([[0, 0, r, 0], [0, 0, 0, r], [1, 0, 0, 0], [0, 1, 0, 0]])
    want_r2 = np.array([[0, r, 0, 0], [1, 0, 0, 0], [0, 0, 0, r], [0, 0, 1, 0]])
    assert np.allclose(ops.R1, want_r1)
    assert np.allclose(ops.R2, want_r2)


def test_jump_operator_matrix_perfect_coupling():
    # C1 at epsilon=1 equals sqrt(2) [[0,-r,r,0],[-1,0,0,r],[1,0,0,-r],[0,1,-1,0]].
    r = 0.5
    ops = build_operators(SystemParams(r=r))
    want = np.sqrt(2) * np.array(
        [[0, -r, r, 0], [-1, 0, 0, r], [1, 0, 0, -r], [0, 1, -1, 0]])
    assert np.allclose(ops.C1, want, atol=1e-14)


def test_second_channel_vanishes_at_perfect_coupling():
    ops = build_operators(SystemParams(r=1.0, epsilon=1.0))
    assert np.allclose(ops.C2, 0.0)


def test_lossy_coupling_matrix_forms():
    eps = 0.5
    se = np.sqrt(eps)
    ops = build_operators(SystemParams(r=1.0, epsilon=eps))
    want_gen = np.array([
        [-2, 0, 0, 2 * se],
        [0, -2, 2 * se, 0],
        [0, 2 * se, -2, 0],
        [2 * se, 0, 0, -2],
    ])
    assert np.allclose(ops.heff_generator, want_gen, atol=1e-14)
    want_c1 = np.sqrt(2) * np.array(
        [[0, -1, se, 0], [-1, 0, 0, se], [se, 0, 0, -1], [0, se, -1, 0]])
    want_c2 = np.sqrt(2 * (1 - eps)) * np.array(
        [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
    assert np.allclose(ops.C1, want_c1, atol=1e-14)
    assert np.allclose(ops.C2, want_c2, atol=1e-14)


@pytest.mark.parametrize("r,epsilon", [(0.5, 1.0), (1.0, 1.0), (1.0, 0.5), (0.8, 0.3)])
def test_operator_bundle_invariants(r, epsilon):
    ops = build_operators(SystemParams(r=r, epsilon=epsilon))
    assert np.max(np.abs(ops.H0 - ops.H0.conj().T)) <= 1e-12
    rebuilt = -1j * ops.H0 - 0.5 * (ops.C1.conj().T @ ops.C1 + ops.C2.conj().T @ ops.C2)
    assert np.max(np.abs(rebuilt - ops.heff_generator)) <= 1e-12
    # C1+C1 + C2+C2 written out through the Raman operators
    want = (2 * (ops.R1.conj().T @ ops.R1 + ops.R2.conj().T @ ops.R2)
            - 2 * np.sqrt(epsilon) * (ops.R1.conj().T @ ops.R2 + ops.R2.conj().T @ ops.R1))
    got = ops.C1.conj().T @ ops.C1 + ops.C2.conj().T @ ops.C2
    assert np.max(np.abs(got - want)) <= 1e-12


@pytest.mark.parametrize("epsilon", [1.0, 0.75, 0.5, 0.25])
def test_resonance_commutators_vanish(epsilon):
    ops = build_operators(SystemParams(r=1.0, epsilon=epsilon))
    heff = ops.H0 - 0.5j * (ops.C1.conj().T @ ops.C1 + ops.C2.conj().T @ ops.C2)
    for a, b in ((ops.C1, ops.C2), (ops.C1, heff), (ops.C2, heff)):
        assert np.max(np.abs(a @ b - b @ a)) <= 1e-12


@pytest.mark.parametrize("epsilon", [0.5, 0.9])
def test_bell_jump_algebra(epsilon):
    # C1 Bell relations with factor lambda_pm / sqrt(2); C2 with +/- sqrt(2(1-eps)).
    ops = build_operators(SystemParams(r=1.0, epsilon=epsilon))
    lam = {1: -2 * (1 - np.sqrt(epsilon)), -1: -2 * (1 + np.sqrt(epsilon))}
    root = np.sqrt(2 * (1 - epsilon))
    cases = [
        (ops.C1, PHI_PLUS, lam[1] / np.sqrt(2) * PSI_PLUS),
        (ops.C1, PHI_MINUS, lam[-1] / np.sqrt(2) * PSI_MINUS),
        (ops.C1, PSI_PLUS, lam[1] / np.sqrt(2) * PHI_PLUS),
        (ops.C1, PSI_MINUS, lam[-1] / np.sqrt(2) * PHI_MINUS),
        (ops.C2, PHI_PLUS, root * PSI_PLUS),
        (ops.C2, PHI_MINUS, -root * PSI_MINUS),
        (ops.C2, PSI_PLUS, root * PHI_PLUS),
        (ops.C2, PSI_MINUS, -root * PHI_MINUS),
    ]
    for op, state, want in cases:
        assert np.max(np.abs(op @ state - want)) <= 1e-12


@pytest.mark.parametrize("r", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_analytic_eigensystem_satisfies_generator(r):
    params = SystemParams(r=r)
    generator = build_operators(params).heff_generator
    pairs = nojump_eigensystem(params)
    assert len(pairs) == 4
    for state, lam in pairs:
        assert np.linalg.norm(generator @ state - lam * state) <= 1e-10


def test_analytic_eigensystem_values():
    pairs = nojump_eigensystem(SystemParams(r=0.5))
    states, lams = zip(*pairs)
    assert np.allclose(lams, [0.0, -2.5, -0.25, -2.25])
    # lam3 eigenstate is 0.5|10> + |01>
    assert np.allclose(states[2], 0.5 * KET_10 + KET_01)


def test_analytic_eigensystem_resonance_is_bell():
    pairs = nojump_eigensystem(SystemParams(r=1.0))
    lams = sorted(lam for _, lam in pairs)
    assert np.allclose(lams, [-4.0, -4.0, 0.0, 0.0])
    for state, lam in pairs:
        unit = state / np.linalg.norm(state)
        overlaps = [abs(np.vdot(b, unit)) for b in
                    (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)]
        assert max(overlaps) > 1 - 1e-12


def test_analytic_eigensystem_lossy_resonance():
    pairs = nojump_eigensystem(SystemParams(r=1.0, epsilon=0.5))
    lam_plus = -2 * (1 - np.sqrt(0.5))
    lam_minus = -2 * (1 + np.sqrt(0.5))
    assert np.isclose(lam_plus, -0.5857864376269049)
    assert np.isclose(lam_minus, -3.414213562373095)
    got = sorted(lam for _, lam in pairs)
    assert np.allclose(got, sorted([lam_plus, lam_plus, lam_minus, lam_minus]))
    generator = build_operators(SystemParams(r=1.0, epsilon=0.5)).heff_generator
    for state, lam in pairs:
        assert np.linalg.norm(generator @ state - lam * state) <= 1e-10


def test_analytic_eigensystem_unsupported():
    with pytest.raises(Unsupported):
        nojump_eigensystem(SystemParams(r=0.5, epsilon=0.5))


def test_liouvillian_annihilates_steady_state():
    r = 0.5
    liouv = build_liouvillian(SystemParams(r=r))
    phi = (KET_00 + r * KET_11) / np.sqrt(1 + r * r)
    rho = np.outer(phi, phi.conj())
    assert np.max(np.abs(liouv @ vectorize_density(rho))) <= 1e-10


@pytest.mark.parametrize("r,epsilon", [(0.8, 1.0), (0.7, 0.6), (1.0, 0.5)])
def test_liouvillian_matches_elementwise_oracle(r, epsilon):
    got = build_liouvillian(SystemParams(r=r, epsilon=epsilon))
    want = liouvillian_by_basis_application(r, epsilon)
    assert np.max(np.abs(got - want)) <= 1e-12


def test_liouvillian_preserves_trace_and_hermiticity(rng):
    liouv = build_liouvillian(SystemParams(r=0.6, epsilon=0.8))
    for _ in range(5):
        h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = h @ h.conj().T
        rho /= np.trace(rho)
        image = unvectorize_density(liouv @ vectorize_density(rho))
        assert abs(np.trace(image)) <= 1e-12
        assert np.max(np.abs(image - image.conj().T)) <= 1e-12


def test_vectorization_round_trip(rng):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.allclose(unvectorize_density(vectorize_density(m)), m)
    # column stacking: vec must walk the first column first
    assert vectorize_density(m)[1] == m[1, 0]


def test_named_states():
    assert np.allclose(named_state("00"), KET_00)
    assert np.allclose(named_state("bell:psi-"), PSI_MINUS)
    with pytest.raises(KeyError):
        named_state("banana")


def test_bell_states_orthonormal():
    basis = [PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS]
    gram = np.array([[np.vdot(a, b) for b in basis] for a in basis])
    assert np.allclose(gram, np.eye(4), atol=1e-15)


def test_sigma_zz_plane_eigenvalues():
    for state, val in ((KET_00, 1), (KET_11, 1), (KET_10, -1), (KET_01, -1)):
        assert np.allclose(model.SIGMA_ZZ @ state, val * state)
