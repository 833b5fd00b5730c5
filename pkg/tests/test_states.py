import itertools

import numpy as np
import pytest

from dephasing_ree.qstate import (InvalidStateError, check_density_matrix, ket, partial_trace,
                                  projector, random_unitary, tensor)
from dephasing_ree.states import (STATE_NAMES, NamedState, concurrence, make_state,
                                  pair_concurrences, parse_state, state_vector, three_tangle_pure)


def _permute(rho, perm):
    t = rho.reshape((2,) * 6)
    return t.transpose(list(perm) + [p + 3 for p in perm]).reshape(8, 8)


def test_ghz_amplitudes():
    psi = state_vector("ghz")
    assert np.allclose(psi[[0, 7]], 1 / np.sqrt(2), atol=0)
    assert np.count_nonzero(psi) == 2


def test_w_wbar_orthogonal_and_wwbar_normalized():
    assert abs(np.vdot(state_vector("w"), state_vector("wbar"))) == 0
    assert np.vdot(state_vector("wwbar"), state_vector("wwbar")).real == pytest.approx(1, abs=1e-15)


def test_star_amplitudes():
    psi = state_vector("star")
    assert np.allclose(psi[[0, 4, 5, 7]], 0.5, atol=0)


def test_werner_endpoints():
    assert np.allclose(make_state("werner-ghz:1"), projector(state_vector("ghz")), atol=0)
    assert np.allclose(make_state("werner-ghz:0"), np.eye(8) / 8, atol=0)
    assert np.allclose(make_state("ghzw:0"), projector(state_vector("w")), atol=0)


@pytest.mark.parametrize("label", ["ghz", "w", "wbar", "wwbar", "star", "werner-ghz:0.3",
                                   "werner-w:0.7", "ghzw:0.5"])
def test_states_are_valid(label):
    check_density_matrix(make_state(label), atol=1e-15)


def test_parse_state_vocabulary():
    assert parse_state("werner-w:0.5") == NamedState("werner-w", 0.5)
    assert parse_state("GHZ").label == "ghz"
    assert set(STATE_NAMES) == {"ghz", "w", "wbar", "wwbar", "star", "werner-ghz", "werner-w", "ghzw"}
    for bad in ("bell", "ghz:0.5", "werner-w", "werner-w:1.5", "ghzw:abc"):
        with pytest.raises(ValueError):
            parse_state(bad)


@pytest.mark.parametrize("name", ["werner-ghz", "werner-w"])
def test_werner_permutation_symmetric(name):
    for p in (0.0, 0.3, 1.0):
        rho = make_state(NamedState(name, p))
        for perm in itertools.permutations(range(3)):
            assert np.allclose(_permute(rho, perm), rho, atol=1e-15)


def test_concurrence_bell_and_product():
    bell = (ket("00") + ket("11")) / np.sqrt(2)
    assert concurrence(projector(bell)) == pytest.approx(1, abs=1e-12)
    assert concurrence(projector(ket("01"))) == pytest.approx(0, abs=1e-12)
    with pytest.raises(InvalidStateError):
        concurrence(np.eye(8) / 8)


def test_concurrence_werner_two_qubit():
    # two-qubit Werner state: C = max(0, (3p - 1) / 2)
    bell = projector((ket("01") - ket("10")) / np.sqrt(2))
    for p in (0.2, 0.5, 0.8):
        rho = p * bell + (1 - p) * np.eye(4) / 4
        assert concurrence(rho) == pytest.approx(max(0, (3 * p - 1) / 2), abs=1e-12)


def test_fingerprints():
    wwbar = make_state("wwbar")
    for c in pair_concurrences(wwbar).values():
        assert abs(c - 1 / 3) < 1e-10
    star = pair_concurrences(make_state("star"))
    assert abs(star["AC"] - 0.5) < 1e-10
    assert abs(star["BC"] - 0.5) < 1e-10
    assert abs(star["AB"]) < 1e-10
    assert abs(three_tangle_pure(state_vector("w"))) < 1e-10
    assert abs(three_tangle_pure(state_vector("wwbar")) - 1 / 3) < 1e-10
    assert abs(three_tangle_pure(state_vector("star")) - 1 / 4) < 1e-10
    assert abs(three_tangle_pure(state_vector("ghz")) - 1) < 1e-10


def test_three_tangle_matches_ckw_residual():
    # independent route: tau = C_A(BC)^2 - C_AB^2 - C_AC^2 with C_A(BC)^2 = 4 det rho_A
    rng = np.random.default_rng(3)
    for _ in range(20):
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        psi /= np.linalg.norm(psi)
        rho = projector(psi)
        c = pair_concurrences(rho)
        lin = 4 * np.linalg.det(partial_trace(rho, [0])).real
        assert three_tangle_pure(psi) == pytest.approx(lin - c["AB"] ** 2 - c["AC"] ** 2, abs=1e-9)


def test_local_unitary_invariance():
    rng = np.random.default_rng(11)
    psi = state_vector("star")
    wwbar = partial_trace(make_state("wwbar"), [0, 1])
    for _ in range(200):
        u = tensor(*(random_unitary(2, rng) for _ in range(3)))
        assert abs(three_tangle_pure(u @ psi) - 0.25) < 1e-10
    for _ in range(50):
        v = tensor(random_unitary(2, rng), random_unitary(2, rng))
        assert abs(concurrence(v @ wwbar @ v.conj().T) - 1 / 3) < 1e-10


def test_three_tangle_rejects_unnormalized():
    with pytest.raises(InvalidStateError):
        three_tangle_pure(np.ones(8))
