import numpy as np
import pytest

from dephasing_ree.qstate import (InvalidStateError, ket, projector, random_density_matrix,
                                  random_unitary, relative_entropy, tensor)
from dephasing_ree.ree import (SeparableEnsemble, SolverOptions, bloch_angles,
                               closest_separable_state, ensemble_from_products, ree)
from dephasing_ree.states import make_state

FAST = SolverOptions(restarts=16)
GHZ_CANDIDATE = 0.5 * (projector(ket("000")) + projector(ket("111")))


def _random_qubit(rng):
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return v / np.linalg.norm(v)


def w_candidate():
    """Separable state with S(W || sigma) = ln(9/4).

    Phase average of (sqrt(2/3)|0> + e^{i phi} sqrt(1/3)|1>)^{x3} over four
    phases; its one-excitation block is (4/9)|W><W|.
    """
    kets = []
    for k in range(4):
        q = np.array([np.sqrt(2 / 3), np.exp(0.5j * np.pi * k) * np.sqrt(1 / 3)])
        kets.append((q, q, q))
    return ensemble_from_products(np.full(4, 0.25), kets, floor=0.0).mixture()


def test_candidates_are_what_they_claim():
    assert relative_entropy(make_state("ghz"), GHZ_CANDIDATE) == pytest.approx(np.log(2), abs=1e-14)
    assert relative_entropy(make_state("w"), w_candidate()) == pytest.approx(np.log(9 / 4), abs=1e-12)


def test_ghz():
    est = ree(make_state("ghz"))
    assert abs(est.value - np.log(2)) < 1e-3
    # cannot beat the analytic closest state (the floor only adds a tiny bias)
    assert est.value >= np.log(2) - 1e-12
    assert est.converged


def test_w_matches_candidate():
    est = ree(make_state("w"), FAST)
    assert est.value >= np.log(9 / 4) - 1e-12
    assert est.value - np.log(9 / 4) < 1e-6


def test_closest_state_ghz():
    ens = closest_separable_state(make_state("ghz"), FAST)
    diff = np.linalg.eigvalsh(ens.mixture() - GHZ_CANDIDATE)
    assert 0.5 * np.abs(diff).sum() < 1e-2


def test_product_state_zero(rng):
    rho = tensor(*(random_density_matrix(2, rng) for _ in range(3)))
    assert ree(rho, FAST).value < 1e-6
    a, b, c = (_random_qubit(rng) for _ in range(3))
    pure = projector(np.kron(np.kron(a, b), c))
    assert ree(pure, FAST).value < 1e-6


def test_dephased_ghz_zero():
    assert ree(np.diag([0.5, 0, 0, 0, 0, 0, 0, 0.5]).astype(complex), FAST).value < 1e-6


def test_separable_mixture_recovered(rng):
    w = rng.dirichlet(np.ones(4))
    kets = [tuple(_random_qubit(rng) for _ in range(3)) for _ in range(4)]
    rho = ensemble_from_products(w, kets, floor=0.0).mixture()
    ens = closest_separable_state(rho, FAST)
    assert relative_entropy(rho, ens.mixture()) < 1e-5


def test_initial_ordering():
    opts = SolverOptions()
    e = {name: ree(make_state(name), opts).value for name in ("w", "ghz", "star", "wwbar")}
    assert e["w"] > e["ghz"] > e["star"] > e["wwbar"]


def test_rescoring_is_exact(rng):
    rho = random_density_matrix(8, rng)
    est = ree(rho, SolverOptions(restarts=4))
    assert relative_entropy(rho, est.sigma_star.mixture()) == est.value
    assert est.value >= 0


def test_upper_bound_against_simple_candidates(rng):
    # the dephased state and the product of marginals are both separable
    from dephasing_ree.qstate import partial_trace
    for _ in range(3):
        rho = random_density_matrix(8, rng, rank=3)
        est = ree(rho, SolverOptions(restarts=8))
        dephased = np.diag(np.diag(rho))
        marginals = tensor(*(partial_trace(rho, [q]) for q in range(3)))
        assert est.value <= relative_entropy(rho, dephased) + 1e-9
        assert est.value <= relative_entropy(rho, marginals) + 1e-9


def test_local_unitary_invariance():
    rng = np.random.default_rng(5)
    opts = SolverOptions(restarts=8)
    for name in ("ghz", "w"):
        rho = make_state(name)
        base = ree(rho, opts).value
        for _ in range(20):
            u = tensor(*(random_unitary(2, rng) for _ in range(3)))
            assert abs(ree(u @ rho @ u.conj().T, opts).value - base) < 2e-3


def test_werner_ghz_monotone_and_separable_ball():
    opts = SolverOptions(restarts=8)
    vals = [ree(make_state(f"werner-ghz:{p}"), opts).value for p in np.round(np.linspace(0, 1, 11), 1)]
    assert np.all(np.diff(vals) >= -2e-3)
    assert vals[1] < 1e-3
    assert ree(make_state("werner-w:0.1"), opts).value < 1e-3


def test_deterministic():
    rho = make_state("star")
    opts = SolverOptions(restarts=6, seed=42)
    a, b = ree(rho, opts), ree(rho, opts)
    assert a.value == b.value
    assert np.array_equal(a.sigma_star.weights, b.sigma_star.weights)
    assert np.array_equal(a.restart_values, b.restart_values)


def test_workers_do_not_change_result():
    rho = make_state("wwbar")
    opts = SolverOptions(restarts=3, seed=1)
    serial = ree(rho, opts)
    parallel = ree(rho, SolverOptions(restarts=3, seed=1, workers=2))
    assert serial.value == parallel.value


def test_warm_start_is_restart_zero():
    rho = make_state("ghz")
    first = ree(rho, FAST)
    again = ree(rho, FAST, warm_start=first.sigma_star, restarts=0)
    assert again.restarts_used == 1
    assert again.value <= first.value + 1e-12


def test_warm_start_resized():
    rho = make_state("w")
    first = ree(rho, SolverOptions(restarts=4, terms=8))
    again = ree(rho, SolverOptions(restarts=1, terms=12), warm_start=first.sigma_star)
    assert again.sigma_star.size == 12
    assert again.value <= first.value + 1e-9


def test_estimate_fields():
    est = ree(make_state("ghz"), SolverOptions(restarts=5))
    assert est.restarts_used == 5
    assert len(est.restart_values) == 5
    assert est.restart_values[est.best_restart] == est.restart_values.min()
    assert est.sigma_star.angles.shape == (32, 3, 2)


def test_input_validation():
    with pytest.raises(InvalidStateError):
        ree(np.eye(8))
    with pytest.raises(ValueError):
        ree(np.eye(4) / 4)
    with pytest.raises(ValueError):
        SolverOptions(terms=0)
    with pytest.raises(ValueError):
        SolverOptions(floor=0.0)
    with pytest.raises(ValueError):
        SeparableEnsemble(np.array([0.5, 0.6]), np.zeros((2, 3, 2)))
    with pytest.raises(ValueError):
        SeparableEnsemble(np.array([1.0]), np.zeros((1, 2, 2)))


def test_bloch_angles_round_trip(rng):
    for _ in range(20):
        v = _random_qubit(rng)
        th, ph = bloch_angles(v)
        back = np.array([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
        assert abs(abs(np.vdot(back, v)) - 1) < 1e-12
