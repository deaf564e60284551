import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renyi_polygamy import linalg, measures, roof
from renyi_polygamy.states import DensityMatrix, ginibre_random_mixed, haar_random_pure, named_state

FAST = roof.OptBudget(restarts=8)


def ghz_pair():
    return named_state("ghz", 3).density().reduced([0, 1])


def w_pair():
    return named_state("w", 3).density().reduced([0, 1])


def test_isometry_shape_and_orthonormality():
    rng = np.random.default_rng(1)
    for r in (2, 3, 4):
        v = roof.isometry_from_params(rng.uniform(0, 6.3, roof.n_isometry_params(r)), r * r, r)
        assert v.shape == (r * r, r)
        assert np.abs(v.conj().T @ v - np.eye(r)).max() < 1e-12


def test_isometry_rejects_wrong_length():
    with pytest.raises(ValueError):
        roof.isometry_from_params(np.zeros(3), 4, 2)


@pytest.mark.parametrize("rank", [2, 3, 4])
def test_identity_isometry_gives_eigendecomposition(rank):
    rho = ginibre_random_mixed(2, rank, 7)
    dec = roof.decompositions_from_isometry(rho, np.zeros(roof.n_isometry_params(rank)))
    w, _ = linalg.herm_eig(rho.matrix)
    assert len(dec) == rank
    assert np.sort(dec.weights) == pytest.approx(np.sort(w[w > 1e-10]), abs=1e-12)
    assert dec.reconstruction_error(rho) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]))
def test_any_parameters_reconstruct(seed, rank):
    rho = ginibre_random_mixed(2, rank, seed)
    params = np.random.default_rng(seed).uniform(-10, 10, roof.n_isometry_params(rank))
    dec = roof.decompositions_from_isometry(rho, params)
    assert abs(dec.weights.sum() - 1.0) <= 1e-10
    assert dec.weights.min() >= 0.0
    assert dec.reconstruction_error(rho) <= 1e-8


def test_rank_one_single_state():
    psi = haar_random_pure(2, 3)
    dec = roof.decompositions_from_isometry(psi.density(), np.array([1.3]))
    assert len(dec) == 1
    assert abs(np.vdot(dec.states[0], psi.amplitudes)) == pytest.approx(1.0, abs=1e-10)


def test_decomposition_validation():
    with pytest.raises(ValueError):
        roof.Decomposition(np.array([0.7, 0.7]), np.eye(4)[:2], 2)
    with pytest.raises(ValueError):
        roof.Decomposition(np.array([0.5, 0.5]), 2 * np.eye(4)[:2], 2)


@pytest.mark.parametrize("mode", ["max", "min"])
def test_pure_input_either_mode(mode):
    psi = haar_random_pure(2, 11)
    res = roof.optimize_roof(psi.density(), roof.concurrence_objective(), mode)
    assert res.value == pytest.approx(measures.concurrence_pure_bipartition(psi, [0]), abs=1e-12)
    assert res.converged


@pytest.mark.parametrize("rho, expected", [
    pytest.param(DensityMatrix(2, np.eye(4) / 4), 1.0, id="maximally-mixed"),
    pytest.param(ghz_pair(), 1.0, id="ghz-reduction"),
    pytest.param(w_pair(), 2 / 3, id="w-reduction"),
])
def test_max_concurrence_examples(rho, expected):
    res = roof.optimize_roof(rho, roof.concurrence_objective(), "max", FAST)
    assert res.value == pytest.approx(expected, abs=1e-6)
    assert roof.coa_exact(rho) == pytest.approx(expected, abs=1e-9)


def test_coa_exact_bell_and_floor():
    assert roof.coa_exact(named_state("bell").density()) == pytest.approx(1.0)
    for seed in range(30):
        rho = ginibre_random_mixed(2, 3, seed)
        assert roof.coa_exact(rho) >= measures.concurrence_mixed_2q(rho) - 1e-12


def test_optimizer_agrees_with_coa_closed_form():
    for seed in range(10):
        rho = ginibre_random_mixed(2, 2 + seed % 3, seed)
        res = roof.optimize_roof(rho, roof.concurrence_objective(), "max", FAST, seed=seed)
        assert abs(res.value - roof.coa_exact(rho)) <= 2e-4


@pytest.mark.parametrize("alpha", [measures.ALPHA_MIN, 0.9, 1.0, 1.2])
def test_reoa_maximally_mixed(alpha):
    assert roof.reoa(DensityMatrix(2, np.eye(4) / 4), alpha, FAST).value == pytest.approx(1.0, abs=1e-6)


def test_reoa_pure_is_reduced_entropy():
    psi = haar_random_pure(2, 5)
    red = psi.density().reduced([0])
    assert roof.reoa(psi.density(), 0.9).value == pytest.approx(measures.renyi_entropy(red, 0.9), abs=1e-12)


def test_reoa_rejects_invalid_alpha():
    with pytest.raises(measures.AlphaRangeError):
        roof.reoa(DensityMatrix(2, np.eye(4) / 4), 0.5)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("alpha", [measures.ALPHA_MIN, 0.9])
def test_reoa_sandwich(seed, alpha):
    rho = ginibre_random_mixed(2, 2, seed)
    value = roof.reoa(rho, alpha, seed=seed).value
    ceiling = min(measures.renyi_entropy(rho.reduced([0]), alpha), measures.renyi_entropy(rho.reduced([1]), alpha))
    assert roof.lemma1_floor(rho, alpha) - 1e-6 <= value <= ceiling + 1e-6


@pytest.mark.parametrize("mode", ["max", "min"])
def test_trace_monotone_and_witness(mode):
    rho = ginibre_random_mixed(2, 3, 4)
    obj = roof.renyi_objective(0.9)
    res = roof.optimize_roof(rho, obj, mode, seed=4)
    signed = res.trace if mode == "max" else -res.trace
    assert np.all(np.diff(signed) >= -1e-15)
    assert abs(res.decomposition.average(obj) - res.value) <= 1e-8
    assert res.decomposition.reconstruction_error(rho) <= 1e-8
    assert res.bound_side == ("lower" if mode == "max" else "upper")
    assert res.restarts_used == roof.OptBudget().restarts


def test_deterministic_given_seed():
    rho = ginibre_random_mixed(2, 4, 9)
    a = roof.reoa(rho, 1.1, FAST, seed=3)
    b = roof.reoa(rho, 1.1, FAST, seed=3)
    assert a.value == b.value
    assert np.array_equal(a.decomposition.states, b.decomposition.states)


def test_unconverged_result_is_still_a_bound():
    rho = ginibre_random_mixed(2, 4, 2)
    tight = roof.OptBudget(restarts=1, max_sweeps=1, tol=0.0, polish=0)
    res = roof.reoa(rho, 0.9, tight)
    assert not res.converged
    assert res.value <= roof.reoa(rho, 0.9).value + 1e-9
    assert abs(res.decomposition.average(roof.renyi_objective(0.9)) - res.value) <= 1e-8


@pytest.mark.parametrize("kind, alpha", [("concurrence", 1.0), ("renyi", 0.85), ("renyi", 1.0), ("renyi", 1.25)])
def test_gradient_matches_finite_differences(kind, alpha):
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(9, 4)) + 1j * rng.normal(size=(9, 4))
    rows /= np.linalg.norm(rows)
    obj = roof.RoofObjective(kind, alpha)
    val, grad = roof.objective_and_gradient(rows, obj)
    direction = rng.normal(size=rows.shape) + 1j * rng.normal(size=rows.shape)
    eps = 1e-6
    up = roof.objective_and_gradient(rows + eps * direction, obj)[0]
    down = roof.objective_and_gradient(rows - eps * direction, obj)[0]
    numeric = (up - down) / (2 * eps)
    analytic = 2.0 * np.real(np.vdot(grad, direction))
    assert numeric == pytest.approx(analytic, rel=1e-5, abs=1e-8)


def test_objective_value_matches_average():
    rho = ginibre_random_mixed(2, 3, 1)
    dec = roof.decompositions_from_isometry(rho, np.linspace(0, 3, roof.n_isometry_params(3)))
    rows = dec.states * np.sqrt(dec.weights)[:, None]
    obj = roof.renyi_objective(1.2)
    assert roof.objective_and_gradient(rows, obj)[0] == pytest.approx(dec.average(obj), abs=1e-12)


@pytest.mark.parametrize("bad", [dict(restarts=0), dict(max_sweeps=0), dict(tol=-1.0), dict(polish=-1)])
def test_budget_validation(bad):
    with pytest.raises(ValueError):
        roof.OptBudget(**bad)


def test_bad_mode():
    with pytest.raises(ValueError):
        roof.optimize_roof(DensityMatrix(2, np.eye(4) / 4), roof.concurrence_objective(), "sideways")
