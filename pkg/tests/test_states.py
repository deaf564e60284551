import json
import math

import numpy as np
import pytest

from renyi_polygamy import states


def test_haar_deterministic():
    a = states.haar_random_pure(3, 99)
    b = states.haar_random_pure(3, 99)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert not np.array_equal(a.amplitudes, states.haar_random_pure(3, 100).amplitudes)


def test_haar_norms():
    for seed in range(2000):
        psi = states.haar_random_pure(1 + seed % 6, seed)
        assert abs(np.vdot(psi.amplitudes, psi.amplitudes).real - 1) <= 1e-10


# Mean purity of a d_A-dimensional reduction of a Haar state on d_A * d_B
# dimensions is (d_A + d_B) / (d_A d_B + 1), which is 4/5 for two qubits.
MEAN_PURITY_2Q = (2 + 2) / (2 * 2 + 1)


def test_haar_mean_purity_two_qubits():
    purities = []
    for seed in range(10_000):
        red = states.haar_random_pure(2, seed).reduced([0])
        purities.append(np.trace(red @ red).real)
    assert abs(np.mean(purities) - MEAN_PURITY_2Q) <= 0.02


def test_haar_mean_purity_independent_generator():
    # the same average from the first column of a QR-based Haar unitary
    rng = np.random.default_rng(2024)
    vals = []
    for _ in range(4000):
        z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        q, r = np.linalg.qr(z)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        m = q[:, 0].reshape(2, 2)
        red = m @ m.conj().T
        vals.append(np.trace(red @ red).real)
    assert abs(np.mean(vals) - MEAN_PURITY_2Q) <= 0.02


@pytest.mark.parametrize("n", [0, 7])
def test_haar_rejects_n(n):
    with pytest.raises(states.StateError):
        states.haar_random_pure(n, 1)


def test_ginibre_rank_one_is_pure():
    rho = states.ginibre_random_mixed(2, 1, 5)
    assert abs(np.trace(rho.matrix @ rho.matrix).real - 1) <= 1e-12
    w, v = np.linalg.eigh(rho.matrix)
    assert np.allclose(np.outer(v[:, -1], v[:, -1].conj()), rho.matrix)


def test_ginibre_invariants_and_rank():
    for seed in range(1000):
        n = 1 + seed % 3
        rank = 1 + seed % (1 << n)
        rho = states.ginibre_random_mixed(n, rank, seed)
        assert abs(np.trace(rho.matrix).real - 1) <= 1e-10
        assert np.sum(np.linalg.eigvalsh(rho.matrix) > 1e-8) <= rank


@pytest.mark.parametrize("rank", [0, 5])
def test_ginibre_rejects_rank(rank):
    with pytest.raises(states.StateError):
        states.ginibre_random_mixed(2, rank, 0)


def test_named_states():
    s = 1 / math.sqrt(2)
    assert np.allclose(states.named_state("bell").amplitudes, [s, 0, 0, s])
    w = states.named_state("w", 3).amplitudes
    expected = np.zeros(8)
    expected[[4, 2, 1]] = 1 / math.sqrt(3)
    assert np.allclose(w, expected)
    ghz = states.named_state("ghz", 4).amplitudes
    assert ghz[0] == ghz[15] == s and np.count_nonzero(ghz) == 2
    assert states.parse_named("product:2").amplitudes[0] == 1


def test_named_unknown():
    with pytest.raises(states.StateError):
        states.named_state("cluster", 3)


def test_save_load_roundtrip_bitwise(tmp_path):
    for state in (states.named_state("bell"), states.haar_random_pure(3, 8), states.ginibre_random_mixed(2, 3, 8)):
        path = tmp_path / "s.json"
        states.save_state(state, path)
        back = states.load_state(path)
        a = getattr(state, "amplitudes", getattr(state, "matrix", None))
        b = getattr(back, "amplitudes", getattr(back, "matrix", None))
        assert type(back) is type(state)
        assert np.array_equal(a, b)


def test_load_rejects_unnormalized(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"kind": "pure", "n_qubits": 1, "amplitudes": [[math.sqrt(0.9), 0], [0, 0]]}))
    with pytest.raises(states.StateFileError, match="normalized"):
        states.load_state(path)


def test_load_rejects_wrong_dimension(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"kind": "pure", "n_qubits": 3, "amplitudes": [[0.5, 0]] * 7}))
    with pytest.raises(states.StateFileError, match="8 amplitudes"):
        states.load_state(path)


def test_load_reports_location(tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{"kind": "pure",\n "n_qubits": 1,,}')
    with pytest.raises(states.StateFileError) as err:
        states.load_state(path)
    assert err.value.where.startswith("line 2")
    path.write_text(json.dumps({"kind": "pure", "n_qubits": 1, "amplitudes": [[1, 0], "x"]}))
    with pytest.raises(states.StateFileError) as err:
        states.load_state(path)
    assert err.value.where == "amplitudes[1]"


def test_density_invariants():
    with pytest.raises(states.StateError):
        states.DensityMatrix(1, np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(states.StateError):
        states.DensityMatrix(1, np.diag([1.2, -0.2]))
    with pytest.raises(states.StateError):
        states.DensityMatrix(1, np.diag([0.6, 0.6]))


def test_derive_seed_wraps():
    assert states.derive_seed(2**64 - 1, 1) == 0
    assert states.derive_seed(10, 5) == 15
