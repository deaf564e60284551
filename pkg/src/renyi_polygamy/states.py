"""Pure and mixed multi-qubit states: construction, sampling and JSON files.

State files are JSON objects::

    {"kind": "pure", "n_qubits": 2, "amplitudes": [[re, im], ...]}
    {"kind": "density", "n_qubits": 2, "entries": [[re, im], ...]}

``entries`` lists the density matrix row-major. Floats are written with
``repr`` so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from . import linalg

MAX_QUBITS = 6
NORM_TOL = 1e-10
STATE_TOL = 1e-10
SEED_MOD = 2**64


class StateError(ValueError):
    """A state violates its invariants."""


class StateFileError(ValueError):
    """A state file could not be parsed; ``where`` names the line or field."""

    def __init__(self, path, where: str, message: str):
        self.path = str(path)
        self.where = where
        super().__init__(f"{path}: {where}: {message}")


def _check_n(n_qubits: int) -> int:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise StateError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")
    return int(n_qubits)


@dataclass(frozen=True, eq=False)
class PureState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        n = _check_n(self.n_qubits)
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << n:
            raise StateError(f"{n}-qubit state needs {1 << n} amplitudes, got {amps.shape[0]}")
        if not np.all(np.isfinite(amps)):
            raise StateError("amplitudes contain non-finite values")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise StateError(f"state is not normalized: sum |amplitude|^2 = {norm2!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(self.n_qubits, np.outer(a, a.conj()))

    def reduced(self, keep) -> np.ndarray:
        """Reduced density matrix on the qubits in ``keep`` (ascending order)."""
        n = self.n_qubits
        keep = sorted(int(k) for k in keep)
        if not keep or keep[0] < 0 or keep[-1] >= n or len(set(keep)) != len(keep):
            raise IndexError(f"invalid qubit subset {keep} for {n} qubits")
        traced = [q for q in range(n) if q not in keep]
        t = self.amplitudes.reshape((2,) * n).transpose(keep + traced)
        m = t.reshape(1 << len(keep), -1)
        return m @ m.conj().T


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        n = _check_n(self.n_qubits)
        m = np.array(self.matrix, dtype=np.complex128)
        d = 1 << n
        if m.shape != (d, d):
            raise StateError(f"{n}-qubit density matrix must be {d}x{d}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise StateError("density matrix has non-finite entries")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > STATE_TOL:
            raise StateError(f"density matrix is not Hermitian (deviation {herm:.3g})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > STATE_TOL:
            raise StateError(f"density matrix trace is {tr!r}, expected 1")
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if w[0] < -STATE_TOL:
            raise StateError(f"density matrix has negative eigenvalue {w[0]:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def reduced(self, keep) -> np.ndarray:
        return linalg.partial_trace(self.matrix, self.n_qubits, keep)

    def rank(self, tol: float = 1e-8) -> int:
        return int(np.sum(np.linalg.eigvalsh(self.matrix) > tol))


State = Union[PureState, DensityMatrix]


def as_density(state) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.density()
    m = linalg.as_matrix(state)
    return DensityMatrix(linalg.n_qubits_of(m.shape[0]), m)


def _rng(seed) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed < SEED_MOD:
        raise StateError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.default_rng(seed)


def derive_seed(seed: int, index: int) -> int:
    """Per-task seed used by parallel campaigns."""
    return (int(seed) + int(index)) % SEED_MOD


def haar_random_pure(n_qubits: int, seed: int) -> PureState:
    """Haar-distributed pure state from a normalized complex Gaussian vector."""
    n = _check_n(n_qubits)
    rng = _rng(seed)
    z = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return PureState(n, z / np.linalg.norm(z))


def ginibre_random_mixed(n_qubits: int, rank: int, seed: int) -> DensityMatrix:
    """Induced-measure mixed state G G^dagger / tr(G G^dagger), G of shape 2^n x rank."""
    n = _check_n(n_qubits)
    d = 1 << n
    if not isinstance(rank, (int, np.integer)) or not 1 <= rank <= d:
        raise StateError(f"rank must be in [1, {d}], got {rank!r}")
    rng = _rng(seed)
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(n, rho / np.trace(rho).real)


def named_state(name: str, n_qubits: int | None = None) -> PureState:
    """Textbook states: ``bell``, ``ghz``, ``w`` and ``product`` (all zeros)."""
    key = name.lower()
    if key == "bell":
        if n_qubits not in (None, 2):
            raise StateError("the Bell state has 2 qubits")
        n = 2
    else:
        if n_qubits is None:
            raise StateError(f"state {name!r} needs a qubit count")
        n = _check_n(n_qubits)
    d = 1 << n
    amps = np.zeros(d, dtype=np.complex128)
    if key in ("bell", "ghz"):
        amps[0] = amps[d - 1] = 1 / math.sqrt(2)
    elif key == "w":
        for q in range(n):
            amps[1 << (n - 1 - q)] = 1 / math.sqrt(n)
    elif key == "product":
        amps[0] = 1.0
    else:
        raise StateError(f"unknown named state {name!r}")
    return PureState(n, amps)


def parse_named(spec: str) -> PureState:
    """Parse ``ghz:3``, ``w:4``, ``product:2`` or ``bell``."""
    name, _, n = spec.partition(":")
    return named_state(name, int(n) if n else None)


def _pairs(values) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values).reshape(-1)]


def state_to_dict(state: State) -> dict:
    if isinstance(state, PureState):
        return {"kind": "pure", "n_qubits": state.n_qubits, "amplitudes": _pairs(state.amplitudes)}
    if isinstance(state, DensityMatrix):
        return {"kind": "density", "n_qubits": state.n_qubits, "entries": _pairs(state.matrix)}
    raise TypeError(f"cannot serialize {type(state).__name__}")


def save_state(state: State, path) -> None:
    Path(path).write_text(json.dumps(state_to_dict(state)) + "\n")


def _complex_list(values, field: str, path) -> np.ndarray:
    if not isinstance(values, list):
        raise StateFileError(path, field, "expected a list of [re, im] pairs")
    out = np.empty(len(values), dtype=np.complex128)
    for i, v in enumerate(values):
        ok = (
            isinstance(v, list)
            and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
        )
        if not ok:
            raise StateFileError(path, f"{field}[{i}]", f"expected [re, im], got {v!r}")
        out[i] = complex(v[0], v[1])
    return out


def state_from_dict(data, path="<data>") -> State:
    if not isinstance(data, dict):
        raise StateFileError(path, "<root>", "expected a JSON object")
    kind = data.get("kind")
    n = data.get("n_qubits")
    if not isinstance(n, int) or isinstance(n, bool):
        raise StateFileError(path, "n_qubits", f"expected an integer, got {n!r}")
    try:
        if kind == "pure":
            amps = _complex_list(data.get("amplitudes"), "amplitudes", path)
            return PureState(n, amps)
        if kind == "density":
            entries = _complex_list(data.get("entries"), "entries", path)
            d = 1 << n if 0 < n <= MAX_QUBITS else 0
            if entries.size != d * d:
                raise StateError(f"{n}-qubit density matrix needs {d * d} entries, got {entries.size}")
            return DensityMatrix(n, entries.reshape(d, d))
    except StateError as exc:
        raise StateFileError(path, "<state>", str(exc)) from exc
    raise StateFileError(path, "kind", f"expected 'pure' or 'density', got {kind!r}")


def load_state(path) -> State:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFileError(path, f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    return state_from_dict(data, path)
