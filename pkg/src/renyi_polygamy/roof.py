"""Optimization over pure-state decompositions of a mixed state.

Every decomposition {p_i, |psi_i>} of rho with m elements comes from an m x r
isometry V applied to the weighted eigenvectors sqrt(lambda_k)|e_k> of rho:
sqrt(p_i)|psi_i> = sum_k V_ik sqrt(lambda_k)|e_k>. The search runs over such
isometries with m = r^2, using pairwise complex rotations of the rows.

Each restart runs a few coordinate sweeps of pairwise row rotations; the best
candidates are then polished by L-BFGS over a Hermitian generator H, moving the
rows by the unitary exp(iH) with an exact gradient.

A maximization returns a decomposition that is feasible by construction, so
its value is a lower bound on the true maximum (and an upper bound on the
true minimum for a minimization). Results are never a claim of optimality.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import math

import numpy as np
from scipy.optimize import minimize

from . import _kernels, linalg
from .measures import f_alpha, require_formula_range, wootters_spectrum
from .states import DensityMatrix, PureState, as_density

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
DROP_WEIGHT = 1e-15
N_THETA = 8
N_PHI = 4
ANGLE_TOL = 1e-5


@dataclass(frozen=True)
class OptBudget:
    """Search budget.

    Every one of ``restarts`` random starts runs coordinate sweeps until a
    sweep gains less than ``tol`` or ``max_sweeps`` sweeps have run. The
    ``polish`` best candidates then get up to ``polish_iters`` L-BFGS steps
    (0 disables the polish).
    """

    restarts: int = 32
    max_sweeps: int = 2
    tol: float = 1e-9
    polish: int = 2
    polish_iters: int = 300

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not self.tol >= 0.0:
            raise ValueError("tol must be >= 0")
        if self.polish < 0 or self.polish_iters < 0:
            raise ValueError("polish and polish_iters must be >= 0")


@dataclass(frozen=True)
class RoofObjective:
    """Per-pure-state objective that depends on the first-qubit-cut concurrence.

    ``kind="concurrence"`` gives C itself; ``kind="renyi"`` gives f_alpha(C),
    which equals the Renyi-alpha entropy of the first qubit's reduction.
    """

    kind: str
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("concurrence", "renyi"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def code(self) -> int:
        return _kernels.KIND_CONCURRENCE if self.kind == "concurrence" else _kernels.KIND_RENYI

    def concurrence(self, states) -> np.ndarray:
        states = np.asarray(states, dtype=np.complex128)
        d = states.shape[-1]
        mat = states.reshape(states.shape[:-1] + (2, d // 2))
        red = mat @ np.swapaxes(mat.conj(), -1, -2)
        det = (red[..., 0, 0] * red[..., 1, 1] - red[..., 0, 1] * red[..., 1, 0]).real
        return np.clip(2.0 * np.sqrt(np.clip(det, 0.0, None)), 0.0, 1.0)

    def __call__(self, states) -> np.ndarray:
        c = self.concurrence(states)
        if self.kind == "concurrence":
            return c
        return np.asarray(f_alpha(c, self.alpha))


def concurrence_objective() -> RoofObjective:
    return RoofObjective("concurrence")


def renyi_objective(alpha) -> RoofObjective:
    return RoofObjective("renyi", float(alpha))


@dataclass(frozen=True, eq=False)
class Decomposition:
    weights: np.ndarray
    states: np.ndarray
    n_qubits: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        s = np.asarray(self.states, dtype=np.complex128)
        if w.ndim != 1 or s.shape != (w.shape[0], 1 << self.n_qubits):
            raise ValueError("weights and states do not match")
        if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-10:
            raise ValueError(f"weights must be a probability vector (sum {w.sum()!r})")
        norms = np.einsum("ij,ij->i", s.conj(), s).real
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ValueError("decomposition states must be normalized")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", s)

    @classmethod
    def from_rows(cls, rows, n_qubits: int) -> "Decomposition":
        rows = np.asarray(rows, dtype=np.complex128)
        w = np.einsum("ij,ij->i", rows.conj(), rows).real
        keep = w > DROP_WEIGHT
        w, rows = w[keep], rows[keep]
        return cls(w, rows / np.sqrt(w)[:, None], n_qubits)

    def __len__(self) -> int:
        return self.weights.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.states.T * self.weights) @ self.states.conj()

    def reconstruction_error(self, rho) -> float:
        return float(np.max(np.abs(self.reconstruct() - as_density(rho).matrix)))

    def pure_states(self) -> list[PureState]:
        return [PureState(self.n_qubits, s) for s in self.states]

    def average(self, objective) -> float:
        return float(np.dot(self.weights, objective(self.states)))


@dataclass(frozen=True, eq=False)
class RoofResult:
    value: float
    mode: str
    decomposition: Decomposition
    restarts_used: int
    converged: bool
    sweeps: int = 0
    trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def bound_side(self) -> str:
        """Which side of the true optimum ``value`` lies on."""
        return "lower" if self.mode == "max" else "upper"


def _weighted_eigenvectors(rho: DensityMatrix) -> np.ndarray:
    w, v = linalg.herm_eig(rho.matrix)
    keep = w > RANK_TOL
    return (v[:, keep] * np.sqrt(w[keep])).T


def isometry_pairs(m: int, r: int) -> list[tuple[int, int]]:
    return [(k, j) for k in range(r) for j in range(k + 1, m)]


def n_isometry_params(rank: int) -> int:
    return 2 * len(isometry_pairs(rank * rank, rank)) + rank


def isometry_from_params(params, m: int, r: int) -> np.ndarray:
    """m x r isometry: a product of two-row complex rotations on phased identity columns.

    The rotation list covers, for each column k, the pairs (k, j > k); this is
    the Givens reduction of an arbitrary isometry, so every m x r isometry is
    reached up to row phases (which do not change a decomposition).
    """
    pairs = isometry_pairs(m, r)
    params = np.asarray(params, dtype=float)
    if params.shape != (2 * len(pairs) + r,):
        raise ValueError(f"expected {2 * len(pairs) + r} parameters, got {params.shape}")
    v = np.zeros((m, r), dtype=np.complex128)
    v[np.arange(r), np.arange(r)] = np.exp(1j * params[2 * len(pairs):])
    for idx in range(len(pairs) - 1, -1, -1):
        a, b = pairs[idx]
        t, f = params[2 * idx], params[2 * idx + 1]
        c, s, e = np.cos(t), np.sin(t), np.exp(1j * f)
        ra, rb = v[a].copy(), v[b].copy()
        v[a] = c * ra + s * e * rb
        v[b] = c * rb - s * np.conj(e) * ra
    return v


def decompositions_from_isometry(rho, isometry_params) -> Decomposition:
    rho = as_density(rho)
    etilde = _weighted_eigenvectors(rho)
    r = etilde.shape[0]
    v = isometry_from_params(isometry_params, r * r, r)
    return Decomposition.from_rows(v @ etilde, rho.n_qubits)


def _start_rows(etilde: np.ndarray, seed: int, k: int) -> np.ndarray:
    r = etilde.shape[0]
    rng = np.random.default_rng([int(seed), k])
    params = rng.uniform(0.0, 2.0 * np.pi, size=n_isometry_params(r))
    return np.ascontiguousarray(isometry_from_params(params, r * r, r) @ etilde)


_LN2 = math.log(2.0)


def _value_and_slope(c: np.ndarray, kind: str, alpha: float):
    """F(c) and dF/dc for the objective family, vectorized over c in (0, 1]."""
    if kind == "concurrence":
        return c, np.ones_like(c)
    s = np.sqrt(np.clip(1.0 - c * c, 0.0, None))
    big = 0.5 * (1.0 + s)
    small = c * c / (2.0 * (1.0 + s))
    near_one = s < 1e-7
    s_safe = np.where(near_one, 1.0, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        if abs(alpha - 1.0) < 1e-9:
            val = -(big * np.log2(big) + np.where(small > 0, small * np.log2(small), 0.0))
            slope = c / (2.0 * s_safe) * (np.log2(big) - np.log2(small))
        else:
            total = big**alpha + small**alpha
            val = np.log2(total) / (1.0 - alpha)
            slope = alpha * c * (small ** (alpha - 1.0) - big ** (alpha - 1.0)) / (2.0 * s_safe * total * _LN2 * (1.0 - alpha))
    # both branches tend to alpha * c / ln 2 as c -> 1
    slope = np.where(near_one, alpha * c / _LN2, slope)
    return val, slope


def objective_and_gradient(rows: np.ndarray, objective: RoofObjective):
    """Sum of p_i F(C_i) over the rows and its gradient with respect to conj(rows)."""
    h = rows.shape[1] // 2
    a, b = rows[:, :h], rows[:, h:]
    na = np.einsum("ij,ij->i", a.conj(), a).real
    nb = np.einsum("ij,ij->i", b.conj(), b).real
    ab = np.einsum("ij,ij->i", a.conj(), b)
    p = na + nb
    det = np.clip(na * nb - np.abs(ab) ** 2, 1e-300, None)
    root = np.sqrt(det)
    live = p > DROP_WEIGHT
    c = np.clip(2.0 * root / np.where(live, p, 1.0), 1e-300, 1.0)
    val, slope = _value_and_slope(c, objective.kind, objective.alpha)
    val = np.where(live, val, 0.0)
    # d(pF) = (F - c F') dp + (F' / sqrt(det)) d(det)
    k1 = np.where(live, val - c * slope, 0.0)[:, None]
    k2 = np.where(live, slope / root, 0.0)[:, None]
    ga = k1 * a + k2 * (a * nb[:, None] - b * ab.conj()[:, None])
    gb = k1 * b + k2 * (b * na[:, None] - a * ab[:, None])
    return float(np.dot(p, val)), np.concatenate([ga, gb], axis=1)


def _hermitian_from(x: np.ndarray, m: int, upper) -> np.ndarray:
    n = upper[0].size
    h = np.diag(x[:m]).astype(np.complex128)
    h[upper] = x[m:m + n] + 1j * x[m + n:]
    h[upper[1], upper[0]] = x[m:m + n] - 1j * x[m + n:]
    return h


def _exp_i(h: np.ndarray):
    d, q = np.linalg.eigh(h)
    e = np.exp(1j * d)
    return (q * e) @ q.conj().T, d, q, e


def lbfgs_polish(rows: np.ndarray, objective: RoofObjective, sign: float, max_iter: int, tol: float):
    """Improve ``rows`` by L-BFGS over U = exp(iH) acting on them from the left.

    Returns (new rows, signed value per iteration, converged flag). The gradient
    in H uses the Daleckii-Krein formula for the derivative of exp(iH).
    """
    m = rows.shape[0]
    upper = np.triu_indices(m, 1)
    base = rows.copy()

    def fun(x):
        u, d, q, e = _exp_i(_hermitian_from(x, m, upper))
        val, grad = objective_and_gradient(u @ base, objective)
        gt = q.conj().T @ (grad @ base.conj().T) @ q
        diff = d[:, None] - d[None, :]
        close = np.abs(diff) < 1e-12
        divided = np.where(close, 1j * e[:, None], (e[:, None] - e[None, :]) / np.where(close, 1.0, diff))
        z = q @ (gt * divided.conj()) @ q.conj().T
        g = np.concatenate([2.0 * z.diagonal().real, 2.0 * (z[upper] + z.T[upper]).real, 2.0 * (z[upper].imag - z.T[upper].imag)])
        last["x"], last["f"] = x.copy(), -sign * val
        return -sign * val, -sign * g

    def record(xk):
        f = last["f"] if np.array_equal(xk, last["x"]) else fun(xk)[0]
        trace.append(-f)

    last = {"x": None, "f": 0.0}
    trace = []
    res = minimize(
        fun,
        np.zeros(m * m),
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"maxiter": max_iter, "ftol": tol * 1e-3, "gtol": 1e-12, "maxcor": 30},
    )
    u = _exp_i(_hermitian_from(res.x, m, upper))[0]
    return np.ascontiguousarray(u @ base), np.asarray(trace), bool(res.success)


def optimize_roof(rho, objective: RoofObjective, mode: str = "max", budget: OptBudget | None = None, seed: int = 0) -> RoofResult:
    """Maximize (mode="max") or minimize the average objective over decompositions of rho."""
    if mode not in ("max", "min"):
        raise ValueError(f"mode must be 'max' or 'min', got {mode!r}")
    budget = budget or OptBudget()
    rho = as_density(rho)
    if rho.n_qubits < 2:
        raise ValueError("roof optimization needs at least two qubits")
    etilde = _weighted_eigenvectors(rho)
    r = etilde.shape[0]

    if r == 1:
        dec = Decomposition.from_rows(etilde, rho.n_qubits)
        return RoofResult(dec.average(objective), mode, dec, 0, True)

    sign = 1.0 if mode == "max" else -1.0
    code, alpha = objective.code, objective.alpha
    rows = [_start_rows(etilde, seed, k) for k in range(budget.restarts)]
    traces = [np.full(budget.max_sweeps, np.nan) for _ in rows]
    values = np.empty(budget.restarts)
    sweeps = np.zeros(budget.restarts, dtype=int)
    done = np.zeros(budget.restarts, dtype=bool)
    for k in range(budget.restarts):
        values[k], sweeps[k], done[k] = _kernels.coordinate_search(
            rows[k], code, alpha, sign, budget.max_sweeps, budget.tol, N_THETA, N_PHI, ANGLE_TOL, traces[k]
        )
        traces[k] = traces[k][: sweeps[k]]

    order = sorted(range(budget.restarts), key=lambda k: (-values[k], k))
    if budget.polish_iters > 0:
        for k in order[: budget.polish]:
            new_rows, tail, ok = lbfgs_polish(rows[k], objective, sign, budget.polish_iters, budget.tol)
            new_value = sign * _kernels.objective(new_rows, code, alpha)
            # keep the polish only if an independent evaluation confirms the gain
            if new_value > values[k]:
                rows[k], values[k] = new_rows, new_value
                steps = np.maximum.accumulate(np.append(tail, new_value))
                traces[k] = np.concatenate([traces[k], np.maximum(steps, traces[k][-1])])
                done[k] = ok

    best = max(range(budget.restarts), key=lambda k: (values[k], -k))
    dec = Decomposition.from_rows(rows[best], rho.n_qubits)
    trace = sign * traces[best]
    log.debug("roof %s: value %.12g (converged=%s)", mode, sign * values[best], done[best])
    return RoofResult(dec.average(objective), mode, dec, budget.restarts, bool(done[best]), int(sweeps[best]), trace)


def coa_exact(rho) -> float:
    """Concurrence of assistance of a two-qubit state: the sum of the Wootters spectrum."""
    return float(np.clip(np.sum(wootters_spectrum(rho)), 0.0, 1.0))


def reoa(rho, alpha, budget: OptBudget | None = None, seed: int = 0) -> RoofResult:
    """Lower bound on the Renyi-alpha entanglement of assistance of a two-qubit state."""
    a = require_formula_range(alpha)
    rho = as_density(rho)
    if rho.n_qubits != 2:
        raise ValueError(f"expected a two-qubit state, got {rho.n_qubits} qubits")
    return optimize_roof(rho, renyi_objective(a), "max", budget, seed)


def lemma1_floor(rho, alpha) -> float:
    """f_alpha of the concurrence of assistance, an exact lower bound on the REoA."""
    return f_alpha(coa_exact(rho), require_formula_range(alpha))
