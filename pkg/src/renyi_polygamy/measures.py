"""Closed-form entanglement quantities: Renyi entropies, concurrence and f_alpha.

All logarithms are base 2, so a maximally mixed qubit has entropy 1 and
``f_alpha(1) == 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .states import PureState, as_density

ALPHA_MIN = (math.sqrt(7.0) - 1.0) / 2.0
ALPHA_MAX = (math.sqrt(13.0) - 1.0) / 2.0
ALPHA_ONE_TOL = 1e-9
ENDPOINT_TOL = 1e-14
DOMAIN_SLACK = 1e-9


class AlphaRangeError(ValueError):
    pass


class UnsupportedPartitionError(ValueError):
    pass


@dataclass(frozen=True)
class AlphaParam:
    """Renyi order with its validity flags."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or a <= 0.0:
            raise AlphaRangeError(f"alpha must be a positive real, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def in_lemma_range(self) -> bool:
        return ALPHA_MIN <= self.alpha <= ALPHA_MAX

    @property
    def is_subunit(self) -> bool:
        return 0.0 < self.alpha < 1.0

    @property
    def is_one(self) -> bool:
        return abs(self.alpha - 1.0) < ALPHA_ONE_TOL

    def __float__(self) -> float:
        return self.alpha


@dataclass(frozen=True)
class MuParam:
    mu: float

    def __post_init__(self):
        m = float(self.mu)
        if not 0.0 <= m <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu!r}")
        object.__setattr__(self, "mu", m)

    def __float__(self) -> float:
        return self.mu


def alpha_value(alpha) -> float:
    return AlphaParam(float(alpha)).alpha


def require_formula_range(alpha) -> float:
    """The two-qubit closed form E = f(C) needs alpha >= (sqrt 7 - 1)/2."""
    a = alpha_value(alpha)
    if a < ALPHA_MIN - 1e-15:
        raise AlphaRangeError(f"alpha={a} is below the validity threshold {ALPHA_MIN:.17g}")
    return a


def _xlog2x(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    return -(_xlog2x(p) + _xlog2x(1.0 - p))


def renyi_from_spectrum(w, alpha) -> float:
    a = alpha_value(alpha)
    w = np.asarray(w, dtype=float)
    w = w[w > 0.0]
    if abs(a - 1.0) < ALPHA_ONE_TOL:
        return float(-np.sum(w * np.log2(w)))
    return float(np.log2(np.sum(w**a)) / (1.0 - a))


def spectrum(rho) -> np.ndarray:
    w, _ = linalg.herm_eig(getattr(rho, "matrix", rho))
    return linalg.clamp_spectrum(w)


def renyi_entropy(rho, alpha) -> float:
    """Renyi-alpha entropy in bits; |alpha - 1| < 1e-9 takes the von Neumann limit."""
    return renyi_from_spectrum(spectrum(rho), alpha)


def von_neumann_entropy(rho) -> float:
    return renyi_from_spectrum(spectrum(rho), 1.0)


def theta_xi(x):
    x = _check_unit_interval(x)
    s = np.sqrt(1.0 - x * x)
    theta, xi = 1.0 + s, 1.0 - s
    if theta.ndim == 0:
        return float(theta), float(xi)
    return theta, xi


def _check_unit_interval(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < -DOMAIN_SLACK) or np.any(x > 1.0 + DOMAIN_SLACK):
        raise ValueError("argument must lie in [0, 1]")
    return np.clip(x, 0.0, 1.0)


def _half_eigs(x: np.ndarray):
    # Eigenvalues of the qubit reduction, (1 +- sqrt(1 - x^2)) / 2; the small one
    # is written as x^2 / (2 (1 + s)) to avoid cancellation near x = 0.
    s = np.sqrt(1.0 - x * x)
    return (1.0 + s) / 2.0, x * x / (2.0 * (1.0 + s))


def f_alpha(x, alpha):
    """Renyi-alpha entanglement of a two-qubit pure state with concurrence ``x``.

    Vectorized over ``x``; returns a float for scalar input.
    """
    a = alpha_value(alpha)
    x = _check_unit_interval(x)
    big, small = _half_eigs(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        if abs(a - 1.0) < ALPHA_ONE_TOL:
            val = -(_xlog2x(np.atleast_1d(big)) + _xlog2x(np.atleast_1d(small))).reshape(x.shape)
        else:
            val = np.log2(big**a + small**a) / (1.0 - a)
    val = np.where(1.0 - x * x < ENDPOINT_TOL, 1.0, val)
    val = np.where(x == 0.0, 0.0, val)
    if val.ndim == 0:
        return float(val)
    return val


def _single_qubit(part_a, n_qubits: int) -> int:
    part = sorted(set(int(q) for q in np.atleast_1d(part_a)))
    if len(part) != 1:
        raise UnsupportedPartitionError(f"only single-qubit cuts are supported, got {part}")
    q = part[0]
    if not 0 <= q < n_qubits:
        raise IndexError(f"qubit {q} out of range for {n_qubits} qubits")
    return q


def concurrence_pure_bipartition(psi: PureState, part_a) -> float:
    """Concurrence of a pure state across the cut (qubit ``part_a``) | rest."""
    q = _single_qubit(part_a, psi.n_qubits)
    rho_a = psi.reduced([q])
    purity = float(np.real(np.trace(rho_a @ rho_a)))
    return float(min(1.0, math.sqrt(max(0.0, 2.0 * (1.0 - purity)))))


def wootters_spectrum(rho) -> np.ndarray:
    """Descending square roots of the eigenvalues of rho * spin_flip(rho).

    Computed from the Hermitian product sqrt(rho) rho~ sqrt(rho).
    """
    m = as_density(rho).matrix
    if m.shape != (4, 4):
        raise ValueError(f"expected a two-qubit state, got shape {m.shape}")
    root = linalg.psd_sqrt(m)
    r = root @ linalg.spin_flip(m) @ root
    w, _ = linalg.herm_eig(0.5 * (r + r.conj().T))
    return np.sqrt(linalg.clamp_spectrum(w))


def concurrence_mixed_2q(rho) -> float:
    lam = wootters_spectrum(rho)
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def renyi_entanglement_2q(rho, alpha) -> float:
    a = require_formula_range(alpha)
    return f_alpha(concurrence_mixed_2q(rho), a)


def renyi_entanglement_pure(psi: PureState, part_a, alpha) -> float:
    part = sorted(set(int(q) for q in np.atleast_1d(part_a)))
    return renyi_entropy(psi.reduced(part), alpha)

