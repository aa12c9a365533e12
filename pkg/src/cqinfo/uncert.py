"""Numerical checks of the entropic uncertainty relations and related bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qstate as qs
from .errors import ConstructionError, ContractError

SLACK_TOL = 1e-9


@dataclass
class ObservablePair:
    """Two orthonormal bases (column matrices) on the same system."""

    basis1: np.ndarray
    basis2: np.ndarray

    def __post_init__(self):
        self.basis1 = np.asarray(self.basis1, dtype=complex)
        self.basis2 = np.asarray(self.basis2, dtype=complex)
        d = self.basis1.shape[0]
        if self.basis1.shape != (d, d) or self.basis2.shape != (d, d):
            raise ConstructionError("bases must be square matrices of equal size")
        for b in (self.basis1, self.basis2):
            if np.max(np.abs(b.conj().T @ b - np.eye(d))) > 1e-10:
                raise ConstructionError("basis columns are not orthonormal")

    @property
    def dim(self) -> int:
        return self.basis1.shape[0]


def zx_pair(d: int = 2) -> ObservablePair:
    """Amplitude (computational) and phase (Fourier) bases."""
    return ObservablePair(np.eye(d, dtype=complex), qs.fourier_basis(d))


def overlap_c(pair: ObservablePair) -> float:
    """c = max_{j,k} |⟨ψ_j|φ_k⟩|²; equals 1/d for mutually unbiased bases."""
    ov = np.abs(pair.basis1.conj().T @ pair.basis2) ** 2
    return float(ov.max())


def _outcome_entropy(state, basis: np.ndarray, label: str) -> float:
    return qs.shannon(qs.measure_probs(state, label, basis))


def check_maassen_uffink(state, pair: ObservablePair) -> float:
    """Slack of H(basis1) + H(basis2) ≥ log(1/c) for a single-system state."""
    if isinstance(state, qs.StateVector):
        if len(state.names) != 1:
            raise ContractError("single-system state required")
        label = state.names[0]
    else:
        if len(state.names) != 1:
            raise ContractError("single-system state required")
        label = state.names[0]
    h1 = _outcome_entropy(state, pair.basis1, label)
    h2 = _outcome_entropy(state, pair.basis2, label)
    return h1 + h2 - math.log2(1.0 / overlap_c(pair))


def measured_cond_entropy(rho: qs.DensityMatrix, label: str, basis: np.ndarray, given) -> float:
    """H of the `label` outcome conditioned on `given`, evaluated on the state
    after the observable has been measured (dephased in `basis`)."""
    deph = qs.dephase(rho, label, basis)
    return qs.cond_entropy(deph, label, given)


def check_berta(rho: qs.DensityMatrix, pair: ObservablePair, target: str | None = None) -> float:
    """Slack of H(X^A|B) + H(Z^A|B) ≥ log(1/c) + H(A|B) on a bipartite state."""
    names = list(rho.names)
    if len(names) != 2:
        raise ContractError("bipartite state required")
    a = target if target is not None else names[0]
    b = next(n for n in names if n != a)
    if rho.labels[a] != pair.dim:
        raise ContractError("pair dimension does not match the measured system")
    h1 = measured_cond_entropy(rho, a, pair.basis1, b)
    h2 = measured_cond_entropy(rho, a, pair.basis2, b)
    hab = qs.cond_entropy(rho, a, b)
    return h1 + h2 - math.log2(1.0 / overlap_c(pair)) - hab


def check_tripartite(psi: qs.StateVector, pair: ObservablePair, target: str, memory1: str, memory2: str) -> float:
    """Slack of H(basis1^A|B) + H(basis2^A|C) ≥ log(1/c) for pure ψ^{ABC}."""
    if not isinstance(psi, qs.StateVector):
        raise ContractError("pure tripartite state required")
    rho = psi.density()
    rho_ab = rho.partial_trace({target, memory1})
    rho_ac = rho.partial_trace({target, memory2})
    h1 = measured_cond_entropy(rho_ab, target, pair.basis1, memory1)
    h2 = measured_cond_entropy(rho_ac, target, pair.basis2, memory2)
    return h1 + h2 - math.log2(1.0 / overlap_c(pair))


def pinsker_secure(rho: qs.DensityMatrix, key: str) -> tuple[float, float, bool]:
    """Check: H(Z^A|E) ≥ 1 − ε² implies p_secure ≥ 1 − ε (binary key).

    Returns (conditional entropy, implied p_secure lower bound, truth of the
    implication for this state).
    """
    if rho.labels[key] != 2:
        raise ContractError("key system must be binary")
    if not qs.is_cq(rho, key):
        raise ContractError(f"state is not classical on {key}")
    others = [n for n in rho.names if n != key]
    h = qs.cond_entropy(rho, key, others)
    eps_sq = max(0.0, 1.0 - h)
    bound = 1.0 - math.sqrt(eps_sq)
    actual = qs.p_secure(rho, key)
    return h, bound, actual >= bound - 1e-9


def _bloch_vector(theta: float, phi: float) -> np.ndarray:
    return np.array(
        [math.cos(theta / 2), math.sin(theta / 2) * np.exp(1j * phi)], dtype=complex
    )


def _bloch_optimize(score, n_grid: int, minimize: bool, refine_rounds: int = 4) -> tuple[float, tuple[float, float]]:
    """Grid scan over the Bloch sphere followed by local grid refinement."""
    side = max(4, int(math.sqrt(n_grid)))
    thetas = np.linspace(0.0, math.pi, side)
    phis = np.linspace(0.0, 2 * math.pi, side, endpoint=False)
    sign = 1.0 if minimize else -1.0
    best = (math.inf, (0.0, 0.0))
    for th in thetas:
        for ph in phis:
            v = sign * score(th, ph)
            if v < best[0]:
                best = (v, (th, ph))
    span_t, span_p = math.pi / side, 2 * math.pi / side
    for _ in range(refine_rounds):
        th0, ph0 = best[1]
        for th in np.linspace(th0 - span_t, th0 + span_t, 11):
            th = min(max(th, 0.0), math.pi)
            for ph in np.linspace(ph0 - span_p, ph0 + span_p, 11):
                v = sign * score(th, ph)
                if v < best[0]:
                    best = (v, (th, ph))
        span_t /= 5
        span_p /= 5
    return sign * best[0], best[1]


def guessing_game_optimum(n_grid: int = 2500) -> float:
    """Best average success at predicting both Z and X outcomes of one qubit.

    Maximizes over pure states the mean of the two per-basis best guesses;
    the optimum is ½ + 1/(2√2), attained between the |0⟩ and |+⟩ axes.
    """
    four = qs.fourier_basis(2)

    def score(theta, phi):
        v = _bloch_vector(theta, phi)
        pz = np.abs(v) ** 2
        px = np.abs(four.conj().T @ v) ** 2
        return 0.5 * (pz.max() + px.max())

    val, _ = _bloch_optimize(score, n_grid, minimize=False)
    return float(val)


LOCKING_STATES = "holevo-four-state"


def locking_example(n_grid: int = 10000) -> dict:
    """Minimum over projective qubit measurements of the key-bit entropy for
    the four-state ensemble {|0⟩, |1⟩, |+⟩, |−⟩} with the basis announced.

    The measured system holds one of the four states with equal priors; the
    reported entropy is H(bit | basis, outcome), whose optimum is 1/2 even
    though H(Z^A|B) = 1 for the underlying CQ state (the locking gap).
    """
    states = [
        np.array([1, 0], dtype=complex),
        np.array([0, 1], dtype=complex),
        np.array([1, 1], dtype=complex) / math.sqrt(2),
        np.array([1, -1], dtype=complex) / math.sqrt(2),
    ]

    def score(theta, phi):
        m0 = _bloch_vector(theta, phi)
        m1 = np.array([-np.conj(m0[1]), np.conj(m0[0])], dtype=complex)
        h = 0.0
        for m in (m0, m1):
            probs = np.array([abs(np.vdot(m, s)) ** 2 for s in states])
            for k in (0, 1):  # basis: Z states 0,1 / X states 2,3
                pk = probs[2 * k] + probs[2 * k + 1]
                if pk > 1e-15:
                    # outcome weight ¼·pk, conditional bit distribution within basis
                    h += 0.25 * pk * qs.shannon([probs[2 * k] / pk, probs[2 * k + 1] / pk])
        return h

    val, angles = _bloch_optimize(score, n_grid, minimize=True)
    return {"min_entropy": float(val), "theta": angles[0], "phi": angles[1]}
