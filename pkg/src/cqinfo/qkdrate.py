"""Key-rate evaluation and threshold solving for BB84, six-state, and
tetrahedral protocols, with noisy preprocessing and repetition-code blocks.

The m-block rate uses the fact that Eve's conditional states are block
diagonal over the channel's amplitude-error pattern: within a pattern of
weight w her state is a tensor product of 2×2 "phase register" factors,
mixed over Alice's deliberate flips, so H(key|E, syndromes) reduces to m+1
eigenproblems of dimension 2^m instead of one of dimension 32^m.  The
brute-force oracle below validates the reduction with no such structure.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import qstate as qs
from .distill import bell_diagonal_purification
from .errors import CapabilityError, ConstructionError, ContractError, SolverError
from .pauli import BellDiagonalParams
from .uncert import measured_cond_entropy

PROTOCOLS = ("bb84", "sixstate", "tetrahedral")
DEFAULT_M_CAP = 12


def h2(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


@dataclass(frozen=True)
class KeyRateModel:
    """Protocol variant plus preprocessing: flip probability q, block size m."""

    protocol: str
    q: float = 0.0
    m: int = 1

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConstructionError(f"unknown protocol {self.protocol!r}")
        if not 0.0 <= self.q <= 0.5:
            raise ConstructionError("q must lie in [0, 1/2]")
        if self.m < 1:
            raise ConstructionError("m must be >= 1")


def bell_params(protocol: str, delta: float) -> BellDiagonalParams:
    """Bell-diagonal channel parameters at sifted error rate δ.

    BB84 has independent, equal amplitude and phase error rates; the
    tetrahedral protocol satisfies p01 = p11 = 2 p10; six-state is the
    depolarizing-symmetric point.  All satisfy p10 + p11 = δ.
    """
    if not 0.0 <= delta < 0.5:
        raise ContractError("delta must lie in [0, 1/2)")
    if protocol == "bb84":
        return BellDiagonalParams((1 - delta) ** 2, delta * (1 - delta), delta * (1 - delta), delta**2)
    if protocol == "sixstate":
        return BellDiagonalParams(1 - 1.5 * delta, delta / 2, delta / 2, delta / 2)
    if protocol == "tetrahedral":
        return BellDiagonalParams(1 - 5 * delta / 3, 2 * delta / 3, delta / 3, 2 * delta / 3)
    raise ConstructionError(f"unknown protocol {protocol!r}")


def closed_form_rate(protocol: str, delta: float) -> float:
    """Single-letter, q=0 key rates (information reconciliation at h₂(δ)
    plus phase entropy conditioned on the amplitude-error flag)."""
    if delta == 0.0:
        return 1.0
    if protocol == "bb84":
        return 1.0 - 2.0 * h2(delta)
    if protocol == "sixstate":
        return 1.0 - h2(delta) - (1 - delta) * h2(delta / (2 * (1 - delta))) - delta
    if protocol == "tetrahedral":
        return (
            1.0
            - h2(delta)
            - delta * h2(1.0 / 3.0)
            - (1 - delta) * h2(2 * delta / (3 * (1 - delta)))
        )
    raise ConstructionError(f"unknown protocol {protocol!r}")


def _phase_register_factors(p: BellDiagonalParams, q: float) -> list[np.ndarray]:
    """τ_j for j = 0, 1: Eve's 2×2 phase-register state within an
    amplitude-error sector, mixed over the preprocessing flip."""
    out = []
    for j in (0, 1):
        pj = (p.p00, p.p01) if j == 0 else (p.p10, p.p11)
        tot = pj[0] + pj[1]
        if tot <= 0:
            out.append(np.zeros((2, 2)))
            continue
        e0 = np.array([math.sqrt(pj[0] / tot), math.sqrt(pj[1] / tot)])
        e1 = np.array([e0[0], -e0[1]])
        out.append((1 - q) * np.outer(e0, e0) + q * np.outer(e1, e1))
    return out


def _entropy_psd(mat: np.ndarray) -> float:
    ev = np.linalg.eigvalsh(mat)
    ev = ev[ev > 1e-14]
    return float(-(ev * np.log2(ev)).sum()) if ev.size else 0.0


def _kron_power_mix(tau1: np.ndarray, tau0: np.ndarray, w: int, m: int) -> float:
    """H(½ T + ½ V^⊗m T V^⊗m) for T = τ1^⊗w ⊗ τ0^⊗(m−w), V = diag(1,−1)."""
    T = np.array([[1.0]])
    for _ in range(w):
        T = np.kron(T, tau1)
    for _ in range(m - w):
        T = np.kron(T, tau0)
    signs = np.array([1.0])
    V = np.array([1.0, -1.0])
    for _ in range(m):
        signs = np.kron(signs, V)
    flipped = T * np.outer(signs, signs)
    return _entropy_psd(0.5 * (T + flipped))


def key_given_eve_and_syndromes(p: BellDiagonalParams, q: float, m: int) -> float:
    """H(Z̄|E,S) by the amplitude-error sector decomposition."""
    delta = p.amp_error
    tau0, tau1 = _phase_register_factors(p, q)
    h_tau0 = _entropy_psd(tau0)
    h_tau1 = _entropy_psd(tau1) if delta > 0 else 0.0
    total = 1.0
    correction = 0.0
    for w in range(m + 1):
        weight = math.comb(m, w) * delta**w * (1 - delta) ** (m - w)
        if weight <= 0:
            continue
        h_parts = w * h_tau1 + (m - w) * h_tau0
        h_mix = _kron_power_mix(tau1, tau0, w, m)
        correction += weight * (h_parts - h_mix)
    return total + correction


def key_given_bob_and_syndromes(p: BellDiagonalParams, q: float, m: int) -> float:
    """H(Z̄|B,S): classical residual key entropy after syndrome decoding.

    Bob sees his own block and the syndromes; the posterior over the key bit
    depends only on the weight of the implied error pattern, so the 2^m×2^m
    enumeration aggregates into m+1 weight classes.
    """
    dq = p.amp_error * (1 - q) + q * (1 - p.amp_error)
    if dq <= 0.0 or dq >= 1.0:
        return 0.0
    total = 0.0
    for w in range(m + 1):
        weight = math.comb(m, w) * dq**w * (1 - dq) ** (m - w)
        a = dq**w * (1 - dq) ** (m - w)
        b = dq ** (m - w) * (1 - dq) ** w
        total += weight * h2(a / (a + b))
    return total


def rate(model: KeyRateModel, delta: float, m_cap: int = DEFAULT_M_CAP) -> float:
    """Key bits per sifted signal for the given preprocessing.

    m=1, q=0 uses the closed forms; m=1, q>0 evaluates the distillation-rate
    formula on the explicit purified state; m>1 uses the sector
    decomposition, at (1/m)[H(Z̄|E,S) − H(Z̄|B,S)].
    """
    if model.m > m_cap:
        raise CapabilityError(f"m={model.m} exceeds cap {m_cap}")
    if not 0.0 <= delta < 0.5:
        raise ContractError("delta must lie in [0, 1/2)")
    if model.m == 1:
        if model.q == 0.0:
            return closed_form_rate(model.protocol, delta)
        return _rate_explicit_m1(model.protocol, delta, model.q)
    p = bell_params(model.protocol, delta)
    return (
        key_given_eve_and_syndromes(p, model.q, model.m)
        - key_given_bob_and_syndromes(p, model.q, model.m)
    ) / model.m


def rate_sector(model: KeyRateModel, delta: float) -> float:
    """Sector-decomposition rate at any m ≥ 1 (used for cross-validation)."""
    p = bell_params(model.protocol, delta)
    return (
        key_given_eve_and_syndromes(p, model.q, model.m)
        - key_given_bob_and_syndromes(p, model.q, model.m)
    ) / model.m


def _rate_explicit_m1(protocol: str, delta: float, q: float) -> float:
    """Eq.-style evaluation on the explicit (A_K, A', B_K, E) pure state."""
    p = bell_params(protocol, delta)
    psi = bell_diagonal_purification(p, "Ak", "Bk", "E")
    anc = qs.from_amplitudes({"Ap": 2}, [math.sqrt(1 - q), math.sqrt(q)])
    full = psi.tensor(anc)
    # CNOT with control A' and target the raw key.
    cnot = np.zeros((4, 4), dtype=complex)
    for c in (0, 1):
        for t in (0, 1):
            cnot[c * 2 + (t ^ c), c * 2 + t] = 1.0
    full = full.apply(cnot, ["Ap", "Ak"])
    rho = full.density()
    ir = measured_cond_entropy(rho.partial_trace({"Ak", "Bk"}), "Ak", np.eye(2), "Bk")
    # Copy the (flipped) key coherently, then measure the phase.
    copy = np.zeros((4, 4), dtype=complex)
    for c in (0, 1):
        for t in (0, 1):
            copy[c * 2 + (t ^ c), c * 2 + t] = 1.0
    with_copy = full.tensor(qs.basis_state({"Cz": 2}, 0)).apply(copy, ["Ak", "Cz"])
    pa = measured_cond_entropy(
        with_copy.density(), "Ak", qs.fourier_basis(2), ["Cz", "Ap", "Bk"]
    )
    return 1.0 - ir - pa


def oracle_rate_smallm(model: KeyRateModel, delta: float) -> float:
    """Brute-force oracle for m ≤ 4: builds the full purified block state
    (signal pairs plus noise ancillas) and takes conditional entropies from
    explicit density matrices, with no sector shortcuts."""
    m = model.m
    if m > 4:
        raise CapabilityError("oracle limited to m <= 4")
    p = bell_params(model.protocol, delta)
    q = model.q
    # Single-signal pure state on (Ak, Ap, Bk, E): dim 32, amplitudes in
    # (Ak, Ap, Bk, E) index order.
    psi1 = bell_diagonal_purification(p, "Ak", "Bk", "E")
    anc = qs.from_amplitudes({"Ap": 2}, [math.sqrt(1 - q), math.sqrt(q)])
    full = psi1.tensor(anc)
    cnot = np.zeros((4, 4), dtype=complex)
    for c in (0, 1):
        for t in (0, 1):
            cnot[c * 2 + (t ^ c), c * 2 + t] = 1.0
    full = full.apply(cnot, ["Ap", "Ak"])
    vec1 = full.amplitudes_in_order(["Ak", "Ap", "Bk", "E"])  # shape 2*2*2*4
    # Full block state, amplitudes indexed (Ak1..Akm | rest1..restm) after a
    # reshape: build as ⊗ then permute key axes to the front.
    t = vec1.reshape(2, 16)
    block = np.array([1.0 + 0j])
    for _ in range(m):
        block = np.kron(block, vec1)
    block = block.reshape([2, 16] * m)
    perm = [2 * i for i in range(m)] + [2 * i + 1 for i in range(m)]
    block = np.transpose(block, perm).reshape(1 << m, 16**m)
    # Conditional states per key string z; rest order per signal: (Ap,Bk,E).
    d_rest_keep = 4**m  # E systems together
    d_rest_drop = 4**m  # (Ap, Bk) together
    probs = np.zeros(1 << m)
    rho_e = np.zeros((1 << m, d_rest_keep, d_rest_keep), dtype=complex)
    rho_b = {}
    for z in range(1 << m):
        v = block[z]
        w = float(np.vdot(v, v).real)
        probs[z] = w
        if w <= 1e-15:
            continue
        # rest index structure: ⊗_i (Ap_i:2, Bk_i:2, E_i:4) → reorder to
        # (Ap⊗Bk factors, E factors).
        tens = v.reshape([2, 2, 4] * m)
        perm2 = []
        for i in range(m):
            perm2.extend([3 * i, 3 * i + 1])
        for i in range(m):
            perm2.append(3 * i + 2)
        tens = np.transpose(tens, perm2).reshape(d_rest_drop, d_rest_keep)
        rho_e[z] = (tens.conj().T @ tens) / w
        # Bob marginal: keep Bk factors only.
        tens_b = v.reshape([2, 2, 4] * m)
        perm3 = []
        for i in range(m):
            perm3.extend([3 * i, 3 * i + 2])
        for i in range(m):
            perm3.append(3 * i + 1)
        tens_b = np.transpose(tens_b, perm3).reshape(8**m, 2**m)
        rho_b[z] = (tens_b.conj().T @ tens_b) / w
    probs = probs / probs.sum()
    # Syndromes: s_i = z_1 ⊕ z_{i+1}; key bit = z_1.  Bit 0 of the index is
    # qubit 1 here (little-endian over signals).
    def split(z):
        zbits = [(z >> i) & 1 for i in range(m)]
        key = zbits[0]
        synd = 0
        for i in range(1, m):
            synd |= (zbits[0] ^ zbits[i]) << (i - 1)
        return key, synd

    h_zse, h_se = _cq_pair_entropy(probs, rho_e, split, m)
    h_zsb, h_sb = _cq_pair_entropy(probs, rho_b, split, m)
    return ((h_zse - h_se) - (h_zsb - h_sb)) / m


def _cq_pair_entropy(probs, blocks, split, m) -> tuple[float, float]:
    """(H(Z̄ S X), H(S X)) for classical (Z̄, S) with quantum side blocks."""
    from collections import defaultdict

    h_zsx = 0.0
    by_zs = {}
    by_s = defaultdict(list)
    for z in range(1 << m):
        if probs[z] <= 1e-15:
            continue
        key, synd = split(z)
        by_zs[(key, synd)] = (probs[z], blocks[z])
        by_s[synd].append((probs[z], blocks[z]))
    # H(Z̄ S X) = H({p_{z̄,s}}) + Σ p H(block)
    ps = np.array([w for w, _ in by_zs.values()])
    h_zsx = qs.shannon(ps) + sum(w * _entropy_psd(np.asarray(b)) for w, b in by_zs.values())
    ps2 = []
    h_sx = 0.0
    for synd, entries in by_s.items():
        w = sum(e[0] for e in entries)
        ps2.append(w)
        mix = sum(e[0] * np.asarray(e[1]) for e in entries) / w
        h_sx += w * _entropy_psd(mix)
    h_sx += qs.shannon(np.array(ps2))
    return h_zsx, h_sx


@dataclass
class ThresholdResult:
    """Root of the key rate in δ, with solver diagnostics."""

    delta_star: float
    q_used: float
    m_used: int
    solver_evals: int
    bracket: tuple[float, float]

    def to_json(self) -> str:
        return json.dumps(
            {
                "delta_star": self.delta_star,
                "q": self.q_used,
                "m": self.m_used,
                "solver_evals": self.solver_evals,
                "bracket": list(self.bracket),
            }
        )


BRACKET_HI = 0.25
# q = 1/2 makes the rate identically zero (full randomization costs one bit
# of reconciliation but hands the whole phase to the shield), so "positive"
# means strictly above this float guard.
POS_EPS = 1e-9


def threshold(model: KeyRateModel, tol: float = 1e-5, rate_fn=None) -> ThresholdResult:
    """Bisection for the largest δ with positive rate, on [0, 0.25]."""
    f = rate_fn if rate_fn is not None else (lambda d: rate(model, d))
    evals = 0

    def g(d):
        nonlocal evals
        evals += 1
        return f(d)

    lo, hi = 0.0, BRACKET_HI
    r_lo = g(1e-12)
    if r_lo <= POS_EPS:
        raise SolverError("rate at delta=0 is not positive")
    r_hi = g(hi)
    if r_hi > POS_EPS:
        raise SolverError(f"no sign change on [0, {BRACKET_HI}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > POS_EPS:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(
        delta_star=0.5 * (lo + hi),
        q_used=model.q,
        m_used=model.m,
        solver_evals=evals,
        bracket=(lo, hi),
    )


def optimize_preprocessing(protocol: str, delta: float, m: int = 1, tol: float = 1e-4) -> tuple[float, float]:
    """(q*, rate*) maximizing the rate over q ∈ [0, 1/2].

    A 21-point grid seeds a golden-section search; ties within 1e-9 prefer
    the smaller q.
    """

    def f(q):
        return rate(KeyRateModel(protocol, q=q, m=m), delta)

    grid = np.linspace(0.0, 0.5, 21)
    vals = [f(q) for q in grid]
    best_idx = 0
    for i, v in enumerate(vals):
        if v > vals[best_idx] + 1e-9:
            best_idx = i
    lo = grid[max(0, best_idx - 1)]
    hi = grid[min(len(grid) - 1, best_idx + 1)]
    phi_r = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - phi_r * (b - a)
    d = a + phi_r * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd + 1e-12:
            b, d, fd = d, c, fc
            c = b - phi_r * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi_r * (b - a)
            fd = f(d)
    candidates = [(a, f(a)), (0.5 * (a + b), f(0.5 * (a + b))), (b, f(b))]
    candidates.sort(key=lambda t: (-t[1], t[0]))
    best_q, best_rate = candidates[0]
    # Smaller q wins on a flat optimum.
    for qq, rr in sorted(candidates):
        if rr >= best_rate - 1e-9:
            best_q, best_rate = qq, rr
            break
    if f(0.0) >= best_rate - 1e-9:
        best_q, best_rate = 0.0, f(0.0)
    return float(best_q), float(best_rate)


def optimized_threshold(protocol: str, m: int = 1, tol: float = 1e-5) -> ThresholdResult:
    """Threshold of the q-optimized rate: root of max_q rate(δ, q)."""
    evals = 0

    def g(d):
        nonlocal evals
        evals += 1
        _, r = optimize_preprocessing(protocol, d, m=m)
        return r

    lo, hi = 0.0, BRACKET_HI
    if g(1e-12) <= POS_EPS:
        raise SolverError("optimized rate at delta=0 is not positive")
    if g(hi) > POS_EPS:
        raise SolverError(f"no sign change on [0, {BRACKET_HI}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > POS_EPS:
            lo = mid
        else:
            hi = mid
    d_star = 0.5 * (lo + hi)
    q_star, _ = optimize_preprocessing(protocol, max(lo - tol, 0.0), m=m)
    return ThresholdResult(
        delta_star=d_star,
        q_used=q_star,
        m_used=m,
        solver_evals=evals,
        bracket=(lo, hi),
    )
