"""Distillation at the hashing bound, reconciliation and privacy
amplification at toy scale, their duality, and the coset channel-code demo.

Bell-diagonal distillation is simulated entirely classically (error strings
and syndromes); the transpose identity 1⊗E|Φ⟩ = Eᵀ⊗1|Φ⟩ makes Alice's and
Bob's stabilizer comparison equivalent to syndrome decoding of the error
string, so no 2n-qubit state vectors are ever formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gf2, pauli, qstate as qs
from .errors import CapabilityError, ConstructionError, ContractError
from .gf2 import F2Mat, F2Vec
from .pauli import BellDiagonalParams


def bell_diagonal_dm(p: BellDiagonalParams, a: str = "A", b: str = "B") -> qs.DensityMatrix:
    """Σ p_jk |β_jk⟩⟨β_jk| as a labeled density matrix."""
    m = np.zeros((4, 4), dtype=complex)
    for (j, k), w in zip([(0, 0), (0, 1), (1, 0), (1, 1)], [p.p00, p.p01, p.p10, p.p11]):
        v = qs.bell_state(j, k, a, b).amplitudes_in_order([a, b])
        m += w * np.outer(v, v.conj())
    return qs.DensityMatrix({a: 2, b: 2}, m, given_order=[a, b], validate=False)


def bell_diagonal_purification(p: BellDiagonalParams, a: str = "A", b: str = "B", e: str = "E") -> qs.StateVector:
    """Σ √p_jk |β_jk⟩^{AB} |jk⟩^E (E flags the Pauli error)."""
    amps = np.zeros(16, dtype=complex)
    for idx, ((j, k), w) in enumerate(
        zip([(0, 0), (0, 1), (1, 0), (1, 1)], [p.p00, p.p01, p.p10, p.p11])
    ):
        v = qs.bell_state(j, k, a, b).amplitudes_in_order([a, b])
        amps += math.sqrt(max(w, 0.0)) * np.kron(v, np.eye(4)[idx])
    return qs.StateVector({a: 2, b: 2, e: 4}, amps, given_order=[a, b, e])


def hashing_rate(rho: qs.DensityMatrix, a: str | None = None) -> float:
    """Distillation rate −H(A|B) (the hashing bound)."""
    names = list(rho.names)
    if len(names) != 2:
        raise ContractError("bipartite state required")
    a = a if a is not None else names[0]
    b = next(n for n in names if n != a)
    return -qs.cond_entropy(rho, a, b)


def merging_rates(rho: qs.DensityMatrix, a: str | None = None) -> tuple[float, float, float]:
    """(quantum cost H(A|B), classical cost I(A:E), distill rate −H(A|B))."""
    names = list(rho.names)
    if len(names) != 2:
        raise ContractError("bipartite state required")
    a = a if a is not None else names[0]
    b = next(n for n in names if n != a)
    q_cost = qs.cond_entropy(rho, a, b)
    psi = qs.purify(rho, "__env")
    full = psi.density()
    h_a = qs.entropy(full.partial_trace({a}))
    h_e = qs.entropy(full.partial_trace({"__env"}))
    h_ae = qs.entropy(full.partial_trace({a, "__env"}))
    c_cost = h_a + h_e - h_ae
    return q_cost, c_cost, -q_cost


def coherent_information(theta: qs.DensityMatrix, isometry: np.ndarray, d_out: int, d_env: int) -> float:
    """I_c = H(B) − H(E) for a channel given as an isometry B → B_out ⊗ E."""
    b = list(theta.names)[0]
    psi = qs.purify(theta, "__ref")
    out = psi.apply_isometry(isometry, [b], {"__bout": d_out, "__benv": d_env})
    rho = out.density()
    return qs.entropy(rho.partial_trace({"__bout"})) - qs.entropy(rho.partial_trace({"__benv"}))


@dataclass
class DistillationRun:
    """Monte-Carlo record for one CSS hashing run."""

    n: int
    n_Z: int
    n_X: int
    trials: int
    seed: int
    failures: int
    logical_error_rate: float
    rate: float

    def to_csv_row(self) -> str:
        return (
            f"{self.n},{self.n_Z},{self.n_X},{self.trials},{self.seed},"
            f"{self.failures},{self.logical_error_rate:.12g},{self.rate:.12g}"
        )


CSV_HEADER = "n,n_Z,n_X,trials,seed,failures,logical_error_rate,rate"

_DISTILL_CAP = 20


def _min_weight_coset_element(syndrome_mask: int, H: F2Mat, kernel: list[int], log_w: tuple[float, float]) -> int:
    """Max-probability pattern with the given syndrome (i.i.d. per-bit law)."""
    part = gf2.solve(H, F2Vec(syndrome_mask, H.n_rows))
    if part is None:
        raise ConstructionError("inconsistent syndrome")
    l0, l1 = log_w
    best, best_score = None, -math.inf
    n = H.n_cols
    for c in range(1 << len(kernel)):
        m = part.mask
        cc = c
        i = 0
        while cc:
            if cc & 1:
                m ^= kernel[i]
            cc >>= 1
            i += 1
        w = bin(m).count("1")
        score = w * l1 + (n - w) * l0
        if score > best_score + 1e-15 or (abs(score - best_score) <= 1e-15 and (best is None or m < best)):
            best, best_score = m, score
    return best


def simulate_distillation(
    p: BellDiagonalParams,
    n: int,
    n_Z: int,
    n_X: int,
    trials: int,
    seed: int,
) -> DistillationRun:
    """CSS-hashing distillation under i.i.d. Bell-diagonal noise.

    Amplitude errors are decoded from the Z syndromes under the amplitude
    marginal, then phase errors from the X syndromes under the
    amplitude-conditioned posterior; a trial fails when the residual acts
    nontrivially on a logical operator (degenerate residuals succeed).
    """
    if n > _DISTILL_CAP:
        raise CapabilityError(f"n={n} exceeds cap {_DISTILL_CAP}")
    if n_Z + n_X >= n:
        raise ConstructionError("need n_Z + n_X < n for a positive rate")
    H_Z, H_X = gf2.sample_css_hash(n, n_Z, n_X, seed)
    code = pauli.CssCode(n, H_Z, H_X)
    zbar_masks = [zb.z_mask for zb, _ in code.logicals]
    xbar_masks = [xb.x_mask for _, xb in code.logicals]
    kernel_z = [v.mask for v in gf2.kernel_basis(H_Z)]
    kernel_x = [v.mask for v in gf2.kernel_basis(H_X)]
    floor = 1e-300
    amp1 = p.amp_error
    log_amp = (math.log(max(1 - amp1, floor)), math.log(max(amp1, floor)))
    cond = [p.cond_phase_given_amp(0), p.cond_phase_given_amp(1)]
    log_cond = {
        (j, k): math.log(max(cond[j] if k else 1 - cond[j], floor)) for j in (0, 1) for k in (0, 1)
    }
    # Fast path: with no X checks the phase posterior factorizes per qubit.
    phase_free = H_X.n_rows == 0
    best_k_given_j = [1 if cond[j] > 0.5 else 0 for j in (0, 1)]

    probs = np.array(p.as_tuple(), dtype=float)
    probs = probs / probs.sum()
    amp_cache: dict[int, int] = {}
    failures = 0
    for t in range(trials):
        rng = np.random.default_rng((seed, t))
        draw = rng.choice(4, size=n, p=probs)
        jmask = 0
        kmask = 0
        for i, d in enumerate(draw):
            if d >= 2:  # indices 2,3 are p10,p11: amplitude error
                jmask |= 1 << i
            if d in (1, 3):  # p01, p11: phase error
                kmask |= 1 << i
        s_z = gf2.syndrome_mask(H_Z.rows, jmask)
        s_x = gf2.syndrome_mask(H_X.rows, kmask)
        if s_z not in amp_cache:
            amp_cache[s_z] = _min_weight_coset_element(s_z, H_Z, kernel_z, log_amp)
        j_hat = amp_cache[s_z]
        if phase_free:
            k_hat = 0
            for i in range(n):
                if best_k_given_j[(j_hat >> i) & 1]:
                    k_hat |= 1 << i
        else:
            k_hat = _phase_ml(s_x, H_X, kernel_x, j_hat, log_cond, n)
        fx = jmask ^ j_hat
        fz = kmask ^ k_hat
        fail = any(bin(fx & zm).count("1") & 1 for zm in zbar_masks) or any(
            bin(fz & xm).count("1") & 1 for xm in xbar_masks
        )
        failures += fail
    return DistillationRun(
        n=n,
        n_Z=n_Z,
        n_X=n_X,
        trials=trials,
        seed=seed,
        failures=failures,
        logical_error_rate=failures / trials,
        rate=(n - n_Z - n_X) / n,
    )


def _phase_ml(s_x: int, H_X: F2Mat, kernel: list[int], j_hat: int, log_cond: dict, n: int) -> int:
    part = gf2.solve(H_X, F2Vec(s_x, H_X.n_rows))
    if part is None:
        raise ConstructionError("inconsistent phase syndrome")
    best, best_score = None, -math.inf
    for c in range(1 << len(kernel)):
        m = part.mask
        cc = c
        i = 0
        while cc:
            if cc & 1:
                m ^= kernel[i]
            cc >>= 1
            i += 1
        score = 0.0
        for i in range(n):
            score += log_cond[((j_hat >> i) & 1, (m >> i) & 1)]
        if score > best_score + 1e-15 or (abs(score - best_score) <= 1e-15 and (best is None or m < best)):
            best, best_score = m, score
    return best


def _product_density(factors: list[np.ndarray]) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for f in factors:
        out = np.kron(out, f)
    return out


def reconcile(
    ensemble: list[tuple[float, np.ndarray]],
    n: int,
    n_Z: int,
    seed: int,
    trials: int = 50,
) -> float:
    """Empirical error of hash-assisted discrimination of n-fold strings.

    Alice samples z ∈ {0,1}^n from the ensemble priors and announces a random
    linear hash of it; Bob applies the pretty-good measurement over the
    hash-consistent candidates.  Returns the average error probability, with
    each trial's PGM success evaluated exactly.
    """
    if len(ensemble) != 2:
        raise ContractError("binary source expected (one state per bit value)")
    d_b = ensemble[0][1].shape[0]
    if d_b**n > qs.dim_cap():
        raise CapabilityError(f"B^{n} dimension {d_b ** n} exceeds the state cap")
    pz = np.array([w for w, _ in ensemble], dtype=float)
    if abs(pz.sum() - 1.0) > 1e-9:
        raise ConstructionError("priors must sum to 1")
    states = [np.asarray(m, dtype=complex) for _, m in ensemble]
    rng = np.random.default_rng(seed)
    H_Z, _ = gf2.sample_css_hash(n, n_Z, 0, seed) if n_Z else (F2Mat([], n_cols=n), None)
    kernel = [v.mask for v in gf2.kernel_basis(H_Z)] if n_Z else [1 << i for i in range(n)]
    err_total = 0.0
    for _ in range(trials):
        z = 0
        for i in range(n):
            if rng.random() < pz[1]:
                z |= 1 << i
        s = gf2.syndrome_mask(H_Z.rows, z)
        candidates = _coset_list(H_Z, kernel, s, n)
        weights = np.array(
            [math.prod(pz[(c >> i) & 1] for i in range(n)) for c in candidates]
        )
        weights = weights / weights.sum()
        cand_states = [
            _product_density([states[(c >> i) & 1] for i in range(n)]) for c in candidates
        ]
        elements = qs.pgm(list(zip(weights, cand_states)))
        idx = candidates.index(z)
        succ = float(np.trace(elements[idx] @ cand_states[idx]).real)
        err_total += 1.0 - succ
    return err_total / trials


def _coset_list(H: F2Mat, kernel: list[int], syndrome_mask: int, n: int) -> list[int]:
    if H.n_rows == 0:
        return list(range(1 << n))
    part = gf2.solve(H, F2Vec(syndrome_mask, H.n_rows))
    if part is None:
        raise ConstructionError("inconsistent syndrome")
    out = []
    for c in range(1 << len(kernel)):
        m = part.mask
        cc = c
        i = 0
        while cc:
            if cc & 1:
                m ^= kernel[i]
            cc >>= 1
            i += 1
        out.append(m)
    return out


def privacy_amplify(
    probs: np.ndarray,
    eve_states: list[np.ndarray],
    H: F2Mat,
) -> float:
    """Exact p_secure of the hashed key H·z against Eve's side information.

    probs[z] is the distribution over n-bit strings (indexed by bitmask) and
    eve_states[z] Eve's conditional state; the output key is u = H z over
    GF(2).  Hashing to zero bits is vacuously secure.
    """
    n = H.n_cols
    if len(probs) != 1 << n or len(eve_states) != 1 << n:
        raise ContractError("need one probability and Eve state per string")
    m = H.n_rows
    if m == 0:
        return 1.0
    d_e = eve_states[0].shape[0]
    d_u = 1 << m
    blocks = np.zeros((d_u, d_e, d_e), dtype=complex)
    pu = np.zeros(d_u)
    for z in range(1 << n):
        if probs[z] <= 0:
            continue
        u = gf2.syndrome_mask(H.rows, z)
        blocks[u] += probs[z] * np.asarray(eve_states[z], dtype=complex)
        pu[u] += probs[z]
    mat = np.zeros((d_u * d_e, d_u * d_e), dtype=complex)
    for u in range(d_u):
        mat[u * d_e : (u + 1) * d_e, u * d_e : (u + 1) * d_e] = blocks[u]
    rho = qs.DensityMatrix({"K": d_u, "E": d_e}, mat, given_order=["K", "E"], validate=False)
    return qs.p_secure(rho, "K")


def duality_check(
    psi: qs.StateVector,
    H_Z: F2Mat,
    a_labels: list[str],
    b: str,
    e: str,
) -> dict:
    """Reconciliation error vs. encoded-phase security (the IR↔PA duality).

    Measures p_guess of the encoded amplitude from the syndrome plus B under
    the PGM, computes p_secure of the encoded phase against E exactly, and
    checks p_secure(X̄|E) ≥ 1 − √(2 ε_IR).
    """
    n = len(a_labels)
    if n > 6:
        raise CapabilityError("duality check limited to n ≤ 6 qubits")
    if any(psi.labels[l] != 2 for l in a_labels):
        raise ContractError("A must consist of qubits")
    code = pauli.CssCode(n, H_Z, F2Mat([], n_cols=n))
    zbar = [zb.z_mask for zb, _ in code.logicals]
    xbar = [xb.x_mask for _, xb in code.logicals]
    k = len(zbar)
    d_b = psi.labels[b]
    d_e = psi.labels[e]
    order = a_labels + [b, e]
    amps = psi.amplitudes_in_order(order).reshape(1 << n, d_b * d_e)
    # Conditional (B,E) vectors for each amplitude string z.
    p_z = np.array([np.vdot(amps[z], amps[z]).real for z in range(1 << n)])
    # --- IR side: PGM over each syndrome class on B alone.
    kernel = [v.mask for v in gf2.kernel_basis(H_Z)]
    success = 0.0
    seen = set()
    for z0 in range(1 << n):
        s = gf2.syndrome_mask(H_Z.rows, z0)
        if s in seen:
            continue
        seen.add(s)
        cands = _coset_list(H_Z, kernel, s, n)
        weights = np.array([p_z[c] for c in cands])
        tot = weights.sum()
        if tot <= 1e-15:
            continue
        cond_b = []
        for c in cands:
            ve = amps[c].reshape(d_b, d_e)
            rho_b = ve @ ve.conj().T
            cond_b.append(rho_b / max(p_z[c], 1e-300))
        elements = qs.pgm(list(zip(weights / tot, cond_b)))
        for i, c in enumerate(cands):
            success += p_z[c] * float(np.trace(elements[i] @ cond_b[i]).real)
    ir_error = 1.0 - success
    if k == 0:
        # Nothing encoded: the security claim is vacuous.
        return {
            "ir_error": float(ir_error),
            "phase_security": 1.0,
            "bound": 1.0 - math.sqrt(2.0 * max(ir_error, 0.0)),
            "bound_holds": True,
            "k": 0,
        }
    # --- PA side: encoded phase vs E, exactly.
    d_u = 1 << k
    blocks = np.zeros((d_u, d_e, d_e), dtype=complex)
    # X̄ outcome projector: |ū⟩ phase value u_i for mask xbar[i].  Work in the
    # full phase basis: x-string probabilities with x̄_i = xbar_i · x.
    # ⟨x̃|z⟩ = (−1)^{x·z}/√2^n for qubits.
    F = np.ones((1 << n, 1 << n))
    for x in range(1 << n):
        for z in range(1 << n):
            F[x, z] = (-1) ** (bin(x & z).count("1") & 1)
    F = F / math.sqrt(1 << n)
    amps_x = F @ amps  # rows: phase strings
    for x in range(1 << n):
        u = 0
        for i, mask in enumerate(xbar):
            u |= (bin(x & mask).count("1") & 1) << i
        ve = amps_x[x].reshape(d_b, d_e)
        blocks[u] += ve.T @ ve.conj()  # Tr_B of the conditional (B,E) vector
    mat = np.zeros((d_u * d_e, d_u * d_e), dtype=complex)
    for u in range(d_u):
        mat[u * d_e : (u + 1) * d_e, u * d_e : (u + 1) * d_e] = blocks[u]
    rho_ue = qs.DensityMatrix({"K": d_u, "E": d_e}, mat, given_order=["K", "E"], validate=False)
    phase_security = qs.p_secure(rho_ue, "K")
    bound = 1.0 - math.sqrt(2.0 * max(ir_error, 0.0))
    return {
        "ir_error": float(ir_error),
        "phase_security": float(phase_security),
        "bound": float(bound),
        "bound_holds": phase_security >= bound - 1e-8,
        "k": k,
    }


def channel_code_from_ir(
    p_flip: float,
    n: int,
    n_syndrome: int,
    trials: int,
    seed: int,
) -> dict:
    """Coset channel code over a BSC: reconciliation hash run in reverse.

    Codewords are the strings hashing to the all-zero syndrome; messages
    index the kernel of the hash, and decoding is exact ML over the
    codeword list.  Reports the worst sampled per-message block error and
    the average.
    """
    if n > _DISTILL_CAP:
        raise CapabilityError(f"n={n} exceeds cap {_DISTILL_CAP}")
    if not 0.0 <= p_flip <= 0.5:
        raise ContractError("p_flip must lie in [0, 1/2]")
    H_Z, _ = gf2.sample_css_hash(n, n_syndrome, 0, seed) if n_syndrome else (F2Mat([], n_cols=n), None)
    kernel = [v.mask for v in gf2.kernel_basis(H_Z)] if n_syndrome else [1 << i for i in range(n)]
    k = len(kernel)
    codewords = np.array(_coset_list(H_Z, kernel, 0, n), dtype=np.uint64)
    rng = np.random.default_rng(seed)
    errors_per_msg = np.zeros(1 << k, dtype=np.int64)
    count_per_msg = np.zeros(1 << k, dtype=np.int64)
    for _ in range(trials):
        m = int(rng.integers(0, 1 << k))
        c = 0
        for i in range(k):
            if m & (1 << i):
                c ^= kernel[i]
        noise = 0
        for i in range(n):
            if rng.random() < p_flip:
                noise |= 1 << i
        y = np.uint64(c ^ noise)
        weights = np.bitwise_count(codewords ^ y)
        decoded = int(codewords[int(np.argmin(weights))])
        count_per_msg[m] += 1
        errors_per_msg[m] += decoded != c
    sampled = count_per_msg > 0
    per_msg = errors_per_msg[sampled] / count_per_msg[sampled]
    return {
        "n": n,
        "k": k,
        "rate": k / n,
        "trials": trials,
        "block_error_worst_sampled": float(per_msg.max()) if per_msg.size else 0.0,
        "block_error_avg": float(errors_per_msg.sum() / max(count_per_msg.sum(), 1)),
        "capacity": 1.0 - _h2(p_flip),
    }


def _h2(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)
