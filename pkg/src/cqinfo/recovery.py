"""Entanglement-recovery isometries, private-state verification, untwisting,
and the teleportation / superdense-coding reference circuits."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import qstate as qs
from .errors import ConstructionError, ContractError, DimensionError

CERT_GUARD = 1e-9


def controlled_shift(d: int, sign: int = -1) -> np.ndarray:
    """|c,t⟩ → |c, t + sign·c mod d⟩ (control is the first factor).

    With sign=-1 this undoes the X^c modulation left by a coherent phase
    measurement; for qubits it coincides with the ordinary CNOT.
    """
    M = np.zeros((d * d, d * d), dtype=complex)
    for c in range(d):
        for t in range(d):
            M[c * d + ((t + sign * c) % d), c * d + t] = 1.0
    return M


def coherent_isometry(povm: qs.Povm, register_dim: int, register_basis: np.ndarray | None = None) -> np.ndarray:
    """Coherent implementation Σ_z |z⟩^C ⊗ √Λ_z of a POVM: B → C ⊗ B.

    register_basis columns replace the computational |z⟩ (pass the Fourier
    basis to store a phase-measurement record).
    """
    if register_dim < len(povm):
        raise ConstructionError(f"register dim {register_dim} < {len(povm)} outcomes")
    d_b = povm.elements[0].shape[0]
    if register_basis is None:
        register_basis = np.eye(register_dim, dtype=complex)
    V = np.zeros((register_dim * d_b, d_b), dtype=complex)
    for z, lam in enumerate(povm.elements):
        root = _psd_sqrt(lam)
        V += np.kron(register_basis[:, z : z + 1], root)
    return V


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    ev, vec = np.linalg.eigh(m)
    ev = np.clip(ev, 0.0, None)
    return (vec * np.sqrt(ev)) @ vec.conj().T


@dataclass
class RecoveryReport:
    """Outcome of an entanglement-recovery run."""

    output_state: qs.StateVector
    epr_fidelity: float
    trace_dist: float
    eps1: float
    eps2: float
    certified: bool
    theorem: str
    transfer_fidelity: float = float("nan")

    @property
    def bound(self) -> float:
        e1 = max(self.eps1, 0.0)
        e2 = max(self.eps2, 0.0)
        return math.sqrt(2 * e1) + math.sqrt(2 * e2)

    def to_json(self) -> str:
        return json.dumps(
            {
                "theorem": self.theorem,
                "eps1": self.eps1,
                "eps2": self.eps2,
                "bound": self.bound,
                "trace_dist": self.trace_dist,
                "epr_fidelity": self.epr_fidelity,
                "transfer_fidelity": self.transfer_fidelity,
                "certified": self.certified,
            }
        )


def _copy_state(psi: qs.StateVector, src: str, reg: str) -> qs.StateVector:
    """Coherently copy the amplitude basis of src onto a fresh register."""
    d = psi.labels[src]
    with_reg = psi.tensor(qs.basis_state({reg: d}, 0))
    return with_reg.apply(controlled_shift(d, sign=+1), [src, reg])


def _phase_psecure(rho: qs.DensityMatrix, key: str, others: list[str]) -> float:
    """p_secure of the phase observable of `key` against the listed systems."""
    d = rho.labels[key]
    F = qs.fourier_basis(d)
    rot = rho.apply(F.conj().T, [key])
    marg = rot.partial_trace({key, *others}) if others else rot.partial_trace({key})
    deph = qs.dephase(marg, key)
    return qs.p_secure(deph, key)


def _amp_psecure(rho: qs.DensityMatrix, key: str, others: list[str]) -> float:
    marg = rho.partial_trace({key, *others}) if others else rho.partial_trace({key})
    deph = qs.dephase(marg, key)
    return qs.p_secure(deph, key)


def _finish_report(
    out: qs.StateVector,
    psi: qs.StateVector,
    a: str,
    b: str,
    e: str,
    cz: str,
    cx: str,
    eps1: float,
    eps2: float,
    theorem: str,
) -> RecoveryReport:
    d = psi.labels[a]
    target = qs.epr_pair(a, cz, d).tensor(_relabel(psi, a, cx))
    overlap = abs(target.inner(out))
    trace_dist = math.sqrt(max(0.0, 1.0 - overlap**2))
    rho_ac = out.density().partial_trace({a, cz})
    epr_fid = qs.fidelity(rho_ac, qs.epr_pair(a, cz, d).density())
    rho_transfer = out.density().partial_trace({cx, b, e})
    ideal_transfer = _relabel(psi, a, cx).density()
    transfer_fid = qs.fidelity(rho_transfer, ideal_transfer)
    # Strictly inside the vacuous regime; ε = ½ up to float noise is out.
    certified = eps1 < 0.5 - CERT_GUARD and eps2 < 0.5 - CERT_GUARD
    return RecoveryReport(
        output_state=out,
        epr_fidelity=float(epr_fid),
        trace_dist=float(trace_dist),
        eps1=float(eps1),
        eps2=float(eps2),
        certified=certified,
        theorem=theorem,
        transfer_fidelity=float(transfer_fid),
    )


def _relabel(psi: qs.StateVector, old: str, new: str) -> qs.StateVector:
    labels = dict(psi.labels)
    d = labels.pop(old)
    labels[new] = d
    order = [new if n == old else n for n in psi.names]
    return qs.StateVector(labels, psi.amps, given_order=order)


def recover_theorem1(
    psi: qs.StateVector,
    m_z: qs.Povm,
    m_x: qs.Povm,
    a: str = "A",
    b: str = "B",
    e: str = "E",
) -> RecoveryReport:
    """Recovery from predictability of both observables (coherent circuit).

    Applies the coherent M_Z, the coherent M_X (phase-basis register), and a
    register-controlled shift; certifies ½‖Φ⊗ψ − Uψ‖₁ ≤ √(2ε₁)+√(2ε₂) with
    ε₁ = 1 − p_guess(Z^A|M_Z), ε₂ = 1 − p_guess(X^A|M_X).
    """
    d = psi.labels[a]
    rho_ab = psi.density().partial_trace({a, b})
    eps1 = 1.0 - qs.p_guess(rho_ab, a, m_z)
    eps2 = 1.0 - qs.p_guess(rho_ab, a, m_x, target_basis=qs.fourier_basis(d))
    db = psi.labels[b]
    u1 = coherent_isometry(m_z, d)
    step1 = psi.apply_isometry(u1, [b], {"__cz": d, b: db})
    u2 = coherent_isometry(m_x, d, register_basis=qs.fourier_basis(d))
    step2 = step1.apply_isometry(u2, [b], {"__cx": d, b: db})
    # The phase register picks up an X^{-z} modulation (with ⟨z|x̃⟩ = ω^{-zx}),
    # so the correcting shift adds the control value; at d=2 this is a CNOT.
    out = step2.apply(controlled_shift(d, sign=+1), ["__cz", "__cx"])
    return _finish_report(out, psi, a, b, e, "__cz", "__cx", eps1, eps2, "theorem1")


def recover_theorem2(
    psi: qs.StateVector,
    m_z: qs.Povm,
    a: str = "A",
    b: str = "B",
    e: str = "E",
) -> RecoveryReport:
    """Recovery from amplitude predictability plus amplitude security.

    The second isometry comes from Uhlmann's theorem applied to ψ_Z^{AE} and
    (1/d)⊗ψ^E; ε₂ = 1 − p_secure(Z^A|E).
    """
    d = psi.labels[a]
    db = psi.labels[b]
    rho = psi.density()
    eps1 = 1.0 - qs.p_guess(rho.partial_trace({a, b}), a, m_z)
    eps2 = 1.0 - _amp_psecure(rho, a, [e])
    u1 = coherent_isometry(m_z, d)
    step1 = psi.apply_isometry(u1, [b], {"__cz": d, b: db})
    out = _uhlmann_second_step(psi, step1, a, b, e, d, db)
    return _finish_report(out, psi, a, b, e, "__cz", "__cx", eps1, eps2, "theorem2")


def recover_theorem3(
    psi: qs.StateVector,
    a: str = "A",
    b: str = "B",
    e: str = "E",
) -> RecoveryReport:
    """Recovery purely from what the environment does not know.

    ε₁ = 1 − p_secure(X^A|C_Z E) on the amplitude-copied state, ε₂ =
    1 − p_secure(Z^A|E); both isometries come from Uhlmann's theorem.
    """
    d = psi.labels[a]
    db = psi.labels[b]
    rho = psi.density()
    psi_z = _copy_state(psi, a, "__cz")
    eps1 = 1.0 - _phase_psecure(psi_z.density(), a, ["__cz", e])
    eps2 = 1.0 - _amp_psecure(rho, a, [e])
    # First isometry: B → C_Z B via Uhlmann between ψ^{AE} and ψ_Z^{AE}.
    rho_ae = rho.partial_trace({a, e})
    rho_z_ae = qs.dephase(rho_ae, a)  # = ψ_Z marginal on AE
    W1, pur_in, pur_out = qs.uhlmann_isometry(rho_ae, rho_z_ae, psi, psi_z)
    step1 = psi.apply_isometry(
        W1,
        pur_in,
        {n: psi_z.labels[n] for n in pur_out},
    )
    out = _uhlmann_second_step(psi, step1, a, b, e, d, db)
    return _finish_report(out, psi, a, b, e, "__cz", "__cx", eps1, eps2, "theorem3")


def _uhlmann_second_step(psi, step1, a, b, e, d, db):
    """Isometry C_Z B → C_Z C_X B from Uhlmann between ψ_Z^{AE} and (1/d)⊗ψ^E."""
    psi_z = _copy_state(psi, a, "__cz")
    rho_z_ae = psi_z.density().partial_trace({a, e})
    rho_e = psi.density().partial_trace({e})
    ideal_ae = qs.DensityMatrix({a: d}, np.eye(d) / d).tensor(rho_e)
    target_purification = qs.epr_pair(a, "__cz", d).tensor(_relabel(psi, a, "__cx"))
    W2, pur_in, pur_out = qs.uhlmann_isometry(rho_z_ae, ideal_ae, psi_z, target_purification)
    return step1.apply_isometry(
        W2,
        pur_in,
        {n: target_purification.labels[n] for n in pur_out},
    )


def verify_private_state(
    rho: qs.DensityMatrix,
    a: str = "A",
    b: str = "B",
    shield: tuple[str, ...] = ("A'", "B'"),
    tol: float = 1e-8,
) -> tuple[bool, np.ndarray | None]:
    """Decide whether ρ^{AA'BB'} is an ideal private state.

    Searches for a twisting U = Σ_z P_z^A ⊗ V_z (V_z unitary on the shield)
    with ρ = U(Φ^{AB} ⊗ ξ)U†; returns the recovered twisting on success.
    """
    if rho.labels[a] != 2 or rho.labels[b] != 2:
        raise ContractError("key systems must be qubits")
    shield = tuple(shield)
    d_s = int(np.prod([rho.labels[s] for s in shield]))
    order = [a, b, *shield]
    m = _matrix_in_order(rho, order)
    m = m.reshape(2, 2, d_s, 2, 2, d_s)
    # Key blocks: B[za,zb,za',zb'] with shield operators inside.
    blk = {
        (za, zb, za2, zb2): m[za, zb, :, za2, zb2, :]
        for za in (0, 1)
        for zb in (0, 1)
        for za2 in (0, 1)
        for zb2 in (0, 1)
    }
    # Support must lie on matched keys za=zb.
    for key, B in blk.items():
        za, zb, za2, zb2 = key
        if (za != zb or za2 != zb2) and np.max(np.abs(B)) > tol:
            return False, None
    B00 = blk[(0, 0, 0, 0)]
    B11 = blk[(1, 1, 1, 1)]
    X01 = blk[(0, 0, 1, 1)]
    if abs(np.trace(B00).real - 0.5) > 1e-6 or abs(np.trace(B11).real - 0.5) > 1e-6:
        return False, None
    # With V_0 = 1: ξ = 2·B00 and X01 = ½ ξ V_1†; V_1† = pinv(ξ)·2X01 on the
    # support, completed unitarily, then checked by full reconstruction.
    xi = 2.0 * B00
    v1_dag = _unitary_completion(np.linalg.pinv(xi, rcond=1e-10) @ (2.0 * X01))
    v1 = v1_dag.conj().T
    twisting = np.zeros((4 * d_s, 4 * d_s), dtype=complex)
    # Order (A, B, shield): U = Σ_z P_z^A ⊗ 1^B ⊗ V_z
    eye_b = np.eye(2)
    for z, vz in ((0, np.eye(d_s)), (1, v1)):
        pz = np.zeros((2, 2))
        pz[z, z] = 1.0
        twisting += np.kron(np.kron(pz, eye_b), vz)
    # Reconstruct and compare.
    try:
        xi_dm = qs.DensityMatrix({s: rho.labels[s] for s in shield}, xi, given_order=list(shield))
    except ConstructionError:
        return False, None
    ideal = qs.epr_pair(a, b).density().tensor(xi_dm)
    twisted = ideal.apply(twisting, order)
    ok = qs.trace_distance(twisted, rho) <= max(tol, 1e-7)
    return (True, twisting) if ok else (False, None)


def _unitary_completion(m: np.ndarray) -> np.ndarray:
    """Closest unitary to m (polar decomposition; free directions arbitrary)."""
    U_, _, Vh_ = np.linalg.svd(m)
    return U_ @ Vh_


def _matrix_in_order(rho: qs.DensityMatrix, order: list[str]) -> np.ndarray:
    dims = [rho.labels[n] for n in order]
    perm = [list(rho.names).index(n) for n in order]
    k = len(dims)
    t = rho.mat.reshape(tuple(rho.dims) * 2)
    t = np.transpose(t, perm + [p + k for p in perm])
    d = int(np.prod(dims))
    return t.reshape(d, d)


@dataclass
class KeyReport:
    """Quality of the key extracted from a (possibly twisted) state."""

    key_trace_dist: float
    eps1: float
    eps2: float
    certified: bool
    epr_fidelity: float

    @property
    def bound(self) -> float:
        return max(self.eps1, 0.0) + math.sqrt(2 * max(self.eps2, 0.0))

    def to_json(self) -> str:
        return json.dumps(
            {
                "key_trace_dist": self.key_trace_dist,
                "eps1": self.eps1,
                "eps2": self.eps2,
                "bound": self.bound,
                "epr_fidelity": self.epr_fidelity,
                "certified": self.certified,
            }
        )


def untwist_theorem7(
    psi: qs.StateVector,
    m_x: qs.Povm,
    a: str = "A",
    b: str = "B",
    e: str = "E",
    shield_a: str = "A'",
    shield_b: str = "B'",
) -> KeyReport:
    """Key quality of ψ^{AA'BB'E} plus the explicit untwisting circuit.

    m_x predicts the phase of A from (A', B, B'); the measured key satisfies
    trace distance ≤ ε₁ + √(2ε₂) from an ideal key, with ε₁ from the key
    agreement and ε₂ = 1 − p_guess(X^A|M_X).
    """
    if psi.labels[a] != 2 or psi.labels[b] != 2:
        raise ContractError("key systems must be qubits")
    rho = psi.density()
    # ε₁: both measure the amplitude; outcomes should agree.
    rho_ab = rho.partial_trace({a, b})
    deph = qs.dephase(qs.dephase(rho_ab, a), b)
    m = _matrix_in_order(deph, [a, b])
    p_agree = float(m[0, 0].real + m[3, 3].real)
    eps1 = 1.0 - p_agree
    # ε₂: phase predictability from A' B B'.
    rho_pred = rho.partial_trace({a, shield_a, b, shield_b})
    eps2 = 1.0 - qs.p_guess(rho_pred, a, m_x, target_basis=qs.fourier_basis(2))
    # Key quality: measure Z^A, Z^B, keep E.
    rho_keyed = qs.dephase(qs.dephase(rho.partial_trace({a, b, e}), a), b)
    rho_e = rho.partial_trace({e})
    eye_key = np.zeros((4, 4))
    eye_key[0, 0] = 0.5
    eye_key[3, 3] = 0.5
    ideal = qs.DensityMatrix({a: 2, b: 2}, eye_key, given_order=[a, b]).tensor(rho_e)
    key_dist = qs.trace_distance(rho_keyed, ideal)
    # Untwisting circuit: CNOT(B→C_Z), coherent M_X on (A', C_Z, B') into a
    # phase register, CNOT(B→C_X); report the recovered EPR fidelity on AB.
    step = _copy_state(psi, b, "__cz")
    d_in = step.labels[shield_a] * step.labels["__cz"] * step.labels[shield_b]
    if m_x.elements[0].shape[0] != d_in:
        raise DimensionError("M_X must act on the A' B B' system")
    u = coherent_isometry(m_x, 2, register_basis=qs.fourier_basis(2))
    step = step.apply_isometry(
        u,
        [shield_a, "__cz", shield_b],
        {"__cx": 2, shield_a: psi.labels[shield_a], "__cz": 2, shield_b: psi.labels[shield_b]},
    )
    step = step.apply(controlled_shift(2, sign=+1), [b, "__cx"])
    epr_fid = qs.fidelity(step.density().partial_trace({a, b}), qs.epr_pair(a, b).density())
    certified = eps1 < 0.5 - CERT_GUARD and eps2 < 0.5 - CERT_GUARD
    return KeyReport(
        key_trace_dist=float(key_dist),
        eps1=float(eps1),
        eps2=float(eps2),
        certified=certified,
        epr_fidelity=float(epr_fid),
    )


def bell_basis(a: str = "A", c: str = "C") -> list[qs.StateVector]:
    return [qs.bell_state(j, k, a, c) for j in (0, 1) for k in (0, 1)]


def teleport(chi: qs.StateVector, seed: int | None = None) -> dict:
    """Teleport a single-qubit state through an EPR pair.

    Runs every Bell-measurement branch, applies the corresponding correction,
    and reports per-branch fidelity; with a seed, also samples one branch.
    """
    if len(chi.names) != 1 or chi.dims != (2,):
        raise ContractError("input must be a single qubit")
    c = chi.names[0]
    a, bq = "__tpA", "__tpB"
    full = qs.epr_pair(a, bq).tensor(chi)
    X, Z = qs.weyl_observables(2)
    branches = []
    for j in (0, 1):
        for k in (0, 1):
            beta = qs.bell_state(j, k, a, c)
            # Project (A, C) onto β_jk: contract amplitudes.
            amps = full.amplitudes_in_order([a, c, bq]).reshape(4, 2)
            proj = beta.amplitudes_in_order([a, c]).conj() @ amps
            norm = np.linalg.norm(proj)
            out = qs.StateVector({bq: 2}, proj / norm)
            corr = np.linalg.matrix_power(X, j) @ np.linalg.matrix_power(Z, k)
            fixed = out.apply(corr.conj().T, [bq])
            fid = abs(np.vdot(fixed.amps, chi.amps))
            branches.append({"j": j, "k": k, "prob": float(norm**2), "fidelity": float(fid)})
    result = {"branches": branches, "min_fidelity": min(br["fidelity"] for br in branches)}
    if seed is not None:
        rng = np.random.default_rng(seed)
        probs = np.array([br["prob"] for br in branches])
        pick = rng.choice(4, p=probs / probs.sum())
        result["sampled_branch"] = branches[pick]
    return result


def superdense(j: int, k: int) -> tuple[int, int]:
    """Encode two bits as X^j Z^k on half an EPR pair; decode by Bell measurement."""
    if j not in (0, 1) or k not in (0, 1):
        raise ContractError("j, k must be bits")
    X, Z = qs.weyl_observables(2)
    op = np.linalg.matrix_power(X, j) @ np.linalg.matrix_power(Z, k)
    sent = qs.epr_pair("A", "B").apply(op, ["A"])
    best = None
    for jj in (0, 1):
        for kk in (0, 1):
            ov = abs(sent.inner(qs.bell_state(jj, kk, "A", "B")))
            if best is None or ov > best[0]:
                best = (ov, (jj, kk))
    return best[1]
