"""Exact dense quantum linear algebra on labeled multi-qudit systems.

States carry named tensor factors; labels are canonicalized (sorted by name)
internally so that operations between states over the same systems align
without explicit reordering.  Everything is dense numpy; the total dimension
is capped (default 4096) so oversized requests fail loudly up front.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, ConstructionError, ContractError, DimensionError, LabelError

NORM_TOL = 1e-10
HERM_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
POVM_TOL = 1e-9
EIG_CUTOFF = 1e-12

_DIM_CAP = 4096


def dim_cap() -> int:
    return _DIM_CAP


def set_dim_cap(cap: int) -> None:
    """Raise or lower the total-dimension cap (use sparingly, in oracles)."""
    global _DIM_CAP
    _DIM_CAP = int(cap)


def _check_cap(total: int):
    if total > _DIM_CAP:
        raise CapabilityError(f"total dimension {total} exceeds cap {_DIM_CAP}")


def _canonical(labels: dict[str, int]) -> tuple[tuple[str, ...], tuple[int, ...]]:
    names = tuple(sorted(labels))
    if len(names) != len(labels):
        raise LabelError("duplicate labels")
    dims = tuple(labels[n] for n in names)
    for n, d in zip(names, dims):
        if d < 2:
            raise ConstructionError(f"dim of {n} must be >= 2")
    return names, dims


def _perm_to_canonical(given: list[str], canonical: tuple[str, ...]) -> list[int]:
    return [given.index(name) for name in canonical]


class StateVector:
    """Pure state on labeled systems; amplitudes in canonical label order."""

    def __init__(self, labels: dict[str, int], amps, given_order: list[str] | None = None):
        names, dims = _canonical(labels)
        total = int(np.prod(dims))
        _check_cap(total)
        a = np.asarray(amps, dtype=complex).reshape(-1)
        if a.size != total:
            raise DimensionError(f"{a.size} amplitudes for total dimension {total}")
        if given_order is not None:
            if sorted(given_order) != list(names):
                raise LabelError("given_order does not match labels")
            gdims = [labels[n] for n in given_order]
            a = np.transpose(a.reshape(gdims), _perm_to_canonical(given_order, names)).reshape(-1)
        nrm = np.linalg.norm(a)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ConstructionError(f"state norm {nrm} not 1 within {NORM_TOL}")
        self.names = names
        self.dims = dims
        self.amps = a

    @property
    def labels(self) -> dict[str, int]:
        return dict(zip(self.names, self.dims))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def _axes(self, which: list[str]) -> list[int]:
        try:
            return [self.names.index(n) for n in which]
        except ValueError as exc:
            raise LabelError(str(exc)) from exc

    def tensor(self, other: "StateVector") -> "StateVector":
        if set(self.names) & set(other.names):
            raise LabelError("overlapping labels in tensor product")
        labels = {**self.labels, **other.labels}
        amps = np.kron(self.amps, other.amps)
        order = list(self.names) + list(other.names)
        return StateVector(labels, amps, given_order=order)

    def inner(self, other: "StateVector") -> complex:
        if self.names != other.names or self.dims != other.dims:
            raise DimensionError("states live on different systems")
        return complex(np.vdot(self.amps, other.amps))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.labels, np.outer(self.amps, self.amps.conj()))

    def apply(self, op: np.ndarray, on: list[str]) -> "StateVector":
        """Apply a square operator acting on the listed subsystems."""
        return self.apply_isometry(op, on, {n: self.labels[n] for n in on})

    def apply_isometry(self, V: np.ndarray, in_labels: list[str], out_labels: dict[str, int]) -> "StateVector":
        """Contract an isometry mapping in_labels to out_labels (new names allowed).

        V has shape (prod out dims, prod in dims) with row/column index built
        from the listed label orders (first label = most significant).
        """
        V = np.asarray(V, dtype=complex)
        in_dims = [self.labels[n] for n in in_labels]
        d_in = int(np.prod(in_dims))
        out_names = list(out_labels)
        out_dims = [out_labels[n] for n in out_names]
        d_out = int(np.prod(out_dims))
        if V.shape != (d_out, d_in):
            raise DimensionError(f"operator shape {V.shape}, expected {(d_out, d_in)}")
        keep = [n for n in self.names if n not in in_labels]
        for n in out_names:
            if n in keep:
                raise LabelError(f"output label {n} collides with an untouched system")
        _check_cap(d_out * int(np.prod([self.labels[n] for n in keep])) if keep else d_out)
        t = self.amps.reshape(self.dims)
        axes = self._axes(in_labels)
        t = np.moveaxis(t, axes, range(len(axes)))
        rest_shape = t.shape[len(axes):]
        t = t.reshape(d_in, -1)
        t = V @ t
        t = t.reshape(tuple(out_dims) + rest_shape)
        new_order = out_names + keep
        labels = {**{n: d for n, d in zip(out_names, out_dims)}, **{n: self.labels[n] for n in keep}}
        flat = t.reshape(-1)
        nrm = np.linalg.norm(flat)
        if nrm < 1e-12:
            raise ConstructionError("isometry annihilated the state")
        return StateVector(labels, flat / nrm if abs(nrm - 1) > 1e-13 else flat, given_order=new_order)

    def amplitudes_in_order(self, order: list[str]) -> np.ndarray:
        if sorted(order) != list(self.names):
            raise LabelError("order must list every label exactly once")
        perm = [list(self.names).index(n) for n in order]
        return np.transpose(self.amps.reshape(self.dims), perm).reshape(-1)

    def __repr__(self) -> str:
        return f"StateVector({'⊗'.join(f'{n}:{d}' for n, d in zip(self.names, self.dims))})"


class DensityMatrix:
    """Mixed state on labeled systems; matrix in canonical label order."""

    def __init__(self, labels: dict[str, int], matrix, given_order: list[str] | None = None,
                 validate: bool = True):
        names, dims = _canonical(labels)
        total = int(np.prod(dims))
        _check_cap(total)
        m = np.asarray(matrix, dtype=complex).reshape(total, total)
        if given_order is not None:
            gdims = [labels[n] for n in given_order]
            perm = _perm_to_canonical(given_order, names)
            t = m.reshape(gdims + gdims)
            k = len(gdims)
            t = np.transpose(t, perm + [p + k for p in perm])
            m = t.reshape(total, total)
        if validate:
            if np.max(np.abs(m - m.conj().T)) > HERM_TOL:
                raise ConstructionError("matrix is not Hermitian within tolerance")
            ev = np.linalg.eigvalsh(m)
            if ev.min() < -PSD_TOL:
                raise ConstructionError(f"matrix has negative eigenvalue {ev.min()}")
            if abs(np.trace(m).real - 1.0) > TRACE_TOL:
                raise ConstructionError(f"trace {np.trace(m).real} not 1")
        self.names = names
        self.dims = dims
        self.mat = m

    @property
    def labels(self) -> dict[str, int]:
        return dict(zip(self.names, self.dims))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        if set(self.names) & set(other.names):
            raise LabelError("overlapping labels in tensor product")
        labels = {**self.labels, **other.labels}
        order = list(self.names) + list(other.names)
        return DensityMatrix(labels, np.kron(self.mat, other.mat), given_order=order, validate=False)

    def partial_trace(self, keep: set[str] | list[str]) -> "DensityMatrix":
        keep = set(keep)
        unknown = keep - set(self.names)
        if unknown:
            raise LabelError(f"unknown labels {unknown}")
        if keep == set(self.names):
            return self
        keep_idx = [i for i, n in enumerate(self.names) if n in keep]
        drop_idx = [i for i, n in enumerate(self.names) if n not in keep]
        dims = self.dims
        t = self.mat.reshape(dims + dims)
        k = len(dims)
        perm = keep_idx + drop_idx + [i + k for i in keep_idx] + [i + k for i in drop_idx]
        t = np.transpose(t, perm)
        dk = int(np.prod([dims[i] for i in keep_idx])) if keep_idx else 1
        dd = int(np.prod([dims[i] for i in drop_idx]))
        t = t.reshape(dk, dd, dk, dd)
        red = np.einsum("ajbj->ab", t)
        labels = {self.names[i]: dims[i] for i in keep_idx}
        order = [self.names[i] for i in keep_idx]
        return DensityMatrix(labels, red, given_order=order, validate=False)

    def apply(self, op: np.ndarray, on: list[str]) -> "DensityMatrix":
        """Conjugate by a square operator acting on the listed subsystems."""
        U = _embed(op, self, on)
        return DensityMatrix(self.labels, U @ self.mat @ U.conj().T, validate=False)

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def __repr__(self) -> str:
        return f"DensityMatrix({'⊗'.join(f'{n}:{d}' for n, d in zip(self.names, self.dims))})"


def _embed(op: np.ndarray, state, on: list[str]) -> np.ndarray:
    """Expand an operator on a label subset to the full canonical space."""
    op = np.asarray(op, dtype=complex)
    d_on = int(np.prod([state.labels[n] for n in on]))
    if op.shape != (d_on, d_on):
        raise DimensionError(f"operator shape {op.shape}, expected {(d_on, d_on)}")
    names = list(state.names)
    dims = list(state.dims)
    on_idx = [names.index(n) for n in on]
    rest_idx = [i for i in range(len(names)) if i not in on_idx]
    full = np.kron(op, np.eye(int(np.prod([dims[i] for i in rest_idx])) if rest_idx else 1))
    # full acts on (on..., rest...); permute back to canonical axis order.
    interim = [names[i] for i in on_idx] + [names[i] for i in rest_idx]
    t = full.reshape([dims[names.index(n)] for n in interim] * 2)
    perm = [interim.index(n) for n in names]
    k = len(names)
    t = np.transpose(t, perm + [p + k for p in perm])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def basis_state(labels: dict[str, int], index: int | dict[str, int]) -> StateVector:
    names, dims = _canonical(labels)
    total = int(np.prod(dims))
    if isinstance(index, dict):
        flat = 0
        for n, d in zip(names, dims):
            flat = flat * d + index.get(n, 0)
        index = flat
    amps = np.zeros(total, dtype=complex)
    amps[index] = 1.0
    return StateVector(labels, amps)


def from_amplitudes(labels: dict[str, int], amps, order: list[str] | None = None) -> StateVector:
    a = np.asarray(amps, dtype=complex)
    return StateVector(labels, a / np.linalg.norm(a), given_order=order)


def epr_pair(a: str = "A", b: str = "B", d: int = 2) -> StateVector:
    """Maximally entangled |Φ⟩ = Σ|kk⟩/√d on systems a ⊗ b."""
    amps = np.zeros(d * d, dtype=complex)
    for k in range(d):
        amps[k * d + k] = 1.0 / math.sqrt(d)
    return StateVector({a: d, b: d}, amps, given_order=[a, b])


def bell_state(j: int, k: int, a: str = "A", b: str = "B") -> StateVector:
    """|β_jk⟩ = (X^j Z^k ⊗ 1)|Φ⟩."""
    X, Z = weyl_observables(2)
    op = np.linalg.matrix_power(X, j) @ np.linalg.matrix_power(Z, k)
    return epr_pair(a, b).apply(op, [a])


def weyl_observables(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Shift and clock operators: X|k⟩=|k⊕1⟩, Z|k⟩=e^{2πik/d}|k⟩."""
    if d < 2:
        raise ConstructionError("d must be >= 2")
    X = np.zeros((d, d), dtype=complex)
    for k in range(d):
        X[(k + 1) % d, k] = 1.0
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return X, Z


def fourier_basis(d: int) -> np.ndarray:
    """Columns are the phase (X) eigenbasis |x̃⟩ = Σ_k ω^{-kx}|k⟩/√d.

    X|x̃⟩ = ω^x |x̃⟩ for the Weyl shift; at d=2 these are |±⟩ with
    eigenvalue (-1)^x, matching the qubit phase convention.
    """
    k = np.arange(d)
    return np.exp(-2j * np.pi * np.outer(k, k) / d) / math.sqrt(d)


def entropy(rho) -> float:
    """Von Neumann entropy in bits; eigenvalues below 1e-12 count as zero."""
    if isinstance(rho, StateVector):
        return 0.0
    ev = np.linalg.eigvalsh(rho.mat) if isinstance(rho, DensityMatrix) else np.linalg.eigvalsh(rho)
    ev = ev[ev > EIG_CUTOFF]
    return float(-(ev * np.log2(ev)).sum()) if ev.size else 0.0


def shannon(probs) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > EIG_CUTOFF]
    return float(-(p * np.log2(p)).sum()) if p.size else 0.0


def cond_entropy(rho: DensityMatrix, target, given) -> float:
    """H(target | given) = H(target ∪ given) − H(given), all in bits."""
    target = [target] if isinstance(target, str) else list(target)
    given = [given] if isinstance(given, str) else list(given)
    if set(target) & set(given):
        raise LabelError("target and given overlap")
    joint = rho.partial_trace(set(target) | set(given))
    if given:
        return entropy(joint) - entropy(rho.partial_trace(set(given)))
    return entropy(joint)


def trace_norm(M: np.ndarray) -> float:
    return float(np.abs(np.linalg.svd(M, compute_uv=False)).sum())


def trace_distance(rho, sigma) -> float:
    """½‖ρ−σ‖₁ for states or raw matrices/vectors over matching systems."""
    A = _as_matrix(rho, sigma)
    B = _as_matrix(sigma, rho)
    return 0.5 * trace_norm(A - B)


def _as_matrix(x, other=None) -> np.ndarray:
    if isinstance(x, StateVector):
        return np.outer(x.amps, x.amps.conj())
    if isinstance(x, DensityMatrix):
        if isinstance(other, (DensityMatrix, StateVector)) and tuple(x.names) != tuple(other.names):
            raise DimensionError("label mismatch")
        return x.mat
    return np.asarray(x, dtype=complex)


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    ev, vec = np.linalg.eigh(m)
    ev = np.clip(ev, 0.0, None)
    return (vec * np.sqrt(ev)) @ vec.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity Tr|√ρ√σ|; reduces to |⟨ψ|φ⟩| for pure states."""
    if isinstance(rho, StateVector) and isinstance(sigma, StateVector):
        if rho.names != sigma.names:
            raise DimensionError("label mismatch")
        return float(abs(np.vdot(rho.amps, sigma.amps)))
    A = _as_matrix(rho, sigma)
    B = _as_matrix(sigma, rho)
    if A.shape != B.shape:
        raise DimensionError("dimension mismatch")
    ev = np.linalg.eigvals(A @ B)
    ev = np.clip(ev.real, 0.0, None)
    return float(np.sqrt(ev).sum())


class Povm:
    """POVM on a labeled system: positive elements summing to identity."""

    def __init__(self, label_dims: dict[str, int], elements, tol: float = POVM_TOL):
        self.labels = dict(label_dims)
        self.elements = [np.asarray(e, dtype=complex) for e in elements]
        if not self.elements:
            raise ConstructionError("empty POVM")
        d = int(np.prod(list(self.labels.values())))
        total = np.zeros((d, d), dtype=complex)
        for e in self.elements:
            if e.shape != (d, d):
                raise DimensionError(f"element shape {e.shape} != {(d, d)}")
            if np.linalg.eigvalsh(0.5 * (e + e.conj().T)).min() < -1e-8:
                raise ConstructionError("POVM element not PSD")
            total += e
        if np.max(np.abs(total - np.eye(d))) > tol:
            raise ConstructionError("POVM elements do not sum to identity")

    def __len__(self):
        return len(self.elements)


def projective_povm(label: str, dim: int, basis: np.ndarray | None = None) -> Povm:
    """Rank-one projectors onto the columns of `basis` (default computational)."""
    if basis is None:
        basis = np.eye(dim, dtype=complex)
    els = [np.outer(basis[:, i], basis[:, i].conj()) for i in range(dim)]
    return Povm({label: dim}, els)


def p_guess(rho: DensityMatrix, target: str, povm: Povm, target_basis: np.ndarray | None = None) -> float:
    """Σ_z Tr[(P_z ⊗ Λ_z) ρ]: probability the POVM outcome matches the
    target-system measurement in the given (default computational) basis."""
    d_t = rho.labels[target]
    if len(povm) != d_t:
        raise DimensionError(f"POVM has {len(povm)} outcomes for target dim {d_t}")
    b_names = list(povm.labels)
    for n in b_names:
        if n not in rho.labels or rho.labels[n] != povm.labels[n]:
            raise LabelError(f"POVM system {n} does not match the state")
    if target_basis is None:
        target_basis = np.eye(d_t, dtype=complex)
    marg = rho.partial_trace({target, *b_names})
    total = 0.0
    for z in range(d_t):
        proj = np.outer(target_basis[:, z], target_basis[:, z].conj())
        op_t = _embed(proj, marg, [target])
        op_b = _embed(povm.elements[z], marg, b_names)
        total += float(np.trace(op_t @ op_b @ marg.mat).real)
    return total


def dephase(rho: DensityMatrix, label: str, basis: np.ndarray | None = None) -> DensityMatrix:
    """Σ_z (P_z ⊗ 1) ρ (P_z ⊗ 1): the state after measuring `label` in `basis`."""
    d = rho.labels[label]
    if basis is None:
        basis = np.eye(d, dtype=complex)
    out = np.zeros_like(rho.mat)
    for z in range(d):
        proj = _embed(np.outer(basis[:, z], basis[:, z].conj()), rho, [label])
        out += proj @ rho.mat @ proj
    return DensityMatrix(rho.labels, out, validate=False)


def measure_probs(state, label: str, basis: np.ndarray | None = None) -> np.ndarray:
    rho = state.density() if isinstance(state, StateVector) else state
    d = rho.labels[label]
    if basis is None:
        basis = np.eye(d, dtype=complex)
    marg = rho.partial_trace({label})
    return np.array(
        [float((basis[:, z].conj() @ marg.mat @ basis[:, z]).real) for z in range(d)]
    )


def is_cq(rho: DensityMatrix, label: str, tol: float = 1e-9) -> bool:
    """True iff ρ is block-diagonal in the computational basis of `label`."""
    return trace_distance(rho, dephase(rho, label)) <= tol


def p_secure(rho: DensityMatrix, key: str, tol: float = 1e-9) -> float:
    """1 − ½‖ρ^{KE} − (1/d_K)⊗ρ^E‖₁ for a classical key system `key`."""
    if not is_cq(rho, key, tol):
        raise ContractError(f"state is not classical on {key}")
    d = rho.labels[key]
    others = [n for n in rho.names if n != key]
    if others:
        ideal = DensityMatrix(
            {key: d}, np.eye(d) / d
        ).tensor(rho.partial_trace(set(others)))
        # align label order
        dist = 0.5 * trace_norm(rho.mat - ideal.mat)
    else:
        dist = 0.5 * trace_norm(rho.mat - np.eye(d) / d)
    return 1.0 - float(dist)


def pgm(ensemble: list[tuple[float, np.ndarray]]) -> list[np.ndarray]:
    """Pretty-good measurement Λ_z = ρ̄^{-1/2} p_z ρ_z ρ̄^{-1/2}.

    The pseudo-inverse square root lives on the support of ρ̄; any leftover
    weight I − ΣΛ is distributed uniformly over the outcomes.
    """
    if not ensemble:
        raise ConstructionError("empty ensemble")
    probs = np.array([p for p, _ in ensemble], dtype=float)
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ConstructionError("ensemble probabilities must sum to 1")
    mats = [np.asarray(m, dtype=complex) for _, m in ensemble]
    avg = sum(p * m for p, m in zip(probs, mats))
    ev, vec = np.linalg.eigh(avg)
    inv_sqrt = np.zeros_like(avg)
    support = np.zeros_like(avg)
    for lam, v in zip(ev, vec.T):
        if lam > EIG_CUTOFF:
            inv_sqrt += np.outer(v, v.conj()) / math.sqrt(lam)
            support += np.outer(v, v.conj())
    d = avg.shape[0]
    leftover = (np.eye(d) - support) / len(mats)
    return [inv_sqrt @ (p * m) @ inv_sqrt + leftover for p, m in zip(probs, mats)]


def pgm_povm(label_dims: dict[str, int], ensemble) -> Povm:
    return Povm(label_dims, pgm(ensemble))


def helstrom(p: float, rho: np.ndarray, sigma: np.ndarray) -> tuple[list[np.ndarray], float]:
    """Optimal binary discrimination between ρ (prior p) and σ (prior 1−p).

    Returns ([Λ_ρ, Λ_σ], success probability = ½(1 + ‖pρ−(1−p)σ‖₁)).
    """
    rho = _as_matrix(rho)
    sigma = _as_matrix(sigma)
    delta = p * rho - (1 - p) * sigma
    ev, vec = np.linalg.eigh(delta)
    d = delta.shape[0]
    proj_pos = np.zeros((d, d), dtype=complex)
    for lam, v in zip(ev, vec.T):
        if lam > 0:
            proj_pos += np.outer(v, v.conj())
    lam0 = proj_pos
    lam1 = np.eye(d) - proj_pos
    succ = p * float(np.trace(lam0 @ rho).real) + (1 - p) * float(np.trace(lam1 @ sigma).real)
    return [lam0, lam1], succ


def purify(rho: DensityMatrix, purifier: str = "R", purifier_dim: int | None = None) -> StateVector:
    """Eigendecomposition purification onto a fresh `purifier` system."""
    if purifier in rho.labels:
        raise LabelError(f"label {purifier} already in use")
    ev, vec = np.linalg.eigh(rho.mat)
    ev = np.clip(ev, 0.0, None)
    rank = int((ev > EIG_CUTOFF).sum())
    d = rho.dim
    dp = purifier_dim if purifier_dim is not None else d
    if dp < max(rank, 2):
        raise CapabilityError(f"purifier dim {dp} below rank {rank}")
    amps = np.zeros((d, dp), dtype=complex)
    col = 0
    for lam, v in sorted(zip(ev, vec.T), key=lambda t: -t[0]):
        if lam <= EIG_CUTOFF:
            continue
        amps[:, col] = math.sqrt(lam) * v
        col += 1
    labels = {**rho.labels, purifier: dp}
    order = list(rho.names) + [purifier]
    flat = amps.reshape(-1)
    return StateVector(labels, flat / np.linalg.norm(flat), given_order=order)


def uhlmann_isometry(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    psi_rho: StateVector,
    psi_sigma: StateVector,
) -> tuple[np.ndarray, list[str], list[str]]:
    """Partial isometry W on the purifying factors maximizing
    |⟨ψ_σ|(1⊗W)|ψ_ρ⟩|;  the optimum equals the Uhlmann fidelity F(ρ,σ).

    Returns (W, purifier labels of ψ_ρ, purifier labels of ψ_σ); W maps the
    first factor space into the second and is completed to a full isometry.
    """
    main = list(rho.names)
    if list(sigma.names) != main:
        raise DimensionError("ρ and σ must share system labels")
    pur_r = [n for n in psi_rho.names if n not in main]
    pur_s = [n for n in psi_sigma.names if n not in main]
    if not pur_r or not pur_s:
        raise ConstructionError("purifications must extend the main systems")
    d_main = rho.dim
    Mr = psi_rho.amplitudes_in_order(main + pur_r).reshape(d_main, -1)
    Ms = psi_sigma.amplitudes_in_order(main + pur_s).reshape(d_main, -1)
    d1, d2 = Mr.shape[1], Ms.shape[1]
    if d2 < d1:
        raise CapabilityError("target purifying factor too small for an isometry")
    C = Mr.T @ Ms.conj()  # d1 × d2; max_W |Tr[W C]| = ‖C‖₁ = F(ρ,σ)
    U, s, Vh = np.linalg.svd(C, full_matrices=True)
    W = (Vh.conj().T[:, :d1]) @ U.conj().T
    return W, pur_r, pur_s


def cnot_matrix(dc: int = 2, dt: int = 2) -> np.ndarray:
    """Generalized CNOT |c,t⟩ → |c, t⊕c⟩ (control first index)."""
    if dc != dt:
        raise DimensionError("control/target dims must match")
    M = np.zeros((dc * dt, dc * dt), dtype=complex)
    for c in range(dc):
        for t in range(dt):
            M[c * dt + ((t + c) % dt), c * dt + t] = 1.0
    return M


def random_pure(labels: dict[str, int], rng: np.random.Generator) -> StateVector:
    total = int(np.prod(list(labels.values())))
    a = rng.normal(size=total) + 1j * rng.normal(size=total)
    return StateVector(labels, a / np.linalg.norm(a))


def random_density(labels: dict[str, int], rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    total = int(np.prod(list(labels.values())))
    r = rank if rank is not None else total
    G = rng.normal(size=(total, r)) + 1j * rng.normal(size=(total, r))
    m = G @ G.conj().T
    return DensityMatrix(labels, m / np.trace(m).real, validate=False)


def to_json(state) -> str:
    """Serialize a state: labels with dims, then row-major complex pairs."""
    if isinstance(state, StateVector):
        data = [[float(a.real), float(a.imag)] for a in state.amps]
        kind = "vector"
    elif isinstance(state, DensityMatrix):
        data = [[float(a.real), float(a.imag)] for a in state.mat.reshape(-1)]
        kind = "density"
    else:
        raise ConstructionError("unknown state type")
    return json.dumps(
        {
            "kind": kind,
            "labels": [{"name": n, "dim": d} for n, d in zip(state.names, state.dims)],
            "data": data,
            "tolerances": {"norm": NORM_TOL, "herm": HERM_TOL, "psd": PSD_TOL},
        }
    )


def from_json(text: str):
    obj = json.loads(text)
    labels = {e["name"]: int(e["dim"]) for e in obj["labels"]}
    order = [e["name"] for e in obj["labels"]]
    raw = np.array([complex(re, im) for re, im in obj["data"]])
    if obj["kind"] == "vector":
        return StateVector(labels, raw, given_order=order)
    if obj["kind"] == "density":
        return DensityMatrix(labels, raw, given_order=order)
    raise ConstructionError(f"unknown kind {obj['kind']!r}")
