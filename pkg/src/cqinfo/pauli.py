"""Symplectic Pauli algebra, CSS codes, virtual qubits, and ML decoding."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .errors import CapabilityError, ConstructionError, DimensionError
from .gf2 import F2Mat, F2Vec


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


@dataclass(frozen=True)
class PauliOp:
    """n-qubit Pauli operator i^phase_exp · X^x Z^z in symplectic form.

    x_bits and z_bits are packed masks; bit i refers to qubit i (0-based).
    """

    n: int
    x_mask: int
    z_mask: int
    phase_exp: int = 0

    @classmethod
    def from_masks(cls, n: int, x_mask: int, z_mask: int, phase_exp: int = 0) -> "PauliOp":
        lim = (1 << n) - 1
        return cls(n, x_mask & lim, z_mask & lim, phase_exp % 4)

    @classmethod
    def from_string(cls, s: str) -> "PauliOp":
        """Build from a letter string like 'XIZ' or 'IYY' (qubit 0 leftmost)."""
        x = z = 0
        phase = 0
        for i, ch in enumerate(s.upper()):
            if ch in ("I", "1"):
                continue
            if ch == "X":
                x |= 1 << i
            elif ch == "Z":
                z |= 1 << i
            elif ch == "Y":
                x |= 1 << i
                z |= 1 << i
                phase += 1  # Y = i·XZ
            else:
                raise ConstructionError(f"unknown Pauli letter {ch!r}")
        return cls(len(s), x, z, phase % 4)

    @property
    def x_bits(self) -> F2Vec:
        return F2Vec(self.x_mask, self.n)

    @property
    def z_bits(self) -> F2Vec:
        return F2Vec(self.z_mask, self.n)

    def weight(self) -> int:
        return bin(self.x_mask | self.z_mask).count("1")

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def letters(self) -> str:
        out = []
        for i in range(self.n):
            x = (self.x_mask >> i) & 1
            z = (self.z_mask >> i) & 1
            out.append("IXZY"[x + 2 * z] if x + 2 * z != 3 else "Y")
        return "".join(out)

    def __mul__(self, other: "PauliOp") -> "PauliOp":
        if self.n != other.n:
            raise DimensionError("qubit counts differ")
        # X^a Z^b · X^c Z^d = (-1)^(b·c) X^(a+c) Z^(b+d); track as i-power.
        phase = (self.phase_exp + other.phase_exp + 2 * _parity(self.z_mask & other.x_mask)) % 4
        return PauliOp(self.n, self.x_mask ^ other.x_mask, self.z_mask ^ other.z_mask, phase)

    def equals_up_to_phase(self, other: "PauliOp") -> bool:
        return self.n == other.n and self.x_mask == other.x_mask and self.z_mask == other.z_mask

    def matrix(self) -> np.ndarray:
        """Dense 2^n × 2^n matrix (qubit 0 = most significant tensor factor)."""
        X = np.array([[0, 1], [1, 0]], dtype=complex)
        Z = np.array([[1, 0], [0, -1]], dtype=complex)
        I = np.eye(2, dtype=complex)
        out = np.array([[1.0 + 0j]])
        for i in range(self.n):
            x = (self.x_mask >> i) & 1
            z = (self.z_mask >> i) & 1
            f = I
            if x and z:
                f = X @ Z
            elif x:
                f = X
            elif z:
                f = Z
            out = np.kron(out, f)
        return (1j ** self.phase_exp) * out

    def __repr__(self) -> str:
        pre = {0: "", 1: "i·", 2: "-", 3: "-i·"}[self.phase_exp % 4]
        return pre + self.letters()


def commutes(P: PauliOp, Q: PauliOp) -> bool:
    """True iff the symplectic form x_P·z_Q ⊕ z_P·x_Q vanishes."""
    if P.n != Q.n:
        raise DimensionError("qubit counts differ")
    return (_parity(P.x_mask & Q.z_mask) ^ _parity(P.z_mask & Q.x_mask)) == 0


def z_op(n: int, mask: int) -> PauliOp:
    return PauliOp(n, 0, mask)


def x_op(n: int, mask: int) -> PauliOp:
    return PauliOp(n, mask, 0)


@dataclass
class CssCode:
    """CSS code: Z-type checks H_Z, X-type checks H_X, and logical pairs."""

    n: int
    H_Z: F2Mat
    H_X: F2Mat
    logicals: list[tuple[PauliOp, PauliOp]] = field(default_factory=list)

    def __post_init__(self):
        if self.H_Z.n_cols != self.n or self.H_X.n_cols != self.n:
            raise ConstructionError("check width differs from n")
        for zr in self.H_Z.rows:
            for xr in self.H_X.rows:
                if _parity(zr & xr):
                    raise ConstructionError("H_Z and H_X rows are not orthogonal")
        if not self.logicals:
            self.logicals = _find_logicals(self.n, self.H_Z, self.H_X)
        self._validate_logicals()

    def _validate_logicals(self):
        k = self.n - gf2.rank(self.H_Z) - gf2.rank(self.H_X)
        if len(self.logicals) != k:
            raise ConstructionError(f"expected {k} logical pairs, got {len(self.logicals)}")
        stabs = self.stabilizer_generators()
        for i, (zbar, xbar) in enumerate(self.logicals):
            if zbar.x_mask or xbar.z_mask:
                raise ConstructionError("logicals must be pure Z-type / X-type")
            for s in stabs:
                if not (commutes(zbar, s) and commutes(xbar, s)):
                    raise ConstructionError("logical fails to commute with a stabilizer")
            for j, (zb2, xb2) in enumerate(self.logicals):
                want_anti = i == j
                if commutes(zbar, xb2) == want_anti:
                    raise ConstructionError("logical pair (anti)commutation pattern broken")
                if not commutes(zbar, zb2) or not commutes(xbar, xb2):
                    raise ConstructionError("logical operators of like type must commute")

    @property
    def k(self) -> int:
        return len(self.logicals)

    def stabilizer_generators(self) -> list[PauliOp]:
        gens = [z_op(self.n, m) for m in self.H_Z.rows]
        gens += [x_op(self.n, m) for m in self.H_X.rows]
        return gens

    def stabilizer_group_masks(self) -> set[tuple[int, int]]:
        """All (x_mask, z_mask) pairs in the stabilizer group (for small codes)."""
        group = set()
        zs = self.H_Z.rows
        xs = self.H_X.rows
        for zc in range(1 << len(zs)):
            zm = 0
            for i in range(len(zs)):
                if zc & (1 << i):
                    zm ^= zs[i]
            for xc in range(1 << len(xs)):
                xm = 0
                for i in range(len(xs)):
                    if xc & (1 << i):
                        xm ^= xs[i]
                group.add((xm, zm))
        return group


def _find_logicals(n: int, H_Z: F2Mat, H_X: F2Mat) -> list[tuple[PauliOp, PauliOp]]:
    """Canonical logical pairs for a CSS code.

    Zbar candidates live in ker(H_X) mod rowspace(H_Z); Xbar candidates in
    ker(H_Z) mod rowspace(H_X).  Pairs are matched so that Zbar_i
    anticommutes with Xbar_j exactly when i = j.
    """
    kz = gf2.kernel_basis(H_X)  # Z-type masks commuting with all X checks
    kx = gf2.kernel_basis(H_Z)  # X-type masks commuting with all Z checks
    z_span = list(H_Z.rows)
    z_cands = []
    for v in kz:
        if not gf2.in_row_span(F2Mat(z_span, n_cols=n), v):
            z_cands.append(v.mask)
            z_span.append(v.mask)
    x_span = list(H_X.rows)
    x_cands = []
    for v in kx:
        if not gf2.in_row_span(F2Mat(x_span, n_cols=n), v):
            x_cands.append(v.mask)
            x_span.append(v.mask)
    if len(z_cands) != len(x_cands):
        raise ConstructionError("inconsistent logical counts")
    # Symplectic Gram-Schmidt on the pairing P[i][j] = <z_i, x_j>.
    pairs: list[tuple[int, int]] = []
    zs = list(z_cands)
    xs = list(x_cands)
    while zs:
        z0 = zs.pop(0)
        j = next((jj for jj, x in enumerate(xs) if _parity(z0 & x)), None)
        if j is None:
            raise ConstructionError("degenerate symplectic pairing")
        x0 = xs.pop(j)
        zs = [z ^ z0 if _parity(z & x0) else z for z in zs]
        xs = [x ^ x0 if _parity(x & z0) else x for x in xs]
        pairs.append((z0, x0))
    return [(z_op(n, zm), x_op(n, xm)) for zm, xm in pairs]


def repetition3() -> CssCode:
    """Three-qubit amplitude repetition code, checks Z1Z3 and Z2Z3."""
    H_Z = F2Mat.from_array([[1, 0, 1], [0, 1, 1]])
    H_X = F2Mat([], n_cols=3)
    logicals = [(z_op(3, 0b111), x_op(3, 0b111))]
    return CssCode(3, H_Z, H_X, logicals)


def shor9() -> CssCode:
    """Nine-qubit Shor code, generator rows as in the per-block parity text.

    Z checks: Z1Z3, Z2Z3 per block; X checks: X4..X9 and X1X2X3X7X8X9.
    """
    hz = []
    for b in (0, 3, 6):
        row1 = [0] * 9
        row1[b], row1[b + 2] = 1, 1
        row2 = [0] * 9
        row2[b + 1], row2[b + 2] = 1, 1
        hz.extend([row1, row2])
    hx = [
        [0, 0, 0, 1, 1, 1, 1, 1, 1],
        [1, 1, 1, 0, 0, 0, 1, 1, 1],
    ]
    H_Z = F2Mat.from_array(hz)
    H_X = F2Mat.from_array(hx)
    logicals = [(z_op(9, 0b111111111), x_op(9, 0b111111111))]
    return CssCode(9, H_Z, H_X, logicals)


def trivial_code(n: int = 1) -> CssCode:
    """No stabilizers; every qubit is logical."""
    logicals = [(z_op(n, 1 << i), x_op(n, 1 << i)) for i in range(n)]
    return CssCode(n, F2Mat([], n_cols=n), F2Mat([], n_cols=n), logicals)


@dataclass
class VirtualBasis:
    """n (amplitude, phase) operator pairs forming a complete relabeling."""

    pairs: list[tuple[PauliOp, PauliOp]]

    def check_pattern(self, tol_irrelevant: float = 0.0) -> bool:
        """Same-index pairs anticommute; everything else commutes."""
        ops = self.pairs
        for i, (ai, pi) in enumerate(ops):
            if commutes(ai, pi):
                return False
            for j, (aj, pj) in enumerate(ops):
                if i == j:
                    continue
                if not (commutes(ai, aj) and commutes(ai, pj) and commutes(pi, pj)):
                    return False
        return True


def virtual_basis(code: CssCode) -> VirtualBasis:
    """Amplitude/phase pairs: Z-stabilizer rows, X-stabilizer rows, logicals.

    Stabilizer qubits carry the generator as one member of the pair; the
    conjugate partner is solved for (one valid completion among several).
    """
    n = code.n
    # Z-type amplitude partners of the X-stabilizer rows, first:
    # v_j · (H_X row k) = δ_jk, v_j ⊥ Xbar masks.
    amp_for_phase = _solve_duals(
        n,
        pair_masks=list(code.H_X.rows),
        zero_masks=[xb.x_mask for _, xb in code.logicals],
    )
    # X-type phase partners of the Z-stabilizer rows, constrained to commute
    # with everything already placed: u_i · (H_Z row k) = δ_ik, u_i ⊥ Zbar
    # masks, u_i ⊥ each v_j.
    phase_for_amp = _solve_duals(
        n,
        pair_masks=list(code.H_Z.rows),
        zero_masks=[zb.z_mask for zb, _ in code.logicals] + amp_for_phase,
    )
    pairs = []
    for zm, xm in zip(code.H_Z.rows, phase_for_amp):
        pairs.append((z_op(n, zm), x_op(n, xm)))
    for xm, zm in zip(code.H_X.rows, amp_for_phase):
        pairs.append((z_op(n, zm), x_op(n, xm)))
    pairs.extend(code.logicals)
    vb = VirtualBasis(pairs)
    if len(pairs) != n or not vb.check_pattern():
        raise ConstructionError("virtual basis completion failed")
    return vb


def _solve_duals(n: int, pair_masks: list[int], zero_masks: list[int]) -> list[int]:
    """For each m_i in pair_masks find u_i with u_i·m_j = δ_ij and u_i ⊥ all
    zero_masks (GF(2) inner products as vectors)."""
    duals = []
    for i in range(len(pair_masks)):
        rows = list(pair_masks) + list(zero_masks)
        rhs = [1 if j == i else 0 for j in range(len(pair_masks))] + [0] * len(zero_masks)
        sol = gf2.solve(F2Mat(rows, n_cols=n), F2Vec(gf2.pack_row(rhs), len(rows)))
        if sol is None:
            raise ConstructionError("no dual completion exists")
        duals.append(sol.mask)
    return duals


def syndromes_of(code: CssCode, E: PauliOp) -> tuple[F2Vec, F2Vec]:
    """(sZ, sX): bit i set iff E anticommutes with the i-th Z / X stabilizer."""
    if E.n != code.n:
        raise DimensionError("operator size differs from code")
    sz = gf2.syndrome_mask(code.H_Z.rows, E.x_mask)
    sx = gf2.syndrome_mask(code.H_X.rows, E.z_mask)
    return F2Vec(sz, code.H_Z.n_rows), F2Vec(sx, code.H_X.n_rows)


@dataclass(frozen=True)
class BellDiagonalParams:
    """Probabilities of the four Bell states; index jk = (X-power, Z-power)."""

    p00: float
    p01: float
    p10: float
    p11: float

    def __post_init__(self):
        ps = (self.p00, self.p01, self.p10, self.p11)
        if any(p < -1e-12 for p in ps):
            raise ConstructionError("negative probability")
        if abs(sum(ps) - 1.0) > 1e-12:
            raise ConstructionError("probabilities must sum to 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p00, self.p01, self.p10, self.p11)

    @property
    def amp_error(self) -> float:
        """Marginal probability of an amplitude (X-type) error."""
        return self.p10 + self.p11

    @property
    def phase_error(self) -> float:
        return self.p01 + self.p11

    def cond_phase_given_amp(self, j: int) -> float:
        """P(Z-error | X-error status j)."""
        if j == 0:
            tot = self.p00 + self.p01
            return self.p01 / tot if tot > 0 else 0.0
        tot = self.p10 + self.p11
        return self.p11 / tot if tot > 0 else 0.0


DEFAULT_DECODE_CAP = 20


def _coset_iter(H: F2Mat, s: F2Vec):
    """Iterate all v with H v = s (particular solution + kernel span)."""
    part = gf2.solve(H, s)
    if part is None:
        return
    kern = [v.mask for v in gf2.kernel_basis(H)]
    for c in range(1 << len(kern)):
        m = part.mask
        for i in range(len(kern)):
            if c & (1 << i):
                m ^= kern[i]
        yield m


def _log_probs(noise: BellDiagonalParams):
    floor = 1e-300
    amp1 = max(noise.amp_error, floor)
    amp0 = max(1.0 - noise.amp_error, floor)
    return math.log(amp0), math.log(amp1)


def _lex_bits(mask: int, n: int) -> tuple:
    return tuple((mask >> i) & 1 for i in range(n))


def _cond_phase_logs(noise: BellDiagonalParams) -> dict:
    floor = 1e-300
    logc = {}
    for j in (0, 1):
        c = noise.cond_phase_given_amp(j)
        logc[(j, 0)] = math.log(max(1.0 - c, floor))
        logc[(j, 1)] = math.log(max(c, floor))
    return logc


def _best_phase_given_amp(
    code: CssCode, sX: F2Vec, x_mask: int, logc: dict, z_coset: list[int] | None
) -> tuple[int, float]:
    """Max-probability phase pattern in the sX coset, given amplitude x_mask."""
    n = code.n
    if code.H_X.n_rows == 0:
        # Unconstrained: optimize per qubit.
        zm = 0
        score = 0.0
        for i in range(n):
            j = (x_mask >> i) & 1
            if logc[(j, 1)] > logc[(j, 0)]:
                zm |= 1 << i
                score += logc[(j, 1)]
            else:
                score += logc[(j, 0)]
        return zm, score
    best_z, best_score = None, -math.inf
    for zm in z_coset:
        score = 0.0
        for i in range(n):
            score += logc[((x_mask >> i) & 1, (zm >> i) & 1)]
        if score > best_score + 1e-12 or (
            abs(score - best_score) <= 1e-12
            and best_z is not None
            and _lex_bits(zm, n) < _lex_bits(best_z, n)
        ):
            best_z, best_score = zm, score
    if best_z is None:
        raise ConstructionError("no phase pattern matches sX")
    return best_z, best_score


def decode_ml(
    code: CssCode,
    sZ: F2Vec,
    sX: F2Vec,
    noise: BellDiagonalParams,
    n_max: int = DEFAULT_DECODE_CAP,
) -> PauliOp:
    """Most probable Pauli error consistent with both syndromes.

    Maximizes P(amplitude pattern) · P(phase pattern | amplitude pattern) over
    the two syndrome cosets jointly.  Ties break lexicographically on
    (x_bits, z_bits).
    """
    if code.n > n_max:
        raise CapabilityError(f"n={code.n} exceeds decode cap {n_max}")
    if sZ.n != code.H_Z.n_rows or sX.n != code.H_X.n_rows:
        raise DimensionError("syndrome lengths do not match the code")
    la0, la1 = _log_probs(noise)
    logc = _cond_phase_logs(noise)
    z_coset = list(_coset_iter(code.H_X, sX)) if code.H_X.n_rows else None
    best, best_score = None, -math.inf
    for xm in _coset_iter(code.H_Z, sZ):
        w = bin(xm).count("1")
        amp_score = w * la1 + (code.n - w) * la0
        zm, phase_score = _best_phase_given_amp(code, sX, xm, logc, z_coset)
        score = amp_score + phase_score
        key = _lex_bits(xm, code.n) + _lex_bits(zm, code.n)
        if score > best_score + 1e-12 or (
            abs(score - best_score) <= 1e-12 and best is not None and key < best[2]
        ):
            best, best_score = (xm, zm, key), score
    if best is None:
        raise ConstructionError("no error pattern matches the syndromes")
    return PauliOp(code.n, best[0], best[1])


def residual_is_logical_error(code: CssCode, error: PauliOp, correction: PauliOp) -> bool:
    """True iff correction∘error acts nontrivially on some logical operator."""
    fx = error.x_mask ^ correction.x_mask
    fz = error.z_mask ^ correction.z_mask
    for zbar, xbar in code.logicals:
        if _parity(fx & zbar.z_mask) or _parity(fz & xbar.x_mask):
            return True
    return False


def code_to_text(code: CssCode) -> str:
    """Two gf2 text blocks plus 'X:mask;Z:mask' logical lines."""
    parts = [gf2.to_text(code.H_Z), gf2.to_text(code.H_X)]
    for zbar, xbar in code.logicals:
        parts.append(f"X:{xbar.x_mask:0{code.n}b};Z:{zbar.z_mask:0{code.n}b}\n")
    return "".join(parts)


def code_from_text(text: str) -> CssCode:
    lines = text.strip().splitlines()
    nr, nc = (int(t) for t in lines[0].split())
    hz_text = "\n".join(lines[: nr + 1])
    rest = lines[nr + 1 :]
    nr2, _ = (int(t) for t in rest[0].split())
    hx_text = "\n".join(rest[: nr2 + 1])
    H_Z = gf2.from_text(hz_text)
    H_X = gf2.from_text(hx_text)
    logicals = []
    n = H_Z.n_cols
    for ln in rest[nr2 + 1 :]:
        xpart, zpart = ln.strip().split(";")
        xm = int(xpart.split(":")[1], 2)
        zm = int(zpart.split(":")[1], 2)
        logicals.append((z_op(n, zm), x_op(n, xm)))
    return CssCode(n, H_Z, H_X, logicals)
