"""Bit-exact linear algebra over GF(2) and orthogonal-row hash sampling.

Vectors and matrices are held as packed integer bitmasks internally (one
Python int per row, bit i = column i) since syndrome computations dominate
the Monte-Carlo cost elsewhere.  The public API speaks numpy uint8 arrays.
"""
from __future__ import annotations

import numpy as np

from .errors import ConstructionError, DimensionError


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def pack_row(bits) -> int:
    """Pack an iterable of 0/1 into an integer mask, bit i = entry i."""
    mask = 0
    for i, b in enumerate(bits):
        if b & 1:
            mask |= 1 << i
    return mask


def unpack_row(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=np.uint8)


class F2Vec:
    """Fixed-length vector over GF(2)."""

    __slots__ = ("n", "mask")

    def __init__(self, bits, n: int | None = None):
        if isinstance(bits, int):
            if n is None:
                raise DimensionError("length required when building from a mask")
            self.n = n
            self.mask = bits & ((1 << n) - 1)
        else:
            seq = list(bits)
            self.n = len(seq) if n is None else n
            if n is not None and len(seq) != n:
                raise DimensionError(f"expected length {n}, got {len(seq)}")
            self.mask = pack_row(seq)

    @property
    def bits(self) -> np.ndarray:
        return unpack_row(self.mask, self.n)

    def __xor__(self, other: "F2Vec") -> "F2Vec":
        if self.n != other.n:
            raise DimensionError("length mismatch")
        return F2Vec(self.mask ^ other.mask, self.n)

    def dot(self, other: "F2Vec") -> int:
        if self.n != other.n:
            raise DimensionError("length mismatch")
        return _parity(self.mask & other.mask)

    def weight(self) -> int:
        return bin(self.mask).count("1")

    def __eq__(self, other) -> bool:
        return isinstance(other, F2Vec) and self.n == other.n and self.mask == other.mask

    def __hash__(self):
        return hash((self.n, self.mask))

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return "".join(str(b) for b in self.bits)


class F2Mat:
    """Matrix over GF(2), stored as packed row masks."""

    __slots__ = ("n_rows", "n_cols", "rows")

    def __init__(self, rows, n_cols: int | None = None):
        packed = []
        for r in rows:
            if isinstance(r, F2Vec):
                packed.append((r.mask, r.n))
            elif isinstance(r, int):
                if n_cols is None:
                    raise DimensionError("n_cols required for mask rows")
                packed.append((r, n_cols))
            else:
                v = F2Vec(r)
                packed.append((v.mask, v.n))
        widths = {w for _, w in packed}
        if n_cols is None:
            if not widths:
                raise DimensionError("n_cols required for an empty matrix")
            if len(widths) > 1:
                raise DimensionError("row lengths differ")
            n_cols = widths.pop()
        elif widths and widths != {n_cols}:
            raise DimensionError("row lengths differ from n_cols")
        self.n_cols = n_cols
        self.rows = [m for m, _ in packed]
        self.n_rows = len(self.rows)

    @classmethod
    def from_array(cls, arr) -> "F2Mat":
        a = np.atleast_2d(np.asarray(arr, dtype=np.uint8))
        return cls([pack_row(row) for row in a], n_cols=a.shape[1])

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "F2Mat":
        return cls([0] * n_rows, n_cols=n_cols)

    @classmethod
    def identity(cls, n: int) -> "F2Mat":
        return cls([1 << i for i in range(n)], n_cols=n)

    def to_array(self) -> np.ndarray:
        return np.array([unpack_row(m, self.n_cols) for m in self.rows], dtype=np.uint8).reshape(
            self.n_rows, self.n_cols
        )

    def row(self, i: int) -> F2Vec:
        return F2Vec(self.rows[i], self.n_cols)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, F2Mat)
            and self.n_cols == other.n_cols
            and self.rows == other.rows
        )

    def __hash__(self):
        return hash((self.n_cols, tuple(self.rows)))

    def __repr__(self) -> str:
        return f"F2Mat({self.n_rows}x{self.n_cols})"


def _echelon(rows: list[int], n_cols: int) -> tuple[list[int], list[int]]:
    """Row-reduce masks, leftmost-first pivoting. Returns (reduced rows, pivot cols)."""
    work = list(rows)
    pivots: list[int] = []
    rank = 0
    for col in range(n_cols):
        bit = 1 << col
        pivot = next((i for i in range(rank, len(work)) if work[i] & bit), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for i in range(len(work)):
            if i != rank and work[i] & bit:
                work[i] ^= work[rank]
        pivots.append(col)
        rank += 1
    return work[:rank], pivots


def rank(M: F2Mat) -> int:
    """GF(2) row rank of M."""
    reduced, _ = _echelon(M.rows, M.n_cols)
    return len(reduced)


def kernel_basis(M: F2Mat) -> list[F2Vec]:
    """Basis of {v : M v = 0}, one vector per free column."""
    reduced, pivots = _echelon(M.rows, M.n_cols)
    pivot_set = set(pivots)
    basis = []
    for free in range(M.n_cols):
        if free in pivot_set:
            continue
        mask = 1 << free
        for row, pc in zip(reduced, pivots):
            if row & (1 << free):
                mask |= 1 << pc
        basis.append(F2Vec(mask, M.n_cols))
    return basis


def syndrome(M: F2Mat, v: F2Vec) -> F2Vec:
    """M v over GF(2)."""
    if v.n != M.n_cols:
        raise DimensionError(f"vector length {v.n} != n_cols {M.n_cols}")
    out = 0
    for i, row in enumerate(M.rows):
        out |= _parity(row & v.mask) << i
    return F2Vec(out, M.n_rows)


def syndrome_mask(rows: list[int], vmask: int) -> int:
    """Packed-mask syndrome; hot path for Monte-Carlo loops."""
    out = 0
    for i, row in enumerate(rows):
        out |= _parity(row & vmask) << i
    return out


def in_row_span(M: F2Mat, v: F2Vec) -> bool:
    reduced, pivots = _echelon(M.rows, M.n_cols)
    m = v.mask
    for row, pc in zip(reduced, pivots):
        if m & (1 << pc):
            m ^= row
    return m == 0


def solve(M: F2Mat, s: F2Vec) -> F2Vec | None:
    """One solution v of M v = s, or None if inconsistent."""
    if s.n != M.n_rows:
        raise DimensionError("syndrome length mismatch")
    work = list(M.rows)
    rhs = [(s.mask >> i) & 1 for i in range(M.n_rows)]
    pivots = []
    rank_ = 0
    for col in range(M.n_cols):
        bit = 1 << col
        pivot = next((i for i in range(rank_, len(work)) if work[i] & bit), None)
        if pivot is None:
            continue
        work[rank_], work[pivot] = work[pivot], work[rank_]
        rhs[rank_], rhs[pivot] = rhs[pivot], rhs[rank_]
        for i in range(len(work)):
            if i != rank_ and work[i] & bit:
                work[i] ^= work[rank_]
                rhs[i] ^= rhs[rank_]
        pivots.append(col)
        rank_ += 1
    for i in range(rank_, len(work)):
        if rhs[i]:
            return None
    x = 0
    for row_idx, col in enumerate(pivots):
        if rhs[row_idx]:
            x |= 1 << col
    return F2Vec(x, M.n_cols)


def _random_outside_span(rng: np.random.Generator, span_rows: list[int], n: int) -> int:
    """Uniform vector independent of span_rows (rejection sampling)."""
    reduced, pivots = _echelon(span_rows, n)
    while True:
        mask = int(rng.integers(0, 1 << n)) if n <= 62 else pack_row(rng.integers(0, 2, n))
        m = mask
        for row, pc in zip(reduced, pivots):
            if m & (1 << pc):
                m ^= row
        if m != 0:
            return mask


def sample_css_hash(n: int, n_Z: int, n_X: int, seed: int) -> tuple[F2Mat, F2Mat]:
    """Sample (H_Z, H_X) with independent rows and H_Z · H_Xᵀ = 0.

    H_Z rows are drawn uniformly among vectors independent of the earlier
    rows; H_X rows uniformly from ker(H_Z) minus the span of earlier H_X
    rows.  Deterministic per seed.
    """
    if n_Z < 0 or n_X < 0 or n_Z + n_X > n:
        raise ConstructionError(f"need n_Z + n_X <= n, got {n_Z}+{n_X} > {n}")
    rng = np.random.default_rng(seed)
    hz_rows: list[int] = []
    for _ in range(n_Z):
        hz_rows.append(_random_outside_span(rng, hz_rows, n))
    H_Z = F2Mat(hz_rows, n_cols=n)
    kernel = kernel_basis(H_Z)
    k = len(kernel)  # = n - n_Z
    hx_rows: list[int] = []
    coeff_span: list[int] = []
    for _ in range(n_X):
        # Sample coefficients over the kernel basis, independent of prior picks.
        coeffs = _random_outside_span(rng, coeff_span, k)
        coeff_span.append(coeffs)
        mask = 0
        for i in range(k):
            if coeffs & (1 << i):
                mask ^= kernel[i].mask
        hx_rows.append(mask)
    H_X = F2Mat(hx_rows, n_cols=n)
    return H_Z, H_X


def universality_probe(n: int, m: int, trials: int, seed: int) -> dict:
    """Estimate Pr[f(x)=f(y)] for random linear f and random distinct x, y.

    The matrix of f is uniform over all m×n binary matrices; for any fixed
    x != y the collision probability is exactly 2^-m.
    """
    if m > n:
        raise ConstructionError("m must not exceed n")
    if trials < 1:
        raise ConstructionError("trials must be positive")
    rng = np.random.default_rng(seed)
    if m == 0:
        return {"estimate": 1.0, "bound": 1.0, "sigma": 0.0, "trials": trials}
    collisions = 0
    for _ in range(trials):
        x = int(rng.integers(0, 1 << n))
        y = int(rng.integers(0, 1 << n))
        while y == x:
            y = int(rng.integers(0, 1 << n))
        diff = x ^ y
        rows = [int(rng.integers(0, 1 << n)) for _ in range(m)]
        if all(_parity(r & diff) == 0 for r in rows):
            collisions += 1
    est = collisions / trials
    p = 2.0 ** (-m)
    sigma = np.sqrt(p * (1 - p) / trials)
    return {"estimate": est, "bound": p, "sigma": float(sigma), "trials": trials}


def to_text(M: F2Mat) -> str:
    """Plain text form: 'n_rows n_cols' then one 0/1 row per line."""
    lines = [f"{M.n_rows} {M.n_cols}"]
    for mask in M.rows:
        lines.append("".join(str((mask >> i) & 1) for i in range(M.n_cols)))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> F2Mat:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ConstructionError("empty matrix text")
    header = lines[0].split()
    if len(header) != 2:
        raise ConstructionError("first line must be 'n_rows n_cols'")
    n_rows, n_cols = int(header[0]), int(header[1])
    if len(lines) - 1 != n_rows:
        raise ConstructionError(f"expected {n_rows} rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        if len(ln) != n_cols or set(ln) - {"0", "1"}:
            raise ConstructionError(f"bad row {ln!r}")
        rows.append(pack_row(int(c) for c in ln))
    return F2Mat(rows, n_cols=n_cols)
