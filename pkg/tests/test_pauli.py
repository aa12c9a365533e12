import numpy as np
import pytest

from cqinfo import gf2, pauli
from cqinfo.errors import CapabilityError, DimensionError
from cqinfo.gf2 import F2Mat, F2Vec
from cqinfo.pauli import BellDiagonalParams, PauliOp

SYM = BellDiagonalParams(0.85, 0.05, 0.05, 0.05)


def op(s):
    return PauliOp.from_string(s)


def matrix_commutes(a, b):
    A, B = a.matrix(), b.matrix()
    return np.allclose(A @ B - B @ A, 0)


def test_commutes_x_vs_z():
    assert pauli.commutes(op("X"), op("Z")) is False


def test_commutes_z_type():
    assert pauli.commutes(op("ZZI"), op("IZZ")) is True


def test_commutes_xxx_vs_zzz_matches_matrix_oracle():
    # odd overlap: anticommute; the 8x8 matrix product is the oracle
    a, b = op("XXX"), op("ZZZ")
    assert matrix_commutes(a, b) is False
    assert pauli.commutes(a, b) is False


def test_commutes_against_matrices_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = PauliOp(3, int(rng.integers(0, 8)), int(rng.integers(0, 8)))
        b = PauliOp(3, int(rng.integers(0, 8)), int(rng.integers(0, 8)))
        assert pauli.commutes(a, b) == matrix_commutes(a, b)


def test_commutes_size_mismatch():
    with pytest.raises(DimensionError):
        pauli.commutes(op("X"), op("XX"))


def test_product_phase_bookkeeping():
    y = op("Y")
    assert y.phase_exp == 1
    yy = y * y
    assert yy.is_identity() and yy.phase_exp == 0
    assert np.allclose((op("X") * op("Z")).matrix(), op("X").matrix() @ op("Z").matrix())


def test_repetition3_syndromes_match_table():
    code = pauli.repetition3()
    expect = {"III": [0, 0], "XII": [1, 0], "IXI": [0, 1], "IIX": [1, 1]}
    for s, want in expect.items():
        s_z, s_x = pauli.syndromes_of(code, op(s))
        assert s_z.bits.tolist() == want
        assert s_x.n == 0


def test_repetition3_structure():
    code = pauli.repetition3()
    assert code.H_X.n_rows == 0
    zbar, xbar = code.logicals[0]
    assert zbar.letters() == "ZZZ" and xbar.letters() == "XXX"
    # generating set equals the Table-2.2 listing as a group
    other = pauli.CssCode(
        3,
        F2Mat([[1, 1, 0], [0, 1, 1]]),
        F2Mat([], n_cols=3),
        [(pauli.z_op(3, 0b111), pauli.x_op(3, 0b111))],
    )
    assert code.stabilizer_group_masks() == other.stabilizer_group_masks()


def test_shor9_structure():
    code = pauli.shor9()
    assert code.H_Z.n_rows == 6 and code.H_X.n_rows == 2
    zbar, xbar = code.logicals[0]
    assert zbar.letters() == "Z" * 9 and xbar.letters() == "X" * 9


def test_shor9_x4z4_flags_expected_stabilizers():
    code = pauli.shor9()
    s_z, s_x = pauli.syndromes_of(code, op("IIIYIIIII"))
    assert s_z.bits.tolist() == [0, 0, 1, 0, 0, 0]  # Z4Z6 only
    assert s_x.bits.tolist() == [1, 0]  # X4X5X6X7X8X9 only


def test_shor9_z4_phase_syndrome():
    code = pauli.shor9()
    _, s_x = pauli.syndromes_of(code, op("IIIZIIIII"))
    assert s_x.bits.tolist() == [1, 0]


def test_identity_syndromes_zero():
    for code in (pauli.repetition3(), pauli.shor9()):
        s_z, s_x = pauli.syndromes_of(code, PauliOp(code.n, 0, 0))
        assert s_z.mask == 0 and s_x.mask == 0


def test_stabilizers_invisible_to_themselves():
    for code in (pauli.repetition3(), pauli.shor9()):
        for s in code.stabilizer_generators():
            s_z, s_x = pauli.syndromes_of(code, s)
            assert s_z.mask == 0 and s_x.mask == 0


def test_virtual_basis_patterns():
    for code in (pauli.repetition3(), pauli.shor9(), pauli.trivial_code(1)):
        vb = pauli.virtual_basis(code)
        assert len(vb.pairs) == code.n
        assert vb.check_pattern()


def test_virtual_basis_trivial_code():
    vb = pauli.virtual_basis(pauli.trivial_code(1))
    amp, phase = vb.pairs[0]
    assert amp.letters() == "Z" and phase.letters() == "X"


def test_virtual_basis_contains_generators():
    code = pauli.shor9()
    vb = pauli.virtual_basis(code)
    amps = {p[0].z_mask for p in vb.pairs}
    for row in code.H_Z.rows:
        assert row in amps


def test_decode_single_amp_error():
    code = pauli.repetition3()
    noise = BellDiagonalParams(0.9, 0.0, 0.1, 0.0)
    corr = pauli.decode_ml(code, F2Vec([1, 0]), F2Vec([], 0), noise)
    assert corr.letters() == "XII"


def test_decode_zero_syndrome_identity():
    for code in (pauli.repetition3(), pauli.shor9()):
        corr = pauli.decode_ml(
            code, F2Vec(0, code.H_Z.n_rows), F2Vec(0, code.H_X.n_rows), SYM
        )
        assert corr.is_identity()


def test_decode_returns_matching_syndromes_always():
    code = pauli.shor9()
    rng = np.random.default_rng(5)
    for _ in range(30):
        s_z = F2Vec(int(rng.integers(0, 64)), 6)
        s_x = F2Vec(int(rng.integers(0, 4)), 2)
        corr = pauli.decode_ml(code, s_z, s_x, SYM)
        got_z, got_x = pauli.syndromes_of(code, corr)
        assert got_z == s_z and got_x == s_x


def test_decode_shor9_corrects_x4z4_up_to_stabilizer():
    code = pauli.shor9()
    err = op("IIIYIIIII")
    s_z, s_x = pauli.syndromes_of(code, err)
    corr = pauli.decode_ml(code, s_z, s_x, SYM)
    assert not pauli.residual_is_logical_error(code, err, corr)
    group = code.stabilizer_group_masks()
    assert (err.x_mask ^ corr.x_mask, err.z_mask ^ corr.z_mask) in group
    # oracle: within weight <= 2 candidates matching the syndromes, the
    # correction class has maximal probability
    best = None
    import itertools, math

    def prob(x, z):
        p = 1.0
        for i in range(9):
            j, k = (x >> i) & 1, (z >> i) & 1
            p *= SYM.as_tuple()[2 * j + k]
        return p

    for xs in range(512):
        if bin(xs).count("1") > 2:
            continue
        for zs in range(512):
            if bin(zs).count("1") + bin(xs).count("1") > 2:
                continue
            cand = PauliOp(9, xs, zs)
            cz, cx = pauli.syndromes_of(code, cand)
            if cz == s_z and cx == s_x:
                if best is None or prob(xs, zs) > prob(*best):
                    best = (xs, zs)
    assert (best[0] ^ corr.x_mask, best[1] ^ corr.z_mask) in group


def test_shor9_phase_degeneracy():
    code = pauli.shor9()
    corrections = set()
    for pos in (3, 4, 5):
        err = pauli.z_op(9, 1 << pos)
        s_z, s_x = pauli.syndromes_of(code, err)
        corr = pauli.decode_ml(code, s_z, s_x, SYM)
        corrections.add((corr.x_mask, corr.z_mask))
        assert not pauli.residual_is_logical_error(code, err, corr)
        group = code.stabilizer_group_masks()
        assert (err.x_mask ^ corr.x_mask, err.z_mask ^ corr.z_mask) in group
    assert len(corrections) == 1


def test_shor9_all_single_paulis_corrected():
    code = pauli.shor9()
    for pos in range(9):
        for kind in ("X", "Z", "Y"):
            letters = ["I"] * 9
            letters[pos] = kind
            err = op("".join(letters))
            s_z, s_x = pauli.syndromes_of(code, err)
            corr = pauli.decode_ml(code, s_z, s_x, SYM)
            assert not pauli.residual_is_logical_error(code, err, corr)


def test_decode_capability_cap():
    big = pauli.trivial_code(3)
    with pytest.raises(CapabilityError):
        pauli.decode_ml(big, F2Vec(0, 0), F2Vec(0, 0), SYM, n_max=2)


def test_code_text_roundtrip():
    for code in (pauli.repetition3(), pauli.shor9()):
        back = pauli.code_from_text(pauli.code_to_text(code))
        assert back.H_Z == code.H_Z and back.H_X == code.H_X
        assert [(z.z_mask, x.x_mask) for z, x in back.logicals] == [
            (z.z_mask, x.x_mask) for z, x in code.logicals
        ]


def test_sampled_hash_codes_are_valid():
    rng = np.random.default_rng(8)
    for seed in range(5):
        H_Z, H_X = gf2.sample_css_hash(8, 3, 2, seed=seed)
        code = pauli.CssCode(8, H_Z, H_X)
        assert code.k == 3
        vb = pauli.virtual_basis(code)
        assert vb.check_pattern()
