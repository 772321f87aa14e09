import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfcert.linalg import (
    canonical_cs,
    commutant_basis,
    commutativity_defect,
    cs_decompose,
    haar_orthogonal,
    haar_sample,
    isotypic_blocks,
    matrix_from_json,
    matrix_to_json,
    null_space,
    svd,
    unitarity_residual,
)


def block_mask(n, p):
    m = np.zeros((n, n), bool)
    m[:p, :p] = True
    m[p:, p:] = True
    return m


def test_haar_is_unitary_and_seeded():
    a = haar_sample(4, 7)
    assert unitarity_residual(a) < 1e-12
    assert np.array_equal(a, haar_sample(4, 7))
    o = haar_orthogonal(3, 1)
    assert np.isrealobj(o) and np.linalg.norm(o.T @ o - np.eye(3)) < 1e-12
    with pytest.raises(ValueError):
        haar_sample(0)


def test_haar_moments():
    # E|tr U|^2 = 1 and E tr U = 0 under Haar measure
    rng = np.random.default_rng(0)
    tr = np.array([np.trace(haar_sample(3, rng)) for _ in range(4000)])
    assert abs(np.mean(np.abs(tr) ** 2) - 1.0) < 0.1
    assert abs(np.mean(tr)) < 0.05


def test_haar_eigenphases_repel():
    # Haar eigenvalue spacings vanish quadratically; a phase-uncorrected QR does not give this law
    rng = np.random.default_rng(1)
    gaps = []
    for _ in range(2000):
        ph = np.sort(np.angle(np.linalg.eigvals(haar_sample(2, rng))))
        gaps.append(min(ph[1] - ph[0], 2 * np.pi - ph[1] + ph[0]))
    assert np.mean(np.array(gaps) < 0.2) < 0.01


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.data(), st.integers(0, 2**31 - 1))
def test_cs_decompose_structure(n, data, seed):
    p = data.draw(st.integers(1, n - 1))
    g = haar_sample(n, seed)
    h, b, k, theta = cs_decompose(g, p)
    mask = block_mask(n, p)
    assert np.linalg.norm(h @ b @ k - g) < 1e-10
    assert np.linalg.norm(h[~mask]) < 1e-10 and np.linalg.norm(k[~mask]) < 1e-10
    assert unitarity_residual(h) < 1e-10 and unitarity_residual(k) < 1e-10
    assert np.allclose(b, canonical_cs(theta, p, n))
    assert len(theta) == min(p, n - p)
    assert np.all(np.diff(theta) <= 1e-12) and np.all(theta >= -1e-12) and np.all(theta <= np.pi / 2 + 1e-12)


def test_cs_angles_are_principal_angles():
    g = haar_sample(5, 3)
    _, _, _, theta = cs_decompose(g, 2)
    # cosines are the singular values of the top-left block
    s = np.linalg.svd(g[:2, :2], compute_uv=False)
    assert np.allclose(np.sort(np.cos(theta)), np.sort(s), atol=1e-10)


def test_cs_rejects_bad_input():
    with pytest.raises(ValueError):
        cs_decompose(np.ones((3, 3)), 1)
    with pytest.raises(ValueError):
        cs_decompose(np.eye(3), 3)


def test_svd_convention():
    a = np.random.default_rng(2).standard_normal((4, 3))
    u, s, v = svd(a)
    assert np.allclose(u @ np.diag(s) @ v.conj().T, a)


def test_null_space_floors():
    a = np.array([[1.0, 0, 0], [0, 1e-14, 0]])
    assert null_space(a).shape[1] == 2
    assert null_space(np.zeros((2, 3))).shape[1] == 3
    ns = null_space(np.array([[1.0, 1.0]]))
    assert ns.shape == (2, 1) and abs(ns[0, 0] + ns[1, 0]) < 1e-12


def rotation_generator(d):
    """Spin-(d-1)/2 representation of su(2): the irreducible d-dimensional one."""
    j = (d - 1) / 2
    m = np.arange(j, -j - 1, -1)
    jp = np.zeros((d, d), complex)
    for i in range(1, d):
        jp[i - 1, i] = np.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    jz = np.diag(m).astype(complex)
    return [1j * jz, (jp - jp.conj().T) / 2, 1j * (jp + jp.conj().T) / 2]


def direct_sum(parts):
    d = sum(p[0].shape[0] for p in parts)
    out = []
    for k in range(len(parts[0])):
        m = np.zeros((d, d), complex)
        s = 0
        for p in parts:
            e = p[k].shape[0]
            m[s:s + e, s:s + e] = p[k]
            s += e
        out.append(m)
    return out


@pytest.mark.parametrize("dims, expected", [
    ([2], 1), ([2, 3], 2), ([2, 2], 4), ([2, 2, 3], 5), ([1, 1, 1], 9),
])
def test_commutant_dimension_is_sum_of_squares(dims, expected):
    gens = direct_sum([rotation_generator(d) for d in dims])
    u = haar_sample(sum(dims), 5)
    gens = [u @ g @ u.conj().T for g in gens]
    cb = commutant_basis(gens)
    assert len(cb) == expected
    mf = len(set(dims)) == len(dims)
    assert (commutativity_defect(cb) < 1e-9) == mf


def test_isotypic_blocks_multiplicities():
    gens = direct_sum([rotation_generator(d) for d in (2, 3, 2, 1)])
    blocks = isotypic_blocks(gens, 8)
    got = sorted((u.shape[1], m) for u, m in blocks)
    assert got == [(1, 1), (3, 1), (4, 2)]
    for u, _ in blocks:
        assert np.allclose(u.conj().T @ u, np.eye(u.shape[1]))
        for g in gens:
            # blocks are invariant
            assert np.linalg.norm(g @ u - u @ (u.conj().T @ g @ u)) < 1e-9


def test_commutant_empty_generators():
    assert len(commutant_basis([], 3)) == 9
    with pytest.raises(ValueError):
        commutant_basis([])
    with pytest.raises(ValueError):
        commutant_basis([np.eye(2)], 3)


def test_matrix_json_roundtrip():
    m = haar_sample(3, 4)
    assert np.array_equal(matrix_from_json(matrix_to_json(m)), m)
