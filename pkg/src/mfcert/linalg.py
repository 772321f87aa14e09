"""Dense complex linear algebra: Haar sampling, CS decomposition, commutants."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cossin

__all__ = [
    "CommutantBasis",
    "haar_sample",
    "haar_orthogonal",
    "svd",
    "null_space",
    "cs_decompose",
    "canonical_cs",
    "commutant_basis",
    "commutativity_defect",
    "isotypic_blocks",
    "unitarity_residual",
    "matrix_to_json",
    "matrix_from_json",
]

RANK_TOL = 1e-8
ABS_TOL = 1e-10


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def unitarity_residual(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1])))


def haar_sample(n: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix, phases fixed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def haar_orthogonal(n: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def svd(a: np.ndarray):
    """A = U @ diag(s) @ V^H with s non-negative and non-increasing.

    Returns (U, s, V); note V, not V^H.
    """
    u, s, vh = np.linalg.svd(np.asarray(a, dtype=complex), full_matrices=False)
    return u, s, vh.conj().T


def null_space(a: np.ndarray, rtol: float = RANK_TOL, atol: float = ABS_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of ker(a).

    Singular values count towards the rank when they exceed rtol times the
    largest one and also the absolute floor atol (a numerically zero matrix
    has full kernel).
    """
    a = np.asarray(a)
    ncols = a.shape[1]
    if a.size == 0 or a.shape[0] == 0:
        return np.eye(ncols, dtype=a.dtype)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    if s.size == 0 or s[0] <= atol:
        return np.eye(ncols, dtype=a.dtype)
    rank = int(np.sum(s > max(rtol * s[0], atol)))
    return vh[rank:].conj().T


# --- CS decomposition ----------------------------------------------------------


def canonical_cs(theta: np.ndarray, p: int, n: int) -> np.ndarray:
    """Real orthogonal core: rotation by theta_i on coordinates (i, p+i)."""
    b = np.eye(n)
    for i, t in enumerate(theta):
        c, s = np.cos(t), np.sin(t)
        b[i, i] = c
        b[p + i, p + i] = c
        b[i, p + i] = -s
        b[p + i, i] = s
    return b


def _scipy_layout(p: int, q: int) -> tuple[list[int], list[int]]:
    """Permutations taking canonical coordinates to LAPACK's CS layout.

    LAPACK puts the unpaired identity coordinates first inside the larger
    block and lists angles in ascending order.
    """
    r = min(p, q)
    t0, b0 = p - r, q - r
    top = [t0 + r - 1 - i for i in range(r)] + list(range(t0))
    bot = [b0 + r - 1 - i for i in range(r)] + list(range(b0))
    return top, bot


def cs_decompose(g: np.ndarray, p: int, tol: float = 1e-10):
    """g = h @ b @ k with h, k in U(p) x U(n-p) and b a real angle rotation.

    Angles are returned in non-increasing order in [0, pi/2]; angle i
    rotates coordinates (i, p+i). Returns (h, b, k, theta).
    """
    g = np.asarray(g, dtype=complex)
    n = g.shape[0]
    if g.shape != (n, n):
        raise ValueError("g must be square")
    if not 1 <= p < n:
        raise ValueError(f"block split p={p} out of range for n={n}")
    if unitarity_residual(g) > tol:
        raise ValueError("input is not unitary")
    q = n - p
    u, cs, vdh = cossin(g, p=p, q=p)
    _, theta, _ = cossin(g, p=p, q=p, separate=True)
    theta = np.sort(np.asarray(theta, dtype=float))[::-1]
    b = canonical_cs(theta, p, n)
    top, bot = _scipy_layout(p, q)
    perm = np.zeros((n, n))
    for i, j in enumerate(top):
        perm[j, i] = 1.0
    for i, j in enumerate(bot):
        perm[p + j, p + i] = 1.0
    # scipy's core should equal perm @ b @ perm.T
    if np.linalg.norm(cs.real - perm @ b @ perm.T) > 1e-8 or np.linalg.norm(cs.imag) > 1e-12:
        raise RuntimeError("unexpected CS layout from LAPACK")
    h = u @ perm
    k = perm.T @ vdh
    return h, b, k, theta


def cs_general(g: np.ndarray, p: int, q: int):
    """CS decomposition with row split p and column split q (core as LAPACK returns it)."""
    u, cs, vdh = cossin(np.asarray(g, dtype=complex), p=p, q=q)
    return u, cs.real, vdh


# --- commutants ----------------------------------------------------------------


@dataclass
class CommutantBasis:
    """Frobenius-orthonormal basis of {A : A G_i = G_i A for all i}."""

    dim: int
    basis: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return len(self.basis)


def _commutator_operator(generators, d: int) -> np.ndarray:
    eye = np.eye(d)
    rows = []
    for g in generators:
        g = np.asarray(g, dtype=complex)
        scale = np.linalg.norm(g)
        if scale == 0:
            continue
        g = g / scale
        # row-major vec: vec(A G) = (I kron G^T) vec(A), vec(G A) = (G kron I) vec(A)
        rows.append(np.kron(eye, g.T) - np.kron(g, eye))
    if not rows:
        return np.zeros((0, d * d), dtype=complex)
    return np.vstack(rows)


def commutant_basis(generators, d: int | None = None, rtol: float = RANK_TOL) -> CommutantBasis:
    """Null space of A -> (A G_i - G_i A)_i, reshaped to d x d matrices."""
    generators = [np.asarray(g, dtype=complex) for g in generators]
    if d is None:
        if not generators:
            raise ValueError("dimension required for an empty generator list")
        d = generators[0].shape[0]
    for g in generators:
        if g.shape != (d, d):
            raise ValueError(f"generator of shape {g.shape}, expected {(d, d)}")
    op = _commutator_operator(generators, d)
    if op.shape[0] == 0:
        vecs = np.eye(d * d, dtype=complex)
    else:
        vecs = null_space(op, rtol)
    return CommutantBasis(d, [vecs[:, i].reshape(d, d) for i in range(vecs.shape[1])])


def commutativity_defect(cb: CommutantBasis) -> float:
    """max ||AB - BA||_F / (||A||_F ||B||_F) over pairs of basis elements."""
    worst = 0.0
    mats = cb.basis
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            a, b = mats[i], mats[j]
            num = np.linalg.norm(a @ b - b @ a)
            worst = max(worst, num / (np.linalg.norm(a) * np.linalg.norm(b)))
    return float(worst)


def _center_coefficients(mats: list[np.ndarray], rtol: float) -> np.ndarray:
    """Coefficient vectors c with sum c_i M_i commuting with every M_j."""
    cols = []
    for m in mats:
        cols.append(np.concatenate([(m @ other - other @ m).ravel() for other in mats]))
    system = np.stack(cols, axis=1)
    return null_space(system, rtol)


def isotypic_blocks(generators, d: int, rtol: float = RANK_TOL, seed: int = 0):
    """Isotypic decomposition of the representation generated by ``generators``.

    Returns a list of (basis, multiplicity) pairs, each basis an orthonormal
    d x k column block. Blocks are the eigenspaces of a generic Hermitian
    element of the center of the commutant; ordering is by block dimension,
    then by the spectrum of the first generator on the block.
    """
    cb = commutant_basis(generators, d, rtol)
    mats = cb.basis
    coeffs = _center_coefficients(mats, rtol)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(coeffs.shape[1]) + 1j * rng.standard_normal(coeffs.shape[1])
    c = coeffs @ w
    z = sum(ci * m for ci, m in zip(c, mats))
    z = (z + z.conj().T) / 2
    evals, evecs = np.linalg.eigh(z)
    spread = max(1.0, float(np.max(np.abs(evals))))
    groups: list[list[int]] = []
    for i, e in enumerate(evals):
        if groups and abs(e - evals[groups[-1][-1]]) <= 1e-6 * spread:
            groups[-1].append(i)
        else:
            groups.append([i])
    blocks = []
    for idx in groups:
        u = evecs[:, idx]
        compressed = np.stack([(u.conj().T @ m @ u).ravel() for m in mats], axis=1)
        s = np.linalg.svd(compressed, compute_uv=False)
        rank = int(np.sum(s > max(rtol * s[0], ABS_TOL))) if s.size else 0
        mult = int(round(np.sqrt(rank)))
        blocks.append((u, mult))

    def key(block):
        u, _ = block
        spectrum = ()
        if generators:
            g0 = np.asarray(generators[0])
            spectrum = tuple(np.round(np.sort(np.linalg.eigvals(u.conj().T @ g0 @ u).imag), 8))
        return (u.shape[1], spectrum)

    blocks.sort(key=key)
    return blocks


# --- serialization -------------------------------------------------------------


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    if isinstance(data, str):
        data = json.loads(data)
    return np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)
