"""Visible-action geometry for the U(n) case catalog.

Points of the base are handled in three shapes: unit vectors (projective
space), n x k orthonormal frames (Grassmannians) and n x n unitaries standing
for cosets gK. The anti-holomorphic involution is entrywise conjugation
throughout, so the fixed group is O(n) and slices consist of real points.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np
from scipy.linalg import null_space as _real_null_space

from .errors import CertificateNotFound, UnsupportedCase, UsageError
from .linalg import (
    canonical_cs,
    cs_decompose,
    cs_general,
    haar_orthogonal,
    haar_sample,
    unitarity_residual,
)

__all__ = [
    "CaseSpec",
    "MSubgroup",
    "load_catalog",
    "get_case",
    "partition_of",
    "lie_basis",
    "sample_subgroup",
    "sample_slice",
    "subgroup_residual",
    "projective_point",
    "projective_normalize",
    "grassmann_normalize",
    "projective_distance",
    "grassmann_distance",
    "coset_distance",
    "sigma_orbit_certificate",
    "hbk_kind",
    "hbk_decompose",
    "m_subgroup",
    "m_numeric_dim",
]

SUBGROUP_TYPES = ("blocks", "torus", "trivial")
SLICE_TYPES = ("angle-torus", "orthogonal", "identity")


# --- case descriptors ---------------------------------------------------------


@dataclass(frozen=True)
class CaseSpec:
    """(G, H, K, B, mu, sigma) with G = U(n) and K block diagonal."""

    id: str
    n: int
    H: dict
    K: dict
    B: dict
    mu: tuple
    sigma: str = "conj"

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("n must be >= 1")
        if self.sigma != "conj":
            raise UnsupportedCase(f"sigma {self.sigma!r}: only entrywise conjugation is supported")
        for name in ("H", "K"):
            partition_of(getattr(self, name), self.n)
        if self.B.get("type") not in SLICE_TYPES:
            raise UsageError(f"unknown slice descriptor {self.B!r}")
        kparts = partition_of(self.K, self.n)
        if kparts is None:
            raise UsageError("K must be a block or torus subgroup")
        mu = self.mu
        if mu and not isinstance(mu[0], (list, tuple)):
            mu = tuple((m,) for m in mu)
        mu = tuple(tuple(int(e) for e in blk) for blk in mu)
        if tuple(len(b) for b in mu) != kparts:
            raise UsageError(f"mu {mu} does not match K blocks {kparts}")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def from_dict(cls, d: dict) -> "CaseSpec":
        try:
            return cls(d["id"], int(d["n"]), dict(d["H"]), dict(d["K"]), dict(d["B"]),
                       tuple(d["mu"]), d.get("sigma", "conj"))
        except KeyError as exc:
            raise UsageError(f"case descriptor missing field {exc}") from None

    def to_dict(self) -> dict:
        return {"id": self.id, "n": self.n, "H": self.H, "K": self.K, "B": self.B,
                "mu": [list(m) for m in self.mu], "sigma": self.sigma}

    @property
    def k_blocks(self) -> tuple[int, ...]:
        return partition_of(self.K, self.n)

    @property
    def h_blocks(self):
        return partition_of(self.H, self.n)

    @property
    def highest_weight(self) -> tuple[int, ...]:
        """Concatenation of the fiber weights; the G-weight of the section space."""
        return tuple(e for blk in self.mu for e in blk)


def load_catalog() -> dict[str, CaseSpec]:
    text = resources.files("mfcert").joinpath("catalog.json").read_text()
    return {d["id"]: CaseSpec.from_dict(d) for d in json.loads(text)}


def get_case(case_id: str) -> CaseSpec:
    cat = load_catalog()
    if case_id not in cat:
        raise UsageError(f"unknown case id {case_id!r}; known: {', '.join(sorted(cat))}")
    return cat[case_id]


# --- subgroup descriptors ------------------------------------------------------


def partition_of(desc: dict, n: int):
    """Interval partition of range(n) for a block/torus descriptor, None if trivial."""
    kind = desc.get("type")
    if kind == "blocks":
        sizes = tuple(int(s) for s in desc["sizes"])
        if any(s < 1 for s in sizes) or sum(sizes) != n:
            raise UsageError(f"block sizes {sizes} do not partition {n}")
        return sizes
    if kind == "torus":
        return (1,) * n
    if kind == "trivial":
        return None
    raise UsageError(f"unknown subgroup descriptor {desc!r}")


def _starts(sizes: Sequence[int]) -> list[int]:
    return [int(x) for x in np.concatenate([[0], np.cumsum(sizes)[:-1]])]


def _meet(a, b, n: int):
    if a is None or b is None:
        return None
    cuts = sorted(set(np.cumsum(a)[:-1]) | set(np.cumsum(b)[:-1]))
    edges = [0] + [int(c) for c in cuts] + [n]
    return tuple(e2 - e1 for e1, e2 in zip(edges, edges[1:]))


def _u_basis(m: int) -> list[np.ndarray]:
    """Real basis of the skew-Hermitian m x m matrices."""
    out = []
    for a in range(m):
        x = np.zeros((m, m), dtype=complex)
        x[a, a] = 1j
        out.append(x)
    for a in range(m):
        for b in range(a + 1, m):
            x = np.zeros((m, m), dtype=complex)
            x[a, b], x[b, a] = 1, -1
            out.append(x)
            y = np.zeros((m, m), dtype=complex)
            y[a, b] = y[b, a] = 1j
            out.append(y)
    return out


def _lie_basis_sizes(sizes, n: int) -> list[np.ndarray]:
    if sizes is None:
        return []
    out = []
    for s0, m in zip(_starts(sizes), sizes):
        for x in _u_basis(m):
            big = np.zeros((n, n), dtype=complex)
            big[s0:s0 + m, s0:s0 + m] = x
            out.append(big)
    return out


def lie_basis(desc: dict, n: int) -> list[np.ndarray]:
    return _lie_basis_sizes(partition_of(desc, n), n)


def sample_subgroup(desc: dict, n: int, rng) -> np.ndarray:
    sizes = partition_of(desc, n)
    if sizes is None:
        return np.eye(n, dtype=complex)
    g = np.zeros((n, n), dtype=complex)
    for s0, m in zip(_starts(sizes), sizes):
        g[s0:s0 + m, s0:s0 + m] = haar_sample(m, rng)
    return g


def _off_blocks(m: np.ndarray, sizes) -> np.ndarray:
    out = np.array(m, dtype=complex)
    for s0, k in zip(_starts(sizes), sizes):
        out[s0:s0 + k, s0:s0 + k] = 0
    return out


def subgroup_residual(m: np.ndarray, desc: dict, n: int) -> float:
    """Distance-like measure of how far m is from the described subgroup."""
    sizes = partition_of(desc, n)
    if sizes is None:
        return float(np.linalg.norm(m - np.eye(n)))
    return max(float(np.linalg.norm(_off_blocks(m, sizes))), unitarity_residual(m))


def sample_slice(case: CaseSpec, rng) -> np.ndarray:
    """A real element b of the slice group B."""
    kind = case.B["type"]
    n = case.n
    if kind == "angle-torus":
        p = int(case.B["p"])
        r = min(p, n - p)
        return canonical_cs(rng.uniform(0.0, np.pi / 2, size=r), p, n)
    if kind == "orthogonal":
        return haar_orthogonal(n, rng)
    return np.eye(n)


# --- slices and distances ------------------------------------------------------


def projective_point(z) -> np.ndarray:
    """Canonical representative of [z]: unit norm, first non-zero coordinate real positive."""
    z = np.asarray(z, dtype=complex)
    nrm = np.linalg.norm(z)
    if nrm == 0:
        raise UsageError("projective point must be non-zero")
    z = z / nrm
    first = z[np.flatnonzero(np.abs(z) > 1e-14)[0]]
    return z * (abs(first) / first)


def projective_normalize(z) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal unitary t with t z real and non-negative. Returns (t, s = t z)."""
    z = np.asarray(z, dtype=complex)
    if not np.any(z):
        raise UsageError("projective point must be non-zero")
    mod = np.abs(z)
    phase = np.ones_like(z)
    nz = mod > 0
    phase[nz] = np.conj(z[nz]) / mod[nz]
    t = np.diag(phase)
    return t, mod.astype(complex)


def projective_distance(z, w) -> float:
    """sin of the angle between the lines spanned by z and w."""
    z = np.asarray(z, dtype=complex) / np.linalg.norm(z)
    w = np.asarray(w, dtype=complex) / np.linalg.norm(w)
    # norm of the part of w orthogonal to z; avoids cancellation in 1 - |<z,w>|^2
    return float(np.linalg.norm(w - np.vdot(z, w) * z))


def _projector(frame: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(frame)
    return q @ q.conj().T


def grassmann_distance(a, b) -> float:
    """||P_A - P_B||_F / sqrt(2): the chordal principal-angle distance."""
    return float(np.linalg.norm(_projector(np.asarray(a)) - _projector(np.asarray(b))) / np.sqrt(2))


def _complete(frame: np.ndarray) -> np.ndarray:
    n, k = frame.shape
    q, _ = np.linalg.qr(np.hstack([frame, np.eye(n)]))
    g = np.array(q[:, :n])
    g[:, :k] = frame
    # re-orthonormalize the complement against the frame
    comp = q[:, :n] - frame @ (frame.conj().T @ q[:, :n])
    u, s, _ = np.linalg.svd(comp)
    g[:, k:] = u[:, : n - k]
    return g


def grassmann_normalize(W, p: int, tol: float = 1e-10):
    """Block unitary h in U(p) x U(n-p) with h W spanning a real plane.

    Returns (h, real_frame) where real_frame is an orthonormal real basis of
    span(h W).
    """
    W = np.asarray(W, dtype=complex)
    n, k = W.shape
    if not 1 <= p < n:
        raise UsageError(f"split p={p} out of range for n={n}")
    if np.linalg.norm(W.conj().T @ W - np.eye(k)) > tol:
        raise UsageError("frame is not orthonormal")
    g = _complete(W)
    u, cs, _ = cs_general(g, p, k)
    h = u.conj().T
    h[:p, p:] = 0
    h[p:, :p] = 0
    return h, cs[:, :k].copy()


def coset_distance(g1, g2, kdesc: dict) -> float:
    """Size of the part of g1^H g2 outside K; zero iff g1 K = g2 K."""
    g1, g2 = np.asarray(g1), np.asarray(g2)
    n = g1.shape[0]
    sizes = partition_of(kdesc, n)
    return float(np.linalg.norm(_off_blocks(g1.conj().T @ g2, sizes)))


# --- sigma-orbit certificates ----------------------------------------------------


def _contains_torus(case: CaseSpec) -> bool:
    return case.h_blocks is not None


def sigma_orbit_certificate(x, case: CaseSpec, tol: float = 1e-8):
    """Constructs h in H with sigma(x) = h x; returns (h, residual).

    The shape of x selects the base: a vector is a point of projective space,
    an n x k frame (k < n) a point of a Grassmannian, an n x n unitary a coset.
    """
    x = np.asarray(x, dtype=complex)
    n = case.n
    if x.ndim == 1:
        if x.shape[0] != n:
            raise UsageError("point has the wrong length")
        if projective_distance(np.conj(x), x) <= tol:
            h = np.eye(n, dtype=complex)
        elif _contains_torus(case):
            t, _ = projective_normalize(x)
            h = t @ t
        else:
            raise CertificateNotFound(f"no element of H={case.H} moves x to sigma(x)")
        res = projective_distance(np.conj(x), h @ x)
    elif x.shape[0] == n and x.shape[1] < n:
        sizes = case.h_blocks
        if sizes is None or len(sizes) != 2:
            raise CertificateNotFound(f"Grassmannian certificate needs H = U(p) x U(q), got {case.H}")
        hn, _ = grassmann_normalize(x, sizes[0])
        h = hn.T @ hn
        res = grassmann_distance(np.conj(x), h @ x)
    elif x.shape == (n, n):
        try:
            h0, _, _, _ = hbk_decompose(x, case)
        except UnsupportedCase as exc:
            raise CertificateNotFound(str(exc)) from None
        h = np.conj(h0) @ h0.conj().T
        res = coset_distance(np.conj(x), h @ x, case.K)
    else:
        raise UsageError(f"cannot interpret point of shape {x.shape}")
    if not res <= tol:
        raise CertificateNotFound(f"certificate residual {res:.3e} exceeds {tol:.1e}")
    return h, float(res)


# --- H B K decompositions ------------------------------------------------------


def hbk_kind(case: CaseSpec) -> str:
    """Catalog label of the constructive factorization for ``case``."""
    n = case.n
    hs, ks, bt = case.h_blocks, case.k_blocks, case.B["type"]
    if hs == (n,):
        return "f"
    if n == 2 and hs == ks == (1, 1) and bt == "orthogonal":
        return "c"
    if hs is not None and len(hs) == 2 and hs == ks and bt == "angle-torus" and int(case.B["p"]) == hs[0]:
        return "a"
    if n >= 2 and hs == (1,) * n and ks == (1, n - 1) and bt == "orthogonal":
        return "b"
    if n >= 2 and hs == (1, n - 1) and ks == (1,) * n and bt == "orthogonal":
        return "b'"
    raise UnsupportedCase(f"no constructive HBK routine for case {case.id!r}")


def _householder_to(s: np.ndarray) -> np.ndarray:
    """Real reflection R (R = R^T = R^-1) with R e1 = s for a real unit vector s."""
    n = s.shape[0]
    w = -s.copy()
    w[0] += 1.0
    nw = np.dot(w, w)
    if nw < 1e-28:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(w, w) / nw


def _hbk_torus_line(g: np.ndarray):
    """g = h b k with h diagonal, b in O(n), k e1 = e1."""
    u = g[:, 0]
    t, s = projective_normalize(u)
    s = s.real / np.linalg.norm(s.real)
    b = _householder_to(s)
    k = b.T @ t @ g
    k[0, 1:] = 0
    k[1:, 0] = 0
    return t.conj(), b, k


def _euler2(g: np.ndarray, tol: float = 1e-12):
    """g = diag(e^{ia1}, e^{ia2}) R(theta) diag(e^{ib1}, e^{ib2}) for g in U(2)."""
    c, s = abs(g[0, 0]), abs(g[1, 0])
    theta = np.arctan2(s, c)
    a1 = 0.0
    b1 = np.angle(g[0, 0]) if c > tol else 0.0
    if s > tol:
        a2 = np.angle(g[1, 0]) - b1
        b2 = np.angle(-g[0, 1]) - a1
    else:
        a2 = 0.0
        b2 = np.angle(g[1, 1])
    h = np.diag(np.exp(1j * np.array([a1, a2])))
    k = np.diag(np.exp(1j * np.array([b1, b2])))
    return h, canonical_cs([theta], 1, 2), k


def hbk_decompose(g, case: CaseSpec, tol: float = 1e-10):
    """Constructive g = h b k with h in H, b in B (real), k in K.

    Returns (h, b, k, residual); residual is the larger of the
    reconstruction error and the membership errors of h and k.
    """
    g = np.asarray(g, dtype=complex)
    n = case.n
    if g.shape != (n, n):
        raise UsageError(f"expected a {n}x{n} matrix")
    if unitarity_residual(g) > tol:
        raise UsageError("input is not unitary")
    kind = hbk_kind(case)
    if kind == "f":
        h, b, k = g.copy(), np.eye(n), np.eye(n, dtype=complex)
    elif kind == "a":
        h, b, k, _ = cs_decompose(g, case.h_blocks[0], tol)
    elif kind == "c":
        h, b, k = _euler2(g)
    elif kind == "b":
        h, b, k = _hbk_torus_line(g)
    else:
        h1, b1, k1 = _hbk_torus_line(g.conj().T)
        h, b, k = k1.conj().T, b1.T, h1.conj().T
    res = max(
        float(np.linalg.norm(h @ b @ k - g)),
        subgroup_residual(h, case.H, n),
        subgroup_residual(k, case.K, n),
        float(np.linalg.norm(np.imag(b))),
    )
    return h, np.real(b), k, res


# --- M = Z_{H cap K}(B) ------------------------------------------------------------


@dataclass
class MSubgroup:
    """Connected subgroup of H cap K centralizing B.

    Each factor is a copy of U(m) embedded diagonally: for every embedding
    (j, offsets) the factor acts by its defining representation on
    consecutive runs of m coordinates of the j-th K block, repeated
    len(offsets)/m times.
    """

    n: int
    k_blocks: tuple
    factors: list
    generators: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return sum(f["size"] ** 2 for f in self.factors)

    def to_dict(self) -> dict:
        return {"k_blocks": list(self.k_blocks),
                "factors": [{"size": f["size"], "embeddings": [[j, list(o)] for j, o in f["embeddings"]]}
                            for f in self.factors]}


def _factor_generators(factors, k_blocks, n) -> list[np.ndarray]:
    starts = _starts(k_blocks)
    gens = []
    for f in factors:
        m = f["size"]
        for x in _u_basis(m):
            big = np.zeros((n, n), dtype=complex)
            for j, offs in f["embeddings"]:
                for c in range(len(offs) // m):
                    idx = [starts[j] + o for o in offs[c * m:(c + 1) * m]]
                    big[np.ix_(idx, idx)] += x
            gens.append(big)
    return gens


def m_subgroup(case: CaseSpec) -> MSubgroup:
    """Structural description of Z_{H cap K}(B) for the catalog cases."""
    kind = hbk_kind(case)
    n, kb = case.n, case.k_blocks
    factors = []
    if kind == "a":
        p = kb[0]
        q = n - p
        r = min(p, q)
        for i in range(r):
            factors.append({"size": 1, "embeddings": [(0, (i,)), (1, (i,))]})
        if p > r:
            factors.append({"size": p - r, "embeddings": [(0, tuple(range(r, p)))]})
        if q > r:
            factors.append({"size": q - r, "embeddings": [(1, tuple(range(r, q)))]})
    elif kind in ("b", "b'", "c"):
        factors.append({"size": 1, "embeddings": [(j, tuple(range(m))) for j, m in enumerate(kb)]})
    else:
        for j, m in enumerate(kb):
            factors.append({"size": m, "embeddings": [(j, tuple(range(m)))]})
    return MSubgroup(n, kb, factors, _factor_generators(factors, kb, n))


def m_numeric_dim(case: CaseSpec, samples: int = 50, seed=0) -> tuple[int, float]:
    """Dimension of Lie(H cap K) cap centralizer of sampled b, by a real null space.

    Returns (dimension, worst commutator of the structural generators with
    the sampled b), the second number certifying the structural answer.
    """
    rng = np.random.default_rng(seed)
    n = case.n
    basis = _lie_basis_sizes(_meet(case.h_blocks, case.k_blocks, n), n)
    bs = [sample_slice(case, rng) for _ in range(samples)]
    if basis:
        cols = []
        for x in basis:
            v = np.concatenate([(x @ b - b @ x).ravel() for b in bs])
            cols.append(np.concatenate([v.real, v.imag]))
        ns = _real_null_space(np.stack(cols, axis=1), rcond=1e-8)
        dim = ns.shape[1]
    else:
        dim = 0
    worst = 0.0
    for x in m_subgroup(case).generators:
        for b in bs:
            worst = max(worst, float(np.linalg.norm(x @ b - b @ x)))
    return dim, worst
