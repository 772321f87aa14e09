"""Finite-dimensional Hilbert spaces of sections of U(n)-equivariant bundles.

Two families are provided.

LineModel
    Degree-N homogeneous polynomials on C^n, viewed as sections of the line
    bundle O(N) over P^{n-1}, evaluated in the holomorphic frame of the chart
    z -> [1 : z]. Orthonormal basis sqrt(N!/alpha!) Z^alpha.

VectorModel
    Sections of G x_K V over G/K given by matrix coefficients
    F_v(g) = A rho(g)^H v, where rho realizes the irreducible representation
    of highest weight Lambda inside tensor powers of exterior powers, and A
    is the orthogonal projection onto the K-type V of the highest weight
    vector. Points are unitaries g standing for gK; fiber values are read in
    the frame g, which is unitary.

Both carry an optional reweighting: the H-isotypic components of the section
space are rescaled, which keeps the inner product H-invariant while breaking
G-invariance. The identities checked downstream (kernel equivariance,
diagonalization, J) then have non-trivial content.
"""
from __future__ import annotations

import itertools
import json
from math import factorial

import numpy as np
from scipy.linalg import expm, lstsq
from scipy.linalg import null_space as _real_null_space

from .charlr import branch_levi
from .errors import UnsupportedCase, UsageError
from .geometry import (
    CaseSpec,
    coset_distance,
    hbk_kind,
    lie_basis,
    partition_of,
    projective_distance,
    sample_slice,
    sample_subgroup,
)
from .linalg import haar_sample, isotypic_blocks, matrix_to_json, null_space
from .weights import as_weight, is_dominant, weyl_dim

__all__ = [
    "SectionModel",
    "LineModel",
    "VectorModel",
    "build_line_model",
    "build_vector_model",
    "line_case",
    "kernel",
    "sharp",
    "evaluate_section",
    "isotropy_rep",
    "j_matrix",
    "j_apply",
    "group_action",
    "invariance_residual",
    "equivariance_residual",
    "diagonalization_residual",
    "block_alignment_residual",
    "j_isometry_residual",
    "j_adjoint_residual",
    "kernel_uniqueness_residual",
    "reproducing_residual",
]

REWEIGHT_STEP = 0.37


def _realify(vecs: list[np.ndarray]) -> np.ndarray:
    return np.stack([np.concatenate([v.real.ravel(), v.imag.ravel()]) for v in vecs], axis=1)


def _proj(cols: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the column span."""
    q, _ = np.linalg.qr(cols)
    return q @ q.conj().T


class SectionModel:
    """Common interface; subclasses supply geometry and raw evaluation.

    Attributes set by subclasses: case, n, d, f, g_weight, h_basis and
    gens (images of h_basis on coefficient vectors).
    """

    kind = "abstract"

    def _finish(self, reweight: bool, seed: int = 0):
        self.gens = [self._section_generator(x) for x in self.h_basis]
        self.T = np.eye(self.d, dtype=complex)
        self.reweighted = False
        if reweight and self.gens:
            blocks = isotypic_blocks(self.gens, self.d, seed=seed)
            if len(blocks) > 1:
                w = np.zeros((self.d, self.d), dtype=complex)
                for i, (u, _) in enumerate(blocks):
                    w += (1.0 + REWEIGHT_STEP * i) * (u @ u.conj().T)
                evals, evecs = np.linalg.eigh((w + w.conj().T) / 2)
                self.T = evecs @ np.diag(evals ** -0.5) @ evecs.conj().T
                self.reweighted = True
        self._j = None

    # evaluation
    def raw_eval(self, x) -> np.ndarray:
        raise NotImplementedError

    def eval_matrix(self, x) -> np.ndarray:
        """f x d matrix whose columns are the orthonormal basis sections at x."""
        return self.raw_eval(x) @ self.T

    # geometry hooks
    def sample_point(self, rng):
        raise NotImplementedError

    def sample_slice_point(self, rng):
        raise NotImplementedError

    def act(self, h, x, rng=None):
        raise NotImplementedError

    def fiber_map(self, h, x, y) -> np.ndarray:
        raise NotImplementedError

    def sigma_point(self, x):
        raise NotImplementedError

    def sigma_lift(self, x) -> np.ndarray:
        raise NotImplementedError

    def point_distance(self, x, y) -> float:
        raise NotImplementedError

    def geometric_point(self, x):
        """Point in the form accepted by the geometry certificates."""
        return x

    def stabilizer(self, x) -> list[np.ndarray]:
        raise NotImplementedError

    def isotropy_gens(self, x) -> list[np.ndarray]:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind,
            "case": self.case.id,
            "d": self.d,
            "f": self.f,
            "g_weight": list(self.g_weight),
            "reweighted": self.reweighted,
            "basis": matrix_to_json(self.T),
            "generators": [matrix_to_json(g) for g in self.gens],
        })


# --- line bundles over projective space --------------------------------------------


def _compositions(N: int, n: int) -> list[tuple[int, ...]]:
    """Exponent vectors of degree N in n variables, lexicographically decreasing."""
    out = [a for a in itertools.product(range(N, -1, -1), repeat=n) if sum(a) == N]
    return out


def line_case(n: int, N: int, H: dict) -> CaseSpec:
    """CaseSpec describing O(N) -> P^{n-1} = U(n) / (U(1) x U(n-1))."""
    sizes = partition_of(H, n)
    if sizes == (1,) * n:
        B = {"type": "orthogonal"}
        tag = "torus"
    elif sizes == (1, n - 1) and n > 2:
        B = {"type": "angle-torus", "p": 1}
        tag = "blocks1"
    elif sizes == (n,):
        B = {"type": "identity"}
        tag = "full"
    else:
        B = {"type": "identity"}
        tag = H["type"] if sizes is None else "blocks" + "-".join(map(str, sizes))
    return CaseSpec(f"line-n{n}-N{N}-{tag}", n, dict(H), {"type": "blocks", "sizes": [1, n - 1]},
                    B, ((-N,), (0,) * (n - 1)))


class LineModel(SectionModel):
    kind = "line"

    def __init__(self, n: int, N: int, H: dict, reweight: bool = False, seed: int = 0,
                 frame: str = "chart"):
        if frame not in ("chart", "unitary"):
            raise UsageError(f"unknown frame {frame!r}")
        self.frame = frame
        if n < 2:
            raise UsageError("line models need n >= 2")
        if N < 0:
            raise UsageError("degree must be non-negative")
        self.n, self.N = int(n), int(N)
        self.case = line_case(n, N, H)
        self.H = dict(H)
        self.alphas = _compositions(self.N, self.n)
        self.index = {a: i for i, a in enumerate(self.alphas)}
        self.coef = np.array([np.sqrt(factorial(N) / np.prod([factorial(a) for a in al]))
                              for al in self.alphas])
        self.d = len(self.alphas)
        self.f = 1
        self.g_weight = (0,) * (n - 1) + (-self.N,)
        self.h_basis = lie_basis(H, n)
        self._exps = np.array(self.alphas)
        self._finish(reweight, seed)

    def _section_generator(self, X: np.ndarray) -> np.ndarray:
        """Derivative of p -> p(exp(-tX) Z) in the orthonormal monomial basis."""
        d = self.d
        m = np.zeros((d, d), dtype=complex)
        for a_idx, al in enumerate(self.alphas):
            for i in range(self.n):
                if al[i] == 0:
                    continue
                for j in range(self.n):
                    if X[i, j] == 0:
                        continue
                    beta = list(al)
                    beta[i] -= 1
                    beta[j] += 1
                    b_idx = self.index[tuple(beta)]
                    m[b_idx, a_idx] += -al[i] * X[i, j] * self.coef[a_idx] / self.coef[b_idx]
        return m

    def homogeneous(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if z.shape != (self.n - 1,):
            raise UsageError(f"chart point must have {self.n - 1} coordinates")
        return np.concatenate([[1.0], z])

    def raw_eval(self, z) -> np.ndarray:
        Z = self.homogeneous(z)
        vals = self.coef * np.prod(Z[None, :] ** self._exps, axis=1)
        if self.frame == "unitary":
            vals = vals * np.sqrt(self.frame_weight(z))
        return vals[None, :]

    def frame_weight(self, z) -> float:
        """|e(z)|^2 for the holomorphic chart frame; unitary frame is e / |e|."""
        Z = self.homogeneous(z)
        return float(np.vdot(Z, Z).real ** (-self.N))

    def sample_point(self, rng):
        return rng.standard_normal(self.n - 1) + 1j * rng.standard_normal(self.n - 1)

    def sample_slice_point(self, rng):
        return rng.standard_normal(self.n - 1).astype(complex)

    def act(self, h, z, rng=None):
        W = np.asarray(h) @ self.homogeneous(z)
        if abs(W[0]) < 1e-8 * np.linalg.norm(W):
            raise UsageError("image point leaves the affine chart")
        return W[1:] / W[0]

    def fiber_map(self, h, z, y=None) -> np.ndarray:
        """Multiplier ((hZ)_0)^-N between chart frames at z and h.z."""
        lam = (np.asarray(h) @ self.homogeneous(z))[0]
        val = lam ** (-self.N)
        if self.frame == "unitary":
            y = self.act(h, z) if y is None else y
            val = val * np.sqrt(self.frame_weight(y) / self.frame_weight(z))
        return np.array([[val]])

    def sigma_point(self, z):
        return np.conj(np.asarray(z, dtype=complex))

    def sigma_lift(self, z) -> np.ndarray:
        return np.eye(1, dtype=complex)

    def point_distance(self, x, y) -> float:
        return projective_distance(self.homogeneous(x), self.homogeneous(y))

    def geometric_point(self, z):
        Z = self.homogeneous(z)
        return Z / np.linalg.norm(Z)

    def stabilizer(self, z) -> list[np.ndarray]:
        if not self.h_basis:
            return []
        Z = self.homogeneous(z)
        P = np.eye(self.n) - np.outer(Z, Z.conj()) / np.vdot(Z, Z)
        ns = _real_null_space(_realify([P @ X @ Z for X in self.h_basis]), rcond=1e-8)
        return [sum(c * X for c, X in zip(col, self.h_basis)) for col in ns.T]

    def isotropy_gens(self, z) -> list[np.ndarray]:
        Z = self.homogeneous(z)
        out = []
        for X in self.stabilizer(z):
            c = np.vdot(Z, X @ Z) / np.vdot(Z, Z)
            out.append(np.array([[-self.N * c]]))
        return out

    def kernel_closed_form(self, z, w) -> complex:
        z, w = np.atleast_1d(z), np.atleast_1d(w)
        return complex((1 + np.dot(z, np.conj(w))) ** self.N)


def build_line_model(n: int, N: int, H: dict | None = None, reweight: bool = False,
                     seed: int = 0, frame: str = "chart") -> LineModel:
    return LineModel(n, N, H or {"type": "torus"}, reweight, seed, frame)


# --- vector bundles over G/K ------------------------------------------------------


def _subsets(n: int, k: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(n), k))


def compound(g: np.ndarray, k: int) -> np.ndarray:
    """k-th compound matrix: action of g on the exterior power, sorted-subset basis."""
    n = g.shape[0]
    subs = _subsets(n, k)
    m = np.empty((len(subs), len(subs)), dtype=complex)
    for a, rows in enumerate(subs):
        for b, cols in enumerate(subs):
            m[a, b] = np.linalg.det(g[np.ix_(rows, cols)])
    return m


def compound_derivative(X: np.ndarray, k: int) -> np.ndarray:
    """Derivation induced by X on the k-th exterior power."""
    n = X.shape[0]
    subs = _subsets(n, k)
    idx = {s: i for i, s in enumerate(subs)}
    m = np.zeros((len(subs), len(subs)), dtype=complex)
    for b, cols in enumerate(subs):
        for t, j in enumerate(cols):
            for a in range(n):
                if X[a, j] == 0:
                    continue
                if a != j and a in cols:
                    continue
                new = list(cols)
                new[t] = a
                order = np.argsort(new)
                # sign of the sorting permutation
                sign = 1
                perm = list(order)
                seen = [False] * len(perm)
                for s0 in range(len(perm)):
                    if seen[s0]:
                        continue
                    length = 0
                    s1 = s0
                    while not seen[s1]:
                        seen[s1] = True
                        s1 = perm[s1]
                        length += 1
                    if length % 2 == 0:
                        sign = -sign
                m[idx[tuple(sorted(new))], b] += sign * X[a, j]
    return m


class TensorRealization:
    """Ambient tensor space containing the irreducible module of weight Lambda."""

    def __init__(self, lam):
        lam = as_weight(lam)
        self.lam = lam
        self.n = n = lam.n
        self.powers = [k for k in range(1, n) for _ in range(lam[k - 1] - lam[k])]
        self.det_power = lam[-1]
        self.dims = [len(_subsets(n, k)) for k in self.powers]
        self.dim = int(np.prod(self.dims)) if self.dims else 1

    def rho(self, g: np.ndarray) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for k in self.powers:
            out = np.kron(out, compound(g, k))
        return out * np.linalg.det(g) ** self.det_power

    def drho(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for pos, k in enumerate(self.powers):
            left = int(np.prod(self.dims[:pos])) if pos else 1
            right = int(np.prod(self.dims[pos + 1:])) if pos + 1 < len(self.dims) else 1
            out += np.kron(np.kron(np.eye(left), compound_derivative(X, k)), np.eye(right))
        return out + self.det_power * np.trace(X) * np.eye(self.dim)

    def highest_vector(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v


def _elementary(n: int, a: int, b: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[a, b] = 1.0
    return e


def _closure(start: np.ndarray, ops: list[np.ndarray], tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the span of all words in ops applied to start."""
    basis = [start / np.linalg.norm(start)]
    queue = [basis[0]]
    while queue:
        v = queue.pop(0)
        for op in ops:
            w = op @ v
            for _ in range(2):
                for b in basis:
                    w = w - np.vdot(b, w) * b
            nw = np.linalg.norm(w)
            if nw > tol:
                w = w / nw
                basis.append(w)
                queue.append(w)
    return np.stack(basis, axis=1)


class VectorModel(SectionModel):
    kind = "vector"

    def __init__(self, case: CaseSpec, reweight: bool = False, twisted: bool = False,
                 naive_sigma: bool = False, seed: int = 0):
        self.case = case
        self.n = n = case.n
        self.H = case.H
        lam = case.highest_weight
        if not is_dominant(lam):
            raise UsageError(f"concatenated weight {lam} is not dominant")
        self.g_weight = tuple(lam)
        kb = case.k_blocks
        branching = branch_levi(lam, kb)
        key = tuple(as_weight(m) for m in case.mu)
        if branching.get(key, 0) != 1:
            raise UnsupportedCase(f"fiber weight {case.mu} is not multiplicity one in the restriction")
        self.k_blocks = kb
        self.tensor = tr = TensorRealization(lam)
        lowering = [tr.drho(_elementary(n, a + 1, a)).real for a in range(n - 1)]
        self.Q = _closure(tr.highest_vector().real, lowering)
        self.d = self.Q.shape[1]
        if self.d != weyl_dim(lam):
            raise RuntimeError(f"closure dimension {self.d} != Weyl dimension {weyl_dim(lam)}")
        starts = np.concatenate([[0], np.cumsum(kb)[:-1]])
        self._block_of = np.repeat(np.arange(len(kb)), kb)
        k_lower = [tr.drho(_elementary(n, b, a)).real
                   for s0, m in zip(starts, kb) for a in range(s0, s0 + m) for b in range(a + 1, s0 + m)]
        V = _closure(tr.highest_vector().real, k_lower) if k_lower else tr.highest_vector()[:, None].real
        self.f = V.shape[1]
        if self.f != int(np.prod([weyl_dim(m) for m in case.mu])):
            raise RuntimeError("fiber dimension does not match the K-type")
        self.raising_residual = max(
            [float(np.linalg.norm(tr.drho(_elementary(n, a, b)) @ V))
             for a in range(n) for b in range(a + 1, n) if self._block_of[a] != self._block_of[b]],
            default=0.0)
        self.A = V.T.astype(complex)
        self.twist = np.eye(self.f, dtype=complex)
        if twisted:
            rng = np.random.default_rng(12345)
            s = rng.standard_normal((self.f, self.f))
            self.twist = expm(1j * (s + s.T) / 2)
            self.A = self.twist @ self.A
        self.naive_sigma = naive_sigma
        self.h_basis = lie_basis(case.H, n)
        self.k_basis = lie_basis(case.K, n)
        self.phi = np.eye(self.f, dtype=complex) if naive_sigma else self._intertwiner()
        self._finish(reweight, seed)

    def _section_generator(self, X: np.ndarray) -> np.ndarray:
        return self.Q.T @ self.tensor.drho(X) @ self.Q

    def mu(self, k: np.ndarray) -> np.ndarray:
        return self.A @ self.tensor.rho(k) @ self.A.conj().T

    def dmu(self, X: np.ndarray) -> np.ndarray:
        return self.A @ self.tensor.drho(X) @ self.A.conj().T

    def _intertwiner(self) -> np.ndarray:
        """Phi with dmu(conj X) Phi = Phi conj(dmu(X)) on Lie(K), unitary, gauge fixed."""
        f = self.f
        eye = np.eye(f)
        rows = []
        for X in self.k_basis:
            a, b = self.dmu(np.conj(X)), np.conj(self.dmu(X))
            rows.append(np.kron(a, eye) - np.kron(eye, b.T))
        ns = null_space(np.vstack(rows)) if rows else np.eye(f * f)
        if ns.shape[1] != 1:
            raise UnsupportedCase(f"sigma intertwiner space has dimension {ns.shape[1]}")
        phi = ns[:, 0].reshape(f, f)
        phi = phi / np.sqrt(np.trace(phi.conj().T @ phi).real / f)
        flat = phi.ravel()
        first = flat[np.argmax(np.abs(flat) > 1e-8)]
        return phi * (abs(first) / first)

    def raw_eval(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=complex)
        if g.shape != (self.n, self.n):
            raise UsageError(f"point must be an {self.n}x{self.n} unitary")
        return self.A @ self.tensor.rho(g).conj().T @ self.Q

    def sample_point(self, rng):
        return haar_sample(self.n, rng)

    def sample_slice_point(self, rng):
        return sample_slice(self.case, rng).astype(complex)

    def act(self, h, g, rng=None):
        out = np.asarray(h) @ np.asarray(g)
        if rng is not None:
            out = out @ sample_subgroup(self.case.K, self.n, rng)
        return out

    def fiber_map(self, h, x, y) -> np.ndarray:
        return self.mu(np.asarray(y).conj().T @ np.asarray(h) @ np.asarray(x))

    def sigma_point(self, g):
        return np.conj(g)

    def sigma_lift(self, g) -> np.ndarray:
        return self.phi

    def point_distance(self, x, y) -> float:
        return coset_distance(x, y, self.case.K)

    def stabilizer(self, g) -> list[np.ndarray]:
        if not self.h_basis:
            return []
        g = np.asarray(g)
        mask = self._block_of[:, None] != self._block_of[None, :]
        imgs = [(g.conj().T @ X @ g)[mask] for X in self.h_basis]
        ns = _real_null_space(_realify(imgs), rcond=1e-8)
        return [sum(c * X for c, X in zip(col, self.h_basis)) for col in ns.T]

    def isotropy_gens(self, g) -> list[np.ndarray]:
        g = np.asarray(g)
        return [self.dmu(g.conj().T @ X @ g) for X in self.stabilizer(g)]


def build_vector_model(case: CaseSpec, reweight: bool = False, twisted: bool = False,
                       naive_sigma: bool = False, seed: int = 0) -> VectorModel:
    return VectorModel(case, reweight, twisted, naive_sigma, seed)


# --- kernels and the sharp map ---------------------------------------------------


def kernel(model: SectionModel, x, y) -> np.ndarray:
    """K(x, y) = sum_nu phi_nu(x) phi_nu(y)^H in the model's frames."""
    return model.eval_matrix(x) @ model.eval_matrix(y).conj().T


def sharp(A: np.ndarray, K: np.ndarray, form: str = "tensor") -> np.ndarray:
    """Push-forward of a kernel value along a fiber map A.

    'tensor' treats K as an element of V (x) conj(V): A K A^H.
    'endomorphism' treats K as an endomorphism: A K A^-1. The two agree for
    unitary A.
    """
    if form == "tensor":
        return A @ K @ A.conj().T
    if form == "endomorphism":
        return A @ K @ np.linalg.inv(A)
    raise UsageError(f"unknown form {form!r}")


def sharp_spectral(A: np.ndarray, K: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """A_sharp of a Hermitian K written as sum lambda_i id_{V_i}: sum lambda_i id_{A V_i}."""
    evals, evecs = np.linalg.eigh((K + K.conj().T) / 2)
    out = np.zeros_like(K, dtype=complex)
    i = 0
    while i < len(evals):
        j = i + 1
        while j < len(evals) and abs(evals[j] - evals[i]) <= tol * max(1.0, abs(evals[i])):
            j += 1
        out += evals[i:j].mean() * _proj(A @ evecs[:, i:j])
        i = j
    return out


def evaluate_section(model: SectionModel, coeffs, x) -> np.ndarray:
    """Fiber value at x; ``coeffs`` is a coefficient vector or a basis index."""
    if np.isscalar(coeffs) and float(coeffs).is_integer():
        c = np.zeros(model.d, dtype=complex)
        c[int(coeffs)] = 1.0
    else:
        c = np.asarray(coeffs, dtype=complex)
        if c.shape != (model.d,):
            raise UsageError(f"expected {model.d} coefficients")
    return model.eval_matrix(x) @ c


def isotropy_rep(model: SectionModel, x, seed: int = 0):
    """(stabilizer generators, fiber generators, isotypic blocks) at x."""
    stab = model.stabilizer(x)
    gens = model.isotropy_gens(x)
    blocks = isotypic_blocks(gens, model.f, seed=seed)
    return stab, gens, blocks


def _sample_points(model, rng, count):
    return [model.sample_point(rng) for _ in range(count)]


def group_action(model: SectionModel, h: np.ndarray, seed: int = 0) -> np.ndarray:
    """Matrix of f -> h.f on coefficients, by interpolation at sampled points.

    (h.f)(y) = L_h f(h^-1 y); uses only evaluation and fiber maps, so it is
    independent of the Lie algebra generators.
    """
    rng = np.random.default_rng(seed)
    hinv = np.asarray(h).conj().T
    m = max(2 * model.d // model.f + 2, 4)
    lhs, rhs = [], []
    for y in _sample_points(model, rng, m):
        x = model.act(hinv, y)
        lhs.append(model.eval_matrix(y))
        rhs.append(model.fiber_map(h, x, y) @ model.eval_matrix(x))
    c, *_ = lstsq(np.vstack(lhs), np.vstack(rhs))
    return c


def invariance_residual(model: SectionModel, samples: int = 100, seed: int = 0) -> float:
    """max ||pi(h)^H pi(h) - I|| over sampled h in H: the inner product is invariant."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(samples):
        h = sample_subgroup(model.H, model.n, rng)
        p = group_action(model, h, seed=int(rng.integers(2**31)))
        worst = max(worst, float(np.linalg.norm(p.conj().T @ p - np.eye(model.d))))
    return worst


def equivariance_residual(model: SectionModel, samples: int = 100, seed: int = 0) -> float:
    """max ||K(hx, hx) - (L_h)_sharp K(x, x)|| over sampled (h, x).

    For unitary fiber maps the spectral form of the push-forward is checked
    as well.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = model.sample_point(rng)
        h = sample_subgroup(model.H, model.n, rng)
        y = model.act(h, x, rng)
        L = model.fiber_map(h, x, y)
        kx, ky = kernel(model, x, x), kernel(model, y, y)
        worst = max(worst, float(np.linalg.norm(ky - sharp(L, kx))))
        if np.linalg.norm(L.conj().T @ L - np.eye(model.f)) < 1e-10:
            worst = max(worst, float(np.linalg.norm(ky - sharp(L, kx, "endomorphism"))),
                        float(np.linalg.norm(ky - sharp_spectral(L, kx))))
    return worst


def diagonalization_residual(model: SectionModel, x, seed: int = 0) -> tuple[float, float, list[int]]:
    """Off-diagonal block norm and scalar deviation of K(x,x) in the isotypic basis.

    Returns (off-diagonal norm, worst deviation of a diagonal block from a
    multiple of the identity, block multiplicities).
    """
    _, _, blocks = isotropy_rep(model, x, seed)
    kx = kernel(model, x, x)
    off = 0.0
    dev = 0.0
    for i, (ui, _) in enumerate(blocks):
        for j, (uj, _) in enumerate(blocks):
            blk = ui.conj().T @ kx @ uj
            if i != j:
                off = max(off, float(np.linalg.norm(blk)))
            else:
                k = blk.shape[0]
                dev = max(dev, float(np.linalg.norm(blk - np.trace(blk) / k * np.eye(k))))
    return off, dev, [m for _, m in blocks]


def block_alignment_residual(model: SectionModel, x, h=None, seed: int = 0) -> float:
    """Compare sigma_x(V^(i)) with L_h(V^(i)) for every isotypic block at x.

    With h None the point is taken to lie on the slice (sigma(x) = x) and
    the comparison is with V^(i) itself.
    """
    _, _, blocks = isotropy_rep(model, x, seed)
    sx = model.sigma_point(x)
    phi = model.sigma_lift(x)
    if h is None:
        if model.point_distance(x, sx) > 1e-10:
            raise UsageError("point is not fixed by sigma")
        h = np.eye(model.n)
    L = model.fiber_map(h, x, sx)
    worst = 0.0
    for u, _ in blocks:
        worst = max(worst, float(np.linalg.norm(_proj(phi @ np.conj(u)) - _proj(L @ u))))
    return worst


# --- the operator J --------------------------------------------------------------------


def j_matrix(model: SectionModel, seed: int = 0) -> tuple[np.ndarray, float]:
    """M with J c = M conj(c), fitted from (Jf)(x) = conj(Phi_x^-1 f(sigma x)).

    Returns (M, fit residual); a small fit residual certifies that J maps
    the space into itself.
    """
    if getattr(model, "_j", None) is not None and model._j[2] == seed:
        return model._j[0], model._j[1]
    rng = np.random.default_rng(seed)
    m = max(2 * model.d // model.f + 2, 4)
    lhs, rhs = [], []
    for x in _sample_points(model, rng, m):
        sx = model.sigma_point(x)
        phi = model.sigma_lift(x)
        lhs.append(model.eval_matrix(x))
        rhs.append(np.conj(np.linalg.solve(phi, model.eval_matrix(sx))))
    a, b = np.vstack(lhs), np.vstack(rhs)
    M, *_ = lstsq(a, b)
    fit = float(np.linalg.norm(a @ M - b) / max(1.0, np.linalg.norm(b)))
    model._j = (M, fit, seed)
    return M, fit


def j_apply(model: SectionModel, coeffs, seed: int = 0) -> np.ndarray:
    M, _ = j_matrix(model, seed)
    return M @ np.conj(np.asarray(coeffs, dtype=complex))


def j_isometry_residual(model: SectionModel, samples: int = 100, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        c = rng.standard_normal(model.d) + 1j * rng.standard_normal(model.d)
        worst = max(worst, abs(np.linalg.norm(j_apply(model, c)) - np.linalg.norm(c)))
    return float(worst)


def j_adjoint_residual(model: SectionModel, basis: list[np.ndarray]) -> float:
    """max ||A^H - J A J^-1|| over commutant basis elements, on coefficients."""
    M, _ = j_matrix(model)
    Minv = np.linalg.inv(M)
    worst = 0.0
    for A in basis:
        A = A / np.linalg.norm(A)
        worst = max(worst, float(np.linalg.norm(A.conj().T - M @ np.conj(A) @ Minv)))
    return worst


# --- kernel identities -----------------------------------------------------------------


def kernel_uniqueness_residual(model: SectionModel, pairs: int = 50, seed: int = 0) -> float:
    """Kernels of two independently orthonormalized bases agree.

    A random basis change S is applied and the result is re-orthonormalized
    through its Gram matrix (S^H S) before the kernels are compared.
    """
    rng = np.random.default_rng(seed)
    d = model.d
    s = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    gram = s.conj().T @ s
    chol = np.linalg.cholesky(gram)
    new = s @ np.linalg.inv(chol.conj().T)
    worst = 0.0
    for _ in range(pairs):
        x, y = model.sample_point(rng), model.sample_point(rng)
        ex, ey = model.eval_matrix(x) @ new, model.eval_matrix(y) @ new
        worst = max(worst, float(np.linalg.norm(ex @ ey.conj().T - kernel(model, x, y))))
    return worst


def reproducing_residual(model: SectionModel, samples: int = 20, seed: int = 0) -> float:
    """|(f, K(., y) v) - <f(y), v>| for basis sections f.

    The coefficients of K(., y) v are recovered by least squares from kernel
    values at sampled points, not read off the basis.
    """
    rng = np.random.default_rng(seed)
    m = max(2 * model.d // model.f + 2, 4)
    pts = _sample_points(model, rng, m)
    E = np.vstack([model.eval_matrix(p) for p in pts])
    worst = 0.0
    for _ in range(samples):
        y = model.sample_point(rng)
        v = rng.standard_normal(model.f) + 1j * rng.standard_normal(model.f)
        vals = np.concatenate([kernel(model, p, y) @ v for p in pts])
        c, *_ = lstsq(E, vals)
        ey = model.eval_matrix(y)
        for k in range(model.d):
            lhs = np.conj(c[k])  # (e_k, c) = conj(c_k) with the inner product linear in the first slot
            rhs = np.vdot(v, ey[:, k])
            worst = max(worst, abs(lhs - rhs))
    return float(worst)
