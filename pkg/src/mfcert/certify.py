"""Certification pipeline: hypothesis records, proof-step diagnostics, and the
two-route multiplicity-free conclusion (commutant algebra vs. exact oracle)."""
from __future__ import annotations

import itertools
import json
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .bundlemodel import (
    LineModel,
    SectionModel,
    VectorModel,
    block_alignment_residual,
    build_line_model,
    build_vector_model,
    diagonalization_residual,
    equivariance_residual,
    invariance_residual,
    isotropy_rep,
    j_adjoint_residual,
    j_isometry_residual,
    j_matrix,
)
from .charlr import branch_levi, is_mf, lr_expand, sigma_dual_check
from .errors import CertificateNotFound, UnsupportedCase, UsageError
from .geometry import (
    CaseSpec,
    get_case,
    hbk_decompose,
    load_catalog,
    m_numeric_dim,
    m_subgroup,
    partition_of,
    projective_normalize,
    sample_subgroup,
    sigma_orbit_certificate,
)
from .linalg import commutant_basis, commutativity_defect, haar_sample
from .weights import GLWeight, as_weight, weyl_dim

__all__ = [
    "DEFAULT_SEED",
    "CertReport",
    "oracle_restriction",
    "mu_restriction",
    "conclusion_record",
    "certify_first_form",
    "certify_second_form",
    "certify_third_form",
    "certify_irreducibility",
    "mf_scan",
    "resolve_model",
    "model_catalog",
]

DEFAULT_SEED = 20240917
DEFECT_TOL = 1e-9
RESIDUAL_TOL = 1e-9
ORBIT_TOL = 1e-8
HBK_TOL = 1e-8


@dataclass
class CertReport:
    case: str
    conditions: list = field(default_factory=list)
    conclusion: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        ok = all(c["pass"] for c in self.conditions) and bool(self.conclusion.get("pass", False))
        return "pass" if ok else "fail"

    def condition(self, label: str) -> dict:
        for c in self.conditions:
            if c["label"] == label:
                return c
        raise KeyError(label)

    def failed(self) -> list[str]:
        return [c["label"] for c in self.conditions if not c["pass"]]

    def to_dict(self) -> dict:
        out = {"case": self.case, "conditions": self.conditions, "conclusion": self.conclusion,
               "verdict": self.verdict}
        if self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _record(label, anchor, passed, residual, samples, seed, **extra) -> dict:
    rec = {"label": label, "anchor": anchor, "pass": bool(passed),
           "residual": None if residual is None else float(residual),
           "samples": int(samples), "seed": seed}
    rec.update(extra)
    return rec


def _child_seed(seed, tag: str) -> int:
    """Deterministic per-record seed derived from the run seed."""
    return int(np.random.default_rng([seed, sum(map(ord, tag))]).integers(2**31))


# --- oracle route ---------------------------------------------------------------------


def oracle_restriction(g_weight, H: dict, n: int) -> dict:
    """Multiplicities of the restriction of pi_Lambda to H, from exact branching."""
    sizes = partition_of(H, n)
    if sizes is None:
        return {(): weyl_dim(g_weight)}
    return {tuple(tuple(w) for w in key): m for key, m in branch_levi(g_weight, sizes).items()}


def _oracle_list(terms: dict) -> list:
    return [{"weights": [list(w) for w in key], "mult": m} for key, m in sorted(terms.items())]


def conclusion_record(model: SectionModel, hypotheses_hold: bool) -> dict:
    """Commutant route and oracle route for the H-module of sections; they must agree."""
    cb = commutant_basis(model.gens, model.d)
    defect = commutativity_defect(cb)
    terms = oracle_restriction(model.g_weight, model.H, model.n)
    oracle_mf = all(m == 1 for m in terms.values())
    expected = sum(m * m for m in terms.values())
    agree = ((defect <= DEFECT_TOL) == oracle_mf) and len(cb) == expected
    ok = agree and (oracle_mf or not hypotheses_hold)
    return {"commutant_dim": len(cb), "defect": float(defect), "oracle_mf": oracle_mf,
            "expected_commutant_dim": expected, "oracle": _oracle_list(terms),
            "route": "two-route", "status": "implied" if hypotheses_hold else "not-implied",
            "pass": bool(ok)}


def _oracle_only_conclusion(g_weight, H, n, hypotheses_hold, reason) -> dict:
    terms = oracle_restriction(g_weight, H, n)
    oracle_mf = all(m == 1 for m in terms.values())
    return {"commutant_dim": None, "defect": None, "oracle_mf": oracle_mf,
            "expected_commutant_dim": sum(m * m for m in terms.values()),
            "oracle": _oracle_list(terms), "route": "oracle-only", "note": reason,
            "status": "implied" if hypotheses_hold else "not-implied",
            "pass": bool(oracle_mf or not hypotheses_hold)}


# --- proof-step diagnostics ------------------------------------------------------------


def _diagnostics(model: SectionModel, samples: int, seed) -> list:
    """Kernel equivariance, diagonalization and J identities; reported, not gating."""
    out = []
    s = _child_seed(seed, "equivariance")
    out.append(_record("kernel-equivariance", "kernel pushed forward by L_h",
                       (r := equivariance_residual(model, samples, s)) <= RESIDUAL_TOL, r, samples, s))
    s = _child_seed(seed, "invariance")
    n_inv = min(samples, 20)
    out.append(_record("inner-product-invariance", "H acts unitarily on sections",
                       (r := invariance_residual(model, n_inv, s)) <= RESIDUAL_TOL, r, n_inv, s))
    s = _child_seed(seed, "diagonal")
    rng = np.random.default_rng(s)
    worst = 0.0
    for _ in range(min(samples, 50)):
        off, dev, _ = diagonalization_residual(model, model.sample_point(rng))
        worst = max(worst, off, dev)
    out.append(_record("kernel-diagonal", "K(x,x) scalar on isotypic blocks",
                       worst <= RESIDUAL_TOL, worst, min(samples, 50), s))
    s = _child_seed(seed, "j")
    _, fit = j_matrix(model)
    r = max(j_isometry_residual(model, samples, s), fit)
    out.append(_record("j-isometry", "J is an isometry of the section space", r <= RESIDUAL_TOL, r, samples, s))
    cb = commutant_basis(model.gens, model.d)
    r = j_adjoint_residual(model, cb.basis)
    out.append(_record("j-adjoint", "A* = J A J^-1 on the commutant", r <= RESIDUAL_TOL, r, len(cb), seed))
    return out


# --- first and second forms --------------------------------------------------------------


def _fiber_mf(model, points, seed):
    worst = 0
    for x in points:
        _, _, blocks = isotropy_rep(model, x)
        worst = max(worst, max(m for _, m in blocks) - 1)
    return worst


def certify_first_form(model: SectionModel, samples: int = 100, seed=DEFAULT_SEED,
                       diagnostics: bool = True) -> CertReport:
    """Fiber, orbit and block conditions at generic points, then the conclusion."""
    rep = CertReport(model.case.id)
    s = _child_seed(seed, "fiber")
    rng = np.random.default_rng(s)
    pts = [model.sample_point(rng) for _ in range(samples)]
    try:
        worst = _fiber_mf(model, pts, s)
        rep.conditions.append(_record("fiber-mf", "isotropy representation on the fiber is multiplicity-free",
                                      worst == 0, worst, samples, s))
    except Exception as exc:  # never escape
        rep.conditions.append(_record("fiber-mf", "isotropy representation on the fiber is multiplicity-free",
                                      False, None, 0, s, note=str(exc)))

    s = _child_seed(seed, "orbit")
    rng = np.random.default_rng(s)
    pts = [model.sample_point(rng) for _ in range(samples)]
    certs = []
    worst, missing = 0.0, 0
    for x in pts:
        try:
            h, r = sigma_orbit_certificate(model.geometric_point(x), model.case)
            r = max(r, model.point_distance(model.sigma_point(x), model.act(h, x)))
            worst = max(worst, r)
            certs.append((x, h))
        except (CertificateNotFound, UsageError):
            missing += 1
    rep.conditions.append(_record("sigma-orbit", "sigma(x) = h x for some h in H",
                                  missing == 0 and worst <= ORBIT_TOL,
                                  worst if missing == 0 else None, samples, s, failures=missing))

    s = _child_seed(seed, "align")
    worst = 0.0
    try:
        for x, h in certs:
            worst = max(worst, block_alignment_residual(model, x, h))
        rep.conditions.append(_record("sigma-block-alignment", "sigma_x maps each isotypic block to L_h of it",
                                      worst <= RESIDUAL_TOL, worst, len(certs), s))
    except Exception as exc:
        rep.conditions.append(_record("sigma-block-alignment", "sigma_x maps each isotypic block to L_h of it",
                                      False, None, len(certs), s, note=str(exc)))

    hyp = all(c["pass"] for c in rep.conditions)
    rep.conclusion = conclusion_record(model, hyp)
    if diagnostics:
        rep.diagnostics = _diagnostics(model, samples, seed)
    return rep


def _slice_reach(model: SectionModel, x):
    """h in H and a slice point s with h^-1 x = s; returns the residual."""
    case = model.case
    if isinstance(model, LineModel):
        Z = model.homogeneous(x)
        if partition_of(case.H, case.n) is None:
            raise CertificateNotFound("trivial H does not reach the slice")
        t, s = projective_normalize(Z)
        y = model.act(t, x)
        return max(model.point_distance(y, model.sigma_point(y)), float(np.linalg.norm(np.imag(y))))
    h, b, k, r = hbk_decompose(x, case)
    y = model.act(h.conj().T, x)
    return max(r, model.point_distance(y, b))


def certify_second_form(model: SectionModel, samples: int = 100, seed=DEFAULT_SEED,
                        diagnostics: bool = False) -> CertReport:
    """Slice-based conditions: checks happen at slice points only."""
    rep = CertReport(model.case.id)
    case = model.case
    s = _child_seed(seed, "slice")
    rng = np.random.default_rng(s)
    spts = [model.sample_slice_point(rng) for _ in range(samples)]
    worst = max(model.point_distance(model.sigma_point(p), p) for p in spts)
    rep.conditions.append(_record("slice-fixed", "sigma is the identity on the slice",
                                  worst <= 1e-10, worst, samples, s))

    s = _child_seed(seed, "reach")
    rng = np.random.default_rng(s)
    worst, missing = 0.0, 0
    for _ in range(samples):
        try:
            worst = max(worst, _slice_reach(model, model.sample_point(rng)))
        except (CertificateNotFound, UnsupportedCase):
            missing += 1
    rep.conditions.append(_record("slice-reach", "H S is open: generic points move into the slice",
                                  missing == 0 and worst <= ORBIT_TOL, worst if missing == 0 else None,
                                  samples, s, failures=missing))

    s = _child_seed(seed, "compat")
    rng = np.random.default_rng(s)
    worst = 0.0
    for _ in range(samples):
        h = sample_subgroup(case.H, case.n, rng)
        y = model.sample_point(rng)
        lhs = model.act(np.conj(h), model.sigma_point(y))
        rhs = model.sigma_point(model.act(h, y))
        worst = max(worst, model.point_distance(lhs, rhs))
    rep.conditions.append(_record("compatibility", "conj(h) sigma(y) = sigma(h y)",
                                  worst <= 1e-10, worst, samples, s))

    s = _child_seed(seed, "fiber-slice")
    try:
        worst = _fiber_mf(model, spts, s)
        rep.conditions.append(_record("fiber-mf-slice", "isotropy on the fiber is multiplicity-free on the slice",
                                      worst == 0, worst, samples, s))
    except Exception as exc:
        rep.conditions.append(_record("fiber-mf-slice", "isotropy on the fiber is multiplicity-free on the slice",
                                      False, None, samples, s, note=str(exc)))

    s = _child_seed(seed, "block-fix")
    try:
        worst = max(block_alignment_residual(model, p) for p in spts)
        rep.conditions.append(_record("sigma-block-fixing", "sigma_x preserves each isotypic block on the slice",
                                      worst <= RESIDUAL_TOL, worst, samples, s))
    except Exception as exc:
        rep.conditions.append(_record("sigma-block-fixing", "sigma_x preserves each isotypic block on the slice",
                                      False, None, samples, s, note=str(exc)))

    hyp = all(c["pass"] for c in rep.conditions)
    rep.conclusion = conclusion_record(model, hyp)
    if diagnostics:
        rep.diagnostics = _diagnostics(model, samples, seed)
    return rep


# --- third form ---------------------------------------------------------------------------


def mu_restriction(case: CaseSpec, msub=None) -> dict:
    """Exact restriction of the fiber representation to M.

    Within each K block the coordinates used by the factors of M are
    permuted into consecutive runs (a Weyl conjugation), the block weight is
    branched to that Levi subgroup, and the runs belonging to one factor are
    tensored together. Keys are tuples of U(m)-weights, one per factor.
    """
    msub = msub or m_subgroup(case)
    per_block = []
    for j, mu_j in enumerate(case.mu):
        runs = []  # (factor index, run size)
        for fi, fac in enumerate(msub.factors):
            m = fac["size"]
            for jj, offs in fac["embeddings"]:
                if jj == j:
                    runs.extend([(fi, m)] * (len(offs) // m))
        if sum(r for _, r in runs) != len(mu_j):
            raise UnsupportedCase("M does not act on every coordinate of the block")
        per_block.append((runs, branch_levi(mu_j, [r for _, r in runs])))
    out: Counter = Counter()
    for combo in itertools.product(*[list(b.items()) for _, b in per_block]):
        mult = 1
        pieces: dict[int, list] = {i: [] for i in range(len(msub.factors))}
        for (runs, _), (key, m) in zip(per_block, combo):
            mult *= m
            for (fi, _), w in zip(runs, key):
                pieces[fi].append(w)
        partial = Counter({(): mult})
        for fi in range(len(msub.factors)):
            ws = pieces[fi]
            dec = {ws[0]: 1}
            for w in ws[1:]:
                nxt: Counter = Counter()
                for a, ma in dec.items():
                    for b, mb in lr_expand(a, w).terms.items():
                        nxt[b] += ma * mb
                dec = nxt
            partial = Counter({k + (tuple(w),): pm * dm for k, pm in partial.items() for w, dm in dec.items()})
        out.update(partial)
    return dict(out)


def _k_center(case: CaseSpec) -> list[np.ndarray]:
    n = case.n
    out = []
    s0 = 0
    for m in case.k_blocks:
        z = np.zeros((n, n), dtype=complex)
        z[s0:s0 + m, s0:s0 + m] = 1j * np.eye(m)
        out.append(z)
        s0 += m
    return out


def certify_third_form(case: CaseSpec, samples: int = 100, seed=DEFAULT_SEED,
                       hbk_samples: int = 1000, build_model: bool = True) -> CertReport:
    """Group-level conditions: HBK, mu restricted to M, and sigma-duality."""
    rep = CertReport(case.id)
    s = _child_seed(seed, "hbk")
    rng = np.random.default_rng(s)
    try:
        res = [hbk_decompose(haar_sample(case.n, rng), case)[3] for _ in range(hbk_samples)]
        bad = [i for i, r in enumerate(res) if not r <= HBK_TOL]
        rep.conditions.append(_record("hbk-open", "HBK contains an open subset of G", not bad,
                                      max(res), hbk_samples, s, failures=len(bad), failed_samples=bad[:20]))
    except UnsupportedCase as exc:
        rep.conditions.append(_record("hbk-open", "HBK contains an open subset of G", False, None, 0, s,
                                      note=str(exc)))

    s = _child_seed(seed, "m")
    msub = None
    try:
        msub = m_subgroup(case)
        dim, comm = m_numeric_dim(case, 50, s)
        rep.conditions.append(_record("m-centralizer", "M centralizes B inside H cap K",
                                      dim == msub.dim and comm <= 1e-10, comm, 50, s,
                                      structural_dim=msub.dim, numeric_dim=dim))
    except UnsupportedCase as exc:
        rep.conditions.append(_record("m-centralizer", "M centralizes B inside H cap K", False, None, 0, s,
                                      note=str(exc)))

    f = int(np.prod([weyl_dim(m) for m in case.mu]))
    restriction = None
    if f == 1:
        rep.conditions.append(_record("mu-restriction-mf", "mu restricted to M is multiplicity-free",
                                      True, 0.0, 0, seed, note="one-dimensional fiber"))
    elif msub is None:
        rep.conditions.append(_record("mu-restriction-mf", "mu restricted to M is multiplicity-free",
                                      False, None, 0, seed, note="M unavailable"))
    else:
        restriction = mu_restriction(case, msub)
        worst = max(restriction.values()) - 1
        rep.conditions.append(_record("mu-restriction-mf", "mu restricted to M is multiplicity-free",
                                      worst == 0, worst, 0, seed,
                                      restriction=_oracle_list(restriction)))

    s = _child_seed(seed, "mu-dual")
    if f == 1:
        r = max(float(np.linalg.norm(np.conj(z) + z)) for z in _k_center(case))
        rep.conditions.append(_record("mu-sigma-dual", "mu o sigma is the dual of mu", r <= 1e-12, r, 0, s,
                                      note="central character rule"))
    else:
        worst, ok = 0.0, True
        for mu_j in case.mu:
            p, r = sigma_dual_check(mu_j, samples, s)
            ok, worst = ok and p, max(worst, r)
        rep.conditions.append(_record("mu-sigma-dual", "mu o sigma is the dual of mu", ok, worst, samples, s))

    s = _child_seed(seed, "nu-dual")
    if msub is not None:
        if restriction is None:
            restriction = mu_restriction(case, msub)
        worst, ok = 0.0, True
        for key in restriction:
            for w in key:
                p, r = sigma_dual_check(w, samples, s)
                ok, worst = ok and p, max(worst, r)
        rep.conditions.append(_record("nu-sigma-dual", "each constituent of mu on M is sigma-dual", ok, worst,
                                      samples, s))
    else:
        rep.conditions.append(_record("nu-sigma-dual", "each constituent of mu on M is sigma-dual", False,
                                      None, 0, s, note="M unavailable"))

    hyp = all(c["pass"] for c in rep.conditions)
    model = None
    if build_model:
        try:
            model = build_vector_model(case, reweight=True)
        except (UnsupportedCase, UsageError) as exc:
            reason = f"model construction unsupported: {exc}"
    else:
        reason = "model construction skipped"
    if model is not None:
        rep.conclusion = conclusion_record(model, hyp)
    else:
        lam = case.highest_weight
        try:
            rep.conclusion = _oracle_only_conclusion(lam, case.H, case.n, hyp, reason)
        except ValueError as exc:
            rep.conclusion = {"commutant_dim": None, "defect": None, "oracle_mf": None,
                              "route": "none", "note": f"{reason}; oracle unavailable: {exc}",
                              "status": "implied" if hyp else "not-implied", "pass": False}
    return rep


# --- irreducibility ---------------------------------------------------------------------


def _base_dim(model: SectionModel) -> int:
    if isinstance(model, LineModel):
        return 2 * (model.n - 1)
    return model.n ** 2 - sum(m * m for m in model.case.k_blocks)


def certify_irreducibility(model: SectionModel, samples: int = 10, seed=DEFAULT_SEED) -> CertReport:
    """Transitive H with isotropy-irreducible fiber: the section space is irreducible."""
    rep = CertReport(model.case.id)
    rng = np.random.default_rng(seed)
    target = len(model.h_basis) - _base_dim(model)
    pts = [model.sample_point(rng) for _ in range(samples)]
    dims = [len(model.stabilizer(x)) for x in pts]
    transitive = all(d == target for d in dims)
    rep.conditions.append(_record("transitive", "H acts transitively on the base", transitive,
                                  float(max(abs(d - target) for d in dims)), samples, seed,
                                  stabilizer_dim=max(dims), expected=target))
    worst = 0
    for x in pts:
        _, _, blocks = isotropy_rep(model, x)
        worst = max(worst, len(blocks) - 1 + max(m for _, m in blocks) - 1)
    rep.conditions.append(_record("fiber-irreducible", "isotropy acts irreducibly on the fiber", worst == 0,
                                  float(worst), samples, seed))
    cb = commutant_basis(model.gens, model.d)
    hyp = all(c["pass"] for c in rep.conditions)
    rep.conclusion = {"commutant_dim": len(cb), "defect": float(commutativity_defect(cb)),
                      "oracle_mf": len(oracle_restriction(model.g_weight, model.H, model.n)) == 1,
                      "status": "implied" if hyp else "not-implied",
                      "pass": bool(len(cb) == 1 or not hyp)}
    return rep


# --- tensor-product scan ------------------------------------------------------------------


def _dominant(n: int, bound: int):
    for w in itertools.product(range(bound, -1, -1), repeat=n):
        if all(a >= b for a, b in zip(w, w[1:])):
            yield w


def _family(n: int, bound: int, family: str):
    if family == "one-row":
        return [(k,) + (0,) * (n - 1) for k in range(bound + 1)]
    if family == "one-column":
        return [(1,) * k + (0,) * (n - k) for k in range(n + 1)]
    if family == "all":
        return list(_dominant(n, bound))
    raise UsageError(f"unknown family {family!r}")


def mf_scan(n: int, bound: int, family: str = "all") -> dict:
    """mf status of pi_lam (x) pi_nu for every dominant lam in range and nu in the family."""
    if not 1 <= n <= 4:
        raise UsageError("scan supports 1 <= n <= 4")
    rows = []
    for lam in _dominant(n, bound):
        for nu in _family(n, bound, family):
            dec = lr_expand(lam, nu)
            mf = is_mf(dec)
            witness = None
            if not mf:
                w, m = max(dec.items(), key=lambda kv: (kv[1], kv[0]))
                witness = {"weight": list(w), "mult": m}
            rows.append({"lambda": list(lam), "nu": list(nu), "mf": mf, "witness": witness})
    assertions = {}
    for fam in ("one-row", "one-column"):
        members = {tuple(v) for v in _family(n, bound, fam)}
        sel = [r for r in rows if tuple(r["nu"]) in members]
        if sel:
            assertions[fam] = all(r["mf"] for r in sel)
    return {"n": n, "bound": bound, "family": family, "rows": rows, "assertions": assertions}


# --- model registry ------------------------------------------------------------------------

_LINE_RE = re.compile(r"^line-n(\d+)-N(\d+)-(torus|full|trivial|blocks1)$")


def _line_h(n: int, tag: str) -> dict:
    return {"torus": {"type": "torus"}, "full": {"type": "blocks", "sizes": [n]},
            "trivial": {"type": "trivial"}, "blocks1": {"type": "blocks", "sizes": [1, n - 1]}}[tag]


def resolve_model(case_id: str, reweight: bool = True, case_file: CaseSpec | None = None) -> SectionModel:
    """Build the model named by an id.

    ``line-n<n>-N<N>-<torus|full|trivial|blocks1>`` gives a line model; a
    catalog id gives the vector model of that case; the suffix
    ``-naive-sigma`` gives the twisted-gauge vector model whose fiber lift
    ignores the twist.
    """
    if case_file is not None:
        return build_vector_model(case_file, reweight=reweight)
    m = _LINE_RE.match(case_id)
    if m:
        n, N, tag = int(m.group(1)), int(m.group(2)), m.group(3)
        return build_line_model(n, N, _line_h(n, tag), reweight=reweight, frame="unitary")
    if case_id.endswith("-naive-sigma"):
        case = get_case(case_id[: -len("-naive-sigma")])
        return build_vector_model(case, reweight=reweight, twisted=True, naive_sigma=True)
    return build_vector_model(get_case(case_id), reweight=reweight)


def model_catalog() -> list[str]:
    """Ids of the models used by the conclusion-equivalence sweep."""
    ids = [f"line-n2-N{N}-{t}" for N in range(0, 7) for t in ("torus", "trivial")]
    ids += ["line-n2-N2-full", "line-n3-N2-torus", "line-n3-N2-blocks1", "line-n3-N2-trivial",
            "line-n3-N3-torus", "line-n4-N2-blocks1"]
    ids += sorted(load_catalog())
    return ids
