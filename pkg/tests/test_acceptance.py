"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances and sample counts are pinned below. Derived quantities (character
values, reconstructions, membership and distances) are recomputed here from
first principles rather than read back from the library's own residuals.
"""
import itertools
import time

import numpy as np
import pytest

from mfcert import certify as cert
from mfcert.bundlemodel import (
    LineModel,
    diagonalization_residual,
    equivariance_residual,
    j_adjoint_residual,
    j_isometry_residual,
    j_matrix,
    kernel,
)
from mfcert.charlr import branch_levi, is_mf, lr_expand
from mfcert.geometry import (
    get_case,
    grassmann_normalize,
    hbk_decompose,
    load_catalog,
    partition_of,
    projective_normalize,
    sigma_orbit_certificate,
)
from mfcert.linalg import commutant_basis, commutativity_defect, haar_sample
from mfcert.weights import weight_multiset, weyl_dim

SEED = 20240917

LR_TOL, LR_POINTS, LR_MAX_ENTRY, LR_SECONDS = 1e-8, 200, 4, 60.0
PIERI_MAX_N, PIERI_MAX_ENTRY = 4, 5
KERNEL_TOL, KERNEL_PAIRS, KERNEL_NS = 1e-10, 50, range(0, 7)
EQUIV_TOL, EQUIV_SAMPLES = 1e-9, 100
DIAG_TOL, DIAG_POINTS = 1e-9, 50
J_TOL, J_SECTIONS = 1e-9, 100
DEFECT_TOL, MIN_MODELS = 1e-9, 20
HBK_TOL, HBK_SAMPLES, HBK_SECONDS = 1e-8, 1000, 30.0
SLICE_TOL, SLICE_SAMPLES = 1e-8, 500
RANK_TOL = 1e-8


def dominant(n, top, bottom=0):
    return [w for w in itertools.product(range(top, bottom - 1, -1), repeat=n)
            if all(a >= b for a, b in zip(w, w[1:]))]


def torus_points(n, count, seed):
    rng = np.random.default_rng(seed)
    return np.exp(1j * rng.uniform(0, 2 * np.pi, size=(count, n)))


def character_table(weights, pts):
    """chi_w at every point, as a sum of monomials over the weight multiset."""
    out = {}
    for w in weights:
        ms = weight_multiset(w)
        expo = np.array(list(ms.keys()), dtype=float)
        mult = np.array(list(ms.values()), dtype=float)
        logs = np.angle(pts)
        out[tuple(w)] = np.exp(1j * logs @ expo.T) @ mult
    return out


def test_criterion_01_lr_character_identity(report):
    t0 = time.perf_counter()
    n = 3
    pts = torus_points(n, LR_POINTS, SEED)
    lams = dominant(n, LR_MAX_ENTRY)
    chi = character_table(dominant(n, 2 * LR_MAX_ENTRY), pts)
    worst, bad_checksum, pairs = 0.0, 0, 0
    for lam, nu in itertools.product(lams, lams):
        dec = lr_expand(lam, nu)
        lhs = sum(m * chi[tuple(mu)] for mu, m in dec.items())
        worst = max(worst, float(np.max(np.abs(lhs - chi[lam] * chi[nu]))))
        bad_checksum += sum(m * weyl_dim(mu) for mu, m in dec.items()) != weyl_dim(lam) * weyl_dim(nu)
        pairs += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= LR_TOL and bad_checksum == 0 and elapsed < LR_SECONDS and pairs >= 300
    report(1, ok, f"{pairs} pairs x {LR_POINTS} points, max err {worst:.2e}, "
                  f"checksum failures {bad_checksum}, {elapsed:.1f}s")
    assert ok


def test_criterion_02_non_mf_witness(report):
    dec = lr_expand((2, 1, 0), (2, 1, 0))
    total = sum(m * weyl_dim(mu) for mu, m in dec.items())
    ok = dec[(3, 2, 1)] == 2 and total == 64 and not is_mf(dec)
    report(2, ok, f"mult at (3,2,1) = {dec[(3, 2, 1)]}, checksum {total}")
    assert ok


def test_criterion_03_pieri_family(report):
    checked, failures = 0, []
    for n in range(1, PIERI_MAX_N + 1):
        nus = {tuple([k] + [0] * (n - 1)) for k in range(PIERI_MAX_ENTRY + 1)}
        nus |= {tuple([1] * k + [0] * (n - k)) for k in range(n + 1)}
        for lam in dominant(n, PIERI_MAX_ENTRY):
            for nu in nus:
                checked += 1
                if not is_mf(lr_expand(lam, nu)):
                    failures.append((lam, nu))
    ok = not failures
    report(3, ok, f"{checked} one-row/one-column products, {len(failures)} non-mf")
    assert ok


def test_criterion_04_kernel_closed_form(report):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for N in KERNEL_NS:
        model = LineModel(2, N, {"type": "torus"}, frame="chart")
        for _ in range(KERNEL_PAIRS):
            z = rng.standard_normal(1) + 1j * rng.standard_normal(1)
            w = rng.standard_normal(1) + 1j * rng.standard_normal(1)
            exact = (1 + z[0] * np.conj(w[0])) ** N
            worst = max(worst, abs(kernel(model, z, w)[0, 0] - exact))
    ok = worst <= KERNEL_TOL
    report(4, ok, f"N=0..6, {KERNEL_PAIRS} pairs each, max err {worst:.2e}")
    assert ok


def test_criterion_05_kernel_equivariance(report):
    ids = cert.model_catalog()
    res = {cid: equivariance_residual(cert.resolve_model(cid), EQUIV_SAMPLES, SEED) for cid in ids}
    worst = max(res.values())
    ok = worst <= EQUIV_TOL
    report(5, ok, f"{len(ids)} models x {EQUIV_SAMPLES} samples, max residual {worst:.2e}")
    assert ok, {k: v for k, v in res.items() if v > EQUIV_TOL}


def test_criterion_06_diagonalization(report):
    ids = sorted(load_catalog())
    worst = {}
    for cid in ids:
        model = cert.resolve_model(cid)
        rng = np.random.default_rng(SEED)
        worst[cid] = max(diagonalization_residual(model, model.sample_point(rng))[0]
                         for _ in range(DIAG_POINTS))
    top = max(worst.values())
    ok = top <= DIAG_TOL
    report(6, ok, f"{len(ids)} vector models x {DIAG_POINTS} points, max off-block {top:.2e}")
    assert ok, worst


def test_criterion_07_j_isometry_and_adjoint(report):
    # the identities are consequences of the hypotheses, so they are tested on
    # every model whose first-form hypothesis records all hold
    ids = cert.model_catalog() + ["u3-grass-vector-naive-sigma"]
    used, skipped, worst_iso, worst_adj = [], [], 0.0, 0.0
    for cid in ids:
        model = cert.resolve_model(cid)
        rep = cert.certify_first_form(model, samples=20, seed=SEED, diagnostics=False)
        if any(not c["pass"] for c in rep.conditions):
            skipped.append(cid)
            continue
        used.append(cid)
        iso = max(j_isometry_residual(model, J_SECTIONS, SEED), j_matrix(model)[1])
        adj = j_adjoint_residual(model, commutant_basis(model.gens, model.d).basis)
        worst_iso, worst_adj = max(worst_iso, iso), max(worst_adj, adj)
    ok = worst_iso <= J_TOL and worst_adj <= J_TOL and len(used) >= MIN_MODELS
    report(7, ok, f"{len(used)} models with hypotheses (skipped {len(skipped)}), "
                  f"isometry {worst_iso:.2e}, adjoint {worst_adj:.2e}")
    assert ok


def oracle_multiplicities(model):
    sizes = partition_of(model.H, model.n)
    if sizes is None:
        return [weyl_dim(model.g_weight)]
    return list(branch_levi(model.g_weight, sizes).values())


def test_criterion_08_conclusion_equivalence(report):
    ids = cert.model_catalog()
    disagreements, dim_mismatch, n_mf = [], [], 0
    for cid in ids:
        model = cert.resolve_model(cid)
        cb = commutant_basis(model.gens, model.d, rtol=RANK_TOL)
        mults = oracle_multiplicities(model)
        oracle_mf = all(m == 1 for m in mults)
        n_mf += oracle_mf
        if (commutativity_defect(cb) <= DEFECT_TOL) != oracle_mf:
            disagreements.append(cid)
        if len(cb) != sum(m * m for m in mults):
            dim_mismatch.append(cid)
    ok = len(ids) >= MIN_MODELS and not disagreements and not dim_mismatch and 0 < n_mf < len(ids)
    report(8, ok, f"{len(ids)} models ({n_mf} mf, {len(ids) - n_mf} non-mf), "
                  f"{len(disagreements)} disagreements, {len(dim_mismatch)} dimension mismatches")
    assert ok, (disagreements, dim_mismatch)


def membership(m, desc, n):
    """Distance of m from the block subgroup described by desc."""
    sizes = partition_of(desc, n)
    if sizes is None:
        return float(np.linalg.norm(m - np.eye(n)))
    mask = np.zeros((n, n), bool)
    s = 0
    for k in sizes:
        mask[s:s + k, s:s + k] = True
        s += k
    return max(float(np.linalg.norm(m[~mask])), float(np.linalg.norm(m.conj().T @ m - np.eye(n))))


def test_criterion_09_hbk(report):
    rows, ok = [], True
    for cid, case in sorted(load_catalog().items()):
        rng = np.random.default_rng(SEED)
        t0 = time.perf_counter()
        fails = 0
        for _ in range(HBK_SAMPLES):
            g = haar_sample(case.n, rng)
            h, b, k, _ = hbk_decompose(g, case)
            res = max(float(np.linalg.norm(h @ b @ k - g)), membership(h, case.H, case.n),
                      membership(k, case.K, case.n), float(np.linalg.norm(b.T @ b - np.eye(case.n))),
                      float(np.linalg.norm(np.imag(b))))
            fails += not res <= HBK_TOL
        dt = time.perf_counter() - t0
        ok &= fails == 0 and dt < HBK_SECONDS
        rows.append(f"{cid}:{fails}/{dt:.1f}s")
    report(9, ok, f"{HBK_SAMPLES} samples per case, failures/time " + " ".join(rows))
    assert ok


def test_criterion_10_slices(report):
    rng = np.random.default_rng(SEED)
    proj = grass = 0.0
    for i in range(SLICE_SAMPLES):
        n = 2 + i % 3
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        t, _ = projective_normalize(z)
        w = t @ z
        off_torus = float(np.linalg.norm(t - np.diag(np.diag(t)))) + float(np.max(np.abs(np.abs(np.diag(t)) - 1)))
        proj = max(proj, float(np.linalg.norm(np.imag(w))) + off_torus)
        k = 1 + i % (n - 1)
        p = 1 + (i // 3) % (n - 1)
        W = haar_sample(n, rng)[:, :k]
        h, _ = grassmann_normalize(W, p)
        q, _ = np.linalg.qr(h @ W)
        P = q @ q.conj().T
        # a subspace is real iff its projector is
        grass = max(grass, float(np.linalg.norm(P - np.conj(P))), membership(h, {"type": "blocks", "sizes": [p, n - p]}, n))
    orbit, certified = 0.0, 0
    for cid in sorted(load_catalog()):
        case = get_case(cid)
        model = cert.resolve_model(cid, reweight=False)
        for _ in range(SLICE_SAMPLES // 10):
            g = model.sample_point(rng)
            h, _ = sigma_orbit_certificate(g, case)
            # h g K = conj(g) K  <=>  (h g)^H conj(g) lies in K
            orbit = max(orbit, membership((h @ g).conj().T @ np.conj(g), case.K, case.n),
                        membership(h, case.H, case.n))
            certified += 1
    ok = proj <= SLICE_TOL and grass <= SLICE_TOL and orbit <= SLICE_TOL
    report(10, ok, f"projective {proj:.2e}, grassmann {grass:.2e} ({SLICE_SAMPLES} each), "
                   f"orbit certificates {orbit:.2e} ({certified})")
    assert ok


def test_criterion_11_irreducibility(report):
    transitive = ["line-n2-N2-full", "line-n2-N4-full", "line-n3-N2-full", "line-n3-N3-full"]
    dims = {}
    for cid in transitive:
        model = cert.resolve_model(cid)
        rep = cert.certify_irreducibility(model, seed=SEED)
        assert rep.condition("transitive")["pass"], cid
        dims[cid] = len(commutant_basis(model.gens, model.d, rtol=RANK_TOL))
    non_transitive = cert.certify_irreducibility(cert.resolve_model("line-n2-N2-torus"), seed=SEED)
    ok = all(d == 1 for d in dims.values()) and not non_transitive.condition("transitive")["pass"]
    report(11, ok, "commutant dims " + ", ".join(f"{k}={v}" for k, v in dims.items()))
    assert ok


def test_criterion_12_controls(report):
    runs = [
        ("trivial H", "line-n2-N3-trivial", cert.certify_first_form, ["sigma-orbit"]),
        ("sigma without fiber conjugation", "u3-grass-vector-naive-sigma", cert.certify_second_form,
         ["sigma-block-fixing"]),
        ("repeated M-constituent", "u4-grass-vector-control", None, ["mu-restriction-mf"]),
    ]
    outcomes, ok = [], True
    for name, cid, fn, target in runs:
        if fn is None:
            rep = cert.certify_third_form(get_case(cid), samples=EQUIV_SAMPLES, seed=SEED)
        else:
            rep = fn(cert.resolve_model(cid), samples=EQUIV_SAMPLES, seed=SEED, diagnostics=False)
        failed = rep.failed()
        hit = failed == target and rep.verdict == "fail"
        ok &= hit
        outcomes.append(f"{name}: failed {failed}")
    report(12, ok, "; ".join(outcomes))
    assert ok
