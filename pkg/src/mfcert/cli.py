"""Command-line front end.

Exit codes: 0 every check passed, 1 a check failed, 2 usage or configuration
error. JSON output is deterministic for fixed arguments and seed.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import certify as cert
from .bundlemodel import (
    LineModel,
    diagonalization_residual,
    equivariance_residual,
    j_adjoint_residual,
    j_isometry_residual,
    j_matrix,
    kernel,
    kernel_uniqueness_residual,
    reproducing_residual,
)
from .charlr import branch_interlace, branch_levi, is_mf, kostka, lr_expand
from .errors import CertificateNotFound, UsageError
from .geometry import (
    CaseSpec,
    get_case,
    grassmann_distance,
    grassmann_normalize,
    hbk_decompose,
    load_catalog,
    projective_distance,
    projective_normalize,
    sigma_orbit_certificate,
)
from .linalg import commutant_basis, haar_sample
from .weights import as_weight, weyl_dim

FORMS = ("first", "second", "third", "irreducibility", "all")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.replace(" ", "").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty integer list")
    return vals


def _weight(text: str):
    vals = _int_list(text)
    try:
        return as_weight(vals)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfcert", description="Multiplicity-free certification engine for U(n).")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=cert.DEFAULT_SEED,
                        help=f"random seed (default {cert.DEFAULT_SEED})")
    common.add_argument("--out", help="write the report to this path instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("tensor", parents=[common], help="decompose a tensor product")
    s.add_argument("--n", type=int)
    s.add_argument("--lambda", dest="lam", type=_weight, required=True)
    s.add_argument("--nu", type=_weight, required=True)

    s = sub.add_parser("branch", parents=[common], help="restrict to a block subgroup")
    s.add_argument("--n", type=int)
    s.add_argument("--lambda", dest="lam", type=_weight, required=True)
    s.add_argument("--blocks", type=_int_list, help="block sizes; default: U(n-1) interlacing")

    s = sub.add_parser("kostka", parents=[common], help="weight multiplicity")
    s.add_argument("--n", type=int)
    s.add_argument("--lambda", dest="lam", type=_weight, required=True)
    s.add_argument("--nu", type=_int_list, required=True, help="torus weight")

    s = sub.add_parser("scan", parents=[common], help="scan tensor products for multiplicity-freeness")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--bound", type=int, default=3)
    s.add_argument("--family", choices=("all", "one-row", "one-column"), default="all")

    for name, helptext, default in (("hbk", "constructive H B K factorizations", 1000),
                                    ("slice", "slice normalizations and sigma-orbit certificates", 500),
                                    ("certify", "run a certification report", 100),
                                    ("kernel-check", "reproducing-kernel identities of a model", 100)):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--case", help="catalog or model id")
        s.add_argument("--case-file", help="CaseSpec JSON file")
        s.add_argument("--samples", type=int, default=default)
        if name == "certify":
            s.add_argument("--form", choices=FORMS, default="all")
    return p


def _check_n(args, *weights):
    if getattr(args, "n", None) is not None:
        for w in weights:
            if len(w) != args.n:
                raise UsageError(f"weight {tuple(w)} does not have length n={args.n}")


def _load_case(args) -> CaseSpec | None:
    if args.case_file:
        try:
            with open(args.case_file) as fh:
                return CaseSpec.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read case file: {exc}") from None
    return None


def _need_case(args) -> str:
    if not args.case and not args.case_file:
        raise UsageError("--case or --case-file is required")
    return args.case


# --- subcommands ---------------------------------------------------------------------


def cmd_tensor(args):
    _check_n(args, args.lam, args.nu)
    dec = lr_expand(args.lam, args.nu)
    out = {"lambda": list(args.lam), "nu": list(args.nu), "decomposition": dec.to_list(),
           "dim": dec.dim(), "checksum": weyl_dim(args.lam) * weyl_dim(args.nu), "mf": is_mf(dec)}
    return out, dec.dim() == out["checksum"]


def cmd_branch(args):
    _check_n(args, args.lam)
    if args.blocks:
        terms = branch_levi(args.lam, args.blocks)
        rows = [{"weights": [list(w) for w in k], "mult": m} for k, m in sorted(terms.items())]
        total = sum(m * int(np.prod([weyl_dim(w) for w in k])) for k, m in terms.items())
        mf = all(m == 1 for m in terms.values())
    else:
        dec = branch_interlace(args.lam)
        rows = [{"weights": [list(w)], "mult": m} for w, m in dec.items()]
        total, mf = dec.dim(), is_mf(dec)
    return ({"lambda": list(args.lam), "blocks": list(args.blocks or []), "terms": rows,
             "dim": total, "mf": mf}, total == weyl_dim(args.lam))


def cmd_kostka(args):
    _check_n(args, args.lam, args.nu)
    return {"lambda": list(args.lam), "beta": list(args.nu), "kostka": kostka(args.lam, args.nu)}, True


def cmd_scan(args):
    res = cert.mf_scan(args.n, args.bound, args.family)
    return res, all(res["assertions"].values())


def _case_for_geometry(args) -> CaseSpec:
    case = _load_case(args)
    if case is None:
        case = get_case(_need_case(args))
    return case


def cmd_hbk(args):
    case = _case_for_geometry(args)
    rng = np.random.default_rng(args.seed)
    res = [hbk_decompose(haar_sample(case.n, rng), case)[3] for _ in range(args.samples)]
    bad = [i for i, r in enumerate(res) if not r <= cert.HBK_TOL]
    return ({"case": case.id, "samples": args.samples, "seed": args.seed, "max_residual": max(res),
             "failures": len(bad), "failed_samples": bad[:20]}, not bad)


def cmd_slice(args):
    case = _case_for_geometry(args)
    rng = np.random.default_rng(args.seed)
    n = case.n
    proj = grass = orbit = 0.0
    missing = 0
    for _ in range(args.samples):
        g = haar_sample(n, rng)
        t, s = projective_normalize(g[:, 0])
        proj = max(proj, float(np.linalg.norm(np.imag(t @ g[:, 0]))), projective_distance(t @ g[:, 0], s))
        if n >= 2:
            p = max(1, n // 2)
            k = max(1, n // 2)
            h, frame = grassmann_normalize(g[:, :k], p)
            grass = max(grass, grassmann_distance(h @ g[:, :k], frame))
        try:
            orbit = max(orbit, sigma_orbit_certificate(g, case)[1])
        except CertificateNotFound:
            missing += 1
    ok = proj <= 1e-8 and grass <= 1e-8 and orbit <= 1e-8 and missing == 0
    return ({"case": case.id, "samples": args.samples, "seed": args.seed, "projective_residual": proj,
             "grassmann_residual": grass, "orbit_residual": orbit, "orbit_failures": missing}, ok)


def cmd_certify(args):
    case = _load_case(args)
    cid = case.id if case else _need_case(args)
    model = cert.resolve_model(cid, case_file=case)
    forms = ("first", "second", "third") if args.form == "all" else (args.form,)
    reports = []
    for form in forms:
        if form == "first":
            r = cert.certify_first_form(model, args.samples, args.seed)
        elif form == "second":
            r = cert.certify_second_form(model, args.samples, args.seed)
        elif form == "irreducibility":
            r = cert.certify_irreducibility(model, min(args.samples, 20), args.seed)
        else:
            if isinstance(model, LineModel) or cid.endswith("-naive-sigma"):
                if args.form == "all":
                    continue
                raise UsageError("the third form needs a catalog case")
            r = cert.certify_third_form(model.case, args.samples, args.seed)
        d = r.to_dict()
        d["form"] = form
        reports.append(d)
    ok = all(r["verdict"] == "pass" for r in reports)
    return {"case": cid, "seed": args.seed, "reports": reports, "verdict": "pass" if ok else "fail"}, ok


def cmd_kernel_check(args):
    case = _load_case(args)
    cid = case.id if case else _need_case(args)
    model = cert.resolve_model(cid, case_file=case)
    rng = np.random.default_rng(args.seed)
    checks = {}
    if isinstance(model, LineModel):
        chart = type(model)(model.n, model.N, model.H, frame="chart")
        worst = 0.0
        for _ in range(args.samples):
            z, w = chart.sample_point(rng), chart.sample_point(rng)
            worst = max(worst, abs(kernel(chart, z, w)[0, 0] - chart.kernel_closed_form(z, w)))
        checks["closed-form"] = worst
    checks["equivariance"] = equivariance_residual(model, args.samples, args.seed)
    worst = 0.0
    for _ in range(min(args.samples, 50)):
        off, _, _ = diagonalization_residual(model, model.sample_point(rng))
        worst = max(worst, off)
    checks["diagonal-blocks"] = worst
    checks["uniqueness"] = kernel_uniqueness_residual(model, min(args.samples, 50), args.seed)
    checks["reproducing"] = reproducing_residual(model, 10, args.seed)
    checks["j-isometry"] = max(j_isometry_residual(model, args.samples, args.seed), j_matrix(model)[1])
    checks["j-adjoint"] = j_adjoint_residual(model, commutant_basis(model.gens, model.d).basis)
    tol = {"closed-form": 1e-10, "uniqueness": 1e-10}
    checks = {k: float(v) for k, v in checks.items()}
    passed = {k: bool(v <= tol.get(k, 1e-9)) for k, v in checks.items()}
    return ({"case": cid, "seed": args.seed, "samples": args.samples, "residuals": checks, "pass": passed},
            all(passed.values()))


COMMANDS = {"tensor": cmd_tensor, "branch": cmd_branch, "kostka": cmd_kostka, "scan": cmd_scan,
            "hbk": cmd_hbk, "slice": cmd_slice, "certify": cmd_certify, "kernel-check": cmd_kernel_check}


def _render_text(command: str, data, ok: bool) -> str:
    lines = [f"{command}: {'PASS' if ok else 'FAIL'}"]
    if command == "tensor":
        for t in data["decomposition"]:
            lines.append(f"  {tuple(t['weight'])} x{t['mult']}")
    elif command == "certify":
        for r in data["reports"]:
            lines.append(f"  [{r['form']}] {r['case']}: {r['verdict']}")
            for c in r["conditions"]:
                lines.append(f"    {'ok  ' if c['pass'] else 'FAIL'} {c['label']} residual={c['residual']}")
            cc = r["conclusion"]
            lines.append(f"    conclusion: {'ok' if cc.get('pass') else 'FAIL'} ({cc.get('status')}),"
                         f" commutant_dim={cc.get('commutant_dim')} oracle_mf={cc.get('oracle_mf')}")
    elif command == "scan":
        bad = [r for r in data["rows"] if not r["mf"]]
        lines.append(f"  pairs={len(data['rows'])} non-mf={len(bad)} assertions={data['assertions']}")
    else:
        for k, v in data.items():
            if not isinstance(v, (list, dict)):
                lines.append(f"  {k}: {v}")
            elif isinstance(v, dict):
                for kk, vv in v.items():
                    lines.append(f"  {k}.{kk}: {vv}")
    return "\n".join(lines) + "\n"


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        data, ok = COMMANDS[args.command](args)
    except (UsageError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(data, indent=2) + "\n" if args.format == "json" else _render_text(args.command, data, ok)
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
