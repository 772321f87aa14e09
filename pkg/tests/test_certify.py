import json

import pytest

from mfcert import certify as cert
from mfcert.errors import UsageError
from mfcert.geometry import get_case


@pytest.fixture(scope="module")
def grass_vector():
    return cert.resolve_model("u3-grass-vector")


def labels(rep):
    return [c["label"] for c in rep.conditions]


def test_first_form_passes(grass_vector):
    rep = cert.certify_first_form(grass_vector, samples=20, seed=1)
    assert rep.verdict == "pass"
    assert labels(rep) == ["fiber-mf", "sigma-orbit", "sigma-block-alignment"]
    assert rep.conclusion["status"] == "implied" and rep.conclusion["oracle_mf"]
    assert all(d["pass"] for d in rep.diagnostics)


def test_second_form_passes(grass_vector):
    rep = cert.certify_second_form(grass_vector, samples=20, seed=1)
    assert rep.verdict == "pass"
    assert labels(rep) == ["slice-fixed", "slice-reach", "compatibility", "fiber-mf-slice", "sigma-block-fixing"]


def test_third_form_passes():
    rep = cert.certify_third_form(get_case("u4-grass-vector"), samples=20, seed=1, hbk_samples=100)
    assert rep.verdict == "pass"
    assert labels(rep) == ["hbk-open", "m-centralizer", "mu-restriction-mf", "mu-sigma-dual", "nu-sigma-dual"]
    assert rep.conclusion["route"] == "two-route"


def test_report_json_is_deterministic(grass_vector):
    a = cert.certify_first_form(grass_vector, samples=10, seed=3).to_json()
    b = cert.certify_first_form(cert.resolve_model("u3-grass-vector"), samples=10, seed=3).to_json()
    assert a == b
    d = json.loads(a)
    assert d["verdict"] == "pass" and d["case"] == "u3-grass-vector"
    for rec in d["conditions"]:
        assert {"label", "anchor", "pass", "residual", "samples", "seed"} <= set(rec)


def test_non_mf_control_conclusion_is_consistent():
    m = cert.resolve_model("u3-proj-torus-vector-control")
    rep = cert.certify_first_form(m, samples=10, seed=2, diagnostics=False)
    assert rep.failed() == ["fiber-mf"]
    c = rep.conclusion
    assert not c["oracle_mf"] and c["status"] == "not-implied" and c["pass"]
    assert c["commutant_dim"] == c["expected_commutant_dim"] > m.d ** 0


def test_mu_restriction_exposes_repeated_constituent():
    res = cert.mu_restriction(get_case("u4-grass-vector-control"))
    assert max(res.values()) == 2
    res = cert.mu_restriction(get_case("u4-grass-vector"))
    assert max(res.values()) == 1


def test_oracle_restriction():
    assert cert.oracle_restriction((0, -2), {"type": "trivial"}, 2) == {(): 3}
    terms = cert.oracle_restriction((0, -2), {"type": "torus"}, 2)
    assert sorted(terms.values()) == [1, 1, 1]


def test_irreducibility():
    rep = cert.certify_irreducibility(cert.resolve_model("line-n3-N2-full"), seed=1)
    assert rep.verdict == "pass" and rep.conclusion["commutant_dim"] == 1
    rep = cert.certify_irreducibility(cert.resolve_model("line-n3-N2-torus"), seed=1)
    assert rep.failed() == ["transitive"]


def test_mf_scan():
    res = cert.mf_scan(3, 2)
    assert res["assertions"] == {"one-row": True, "one-column": True}
    witness = [r for r in res["rows"] if not r["mf"]]
    assert any(r["lambda"] == [2, 1, 0] and r["nu"] == [2, 1, 0] for r in witness)
    with pytest.raises(UsageError):
        cert.mf_scan(3, 2, "two-row")


def test_resolve_model():
    assert cert.resolve_model("line-n2-N3-torus").d == 4
    assert cert.resolve_model("u3-grass-vector-naive-sigma").naive_sigma
    with pytest.raises(UsageError):
        cert.resolve_model("no-such-case")
    ids = cert.model_catalog()
    assert len(ids) >= 20 and len(set(ids)) == len(ids)
