from dataclasses import replace

import pytest

from dworktheta.certificate import Verdict, check, unknown
from dworktheta.errors import ContextError
from dworktheta.padic import _undigits
from dworktheta.suites import (
    EXIT_FAIL,
    EXIT_PASS,
    EXIT_UNKNOWN,
    PRODUCT_SAMPLES,
    REGISTRY,
    Report,
    Session,
    SuiteConfig,
    dump,
    run_suite,
    selected_suites,
)


@pytest.mark.parametrize(
    "cfg",
    [
        SuiteConfig(suite="nosuch"),
        SuiteConfig(suite="prop43", mode="generic-u"),
        SuiteConfig(suite="ptorsion", mode="generic-u"),
        SuiteConfig(p=13),
        SuiteConfig(window=0),
        SuiteConfig(jobs=0),
    ],
)
def test_invalid_configurations(cfg):
    with pytest.raises(ContextError):
        cfg.validate()


def test_invalid_spec_is_a_usage_error():
    with pytest.raises(ContextError):
        Session(SuiteConfig(specs=("I=0,1,2",)))


def test_generic_mode_skips_exact_only_suites():
    assert selected_suites(SuiteConfig(mode="generic-u")) == [
        "curve-identities",
        "bases-partitions",
        "lemma42",
        "dwork-bounds",
        "theta",
    ]
    assert selected_suites(SuiteConfig(suite="lemma42")) == ["lemma42"]


def test_report_exit_codes():
    cfg = SuiteConfig()
    passing = Report(cfg, {}, {"a": [check("x", True)]})
    assert passing.exit_code() == EXIT_PASS
    pending = Report(cfg, {}, {"a": [check("x", True), unknown("y", "psi", "shallow")]})
    assert pending.exit_code() == EXIT_UNKNOWN
    assert pending.exit_code(strict=True) == EXIT_FAIL
    failing = Report(cfg, {}, {"a": [unknown("y", "psi", "shallow")], "b": [check("z", False)]})
    assert failing.exit_code() == EXIT_FAIL
    assert failing.counts() == {"pass": 0, "fail": 1, "unknown": 1}


def test_curve_identities_pass():
    report = run_suite(SuiteConfig(suite="curve-identities", mode="generic-u", k=2, window=120))
    certs = report.suites["curve-identities"]
    assert [c.name for c in certs] == ["curve_residual", "u_leading", "local_parameter", "weierstrass_points"]
    assert all(c.verdict == Verdict.PASS for c in certs)
    assert report.exit_code() == EXIT_PASS


def test_lemma42_report_for_genus_three():
    report = run_suite(SuiteConfig(suite="lemma42", g=3, p=13, k=2))
    body = report.to_json()
    assert body["schema"] == 1
    split = body["suites"]["lemma42"][0]
    assert split["verdict"] == "pass"
    assert split["evidence"]["e0"] == 6
    assert body["summary"]["exit_code"] == EXIT_PASS


def test_dwork_bounds_pass():
    report = run_suite(SuiteConfig(suite="dwork-bounds", mode="generic-u", k=2, window=120))
    assert [c.verdict for c in report.suites["dwork-bounds"]] == [Verdict.PASS] * 3


def test_parallel_run_matches_sequential():
    cfg = SuiteConfig(suite="curve-identities", mode="generic-u", k=2, window=100)
    sequential = run_suite(cfg).to_json()
    parallel = run_suite(replace(cfg, jobs=3)).to_json()
    assert parallel["suites"] == sequential["suites"]


def test_dump_basis_of_A():
    body = dump(SuiteConfig(mode="generic-u", k=2, window=120), "basis:A")
    assert body["object"] == "basis:A"
    assert body["partition"] == [2, 1, 0]
    assert body["index"] == -1
    assert body["basis"][0]["coeffs"] == [[0, "1"]]


def test_dump_u_uses_base_p_digits():
    body = dump(SuiteConfig(mode="generic-u", k=2, window=40), "u")
    coeffs = dict((n, c) for n, c in body["series"]["coeffs"])
    assert coeffs[0] == "1"
    assert coeffs[-8] == "-1"
    assert body["series"]["window"] == [-39, 0]


def test_dump_gap_vectors():
    body = dump(SuiteConfig(mode="generic-u", k=2, window=120), "gap")
    gaps = {entry["n"]: entry["gap"] for entry in body["gaps"]}
    assert gaps[1] == ["1", "0"]
    assert gaps[3] == ["0", "1"]
    assert gaps[17] == ["28", "0"]


def test_dump_rejects_unknown_objects():
    with pytest.raises(ContextError):
        dump(SuiteConfig(), "basis:Z")


@pytest.mark.slow
def test_full_run_passes():
    report = run_suite(SuiteConfig(suite="all", k=6))
    assert report.exit_code() == EXIT_PASS


def test_report_echoes_the_resolved_point():
    report = run_suite(SuiteConfig(suite="curve-identities", mode="generic-u", k=2, window=120))
    [point] = report.to_json()["points"]
    assert point["spec"] == "Q=(1,sqrt2)"
    assert point["x"] == {"0,0": "1"}
    y = _undigits(point["y"]["0,0"], 17)
    assert y % 17 == 6
    assert y * y % 17 ** 2 == 2


def test_product_samples_are_distinct_pairs():
    session = Session(SuiteConfig(suite="bases-partitions", mode="generic-u", k=2, window=120))
    names = [name for name, _ in REGISTRY["bases-partitions"](session) if name.startswith("additivity:")]
    assert len(names) == len(set(names)) == PRODUCT_SAMPLES
