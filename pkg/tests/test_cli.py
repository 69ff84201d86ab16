import json

import pytest
from click.testing import CliRunner

from yoshidalift.cli import JobConfig, load_config, main


def run(*args):
    result = CliRunner().invoke(main, [str(a) for a in args])
    return result, (json.loads(result.stdout) if result.stdout.strip().startswith("{") else None)


def test_classset_cache_roundtrip(tmp_path):
    r1, d1 = run("classset", "--n-minus", 11, "--cache-dir", tmp_path)
    assert r1.exit_code == 0 and not d1["cached"]
    assert d1["class_number"] == 2 and d1["mass_ok"]
    r2, d2 = run("classset", "--n-minus", 11, "--cache-dir", tmp_path)
    assert d2["cached"]
    assert {k: v for k, v in d1.items() if k != "cached"} == {k: v for k, v in d2.items() if k != "cached"}
    entry = next(tmp_path.glob("classset-*.json"))
    entry.write_text("{ not json")
    r3, d3 = run("classset", "--n-minus", 11, "--cache-dir", tmp_path)
    assert r3.exit_code == 0 and not d3["cached"]
    assert "corrupt" in r3.stderr


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "job.json"
    path.write_text(json.dumps({"n_minus": 5, "weights": [4, 4], "K": -23}))
    cfg = load_config(str(path), {"C": 3})
    assert (cfg.n_minus, cfg.k, cfg.K, cfg.C) == (5, (1, 1), -23, 3)
    path.write_text(json.dumps({"colour": 1}))
    with pytest.raises(Exception, match="unknown config keys"):
        load_config(str(path), {})


@pytest.mark.parametrize("kwargs,msg", [
    ({"weights": (8, 10)}, "k1 >= k2"),
    ({"weights": (12, 8), "ell": 3}, "ell > 2 k1"),
    ({"weights": (4, 4), "ell": 7, "n_minus": 7}, "ell prime to 2N"),
    ({"n_minus": 6}, "N^-"),
])
def test_config_validation(kwargs, msg):
    with pytest.raises(Exception, match=msg.replace("^", r"\^")):
        JobConfig(**kwargs).validate()


def test_modl_rejects_small_ell():
    r, _ = run("modl", "--weights", 12, 8, "--ell", 3)
    assert r.exit_code == 2 and "ell > 2 k1" in r.stderr


def test_eigenforms_listing():
    r, d = run("eigenforms", "--n-minus", 11, "--weights", 2, 2)
    assert r.exit_code == 0
    forms = d["forms"]["0"]
    assert [f["atkin_lehner"]["11"] for f in forms] == [1, 1]
    assert [f["eisenstein"] for f in forms] == [True, False]


def test_lift_selection_and_cuspidality(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_minus": 11, "weights": [2, 2],
                               "form1": {"atkin_lehner": {"11": 1}}, "form2": {"index": 0}}))
    r, _ = run("lift", "--config", cfg, "--bound", 1)
    assert r.exit_code == 2 and "ambiguous" in r.stderr
    r, d = run("lift", "--n-minus", 11, "--weights", 2, 2, "--form1-index", 1, "--form2-index", 0,
               "--bound", 1, "--ell", 5)
    assert r.exit_code == 0
    assert d["cuspidality"]["asserted"] and d["cuspidality"]["ok"]
    assert d["integrality"]["ok"] and d["valuation_histogram"]
    r2, d2 = run("lift", "--n-minus", 11, "--weights", 2, 2, "--form1-index", 1, "--form2-index", 0,
                 "--bound", 2)
    small = {(c["a"], c["b"], c["c"]): c["coeff"] for c in d["table"]["coefficients"]}
    big = {(c["a"], c["b"], c["c"]): c["coeff"] for c in d2["table"]["coefficients"]}
    assert all(big[k] == v for k, v in small.items())


def test_bessel_zero_instance_exits_zero():
    r, d = run("bessel", "--weights", 10, 8, "--K", -11, "--C", 3, "--phi-index", 0)
    assert r.exit_code == 0
    assert d["equal"] and d["e_factor"] == 0 and d["fourier_side"] == 0


def test_bessel_insufficient_bound():
    r, d = run("bessel", "--weights", 2, 2, "--K", -11, "--C", 3, "--use-table", "--bound", 3)
    assert r.exit_code == 3 and d["required_bound"] == 25
    assert "need bound >= 25" in r.stderr


def test_bessel_hypothesis_failure_is_named():
    r, _ = run("bessel", "--weights", 2, 2, "--K", -7)
    assert r.exit_code == 2 and "Heeg" in r.stderr


def test_modl_zero_instance_warns():
    r, d = run("modl", "--weights", 10, 8, "--K", -11, "--ell", 37, "--bound", 1)
    assert r.exit_code == 0
    assert d["warnings"] and not d["witness"]["implied"]
    assert "no claim" in d["note"]


def test_verify():
    r, d = run("verify", "--n-minus", 5, "--weights", 4, 4, "--seed", 3)
    assert r.exit_code == 0 and d["ok"]
