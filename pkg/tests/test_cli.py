import csv
import io
import json

import numpy as np
import pytest

from umdnorms.cli import main
from umdnorms.haar import HaarExpansion
from umdnorms.signs import SignPattern

SMALL = ["--budget-restarts", "10", "--budget-iters", "300"]
# a 3x3 operator on which a one-step budget under-optimizes the free estimate
UNDERFIT = [-0.313923, 1.458021, 1.960258, 1.801635, 1.315104, 0.35738, -1.208319, -0.004454, 0.656475]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_identities_default(capsys):
    code, doc = run_json(capsys, "identities")
    assert code == 0 and doc["passed"]
    names = {s["suite"] for s in doc["suites"]}
    assert {"orthonormality", "composition_table", "main_property", "self_similarity", "factor_two_blockwise"} <= names
    assert all(s["max_residual"] < 1e-9 for s in doc["suites"])
    assert doc["provenance"]["seed"] == 0


def test_identities_smaller_suite(capsys):
    _, full = run_json(capsys, "identities")
    code, small = run_json(capsys, "identities", "--max-level", "3")
    assert code == 0
    assert sum(s["cases"] for s in small["suites"]) < sum(s["cases"] for s in full["suites"])


@pytest.mark.parametrize("flag", ["--tol-spec", "--tol-roundtrip", "--tol-theorem"])
def test_zero_tolerance_is_config_error(capsys, flag):
    assert run(capsys, "identities", flag, "0")[0] == 2


def test_usage_errors(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "estimate", "--depth", "0")[0] == 2
    assert run(capsys, "estimate", "--space", "lp:2")[0] == 2
    assert run(capsys, "estimate", "--space", "lp:2:2", "--target-space", "lp:2:3")[0] == 2
    assert run(capsys, "verify", "--operator", "/nonexistent.json")[0] == 2


def test_bad_seed_env(capsys, monkeypatch):
    monkeypatch.setenv("UMDNORMS_SEED", "abc")
    assert run(capsys, "identities", "--max-level", "2")[0] == 2


def test_seed_flag_wins_over_env(capsys, monkeypatch):
    monkeypatch.setenv("UMDNORMS_SEED", "5")
    assert run_json(capsys, "identities", "--max-level", "2")[1]["provenance"]["seed"] == 5
    assert run_json(capsys, "identities", "--max-level", "2", "--seed", "9")[1]["provenance"]["seed"] == 9


def test_spread_depth_one(capsys, tmp_path):
    x = HaarExpansion.from_mapping({(1, 1): [1.0, -2.0]})
    path = write_json(tmp_path / "in.json", {"expansion": x.to_dict(), "signs": [[1, 1, -1]]})
    code, doc = run_json(capsys, "spread", path)
    assert code == 0 and doc["passed"]
    assert doc["schedule"] == [] and doc["psi2_swaps"] == []


def test_spread_random_depth_three(capsys, tmp_path):
    rng = np.random.default_rng(0)
    x = HaarExpansion(rng.standard_normal((7, 2)), 3)
    eps = SignPattern.from_array(rng.choice([-1, 1], 7))
    path = write_json(tmp_path / "in.json", {"expansion": x.to_dict(), "signs": eps.to_list(), "space": "lp:inf:2"})
    code, doc = run_json(capsys, "spread", path)
    assert code == 0
    assert doc["certificate"]["max_residual"] < 1e-9
    assert max(r for _, _, r in doc["certificate"]["residuals"]) < 1e-9
    code, out, _ = run(capsys, "spread", path, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 63


@pytest.mark.parametrize("doc", [
    "not json",
    {"signs": [[1, 1, 1]]},
    {"expansion": {"dim": 1}, "signs": [[1, 1, 1]]},
])
def test_spread_malformed(capsys, tmp_path, doc):
    path = tmp_path / "in.json"
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    assert run(capsys, "spread", str(path))[0] == 2


def test_spread_nontotal_signs(capsys, tmp_path):
    x = HaarExpansion(np.ones((3, 1)), 2)
    path = write_json(tmp_path / "in.json", {"expansion": x.to_dict(), "signs": [[1, 1, 1]]})
    assert run(capsys, "spread", path)[0] == 2


def test_estimate_euclidean_identity(capsys):
    code, doc = run_json(capsys, "estimate", "--space", "lp:2:2", "--depth", "2")
    assert code == 0
    est = doc["results"][0]["estimates"]
    assert all(est[f]["value"] == 1.0 and est[f]["method"] == "exact-euclidean"
               for f in ("alternating", "level", "free"))


def test_estimate_diagonal_operator(capsys, tmp_path):
    op = write_json(tmp_path / "op.json", {"rows": 2, "cols": 2, "entries": [2, 0, 0, 1],
                                            "source": "lp:2:2", "target": "lp:2:2"})
    code, doc = run_json(capsys, "estimate", "--operator", op)
    assert code == 0
    assert all(e["value"] == 2.0 for e in doc["results"][0]["estimates"].values())


def test_estimate_operator_dimension_mismatch(capsys, tmp_path):
    op = write_json(tmp_path / "op.json", {"rows": 2, "cols": 2, "entries": [1, 0, 0, 1],
                                            "source": "lp:2:3", "target": "lp:2:2"})
    assert run(capsys, "estimate", "--operator", op)[0] == 2


def test_estimate_l1_chain(capsys):
    code, doc = run_json(capsys, "estimate", "--space", "lp:1:2", "--depth", "2", *SMALL)
    assert code == 0
    est = doc["results"][0]["estimates"]
    a, lv, f = (est[k]["value"] for k in ("alternating", "level", "free"))
    assert a <= lv <= f <= 3 * a + 5e-3
    assert {est[k]["method"] for k in est} == {"brute-force"}
    assert doc["provenance"]["budget"]["restarts"] == 10


def test_verify_euclidean_grid(capsys):
    code, doc = run_json(capsys, "verify", "--space", "lp:2:2", "--space", "lp:2:3", "--trials", "5")
    assert code == 0 and doc["passed"]
    assert len(doc["summary"]) == 2 * 2 * 3
    for row in doc["summary"]:
        assert not row["heuristic"] and row["status"] == "pass"
        slack = {"chain": "theorem_slack", "prop1": "aggregate_slack", "prop2": "slack"}[row["check"]]
        assert row[slack] >= 0


def test_verify_l1_linf_grid_to_depth_three(capsys):
    code, doc = run_json(capsys, "verify", "--space", "lp:1:2", "--space", "lp:inf:2",
                         "--depth", "1", "--depth", "2", "--depth", "3", "--trials", "5", *SMALL)
    assert code == 0
    assert {r["status"] for r in doc["summary"]} == {"pass"}
    assert doc["depths"] == [1, 2, 3]


def test_verify_tiny_budget_flags_instead_of_failing(capsys, tmp_path):
    op = write_json(tmp_path / "op.json", {"rows": 3, "cols": 3, "entries": UNDERFIT,
                                            "source": "lp:inf:3", "target": "lp:1:3"})
    code, doc = run_json(capsys, "verify", "--operator", op, "--depth", "2", "--trials", "10",
                         "--budget-restarts", "1", "--budget-iters", "1", "--pattern-cutoff", "1")
    statuses = {r["check"]: r["status"] for r in doc["summary"]}
    assert code == 0
    assert "heuristic-flag" in statuses.values()
    assert all(r["heuristic"] for r in doc["summary"])


def test_verify_output_is_reproducible(capsys, tmp_path):
    args = ["verify", "--space", "lp:1:2", "--depth", "1", "--trials", "3", *SMALL]
    first = run(capsys, *args)[1]
    assert run(capsys, *args)[1] == first
    out = tmp_path / "report.json"
    assert run(capsys, *args, "--out", str(out))[0] == 0
    assert out.read_text() == first
    csv_a = run(capsys, *args, "--format", "csv")[1]
    assert csv_a == run(capsys, *args, "--format", "csv")[1]
    rows = list(csv.DictReader(io.StringIO(csv_a)))
    assert [r["check"] for r in rows] == ["chain", "prop1", "prop2"]


def test_floats_have_twelve_significant_digits(capsys):
    _, out, _ = run(capsys, "verify", "--space", "lp:1:2", "--depth", "1", "--trials", "3", *SMALL)
    doc = json.loads(out)

    def floats(v):
        if isinstance(v, dict):
            for x in v.values():
                yield from floats(x)
        elif isinstance(v, list):
            for x in v:
                yield from floats(x)
        elif isinstance(v, float):
            yield v

    assert all(float(f"{v:.12g}") == v for v in floats(doc))


def test_unwritable_out_path(capsys, tmp_path):
    assert run(capsys, "identities", "--max-level", "2", "--out", str(tmp_path / "no" / "x.json"))[0] == 2
