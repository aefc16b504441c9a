import csv
import io
import json

import pytest

from baitmenu.cli import main, run


@pytest.fixture
def files(tmp_path, f_example, staircase_menu):
    dist = tmp_path / "dist.json"
    mech = tmp_path / "mech.json"
    dist.write_text(json.dumps(f_example.to_dict()))
    mech.write_text(json.dumps(staircase_menu.to_dict()))
    return tmp_path, mech, dist


def test_example():
    code, out = run(["example"])
    assert code == 0
    assert "22.8356" in out and "38.3133" in out


def test_eval_json(files):
    _, mech, dist = files
    code, out = run(["eval", str(mech), str(dist)])
    assert code == 0
    assert json.loads(out)["expected_revenue"] == pytest.approx(38.3133, abs=5e-4)


def test_eval_csv(files):
    _, mech, dist = files
    code, out = run(["eval", str(mech), str(dist), "--format", "csv"])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["expected_revenue"]) == pytest.approx(38.3133, abs=5e-4)


def test_eval_zero_price(tmp_path, files):
    _, _, dist = files
    mech = tmp_path / "zero.json"
    mech.write_text(json.dumps({"k": 1, "delta": 1, "supply": "inf", "pages": [[0]]}))
    code, out = run(["eval", str(mech), str(dist)])
    assert code == 0
    assert json.loads(out)["expected_revenue"] == 0.0


def test_mc_deterministic(files):
    _, mech, dist = files
    argv = ["mc", str(mech), str(dist), "--samples", "20000", "--seed", "9"]
    first, second = run(argv), run(argv)
    assert first == second
    assert first[0] == 0 and "±" in first[1]


def test_mc_seed_from_env(files, monkeypatch):
    _, mech, dist = files
    base = ["mc", str(mech), str(dist), "--samples", "5000"]
    monkeypatch.setenv("BAITMENU_SEED", "9")
    from_env = run(base)[1]
    assert from_env == run(base + ["--seed", "9"])[1]
    assert "seed=9" in from_env
    monkeypatch.setenv("BAITMENU_SEED", "x")
    assert run(base)[0] == 1


def test_synthesize_writes_outputs(files):
    tmp, _, dist = files
    out_dir = tmp / "out"
    code, out = run(["synthesize", str(dist), "--k", "2", "--delta", "1", "--grid-step", "1",
                     "--margin", "0.1", "--out", str(out_dir)])
    assert code == 0
    assert json.loads(out)["revenue"] >= 38.3133 - 1e-4
    mech = json.loads((out_dir / "mechanism.json").read_text())
    assert {"k", "delta", "supply", "pages", "labels"} <= set(mech)
    with (out_dir / "candidates.csv").open() as fh:
        reader = csv.DictReader(fh)
        assert reader.fieldnames == ["mechanism_id", "pages", "revenue", "sale_prob",
                                     "expensive_sale_prob"]
        rows = list(reader)
    revs = [float(r["revenue"]) for r in rows]
    assert revs == sorted(revs, reverse=True)


def test_oracles(files):
    _, _, dist = files
    code, out = run(["oracles", str(dist), "--n", "3"])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 3
    assert float(rows[1]["uprice"]) == pytest.approx(19.0)
    assert all(r["greedy_eq_spm"] == "True" for r in rows)


def test_verify_quick():
    code, out = run(["verify", "--quick", "--seed", "2"])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert all(r["passed"] == "yes" for r in rows)


def test_verify_violation_exit_code(monkeypatch):
    from baitmenu import cli
    from baitmenu.verification import ClaimResult

    bad = ClaimResult("fake", instances=1, violations=1, worst_slack=-1.0)
    monkeypatch.setattr(cli, "run_claim_suite", lambda cfg: [bad])
    assert run(["verify"])[0] == 2


def test_missing_file(files, capsys):
    tmp, mech, _ = files
    code = main(["eval", str(mech), str(tmp / "nope.json")], out=io.StringIO())
    assert code == 1
    assert "nope.json" in capsys.readouterr().err


def test_malformed_mechanism(files, capsys):
    tmp, _, dist = files
    bad = tmp / "bad.json"
    bad.write_text(json.dumps({"k": 2, "pages": [[1]]}))
    assert main(["eval", str(bad), str(dist)], out=io.StringIO()) == 1
    err = capsys.readouterr().err
    assert "bad.json" in err and "delta" in err


def test_invalid_mechanism(files, capsys):
    tmp, _, dist = files
    bad = tmp / "over.json"
    bad.write_text(json.dumps({"k": 1, "delta": 1, "pages": [[1, 2]]}))
    assert main(["eval", str(bad), str(dist)], out=io.StringIO()) == 1
    assert "capacity" in capsys.readouterr().err


def test_bad_arguments(capsys):
    assert main(["synthesize"], out=io.StringIO()) == 1
    assert main(["bogus"], out=io.StringIO()) == 1
