import json
import subprocess
import sys

import pytest

from cylcover import UsageError
from cylcover.cli import execute, main, parse_config


def test_parse_cover_example():
    cfg = parse_config("cover --d 2 --box 0,0,1,1 --rho 0.2 --reps 100 --seed 7".split())
    assert (cfg.d, cfg.box, cfg.rho, cfg.reps, cfg.seed) == (2, [0, 0, 1, 1], 0.2, 100, 7)


def test_missing_d_named():
    with pytest.raises(UsageError, match="d"):
        parse_config("cover --box 0,0,1,1 --rho 0.2".split())


def test_flag_overrides_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"d": 2, "box": [0, 0, 1, 1], "rho": 0.2, "reps": 100}))
    cfg = parse_config(["cover", "--config", str(p), "--reps", "10"])
    assert cfg.reps == 10 and cfg.rho == 0.2


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"d": 2, "bogus": 1}))
    with pytest.raises(UsageError, match="bogus"):
        parse_config(["cover", "--config", str(p)])


def test_rho_and_schedule_conflict():
    with pytest.raises(UsageError, match="rho"):
        parse_config("tightness --d 2 --box 0,0,1,1 --dim-b 2 --n-list 8,16 --rho 0.1 --D 1".split())


def test_exit_codes(tmp_path, capsys):
    assert main(["cover", "--box", "0,0,1,1", "--rho", "0.2"]) == 1
    assert main(["net", "--d", "3", "--box", "0,0,0,1000,1000,1000", "--rho", "0.01"]) == 2
    assert main(["verify", "--d", "2", "--d", "3", "--out", str(tmp_path / "v")]) == 0
    doc = json.loads((tmp_path / "v.json").read_text())
    assert doc["result"]["summary"]["passed"]


def test_measure_pair_hit(capsys):
    assert main("measure --pair-hit --r 0.5 --d 3".split()) == 0
    doc = json.loads(capsys.readouterr().out)
    res = doc["result"]
    assert res["method"] == "quadrature" and res["abs_error"] <= 1e-8
    assert doc["version"] and doc["config"]["d"] == 3 and "net_rule" in doc


def test_cover_csv_deterministic(tmp_path):
    args = "cover --d 2 --box 0,0,1,1 --rho 0.2 --reps 20 --seed 7 --workers 1 --out".split()
    out = str(tmp_path / "run")
    assert main(args + [out]) == 0
    first = (tmp_path / "run.csv").read_bytes()
    assert main(args + [out]) == 0
    assert (tmp_path / "run.csv").read_bytes() == first
    lines = first.decode().splitlines()
    header = [ln for ln in lines if ln.startswith("##")]
    assert any(ln.startswith("## version=") for ln in header)
    assert any(ln.startswith("## net_rule=") for ln in header)
    rows = [ln for ln in lines if not ln.startswith("##")]
    assert rows[0] == "seed,rho,n_points,t_d,t_w,lines_used"
    assert len(rows) == 21
    for r in rows[1:]:
        seed, rho, n, td, tw, used = r.split(",")
        assert float(td) <= float(tw)


def test_gumbel_and_net_outputs(tmp_path):
    out = str(tmp_path / "g")
    assert main(f"gumbel --d 2 --rho 0.5 --n-list 2,3 --reps 5 --workers 1 --out {out}".split()) == 0
    rows = [ln for ln in (tmp_path / "g.csv").read_text().splitlines() if not ln.startswith("##")]
    assert rows[0] == "n,rep,centered_td,centered_tw" and len(rows) == 11
    out = str(tmp_path / "n")
    assert main(f"net --d 2 --box 0,0,1,1 --rho 0.5 --out {out}".split()) == 0
    text = (tmp_path / "n.csv").read_text()
    assert "# rho,K,d,count" in text


def test_points_file_roundtrip(tmp_path):
    out = str(tmp_path / "n")
    main(f"net --d 2 --box 0,0,1,1 --rho 0.25 --out {out}".split())
    code = main(["cover", "--d", "2", "--points-file", out + ".csv", "--rho", "0.25",
                 "--reps", "3", "--workers", "1", "--out", str(tmp_path / "c")])
    assert code == 0


def test_console_entry():
    r = subprocess.run([sys.executable, "-m", "cylcover.cli", "measure", "--constants", "--d", "3"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["result"]["C_d"] == pytest.approx(0.8660254, abs=1e-7)


def test_execute_verification_failure(monkeypatch):
    import cylcover.cli as cli

    class Fake:
        summary = {"passed": False, "failed": ["x"]}

        def to_dict(self):
            return {"summary": self.summary}

    monkeypatch.setattr(cli, "inequality_suite", lambda d_list: Fake())
    cfg = parse_config(["verify", "--d", "2"])
    assert execute(cfg, stdout=open("/dev/null", "w")) == 3
