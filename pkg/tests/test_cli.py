import json
import os

import pytest

from blab import cli
from blab.errors import ConfigError, SolverError
from blab.report import MergeError, emit_report, write_report


def run(args, capsys=None):
    code = cli.main(args)
    out = capsys.readouterr() if capsys else None
    return code, out


def manifest(path, cmd):
    with open(os.path.join(path, f"manifest_{cmd}.json")) as fh:
        return json.load(fh)


def test_exponents_boundary(tmp_path, capsys):
    code, out = run(["exponents", "--kappa", "7/12", "--eps", "0", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "12k-7+5e,0,7/12,7/12,true" in out.out
    m = manifest(tmp_path, "exponents")
    assert "12k-7+5e" in m["outputs"]["budget"]["boundary"]
    assert m["outputs"]["budget"]["thresholds"]["12k-7+5e"] == {"value": "7/12", "exact": True}


def test_empty_grid_writes_nothing(tmp_path, capsys):
    out = tmp_path / "o"
    code, res = run(["norms", "--kappa", "0.55", "--sweep", "1e3:1e6:0", "--out", str(out)], capsys)
    assert code == 2
    assert json.loads(res.err)["error"] == "ConfigError"
    assert not out.exists()


@pytest.mark.parametrize("args", [
    ["scatter", "--kappa", "0.7"],
    ["scatter", "--kappa", "0.6", "--eps", "0.1"],
    ["scatter", "--potential", "nope.csv"],
    ["scatter", "--N", "1e4", "--sweep", "1e3:1e4:2"],
    ["errbounds", "--terms", "EC,EX"],
    ["fock-verify", "--modes", "missing.json"],
    ["report"],
])
def test_config_errors_exit_2(tmp_path, args, capsys):
    code, res = run(args + ["--out", str(tmp_path / "o")], capsys)
    assert code == 2
    assert not (tmp_path / "o").exists()


def test_config_file_and_flag_precedence(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# scattering run\nkappa = 1/2\nv0 = 5\nout = %s\n" % (tmp_path / "a"))
    code, res = run(["scatter", "--config", str(conf), "--v0", "0.5"], capsys)
    assert code == 0
    echo = json.loads(res.out[: res.out.index("}\n}") + 3])["effective_config"]
    assert echo["kappa"] == "1/2" and echo["v0"] == 0.5
    assert manifest(tmp_path / "a", "scatter")["config"] == echo


def test_bad_config_file(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = blue\n")
    assert run(["scatter", "--config", str(conf)], capsys)[0] == 2


def test_resource_exit_code(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BLAB_MEMORY_BUDGET", "1000")
    assert run(["scatter", "--out", str(tmp_path)], capsys)[0] == 3


def test_solver_exit_code(tmp_path, monkeypatch, capsys):
    import blab.potential

    def boom(*a, **k):
        raise SolverError("no bracket")
    monkeypatch.setattr(blab.potential, "solve_neumann", boom)
    assert run(["scatter", "--out", str(tmp_path)], capsys)[0] == 4


def test_failed_check_exit_1(tmp_path, capsys):
    code, _ = run(["norms", "--sweep", "1e3:1e5:4", "--tolerance", "1e-9",
                   "--out", str(tmp_path)], capsys)
    assert code == 1
    m = manifest(tmp_path, "norms")
    assert not m["passed"] and m["failures"]


def test_scatter_outputs_carry_tails(tmp_path, capsys):
    assert run(["scatter", "--v0", "5", "--out", str(tmp_path)], capsys)[0] == 0
    pt = manifest(tmp_path, "scatter")["outputs"]["points"][0]
    assert set(pt["scattering_length"]) == {"value", "tail"}
    assert pt["parseval"]["max_norm2"]["exact"]


def test_reruns_are_byte_identical(tmp_path, capsys):
    for d in ("a", "b"):
        # the short sweep may fail a slope check; only the bytes matter here
        assert run(["norms", "--sweep", "1e3:1e5:4", "--threads", "2" if d == "b" else "1",
                    "--out", str(tmp_path / d)], capsys)[0] in (0, 1)
    for name in ("norms.csv", "norm_fits.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma, mb = manifest(tmp_path / "a", "norms"), manifest(tmp_path / "b", "norms")
    for m in (ma, mb):
        m.pop("header")
        m["config"].pop("out")
        m["config"].pop("threads")
    assert ma == mb


def test_kernels_and_energy_commands(tmp_path, capsys):
    assert run(["kernels", "--N", "1e3", "--out", str(tmp_path)], capsys)[0] == 0
    assert (tmp_path / "kernels.csv").read_text().startswith("N,shell,mult,tag")
    assert run(["energy", "--N", "1e3", "--conv-radius", "6", "--cross-check",
                "--out", str(tmp_path)], capsys)[0] == 0
    m = manifest(tmp_path, "energy")
    assert {c["name"].split("@")[0] for c in m["checks"]} == {"tails", "fft_vs_direct"}


def test_fock_verify_command(tmp_path, capsys):
    from blab.fock import single_pair_mode_set
    single_pair_mode_set().to_json(tmp_path / "m.json")
    code, _ = run(["fock-verify", "--modes", str(tmp_path / "m.json"), "--m-max", "2",
                   "--out", str(tmp_path)], capsys)
    assert code == 0
    assert (tmp_path / "fock_summary.csv").exists()


def _fake(cmd, kappa, passed=True, **cfg):
    return {"command": cmd, "config": dict({"kappa": kappa, "out": "x", "threads": 1}, **cfg),
            "outputs": {"fits": {"q": {"N": [1.0, 10.0], "values": [2.0, 3.0]}}},
            "checks": [], "failures": [] if passed else ["c"], "passed": passed}


def test_single_manifest_merge_is_identity():
    m = _fake("norms", "0.55")
    merged = emit_report([m])
    body = {k: m[k] for k in ("config", "outputs", "checks", "passed")}
    assert merged["groups"] == {"0.55": {"norms": body}}
    assert merged["passed"]


def test_merge_groups_by_kappa_and_conjoins(tmp_path):
    merged = emit_report([_fake("norms", "0.55"), _fake("norms", "0.5", passed=False)])
    assert set(merged["groups"]) == {"0.5", "0.55"}
    assert merged["groups"]["0.55"]["norms"]["passed"]
    assert not merged["passed"]
    paths = write_report(merged, tmp_path)
    dat = [p for p in paths if p.endswith(".dat")]
    assert len(dat) == 2
    assert open(dat[0]).read().splitlines()[1] == "1.0 2.0"


def test_merge_conflict_lists_fields():
    a, b = _fake("norms", "0.55", eps="0.01"), _fake("norms", "0.55", eps="0.02", threads=8)
    with pytest.raises(MergeError) as exc:
        emit_report([a, b])
    assert exc.value.fields == ["eps"]
    with pytest.raises(ConfigError):
        emit_report([])


def test_report_command(tmp_path, capsys):
    assert run(["exponents", "--kappa", "1/2", "--eps", "1/100", "--out", str(tmp_path / "e")],
               capsys)[0] == 0
    assert run(["report", str(tmp_path / "e"), "--out", str(tmp_path / "r")], capsys)[0] == 0
    rep = json.loads((tmp_path / "r" / "report.json").read_text())
    assert rep["passed"] and "exponents" in rep["groups"]["1/2"]
