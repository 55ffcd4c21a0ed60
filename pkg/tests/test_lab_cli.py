import csv
import io
import json
from pathlib import Path

import pytest

from dskg import cli, lab
from dskg.lab import RunRecord, ScanSpec

DATA = Path(__file__).parent / "data"


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def small_spec(**over):
    raw = {
        "schema": 1, "M": 0.5, "p": 2, "beta": 0, "d0": [-1.0, 0.0, 0.5], "d1": [0.0, 3.0],
        "amplitude": 1e-3, "t_max": 3.0, "dx": 0.05, "workers": 1,
    }
    raw.update(over)
    return raw


# identity


def test_identity_passes(capsys):
    code, out, _ = run(["identity", "--case", "i", "--mass", 0.25, "--b", 0.2, "--t", 2.2, "--tol", 1e-8], capsys)
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_identity_corollary_value(capsys):
    code, out, _ = run(["identity", "--case", "corollary_i", "--b", 0, "--t", 1], capsys)
    rec = json.loads(out)
    assert code == 0 and rec["closed_form"] == pytest.approx(1.0)


def test_identity_parity_mismatch(capsys):
    code, _, err = run(["identity", "--case", "ii", "--n", 4, "--b", 0.1, "--t", 1], capsys)
    assert code == 2 and "odd" in err


def test_identity_failure_exit_code(capsys):
    code, out, _ = run(["identity", "--case", "i", "--mass", 0.25, "--b", 0.2, "--t", 2.2, "--tol", 1e-30], capsys)
    assert code == 1 and json.loads(out)["pass"] is False


def test_kernel_command(capsys):
    code, out, _ = run(["kernel", "--mass", 0.5, "--b", 0.1, "--t", 1.0, "--r", 0.0, "--r", 0.2, "--moment"], capsys)
    rec = json.loads(out)
    assert code == 0 and len(rec["values"]) == 2
    assert rec["moment"]["residual"] <= 1e-8


# ode


def test_ode_remark_configuration(capsys, tmp_path):
    csv_path = tmp_path / "traj.csv"
    code, out, _ = run(["ode", "--mass", 0, "--gamma-kind", "pure_exp", "--rate", -1, "--F0", 1, "--Fdot0", 1,
                        "--t-max", 10, "--csv", csv_path], capsys)
    rec = json.loads(out)
    assert code == 0
    assert rec["classification"]["status"] == "alive"
    assert rec["classification"]["label"] == lab.ALIVE_LABEL
    assert rec["exponential_fit_rate"] == pytest.approx(1.0, rel=1e-6)
    assert csv_path.read_text().startswith("t,F,Fdot,stepsize")


def test_ode_large_energy_prints_bound(capsys):
    code, out, _ = run(["ode", "--F0", 9, "--Fdot0", 30, "--t-max", 5], capsys)
    rec = json.loads(out)
    assert code == 0
    assert rec["large_energy_certificate"]["holds"]
    assert rec["T_est"] <= rec["T_upper"]


def test_ode_rejects_subcritical_exponent(capsys):
    code, _, err = run(["ode", "--p", 2, "--beta", -0.6, "--F0", 1, "--Fdot0", 0], capsys)
    assert code == 2 and "beta > 1/p - 1" in err


# certify


def test_certify_small_energy(capsys):
    code, out, _ = run(["certify", "--lemma", "small_energy", "--mass", 0.5, "--d0", -0.5, "--d1", 3], capsys)
    assert code == 0 and json.loads(out)["holds"]


def test_certify_small_energy_massless_is_usage_error(capsys):
    code, _, err = run(["certify", "--lemma", "small_energy", "--mass", 0, "--d1", 3], capsys)
    assert code == 2 and "check_kato_power" in err


def test_certify_large_data(capsys):
    code, out, _ = run(["certify", "--lemma", "large_data", "--rate", -1, "--C0", 10, "--C1", 100], capsys)
    assert code == 0 and json.loads(out)["holds"]
    code, _, _ = run(["certify", "--lemma", "large_data", "--rate", -1, "--C0", 1e-3, "--C1", 1e-3], capsys)
    assert code == 1


def test_certify_kato(capsys):
    code, out, _ = run(["certify", "--lemma", "kato_power", "--gamma-kind", "kato_power", "--c", 2, "--kato-q", 2],
                       capsys)
    assert code == 0 and json.loads(out)["lemma"] == "kato_power"


# pde


def write_config(tmp_path, **sections):
    cfg = {"schema": 1, "physics": {"m": 0.3}, "grid": {"dx": 0.05, "t_max": 1.0}}
    cfg.update(sections)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return path


def test_pde_zero_data(capsys, tmp_path):
    out_dir = tmp_path / "out"
    code, out, _ = run(["pde", write_config(tmp_path), "--out-dir", out_dir], capsys)
    rec = json.loads(out)
    assert code == 0
    assert rec["classification"]["status"] == "alive"
    assert rec["classification"]["label"] == lab.ALIVE_LABEL
    assert (out_dir / "moments.csv").read_text().startswith("t,F,Fdot_est,Pp,R,max_abs_u")
    assert json.loads((out_dir / "manifest.json").read_text())["schema"] == 1


def test_pde_blowup_run(capsys, tmp_path):
    cfg = write_config(tmp_path, data={"C0": 20, "C1": 40}, gamma={"kind": "pure_exp", "gamma": -1.0})
    code, out, _ = run(["pde", cfg, "--t-max", 5], capsys)
    rec = json.loads(out)
    assert code == 0
    assert rec["classification"]["status"] == "blowup"
    assert rec["holder_check"] is True


def test_pde_picard_backend(capsys, tmp_path):
    cfg = write_config(tmp_path, data={"C0": 1, "C1": 1}, gamma={"kind": "power_exp", "c": 1, "d0": 0, "d1": 0})
    code, out, _ = run(["pde", cfg, "--backend", "picard"], capsys)
    assert code == 0 and json.loads(out)["backend"] == "picard"


def test_pde_cfl_violation(capsys, tmp_path):
    cfg = write_config(tmp_path, grid={"dx": 0.05, "dt": 0.04, "t_max": 1.0})
    code, _, err = run(["pde", cfg], capsys)
    assert code == 2 and "CFL" in err


def test_pde_unknown_key(capsys, tmp_path):
    code, _, err = run(["pde", write_config(tmp_path, solver={})], capsys)
    assert code == 2 and "solver" in err


# scan


def test_scan_spec_validation():
    with pytest.raises(lab.ConfigError, match="schema"):
        ScanSpec.from_dict({**small_spec(), "schema": 2})
    with pytest.raises(lab.ConfigError, match="unknown"):
        ScanSpec.from_dict({**small_spec(), "colour": 1})
    with pytest.raises(lab.ConfigError, match="exactly one"):
        ScanSpec.from_dict({**small_spec(), "m": 0.3})


def test_scan_mass_axis_converts():
    raw = small_spec()
    del raw["M"]
    raw["m"] = [0.3]
    assert ScanSpec.from_dict(raw).M[0] == pytest.approx(0.4)


def test_scan_duplicates_dropped_with_warning():
    with pytest.warns(UserWarning, match="duplicate d0"):
        spec = ScanSpec.from_dict(small_spec(d0=[0.0, 0.0, 1.0]))
    assert spec.d0 == (0.0, 1.0)


def test_invalid_point_is_skipped():
    spec = ScanSpec.from_dict(small_spec(M=[0.9], d0=[0.0], d1=[0.0]))
    (rec,) = lab.run_scan(spec)
    assert rec.status == "skipped" and "curved mass" in rec.detail


def test_smoke_sweep_3x3x3():
    spec = ScanSpec.from_dict(small_spec(d0=[-1.0, 0.0, 0.5], d1=[0.0, 1.0, 3.0], amplitude=[1e-3, 1e-2, 1.0],
                                         t_max=2.0, dx=0.1))
    records = lab.run_scan(spec)
    assert len(records) == 27
    assert all(r.status in ("blowup", "alive", "inconclusive") for r in records)
    keys = [(r.amplitude, r.d1, r.d0) for r in records]
    assert keys == sorted(keys)


def test_crash_isolation(monkeypatch):
    calls = {"n": 0}
    real = lab.solve_fd

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("solver exploded")
        return real(*args, **kwargs)

    monkeypatch.setattr(lab, "solve_fd", flaky)
    spec = ScanSpec.from_dict(small_spec(t_max=1.0, dx=0.1, d1=[0.0]))
    records = lab.run_scan(spec)
    assert [r.status for r in records].count("inconclusive") == 1
    bad = records[1]
    assert bad.status == "inconclusive" and "solver exploded" in bad.detail
    assert "RuntimeError" in bad.extra["traceback"]


def test_scan_output_is_byte_identical(capsys, tmp_path, monkeypatch):
    spec_path = tmp_path / "scan.json"
    spec_path.write_text(json.dumps(small_spec(workers=2, t_max=2.0, dx=0.1)))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["scan", str(spec_path), "--csv", str(a)]) in (0, 1)
    monkeypatch.setenv("DSKG_THREADS", "1")
    assert cli.main(["scan", str(spec_path), "--csv", str(b)]) in (0, 1)
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.reader(io.StringIO(a.read_text(), newline="")))
    assert tuple(rows[0]) == lab.CSV_FIELDS and len(rows) == 7


def test_scan_json_and_concordance(capsys, tmp_path):
    spec_path = tmp_path / "scan.json"
    spec_path.write_text(json.dumps(small_spec(t_max=6.0, dx=0.05, d0=[-1.0, 1.0], d1=[3.0])))
    out = tmp_path / "scan.json.out"
    code = cli.main(["scan", str(spec_path), "--json", str(out)])
    capsys.readouterr()
    payload = json.loads(out.read_text())
    records = [lab.record_from_dict(r) for r in payload["records"]]
    assert lab.concordance_violations(records) == []
    assert code == 0
    assert payload["summary"][0]["predicted_d0"] == pytest.approx(-0.5)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("DSKG_THREADS", "3")
    assert lab.worker_count(8) == 3
    monkeypatch.setenv("DSKG_THREADS", "many")
    with pytest.raises(lab.ConfigError):
        lab.worker_count()


def test_concordance_flags_alive_with_certificate():
    ok = RunRecord(0.5, 2, 0, 1, 0.0, 3.0, 1e-3, "blowup", certificate_holds=True)
    bad = RunRecord(0.5, 2, 0, 1, 0.0, 3.0, 1e-3, "alive", certificate_holds=True)
    fine = RunRecord(0.5, 2, 0, 1, -1.0, 3.0, 1e-3, "alive", certificate_holds=False)
    assert lab.concordance_violations([ok, bad, fine]) == [bad]


def test_boundary_summary_threshold():
    recs = [RunRecord(0.5, 2.0, 0.0, 1.0, d0, 3.0, 1e-3, s)
            for d0, s in [(-1.0, "alive"), (-0.75, "alive"), (-0.5, "blowup"), (-0.25, "blowup")]]
    (row,) = lab.boundary_summary(recs)
    assert row["empirical_d0"] == pytest.approx(-0.625)
    assert row["within_one_cell"] and row["monotone_in_d0"]


# plot data

GOLDEN_RECORDS = [
    RunRecord(0.5, 2.0, 0.0, 1.0, -0.5, 3.0, 1e-3, "blowup", T_est=12.5, T_err=0.01),
    RunRecord(0.5, 2.0, 0.0, 1.0, -1.0, 3.0, 1e-3, "alive"),
    RunRecord(0.5, 2.0, 0.0, 1.0, -1.0, 0.0, 1e-3, "inconclusive"),
    RunRecord(0.9, 2.0, 0.0, 1.0, -1.0, 0.0, 1e-3, "skipped"),
]


def test_plotdata_empty(tmp_path):
    path = lab.emit_plotdata([], tmp_path / "empty.csv")
    assert path.read_bytes() == b"M,p,beta,amplitude,d1,d0,code,T_est\r\n"


def test_plotdata_single_record(tmp_path):
    path = lab.emit_plotdata(GOLDEN_RECORDS[:1], tmp_path / "one.csv")
    assert path.read_text().splitlines()[1] == "0.5,2.0,0.0,0.001,3.0,-0.5,1,12.5"


def test_plotdata_golden(tmp_path):
    path = lab.emit_plotdata(GOLDEN_RECORDS, tmp_path / "plot.csv")
    assert path.read_bytes() == (DATA / "plot_golden.csv").read_bytes()


def test_plotdata_command_roundtrip(capsys, tmp_path):
    src = tmp_path / "records.json"
    src.write_text(lab.records_json(GOLDEN_RECORDS, []))
    out = tmp_path / "plot.csv"
    code, _, _ = run(["plotdata", src, "--out", out], capsys)
    assert code == 0
    assert out.read_bytes() == (DATA / "plot_golden.csv").read_bytes()
