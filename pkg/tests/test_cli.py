"""CLI round trips, exit codes, file outputs."""

from __future__ import annotations

import pytest

from lfperf import csvio
from lfperf.cli import main


@pytest.fixture
def configs(tmp_path):
    workload = tmp_path / "workload.cfg"
    workload.write_text(
        "range = 64\ndist = uniform\nupdate_pct = 20\nthreads = 2\n")
    platform = tmp_path / "platform.cfg"
    platform.write_text("""
dcache.L1.lines = 256
dcache.L1.lat = 4
dcache.L2.lines = 2048
dcache.L2.lat = 16
tlb.L1.pages = 16
tlb.L1.lat = 1
mem_lat = 120
pagewalk_lat = 40
t_cas.1s = 60
t_cas.2s = 120
t_rec.low = 80
t_rec.high = 200
cores_per_socket = 4
t_app = 40
t_cmp = 3
""")
    return workload, platform


def test_predict_roundtrip(configs, tmp_path, capsys):
    workload, platform = configs
    out = tmp_path / "pred.csv"
    rates = tmp_path / "rates.csv"
    lat = tmp_path / "latency.csv"
    code = main(["predict", "--workload", str(workload), "--platform", str(platform),
                 "--structure", "ll", "--out", str(out),
                 "--dump-rates", str(rates), "--dump-latency", str(lat)])
    assert code == 0
    rows = csvio.read_scenarios(out)
    assert len(rows) == 1
    assert rows[0].predicted_ops_s > 0
    header = rates.read_text().splitlines()[0]
    assert header == "node_kind,key,height,presence,a_read,a_cas"
    assert lat.read_text().splitlines()[0].startswith("node_kind,key,height,b,c")


def test_predict_sweep_rows(configs, tmp_path):
    workload, platform = configs
    out = tmp_path / "grid.csv"
    code = main(["predict", "--workload", str(workload), "--platform", str(platform),
                 "--structure", "ht", "--lf", "2", "--sweep-threads", "1,2,4,8",
                 "--out", str(out)])
    assert code == 0
    assert len(csvio.read_scenarios(out)) == 4


def test_config_error_exit_code(configs, tmp_path, capsys):
    workload, platform = configs
    bad = tmp_path / "bad.cfg"
    bad.write_text("range = 64\ndist = uniform\nupdate_pct = 20\nthreads = 2\noops = 1\n")
    code = main(["predict", "--workload", str(bad), "--platform", str(platform),
                 "--structure", "ll"])
    assert code == 2
    err = capsys.readouterr().err
    assert "oops" in err and ":5" in err


def test_simulate_and_compare(configs, tmp_path, capsys):
    workload, platform = configs
    pred = tmp_path / "pred.csv"
    sim = tmp_path / "sim.csv"
    merged = tmp_path / "merged.csv"
    assert main(["predict", "--workload", str(workload), "--platform", str(platform),
                 "--structure", "sl", "--out", str(pred)]) == 0
    assert main(["simulate", "--workload", str(workload), "--platform", str(platform),
                 "--structure", "sl", "--ops", "8000", "--warmup", "2000",
                 "--out", str(sim)]) == 0
    assert main(["compare", str(pred), str(sim), "--out", str(merged)]) == 0
    rows = csvio.read_scenarios(merged)
    assert len(rows) == 1
    assert rows[0].predicted_ops_s is not None and rows[0].sim_ops_s is not None
    # prediction and oracle simulation of the same scenario stay close
    rel = abs(rows[0].predicted_ops_s - rows[0].sim_ops_s) / rows[0].sim_ops_s
    assert rel < 0.10
    out = capsys.readouterr().out
    assert "predicted vs simulated" in out


def test_simulate_deterministic_given_seed(configs, tmp_path):
    workload, platform = configs
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        assert main(["simulate", "--workload", str(workload), "--platform",
                     str(platform), "--structure", "ht", "--seed", "9",
                     "--ops", "2000", "--warmup", "200", "--out", str(out)]) == 0
    assert a.read_text() == b.read_text()


def test_bad_numeric_flag_is_config_error(configs):
    workload, platform = configs
    code = main(["predict", "--workload", str(workload), "--platform", str(platform),
                 "--structure", "ll", "--sweep-threads", "1,two,4"])
    assert code == 2


def test_compare_identical_files_zero_error(configs, tmp_path, capsys):
    workload, platform = configs
    pred = tmp_path / "pred.csv"
    main(["predict", "--workload", str(workload), "--platform", str(platform),
          "--structure", "ll", "--out", str(pred)])
    rows = csvio.read_scenarios(pred)
    rows[0].sim_ops_s = rows[0].predicted_ops_s
    csvio.write_scenarios(rows, pred)
    assert main(["compare", str(pred), str(pred), "--verbose"]) == 0
    out = capsys.readouterr().out
    assert "max=0.000%" in out


def test_compare_known_offset(configs, tmp_path, capsys):
    workload, platform = configs
    pred = tmp_path / "pred.csv"
    off = tmp_path / "off.csv"
    main(["predict", "--workload", str(workload), "--platform", str(platform),
          "--structure", "ll", "--out", str(pred)])
    rows = csvio.read_scenarios(pred)
    rows[0].sim_ops_s = rows[0].predicted_ops_s / 1.25  # +25% relative error
    csvio.write_scenarios(rows, off)
    assert main(["compare", str(off), "--verbose"]) == 0
    out = capsys.readouterr().out
    assert "max=25.000%" in out


def test_compare_schema_mismatch(configs, tmp_path):
    bad = tmp_path / "x.csv"
    bad.write_text("not,a,scenario\n1,2,3\n")
    assert main(["compare", str(bad)]) == 2


def test_poisson_check_sim(configs, tmp_path, capsys):
    workload, platform = configs
    out = tmp_path / "ks.csv"
    gaps = tmp_path / "gaps.csv"
    code = main(["poisson-check", "--source", "sim", "--workload", str(workload),
                 "--platform", str(platform), "--structure", "sl",
                 "--keys", "5,11", "--ops", "30000", "--warmup", "2000",
                 "--out", str(out), "--gaps", str(gaps)])
    assert code == 0
    text = out.read_text().splitlines()
    assert text[0] == csvio.POISSON_SCHEMA
    assert len(text) == 4  # header comment + columns + 2 keys
    parsed = csvio.read_gaps(gaps)
    assert set(parsed) == {5, 11}
    assert all(len(v) >= 1000 for v in parsed.values())


def test_bench_smoke(configs, tmp_path):
    workload, _ = configs
    out = tmp_path / "bench.csv"
    code = main(["bench", "--workload", str(workload), "--structure", "ht",
                 "--warmup-seconds", "0.05", "--measure-seconds", "0.2",
                 "--no-pin", "--out", str(out)])
    assert code == 0
    rows = csvio.read_scenarios(out)
    assert rows[0].measured_ops_s > 0
