import json
from pathlib import Path

import numpy as np
import pytest

from sbprecode.channel import Fixture, GridSpec, fixture
from sbprecode.cli import main
from sbprecode.codebook import legacy_codebook, load_codebook, proposed_codebook
from sbprecode.config import Scheme, SimConfig, apply_pairs, load_config, parse_config, parse_pairs
from sbprecode.exceptions import ConfigError, ParameterError
from sbprecode.harness import (
    SweepResult,
    agreement,
    emit_csv,
    format_csv,
    gain_db,
    read_csv,
    run_sweep,
    sbs_study,
    snr_at_bler,
    tpmi_report,
    tpmi_statistics,
)
from sbprecode.linkabs import BlerPoint
from sbprecode.precoding import Mode, evaluate, partition, partition_stats

DATA = Path(__file__).parent / "data"

QUICK = SimConfig(
    grid=GridSpec(n_rbs=20),
    n_rx=4,
    n_tx=2,
    schemes=(Scheme.parse("WB:legacy"), Scheme.parse("SB:legacy"), Scheme.parse("SB:svd")),
    snr_start_db=4.0,
    snr_stop_db=12.0,
    snr_step_db=1.0,
    n_tbs=40,
    seed=3,
    sbs_list=(1, 5, 20),
)


def golden_result():
    return SweepResult({
        "WB-legacy": [BlerPoint(0.5, 1500, 1012), BlerPoint(-0.25, 1500, 1500), BlerPoint(1.0, 1500, 151)],
        "SB-proposed(3)": [BlerPoint(-0.25, 1500, 977), BlerPoint(0.5, 1500, 3), BlerPoint(1.0, 1500, 0)],
        "SB-svd": [BlerPoint(-10.0, 7, 1)],
    })


class TestConfig:
    def test_defaults(self):
        cfg = SimConfig()
        assert (cfg.grid.n_rbs, cfg.n_rx, cfg.n_tbs, cfg.sbs_rbs) == (270, 8, 1500, 1)
        assert cfg.snr_grid_db[:3] == (-10.0, -9.75, -9.5)
        assert cfg.snr_grid_db[-1] == 10.0

    def test_parse(self):
        cfg = parse_config("""
            # comment
            n_tx = 4
            schemes = WB:legacy, SB:proposed(3,3,3), SB:svd   # trailing
            grid.n_rbs = 30
            mcs.shannon_gap_db = 1.5
            sbs.list = 1, 3, 30
        """)
        assert cfg.n_tx == 4
        assert [s.name for s in cfg.schemes] == ["WB-legacy", "SB-proposed(3,3,3)", "SB-svd"]
        assert cfg.grid.n_rbs == 30 and cfg.mcs.shannon_gap_db == 1.5
        assert cfg.sbs_list == (1, 3, 30)

    def test_text_round_trip(self):
        cfg = QUICK.replace(schemes=(Scheme.parse("SB:proposed(1,2,3)"),), n_tx=4)
        assert parse_config(cfg.to_text()) == cfg

    @pytest.mark.parametrize("text,field", [
        ("bogus = 1", "bogus"),
        ("n_tx = 3", "n_tx"),
        ("n_tbs = 0", "n_tbs"),
        ("snr.step_db = 0", "snr.step_db"),
        ("n_tx = four", "n_tx"),
        ("schemes = SB:nonsense", "schemes"),
        ("schemes = legacy", "schemes"),
        ("sbs_rbs = 300", "sbs_rbs"),
        ("profile.rms_delay_spread_s = 1e-5", "profile"),
        ("n_tx = 2\nn_tx = 4", "n_tx"),
        ("grid.scs_hz = -1", "grid.scs_hz"),
    ])
    def test_errors_name_field(self, text, field):
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.field == field

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            parse_pairs("n_tx 4")

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")

    def test_apply_pairs(self):
        assert apply_pairs(QUICK, {"seed": "9"}).seed == 9

    def test_scheme_parse(self):
        s = Scheme.parse(" sb : Proposed(3) ")
        assert s.mode is Mode.SB and s.codebook == "proposed(3)"
        assert str(s) == "SB:proposed(3)"
        assert Scheme.parse("SB:svd").build(4) is None


class TestSweep:
    def test_shape_and_trials(self):
        r = run_sweep(QUICK)
        assert set(r.series) == {"WB-legacy", "SB-legacy", "SB-svd"}
        for pts in r.series.values():
            assert len(pts) == 9
            assert all(p.trials == 40 for p in pts)

    def test_deterministic(self):
        assert format_csv(run_sweep(QUICK)) == format_csv(run_sweep(QUICK))

    def test_seed_changes_output(self):
        a = run_sweep(QUICK.replace(n_tbs=80))
        b = run_sweep(QUICK.replace(n_tbs=80, seed=4))
        assert format_csv(a) != format_csv(b)

    def test_workers_identical(self):
        cfg = QUICK.replace(n_tbs=50)
        assert format_csv(run_sweep(cfg, workers=1)) == format_csv(run_sweep(cfg, workers=2))

    def test_single_tb(self):
        r = run_sweep(QUICK.replace(n_tbs=1, snr_start_db=0.0, snr_stop_db=0.0))
        for pts in r.series.values():
            assert len(pts) == 1 and pts[0].trials == 1 and pts[0].bler in (0.0, 1.0)

    def test_paired_ordering(self):
        # common random numbers: per-SNR error counts follow the per-trial SNR ordering
        r = run_sweep(QUICK.replace(n_tbs=120))
        wb, sb, svd = (np.array([p.errors for p in r.points(n)]) for n in ("WB-legacy", "SB-legacy", "SB-svd"))
        assert np.all(svd <= sb) and np.all(sb <= wb)
        mm = r.metadata["mean_metric"]
        assert mm["SB-svd"] == 1.0 and mm["SB-svd"] >= mm["SB-legacy"] >= mm["WB-legacy"]

    def test_metadata(self):
        meta = run_sweep(QUICK.replace(n_tbs=1)).metadata
        assert meta["backend"] in ("cython", "python")
        assert "snr = p_total/noise_var" in meta["snr_definition"]
        assert parse_config(meta["config"]) == QUICK.replace(n_tbs=1)


class TestSbsStudy:
    def test_full_band_equals_wideband(self):
        cfg = QUICK.replace(n_tbs=30)
        study = sbs_study(cfg, [1, 20])
        sweep = run_sweep(cfg)
        assert [p.errors for p in study.points("SB-legacy@sbs=20")] == [p.errors for p in sweep.points("WB-legacy")]
        assert [p.errors for p in study.points("SB-legacy@sbs=1")] == [p.errors for p in sweep.points("SB-legacy")]
        assert study.metadata["mean_metric"]["SB-legacy@sbs=20"] == pytest.approx(
            sweep.metadata["mean_metric"]["WB-legacy"], abs=1e-15
        )

    def test_metric_non_increasing(self):
        cfg = QUICK.replace(n_tbs=20, schemes=(Scheme.parse("SB:legacy"),))
        mm = sbs_study(cfg, [1, 5, 20]).metadata["mean_metric"]
        vals = [mm[f"SB-legacy@sbs={s}"] for s in (1, 5, 20)]
        assert vals[0] >= vals[1] >= vals[2]

    def test_needs_sb_scheme(self):
        with pytest.raises(ParameterError):
            sbs_study(QUICK.replace(schemes=(Scheme.parse("WB:legacy"),)), [1])

    def test_invalid_size(self):
        with pytest.raises(ParameterError):
            sbs_study(QUICK, [21])


class TestInterpolation:
    def test_log_linear(self):
        pts = [BlerPoint(0.0, 100, 50), BlerPoint(1.0, 100, 5)]
        # log10 BLER falls from log10(0.5) to log10(0.05); 0.1 sits at 0.69897 of the way
        assert snr_at_bler(pts) == pytest.approx(np.log10(0.5 / 0.1), abs=1e-12)

    def test_zero_floor(self):
        pts = [BlerPoint(0.0, 100, 20), BlerPoint(1.0, 100, 0)]
        expected = (np.log10(0.1) - np.log10(0.2)) / (np.log10(0.005) - np.log10(0.2))
        assert snr_at_bler(pts) == pytest.approx(expected, abs=1e-12)

    def test_no_crossing(self):
        assert snr_at_bler([BlerPoint(0.0, 10, 9), BlerPoint(1.0, 10, 5)]) is None

    def test_gain(self):
        r = SweepResult({
            "A": [BlerPoint(0.0, 100, 50), BlerPoint(1.0, 100, 5)],
            "B": [BlerPoint(1.0, 100, 50), BlerPoint(2.0, 100, 5)],
        })
        assert gain_db(r, "A", "B") == pytest.approx(1.0, abs=1e-12)


class TestCsv:
    def test_golden(self):
        assert format_csv(golden_result()) == (DATA / "golden_sweep.csv").read_text()

    def test_empty(self, tmp_path):
        emit_csv(SweepResult({}), tmp_path / "e.csv")
        assert (tmp_path / "e.csv").read_text() == "scheme,snr_db,trials,errors,bler\n"

    def test_round_trip(self, tmp_path):
        r = run_sweep(QUICK.replace(n_tbs=10))
        emit_csv(r, tmp_path / "r.csv")
        back = read_csv(tmp_path / "r.csv")
        assert back == {k: sorted(v, key=lambda p: p.snr_db) for k, v in r.series.items()}

    def test_golden_round_trip(self):
        back = read_csv(DATA / "golden_sweep.csv")
        assert back["WB-legacy"] == sorted(golden_result().series["WB-legacy"], key=lambda p: p.snr_db)

    def test_io_error_has_path(self, tmp_path):
        with pytest.raises(OSError, match="nodir"):
            emit_csv(SweepResult({}), tmp_path / "nodir" / "x.csv")


class TestTpmi:
    def test_signalling_bits(self):
        cfg = SimConfig(n_tx=4, schemes=(Scheme.parse("SB:legacy"),))
        rec = tpmi_statistics(cfg, realizations=1)["SB-legacy"]
        assert rec["per_realization"][0][1:3] == (270, 1080)
        assert rec["bits_per_subband"] == 4

    def test_flat_agreement(self):
        g = fixture(Fixture.FLAT, GridSpec(), 8, 4)
        ps = partition_stats(g, partition(GridSpec(), 1))
        tpmi, _ = evaluate(ps, ps, legacy_codebook(4))
        assert agreement(tpmi, 1) == 1.0

    def test_agreement_decays(self):
        cfg = SimConfig(n_tx=2, schemes=(Scheme.parse("SB:proposed(3)"),))
        lag = tpmi_statistics(cfg, realizations=4)["SB-proposed(3)"]["lag_agreement"]
        assert lag[1] > lag[20]

    def test_agreement_helper(self):
        assert agreement([0, 0, 1, 1], 1) == pytest.approx(2 / 3)
        assert np.isnan(agreement([0], 1))

    def test_report_text(self):
        cfg = QUICK.replace(schemes=(Scheme.parse("SB:proposed(3)"),))
        text = tpmi_report(cfg, realizations=2)
        assert text.startswith("# scheme SB-proposed(3) codebook_size=8 bits_per_subband=3")
        assert "\n1 20 3 60 " in text

    def test_needs_codebook_scheme(self):
        with pytest.raises(ParameterError):
            tpmi_statistics(QUICK.replace(schemes=(Scheme.parse("SB:svd"),)), 1)


class TestCli:
    @pytest.fixture
    def cfg_file(self, tmp_path):
        p = tmp_path / "sim.cfg"
        p.write_text(QUICK.replace(n_tbs=8).to_text())
        return p

    def test_run(self, cfg_file, tmp_path):
        out = tmp_path / "out.csv"
        assert main(["run", "--config", str(cfg_file), "--out", str(out)]) == 0
        assert out.read_text() == format_csv(run_sweep(QUICK.replace(n_tbs=8)))
        meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
        assert meta["workers"] == 1

    def test_run_stdout_and_seed(self, cfg_file, capsys):
        assert main(["run", "--config", str(cfg_file), "--seed", "11", "--set", "n_tbs=2"]) == 0
        assert capsys.readouterr().out == format_csv(run_sweep(QUICK.replace(n_tbs=2, seed=11)))

    def test_sbs(self, cfg_file, tmp_path):
        out = tmp_path / "sbs.csv"
        assert main(["sbs", "--config", str(cfg_file), "--sbs", "1,20", "--out", str(out)]) == 0
        names = {row.split(",")[0] for row in out.read_text().splitlines()[1:]}
        assert names == {"SB-legacy@sbs=1", "SB-legacy@sbs=20", "SB-svd@sbs=1", "SB-svd@sbs=20"}

    def test_tpmi(self, cfg_file, capsys):
        assert main(["tpmi", "--config", str(cfg_file), "--realizations", "1"]) == 0
        assert "bits_per_subband=2" in capsys.readouterr().out

    def test_export_codebook(self, tmp_path):
        out = tmp_path / "cb.txt"
        assert main(["export-codebook", "--n-tx", "4", "--codebook", "proposed(3,3,3)", "--out", str(out)]) == 0
        assert load_codebook(out).weights.tobytes() == proposed_codebook(4, [3, 3, 3]).weights.tobytes()

    @pytest.mark.parametrize("argv", [
        ["run", "--set", "bogus=1"],
        ["run", "--set", "n_tx=x"],
        ["run", "--config", "/nonexistent/sim.cfg"],
        ["run", "--workers", "0"],
        ["export-codebook", "--n-tx", "2", "--codebook", "type1(4,1)"],
    ])
    def test_config_errors_exit_2(self, argv, capsys):
        assert main(argv) == 2
        assert capsys.readouterr().err

    def test_runtime_error_exit_3(self, cfg_file, tmp_path):
        assert main(["run", "--config", str(cfg_file), "--out", str(tmp_path / "no" / "x.csv")]) == 3

    def test_sbs_without_sb_scheme_exit_3(self, tmp_path):
        assert main(["sbs", "--set", "schemes=WB:legacy", "--set", "n_tbs=1"]) == 3
