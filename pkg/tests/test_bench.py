import numpy as np
import pytest

from outcentr.bench import (
    ConfigError,
    RunConfig,
    emit_report,
    load_run_config,
    rank_diff,
    run_experiment,
    time_phase,
    write_rank_diff_csv,
)
from outcentr.cli import main
from outcentr.ranking import attribute_rank, export_rank
from outcentr.synth import SynthSpec


SYNTH_CONFIG = """\
[data]
source = synth
n = 240
m = 20
contamination = 0.1
n_informative = 4
separation = 4.0

[run]
reducers = none, outcentr, pca, grp
detectors = iforest, lof
seeds = 0, 1
t_fraction = 0.10
split = 0.8
output = {out}

[iforest]
n_trees = 30

[lof]
k_neighbors = 10
"""


def write_config(tmp_path, text=None, **fmt):
    path = tmp_path / "run.ini"
    fmt.setdefault("out", str(tmp_path / "results"))
    path.write_text((text or SYNTH_CONFIG).format(**fmt))
    return path


def synth_run_config(tmp_path, **overrides):
    defaults = dict(
        source="synth",
        dataset_name="toy",
        synth=SynthSpec(n=240, m=20, contamination=0.1, n_informative=4),
        reducers=("none", "outcentr"),
        detectors=("iforest",),
        seeds=(0, 1),
        n_trees=30,
        output_dir=str(tmp_path / "results"),
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


class TestConfigParsing:
    def test_full_config(self, tmp_path):
        cfg = load_run_config(write_config(tmp_path))
        assert cfg.source == "synth"
        assert cfg.reducers == ("none", "outcentr", "pca", "grp")
        assert cfg.detectors == ("iforest", "lof")
        assert cfg.seeds == (0, 1)
        assert cfg.n_trees == 30 and cfg.k_neighbors == 10
        assert cfg.synth.n == 240
        assert cfg.dataset_name == "synth-n240-m20-c0.1"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="no such config"):
            load_run_config(tmp_path / "nope.ini")

    def test_unknown_key_rejected(self, tmp_path):
        bad = SYNTH_CONFIG + "\n[run]\n"  # duplicate section is a parse error
        with pytest.raises(ConfigError):
            load_run_config(write_config(tmp_path, text=bad))
        bad = SYNTH_CONFIG.replace("t_fraction", "t_fractoin")
        with pytest.raises(ConfigError, match="unknown keys"):
            load_run_config(write_config(tmp_path, text=bad))

    def test_unknown_section_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown section"):
            load_run_config(write_config(tmp_path, text=SYNTH_CONFIG + "\n[extra]\nx = 1\n"))

    def test_empty_detectors_is_config_error(self, tmp_path):
        bad = SYNTH_CONFIG.replace("detectors = iforest, lof", "detectors =")
        with pytest.raises(ConfigError, match="detector"):
            load_run_config(write_config(tmp_path, text=bad))

    def test_unknown_reducer(self, tmp_path):
        bad = SYNTH_CONFIG.replace("reducers = none, outcentr, pca, grp", "reducers = umap")
        with pytest.raises(ConfigError, match="unknown reducer"):
            load_run_config(write_config(tmp_path, text=bad))

    def test_csv_source_requires_label(self, tmp_path):
        text = "[data]\nsource = csv\ncsv = data.csv\n\n[run]\nreducers = none\ndetectors = iforest\nseeds = 0\n"
        path = tmp_path / "c.ini"
        path.write_text(text)
        with pytest.raises(ConfigError, match="label"):
            load_run_config(path)


class TestRunExperiment:
    def test_matrix_shape_and_fairness(self, tmp_path):
        cfg = synth_run_config(
            tmp_path,
            reducers=("none", "outcentr", "pca", "grp"),
            detectors=("iforest", "lof"),
            k_neighbors=10,
        )
        report = run_experiment(cfg)
        assert len(report.cells) == 4 * 2 * 2
        t = 2  # top_t(20, 0.10)
        for cell in report.cells:
            assert cell.fit_seconds > 0 and cell.predict_seconds > 0
            assert 0.0 <= cell.f1 <= 1.0 and 0.0 <= cell.auc <= 1.0
            expected_k = 20 if cell.reducer == "none" else t
            assert cell.k_used == expected_k

    def test_deterministic_metrics(self, tmp_path):
        cfg = synth_run_config(tmp_path)
        a = run_experiment(cfg)
        b = run_experiment(cfg)
        strip = lambda c: (c.dataset, c.reducer, c.detector, c.seed, c.k_used,
                           c.f1, c.precision, c.recall, c.auc)
        assert [strip(c) for c in a.cells] == [strip(c) for c in b.cells]

    def test_transductive_mode_runs(self, tmp_path):
        cfg = synth_run_config(tmp_path, detectors=("iforest", "lof"),
                               transductive=True, k_neighbors=5, seeds=(0,))
        report = run_experiment(cfg)
        assert len(report.cells) == 4

    def test_csv_source(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = ["f1,f2,f3,y"]
        for i in range(120):
            label = 1 if i < 12 else 0
            base = 3.0 if label else 0.0
            rows.append(
                f"{base + rng.normal():.6f},{rng.normal():.6f},{rng.normal():.6f},{label}"
            )
        csv_path = tmp_path / "data.csv"
        csv_path.write_text("\n".join(rows) + "\n")
        cfg = RunConfig(
            source="csv",
            dataset_name="data",
            csv_path=str(csv_path),
            label_column="y",
            reducers=("outcentr",),
            detectors=("iforest",),
            seeds=(0,),
            n_trees=20,
            output_dir=str(tmp_path / "res"),
        )
        report = run_experiment(cfg)
        assert len(report.cells) == 1
        assert report.cells[0].k_used == 1

    def test_wide_dataset_uses_the_ten_percent_cutoff(self, tmp_path):
        # 286 attributes at the default fraction select 28, for every reducer
        cfg = synth_run_config(
            tmp_path,
            synth=SynthSpec(n=120, m=286, contamination=0.1, n_informative=28),
            reducers=("outcentr", "grp"),
            seeds=(0,),
            n_trees=10,
        )
        report = run_experiment(cfg)
        assert all(cell.k_used == 28 for cell in report.cells)

    def test_cell_errors_carry_the_cell_id(self, tmp_path):
        from outcentr.bench import RunError

        # k_neighbors >= train size makes LOF unfittable
        cfg = synth_run_config(
            tmp_path,
            synth=SynthSpec(n=24, m=4, contamination=0.2),
            detectors=("lof",),
            k_neighbors=19,
            seeds=(5,),
        )
        with pytest.raises(RunError, match="seed=5.*detector=lof"):
            run_experiment(cfg)


class TestEmitReport:
    def test_row_counts_and_columns(self, tmp_path):
        cfg = synth_run_config(tmp_path, reducers=("none", "outcentr"),
                               detectors=("iforest",), seeds=(0, 1, 2))
        results, summary, timings = emit_report(run_experiment(cfg), tmp_path / "out")
        lines = results.read_text().splitlines()
        assert lines[0].startswith("dataset,reducer,detector,seed,k_used,f1")
        assert len(lines) == 1 + 2 * 3
        assert len(timings.read_text().splitlines()) == 1 + 6
        text = summary.read_text()
        assert "## toy" in text
        assert "| iforest (outcentr) |" in text
        assert "%" in text

    def test_empty_report_is_an_error(self, tmp_path):
        from outcentr.bench import ExperimentReport

        with pytest.raises(ValueError, match="empty report"):
            emit_report(ExperimentReport(cells=()), tmp_path / "out")
        assert not (tmp_path / "out" / "results.csv").exists()


class TestTimePhase:
    def test_noop_is_fast_and_positive(self):
        elapsed = time_phase(lambda: None)
        assert 0.0 < elapsed < 1e-3

    def test_measures_real_work(self):
        import time as time_mod

        elapsed = time_phase(lambda: time_mod.sleep(0.02))
        assert elapsed >= 0.02


class TestRankDiff:
    def export(self, tmp_path, name, scores, names, t=2):
        path = tmp_path / name
        export_rank(attribute_rank(scores, names, t=t), path)
        return path

    def test_identical_exports_have_zero_deltas(self, tmp_path):
        a = self.export(tmp_path, "a.csv", [0.9, 0.5, 0.1], ["x", "y", "z"])
        b = self.export(tmp_path, "b.csv", [0.9, 0.5, 0.1], ["x", "y", "z"])
        diff = rank_diff(a, b)
        assert all(e.rank_delta == 0 for e in diff.entries)

    def test_rank_movement_delta(self, tmp_path):
        names = ["severity", "b", "c", "d", "e"]
        a = self.export(tmp_path, "a.csv", [0.5, 0.9, 0.7, 0.2, 0.1], names, t=3)
        # severity drops from rank 3 to rank 5
        b = self.export(tmp_path, "b.csv", [0.05, 0.9, 0.7, 0.2, 0.1], names, t=3)
        diff = rank_diff(a, b)
        entry = next(e for e in diff.entries if e.attribute == "severity")
        assert entry.rank_a == 3 and entry.rank_b == 5
        assert entry.rank_delta == 2
        assert entry.selected_a and not entry.selected_b
        # sorted by movement, the mover comes first
        assert diff.entries[0].attribute == "severity"

    def test_one_sided_attribute_is_marked_absent(self, tmp_path):
        a = self.export(tmp_path, "a.csv", [0.9, 0.5], ["x", "y"], t=1)
        b = self.export(tmp_path, "b.csv", [0.9, 0.5, 0.4], ["x", "authentication", "y"], t=2)
        diff = rank_diff(a, b)
        newcomer = next(e for e in diff.entries if e.attribute == "authentication")
        assert newcomer.rank_a is None and newcomer.rank_b == 2
        assert newcomer.rank_delta is None
        assert newcomer.selected_b is True

    def test_csv_export(self, tmp_path):
        a = self.export(tmp_path, "a.csv", [0.9, 0.5], ["x", "y"])
        b = self.export(tmp_path, "b.csv", [0.5, 0.9], ["x", "y"])
        out = tmp_path / "diff.csv"
        write_rank_diff_csv(rank_diff(a, b), out)
        lines = out.read_text().splitlines()
        assert lines[0].startswith("attribute,rank_a,rank_b")
        assert len(lines) == 3

    def test_malformed_export(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,rank\n1,2,3\n")
        from outcentr.data import DataError

        with pytest.raises(DataError):
            rank_diff(bad, bad)


class TestCli:
    def test_run_subcommand(self, tmp_path, capsys):
        out_dir = tmp_path / "results"
        small = SYNTH_CONFIG.replace("seeds = 0, 1", "seeds = 0").replace(
            "reducers = none, outcentr, pca, grp", "reducers = outcentr"
        ).replace("detectors = iforest, lof", "detectors = iforest")
        code = main(["run", "--config", str(write_config(tmp_path, text=small, out=out_dir))])
        assert code == 0
        assert (out_dir / "results.csv").exists()
        assert (out_dir / "summary.md").exists()

    def test_run_save_model(self, tmp_path):
        out_dir = tmp_path / "results"
        models = tmp_path / "models"
        small = SYNTH_CONFIG.replace("seeds = 0, 1", "seeds = 3").replace(
            "reducers = none, outcentr, pca, grp", "reducers = outcentr, pca, grp"
        ).replace("detectors = iforest, lof", "detectors = iforest")
        config = write_config(tmp_path, text=small, out=out_dir)
        assert main(["run", "--config", str(config), "--save-model", str(models)]) == 0
        assert (models / "outcentr_seed3.csv").exists()
        assert (models / "pca_seed3.txt").exists()
        assert (models / "grp_seed3.txt").exists()

    def test_missing_config_is_exit_1(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.ini")]) == 1
        assert "config error" in capsys.readouterr().err

    def test_bad_usage_is_exit_1(self, capsys):
        assert main(["run"]) == 1
        assert main(["frobnicate"]) == 1

    def test_runtime_failure_is_exit_2(self, tmp_path, capsys):
        # config parses but the data file is unreadable at run time
        text = (
            "[data]\nsource = csv\ncsv = {missing}\nlabel = y\n\n"
            "[run]\nreducers = none\ndetectors = iforest\nseeds = 0\noutput = {out}\n"
        )
        path = tmp_path / "run.ini"
        path.write_text(
            text.format(missing=tmp_path / "missing.csv", out=tmp_path / "res")
        )
        assert main(["run", "--config", str(path)]) == 2

    def test_synth_subcommand(self, tmp_path):
        spec = tmp_path / "spec.ini"
        spec.write_text("[synth]\nn = 60\nm = 8\ncontamination = 0.1\nseed = 4\n")
        out = tmp_path / "generated"
        assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
        assert (out / "data.csv").exists()
        assert (out / "informative.txt").exists()

    def test_synth_bad_spec_is_exit_1(self, tmp_path):
        spec = tmp_path / "spec.ini"
        spec.write_text("[synth]\nn = 60\n")
        assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "g")]) == 1

    def test_rank_and_rank_diff_subcommands(self, tmp_path):
        spec = tmp_path / "spec.ini"
        out = tmp_path / "gen"
        spec.write_text("[synth]\nn = 200\nm = 10\ncontamination = 0.1\nseed = 1\n")
        assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
        rank_a = tmp_path / "rank_a.csv"
        rank_b = tmp_path / "rank_b.csv"
        base = ["rank", "--data", str(out / "data.csv"), "--label", "label"]
        assert main(base + ["--out", str(rank_a)]) == 0
        assert main(base + ["--out", str(rank_b), "--label-budget", "0.5", "--seed", "9"]) == 0
        scores_csv = tmp_path / "scores.csv"
        assert main(base + ["--out", str(rank_a), "--scores-out", str(scores_csv)]) == 0
        assert scores_csv.read_text().splitlines()[0] == (
            "attribute,score_vs_outlier_centroid,score_vs_inlier_centroid"
        )
        assert main(["rank-diff", str(rank_a), str(rank_b), "--out", str(tmp_path / "d.csv")]) == 0
        assert (tmp_path / "d.csv").exists()

    def test_reproducible_results_csv(self, tmp_path):
        small = SYNTH_CONFIG.replace("reducers = none, outcentr, pca, grp", "reducers = outcentr")
        config = write_config(tmp_path, text=small, out=tmp_path / "r1")
        assert main(["run", "--config", str(config)]) == 0
        assert main(["run", "--config", str(config), "--out", str(tmp_path / "r2")]) == 0

        def stable(path):
            lines = path.read_text().splitlines()
            return [",".join(line.split(",")[:9]) for line in lines]

        assert stable(tmp_path / "r1" / "results.csv") == stable(tmp_path / "r2" / "results.csv")
