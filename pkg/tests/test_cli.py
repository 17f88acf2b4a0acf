import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from editoutcome import synthetic
from editoutcome.cli import main
from editoutcome.dataset import write_observations
from editoutcome.models import FullParams, load_checkpoint

DATA = Path(__file__).parent / "data"


def run(*argv):
    return main([str(a) for a in argv])


def dataset_tsv(ds, path):
    write_observations(path, zip(ds.raw_users(), ds.raw_items(), ds.q, ds.ts))
    return path


@pytest.fixture(scope="module")
def synthetic_tsv(tmp_path_factory):
    _, ds = synthetic.bilinear_model(n_users=40, n_items=12, n_obs=4000, seed=2)
    return dataset_tsv(ds, tmp_path_factory.mktemp("syn") / "obs.tsv")


@pytest.fixture(scope="module")
def trained_full(synthetic_tsv, tmp_path_factory):
    ckpt = tmp_path_factory.mktemp("full") / "full.json"
    assert run("train", synthetic_tsv, "-o", ckpt, "--variant", "full", "--dim", 2,
               "--epochs", 5, "--deterministic", "--threads", 1) == 0
    return ckpt


class TestQuality:
    def test_fixture_matches_golden(self, tmp_path):
        out = tmp_path / "obs.tsv"
        assert run("quality", DATA / "revisions.jsonl", "-o", out) == 0
        assert out.read_text(encoding="utf-8") == (DATA / "revisions.golden.tsv").read_text(encoding="utf-8")

    def test_empty_input(self, tmp_path, capsys):
        src = tmp_path / "empty.jsonl"
        src.write_text("")
        out = tmp_path / "obs.tsv"
        assert run("quality", src, "-o", out) == 0
        assert out.read_text() == "user\titem\tq\tts\n"

    def test_cutoff_excluding_all_futures_warns(self, tmp_path, caplog):
        # every article's only future revision lies after the cutoff
        src = tmp_path / "rev.jsonl"
        src.write_text("".join(
            json.dumps({"article": a, "rev_id": f"{a}{k}", "user": f"x{k}", "ts": ts, "text": "ab"[:k + 1]}) + "\n"
            for a in ("P", "Q") for k, ts in enumerate([10, 20])))
        out = tmp_path / "obs.tsv"
        assert run("quality", src, "-o", out) == 0
        assert len(out.read_text().splitlines()) == 3
        assert run("quality", src, "-o", out, "--cutoff-ts", 15) == 0
        assert out.read_text() == "user\titem\tq\tts\n"
        assert any("no scorable edits" in r.getMessage() for r in caplog.records)

    def test_bad_line_exits_nonzero(self, tmp_path, capsys):
        src = tmp_path / "bad.jsonl"
        src.write_text('{"article": "a", "rev_id": "1", "user": "x", "ts": 1, "text": ""}\nnot json\n')
        assert run("quality", src, "-o", tmp_path / "o.tsv") == 1
        assert ":2:" in capsys.readouterr().err


class TestTrain:
    def test_basic_smoke(self, tmp_path):
        ckpt = tmp_path / "m.json"
        assert run("train", DATA / "observations.tsv", "-o", ckpt, "--epochs", 3,
                   "--split-fraction", 0.75) == 0
        pred = load_checkpoint(ckpt)
        assert pred.variant == "basic"
        assert 0.0 < pred.predict("alice", "Ankara") < 1.0
        manifest = json.loads((tmp_path / "m.json.split.json").read_text())
        assert manifest["train_rows"] == 3 and manifest["val_rows"] == 1

    def test_full_records_dimension(self, tmp_path, synthetic_tsv):
        ckpt = tmp_path / "m.json"
        assert run("train", synthetic_tsv, "-o", ckpt, "--variant", "full", "--dim", 20,
                   "--epochs", 1) == 0
        assert json.loads(ckpt.read_text())["dims"]["D"] == 20

    def test_dim_needs_full(self, tmp_path, capsys):
        assert run("train", DATA / "observations.tsv", "-o", tmp_path / "m.json", "--dim", 3) == 1
        assert "--dim" in capsys.readouterr().err

    def test_empty_train_side(self, tmp_path, capsys):
        assert run("train", DATA / "observations.tsv", "-o", tmp_path / "m.json",
                   "--split-fraction", 0.1) == 1

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"variant": "glad", "epochs": 2}))
        ckpt = tmp_path / "m.json"
        assert run("--config", cfg, "train", DATA / "observations.tsv", "-o", ckpt) == 0
        assert load_checkpoint(ckpt).variant == "glad"
        assert run("--config", cfg, "train", DATA / "observations.tsv", "-o", ckpt,
                   "--variant", "user-only") == 0
        assert load_checkpoint(ckpt).variant == "user-only"

    def test_deterministic_across_runs_and_threads(self, tmp_path, synthetic_tsv):
        outputs = []
        for k, threads in enumerate([1, 1, 4]):
            ckpt = tmp_path / f"m{k}.json"
            assert run("train", synthetic_tsv, "-o", ckpt, "--variant", "full", "--dim", 3,
                       "--epochs", 3, "--seed", 11, "--deterministic", "--threads", threads) == 0
            outputs.append(ckpt.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_log_file(self, tmp_path):
        log = tmp_path / "train.log"
        assert run("train", DATA / "observations.tsv", "-o", tmp_path / "m.json", "--epochs", 2,
                   "--split-fraction", 0.75, "--log-file", log) == 0
        assert log.read_text().splitlines()[0] == "epoch\ttrain_nll\twall_seconds"


class TestEvaluate:
    def test_report_and_curve(self, tmp_path, synthetic_tsv, trained_full):
        out = tmp_path / "report.json"
        assert run("evaluate", trained_full, synthetic_tsv, "-o", out) == 0
        report = json.loads(out.read_text())
        assert report["variant"] == "full" and report["n_validation"] == 400
        assert report["avg_log_likelihood"] < 0 and 0 < report["auprc"] <= 1
        assert {"cells", "users", "items"} <= set(report["cold_start"])
        assert (tmp_path / "report.pr.tsv").read_text().startswith("recall\tprecision\n")

    def test_missing_manifest_needs_fraction(self, tmp_path, synthetic_tsv, trained_full, capsys):
        lonely = tmp_path / "copy.json"
        shutil.copy(trained_full, lonely)
        assert run("evaluate", lonely, synthetic_tsv, "-o", tmp_path / "r.json") == 1
        assert "--split-fraction" in capsys.readouterr().err
        assert run("evaluate", lonely, synthetic_tsv, "-o", tmp_path / "r.json",
                   "--split-fraction", 0.9) == 0

    def test_average_auprc_is_positive_rate(self, tmp_path, synthetic_tsv):
        ckpt = tmp_path / "avg.json"
        assert run("train", synthetic_tsv, "-o", ckpt, "--variant", "average") == 0
        out = tmp_path / "r.json"
        assert run("evaluate", ckpt, synthetic_tsv, "-o", out, "--positive-class", "accepted") == 0
        report = json.loads(out.read_text())
        assert report["auprc"] == pytest.approx(report["positive_rate"], abs=1e-12)

    def test_well_separated(self, tmp_path):
        # half the users always succeed, the other half always fail
        rng = np.random.default_rng(0)
        rows = []
        for t in range(3000):
            u = int(rng.integers(40))
            rows.append((f"u{u}", f"i{rng.integers(10)}", float(u % 2), t))
        obs = tmp_path / "obs.tsv"
        write_observations(obs, rows)
        ckpt = tmp_path / "m.json"
        assert run("train", obs, "-o", ckpt, "--epochs", 10) == 0
        out = tmp_path / "r.json"
        assert run("evaluate", ckpt, obs, "-o", out) == 0
        assert json.loads(out.read_text())["auprc"] > 0.95

    def test_unknown_format_version(self, tmp_path, trained_full, synthetic_tsv, capsys):
        doc = json.loads(trained_full.read_text())
        doc["format_version"] = 99
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert run("evaluate", bad, synthetic_tsv, "-o", tmp_path / "r.json",
                   "--split-fraction", 0.9) == 1
        assert "format_version" in capsys.readouterr().err


class TestPredict:
    def test_single_pair(self, trained_full, capsys):
        assert run("predict", trained_full, "--user", "u1", "--item", "i1") == 0
        header, row = capsys.readouterr().out.splitlines()
        assert header == "user\titem\tp"
        assert 0 < float(row.split("\t")[2]) < 1

    def test_pairs_file(self, tmp_path, trained_full):
        pairs = tmp_path / "pairs.tsv"
        pairs.write_text("user\titem\nu1\ti1\nnobody\tnothing\n")
        out = tmp_path / "p.tsv"
        assert run("predict", trained_full, "--pairs", pairs, "-o", out) == 0
        lines = out.read_text().splitlines()
        pred = load_checkpoint(trained_full)
        assert float(lines[2].split("\t")[2]) == pytest.approx(pred.fallback, abs=1e-9)

    def test_needs_pairs(self, trained_full):
        assert run("predict", trained_full, "--user", "u1") == 1


class TestAnalyze:
    @pytest.mark.parametrize("report,files", [
        ("percentiles", ["percentiles.json", "percentiles.tsv"]),
        ("top-bottom", ["top_bottom.json", "top_bottom.tsv"]),
        ("pca", ["pca.json", "pca.tsv"]),
        ("correlation", ["correlation.json", "correlation.tsv"]),
        ("churn", ["churn.json", "churn.tsv"]),
    ])
    def test_reports(self, tmp_path, synthetic_tsv, trained_full, report, files):
        assert run("analyze", trained_full, synthetic_tsv, "--report", report,
                   "--out-dir", tmp_path) == 0
        for name in files:
            assert (tmp_path / name).stat().st_size > 0

    def test_percentiles_match_hand_ranks(self, tmp_path):
        ckpt = tmp_path / "m.json"
        assert run("train", DATA / "observations.tsv", "-o", ckpt, "--epochs", 5,
                   "--split-fraction", 0.75) == 0
        pred = load_checkpoint(ckpt)
        assert run("analyze", ckpt, DATA / "observations.tsv", "--report", "percentiles",
                   "--out-dir", tmp_path) == 0
        rows = json.loads((tmp_path / "percentiles.json").read_text())
        # two items: the harder one sits at 75, the easier at 25
        hard = pred.items[int(np.argmax(pred.params.d))]
        assert {r["item"]: r["percentile"] for r in rows}[hard] == 75.0
        assert sorted(r["percentile"] for r in rows) == [25.0, 75.0]

    def test_pca_on_basic_is_error(self, tmp_path, synthetic_tsv, capsys):
        ckpt = tmp_path / "basic.json"
        assert run("train", synthetic_tsv, "-o", ckpt, "--epochs", 1) == 0
        assert run("analyze", ckpt, synthetic_tsv, "--report", "pca", "--out-dir", tmp_path) == 1
        assert "PCA" in capsys.readouterr().err

    def test_pca_clusters_split(self, tmp_path):
        # two item groups with opposite embedding directions
        rng = np.random.default_rng(1)
        X = rng.normal(size=(60, 2)) * 2
        Y = np.r_[np.tile([[2.0, 0.0]], (6, 1)), np.tile([[-2.0, 0.0]], (6, 1))]
        Y = Y + rng.normal(scale=0.1, size=Y.shape)
        params = FullParams(0.0, np.zeros(60), np.zeros(12), X, Y)
        u, i = rng.integers(0, 60, 8000), rng.integers(0, 12, 8000)
        ds = synthetic.observations(params, u, i, rng)
        obs = dataset_tsv(ds, tmp_path / "obs.tsv")
        ckpt = tmp_path / "m.json"
        assert run("train", obs, "-o", ckpt, "--variant", "full", "--dim", 2, "--epochs", 30) == 0
        assert run("analyze", ckpt, obs, "--report", "pca", "--out-dir", tmp_path, "-k", 6,
                   "--components", 1) == 0
        axis = json.loads((tmp_path / "pca.json").read_text())["axes"][0]
        group = {f"i{k}": k < 6 for k in range(12)}
        assert len({group[it] for it in axis["lowest"]}) == 1
        assert len({group[it] for it in axis["highest"]}) == 1
        assert group[axis["lowest"][0]] != group[axis["highest"][0]]

    def test_churn_with_three_items_is_error(self, tmp_path, capsys):
        rows = [(f"u{k % 3}", f"i{k % 3}", 1.0, k) for k in range(30)]
        obs = tmp_path / "obs.tsv"
        write_observations(obs, rows)
        ckpt = tmp_path / "m.json"
        assert run("train", obs, "-o", ckpt, "--epochs", 1) == 0
        assert run("analyze", ckpt, obs, "--report", "churn", "--out-dir", tmp_path) == 1
        assert "4" in capsys.readouterr().err
