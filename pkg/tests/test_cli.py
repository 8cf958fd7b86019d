"""End-to-end command-line pipeline checks on small inputs."""

import json

import numpy as np
import pytest

from seqwin import fileio
from seqwin.cli import main

from conftest import pgm_bytes


def run(*argv):
    return main(list(argv))


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "ds"
    code = run(
        "synth", "--n", "80", "--dim", "16", "--noise-sigma", "1.0",
        "--speed-drift", "0.0", "--seed", "1", "--out", str(out),
    )
    assert code == 0
    return out


def test_synth_writes_dataset(synth_dir):
    assert (synth_dir / "reference.json").exists()
    assert (synth_dir / "query.bin").exists()
    assert (synth_dir / "ground_truth.csv").exists()
    spec = json.loads((synth_dir / "synth_spec.json").read_text())
    assert spec["n_ref"] == 80 and spec["shuffle"] is None


def test_localize_fixed_reports_metrics(synth_dir, tmp_path):
    out = tmp_path / "fixed"
    code = run(
        "localize", "--ref", str(synth_dir / "reference"),
        "--query", str(synth_dir / "query"),
        "--gt", str(synth_dir / "ground_truth.csv"),
        "--mode", "fixed", "--fixed-L", "10", "--out", str(out),
    )
    assert code == 0
    lines = (out / "matches.csv").read_text().splitlines()
    assert lines[0] == "query_index,best_ref,window_len,score,significance,status"
    assert len(lines) == 81
    report = json.loads((out / "report.json").read_text())
    assert report["mode"] == "fixed_L10"
    assert report["mtl"] >= 9  # warm-up frames alone guarantee L - 1
    assert 0.0 <= report["auc"] <= 1.0
    assert (out / "pr_curve.csv").exists()


def test_localize_adaptive_trace_and_curves(synth_dir, tmp_path):
    out = tmp_path / "adaptive"
    code = run(
        "localize", "--ref", str(synth_dir / "reference"),
        "--query", str(synth_dir / "query"),
        "--gt", str(synth_dir / "ground_truth.csv"),
        "--mode", "adaptive", "--l-min", "5", "--l-max", "40",
        "--approx", "robust", "--pr-mode", "significance",
        "--curves", "--out", str(out),
    )
    assert code == 0
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0] == "query_index,chosen_L,best_ref,score,significance,status"
    assert len(lines) == 81
    assert (out / "pcurves.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["mode"] == "adaptive_robust_gaussian"


def test_localize_validation_errors(synth_dir, tmp_path):
    common = [
        "localize", "--ref", str(synth_dir / "reference"),
        "--query", str(synth_dir / "query"), "--out", str(tmp_path / "x"),
    ]
    assert run(*common, "--mode", "fixed") == 1  # missing --fixed-L
    assert run(*common, "--mode", "sweep") == 1  # missing --gt
    assert run("localize", "--ref", str(tmp_path / "nope"),
               "--query", str(synth_dir / "query"), "--out", str(tmp_path / "y")) == 2


def test_config_file_flags_and_override(synth_dir, tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("l-max = 40\napprox = robust\n# comment\n")
    base = [
        "localize", "--ref", str(synth_dir / "reference"),
        "--query", str(synth_dir / "query"),
        "--gt", str(synth_dir / "ground_truth.csv"), "--l-min", "5",
    ]
    out_a, out_b, out_c = (tmp_path / n for n in ("a", "b", "c"))
    assert run(*base, "--config", str(cfgfile), "--out", str(out_a)) == 0
    assert run(*base, "--l-max", "40", "--approx", "robust", "--out", str(out_b)) == 0
    # explicit flags beat the config file
    assert run(*base, "--config", str(cfgfile), "--l-max", "30", "--out", str(out_c)) == 0
    digest = lambda p: json.loads((p / "report.json").read_text())["config_digest"]
    assert digest(out_a) == digest(out_b)
    assert digest(out_c) != digest(out_a)


def test_config_file_rejects_unknown_key(synth_dir, tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("window = 40\n")
    code = run(
        "localize", "--ref", str(synth_dir / "reference"),
        "--query", str(synth_dir / "query"),
        "--config", str(cfgfile), "--out", str(tmp_path / "x"),
    )
    assert code == 1


def test_ingest_images_patch_normalized(tmp_path):
    src = tmp_path / "frames"
    src.mkdir()
    rng = np.random.default_rng(3)
    for k in range(4):
        pixels = rng.integers(0, 256, size=(16, 16))
        (src / f"frame_{k:03d}.pgm").write_bytes(pgm_bytes(pixels))
    out = tmp_path / "desc"
    code = run("ingest", "--images", str(src), "--downsample", "8x8",
               "--patch-norm", "4", "--out", str(out))
    assert code == 0
    descs = fileio.load_descriptors(out)
    assert len(descs) == 4
    assert descs[0].dim == 64


def test_ingest_wifi_csv(tmp_path):
    obs = tmp_path / "obs.csv"
    obs.write_text(
        "frame_index,ap_id,rssi\n0,0,-50\n0,3,-70\n1,1,-60\n2,0,-55\n"
    )
    out = tmp_path / "wifi"
    assert run("ingest", "--wifi", str(obs), "--out", str(out)) == 0
    descs = fileio.load_descriptors(out)
    assert len(descs) == 3
    assert descs[0].kind == "sparse"
    assert descs[0].dim == 4
    assert set(descs[0].values) == {0, 3}


def test_ingest_requires_exactly_one_source(tmp_path):
    assert run("ingest", "--out", str(tmp_path / "x")) == 1


def test_shuffle_command_restorable(synth_dir, tmp_path):
    out = tmp_path / "shuffled"
    code = run(
        "shuffle", "--descriptors", str(synth_dir / "query"),
        "--gt", str(synth_dir / "ground_truth.csv"),
        "--seed", "4", "--out", str(out),
    )
    assert code == 0
    perm = fileio.read_shuffle_manifest(out / "shuffle_manifest.csv")
    original = fileio.load_descriptors(synth_dir / "query")
    shuffled = fileio.load_descriptors(out / "shuffled")
    for t in range(len(perm)):
        assert np.array_equal(shuffled[t].as_dense(), original[int(perm[t])].as_dense())
    gt_in = fileio.read_ground_truth_csv(synth_dir / "ground_truth.csv")
    gt_out = fileio.read_ground_truth_csv(out / "ground_truth.csv")
    assert gt_out == {t: gt_in[int(perm[t])] for t in range(len(perm))}


def test_diag_writes_plot_ready_csvs(synth_dir, tmp_path):
    out = tmp_path / "diag"
    code = run(
        "diag", "--ref", str(synth_dir / "reference"),
        "--query", str(synth_dir / "query"),
        "--l-min", "5", "--l-max", "30", "--frames", "40,70",
        "--out", str(out),
    )
    assert code == 0
    for name in ("dist_stats.csv", "chosen_L.csv", "pcurve_gaussian.csv",
                 "pcurve_robust_gaussian.csv", "pcurve_gmm2.csv", "pcurve_gmm3.csv"):
        assert (out / name).exists()
    lines = (out / "chosen_L.csv").read_text().splitlines()
    assert len(lines) == 81


def test_diag_rejects_out_of_range_frames(synth_dir, tmp_path):
    code = run(
        "diag", "--ref", str(synth_dir / "reference"),
        "--query", str(synth_dir / "query"),
        "--frames", "500", "--out", str(tmp_path / "d"),
    )
    assert code == 1


def test_no_command_prints_usage():
    assert run() == 1
