"""Descriptor envelopes, CSV formats, and canonical number formatting."""

import json

import numpy as np
import pytest

from seqwin import Descriptor, FormatError, LocalizationResult, WifiRecord
from seqwin.evaluation import PRPoint
from seqwin.windows import HYPOTHESIS
from seqwin import fileio


def test_fmt_canonical():
    assert fileio.fmt(3) == "3"
    assert fileio.fmt(np.int64(-7)) == "-7"
    assert fileio.fmt(2.5) == "2.5"
    assert fileio.fmt(0.123456789123) == "0.123456789"
    assert fileio.fmt(float("nan")) == "nan"


def test_descriptor_roundtrip_dense(tmp_path):
    rng = np.random.default_rng(0)
    descs = [Descriptor.dense(rng.standard_normal(6)) for _ in range(5)]
    stem = fileio.save_descriptors(tmp_path / "trav", descs)
    assert stem.with_suffix(".json").exists() and stem.with_suffix(".bin").exists()
    back = fileio.load_descriptors(stem)
    assert len(back) == 5
    for a, b in zip(descs, back):
        assert b.kind == "dense"
        np.testing.assert_allclose(b.as_dense(), a.as_dense(), atol=1e-6)


def test_descriptor_roundtrip_sparse(tmp_path):
    descs = [Descriptor.sparse({1: -40.0, 3: -70.5}, 6), Descriptor.sparse({0: -55.0}, 6)]
    stem = fileio.save_descriptors(tmp_path / "wifi", descs)
    back = fileio.load_descriptors(stem)
    assert back[0].kind == "sparse"
    assert set(back[0].values) == {1, 3}
    assert back[0].values[3] == pytest.approx(-70.5)
    assert set(back[1].values) == {0}


def test_save_rejects_empty_and_mixed_dims(tmp_path):
    with pytest.raises(ValueError):
        fileio.save_descriptors(tmp_path / "x", [])
    with pytest.raises(ValueError):
        fileio.save_descriptors(
            tmp_path / "y", [Descriptor.dense([1.0]), Descriptor.dense([1.0, 2.0])]
        )


def test_envelope_missing_blob(tmp_path):
    stem = fileio.save_descriptors(tmp_path / "t", [Descriptor.dense([1.0])])
    stem.with_suffix(".bin").unlink()
    with pytest.raises(FormatError, match="missing blob"):
        fileio.load_descriptors(stem)


def test_envelope_truncated_blob(tmp_path):
    stem = fileio.save_descriptors(tmp_path / "t", [Descriptor.dense([1.0, 2.0])])
    blob = stem.with_suffix(".bin").read_bytes()
    stem.with_suffix(".bin").write_bytes(blob[:-2])
    with pytest.raises(FormatError, match="blob holds"):
        fileio.load_descriptors(stem)


def test_envelope_invalid_manifest(tmp_path):
    stem = fileio.save_descriptors(tmp_path / "t", [Descriptor.dense([1.0])])
    stem.with_suffix(".json").write_text("{not json", encoding="utf-8")
    with pytest.raises(FormatError, match="invalid JSON"):
        fileio.load_descriptors(stem)


def test_envelope_rejects_unknown_dtype(tmp_path):
    stem = fileio.save_descriptors(tmp_path / "t", [Descriptor.dense([1.0])])
    manifest = json.loads(stem.with_suffix(".json").read_text())
    manifest["dtype"] = "f64"
    stem.with_suffix(".json").write_text(json.dumps(manifest), encoding="utf-8")
    with pytest.raises(FormatError, match="dtype"):
        fileio.load_descriptors(stem)


def test_ground_truth_roundtrip(tmp_path):
    path = tmp_path / "gt.csv"
    fileio.write_ground_truth_csv(path, {3: 30, 1: 10})
    assert path.read_text().splitlines()[0] == "query_index,ref_index"
    assert fileio.read_ground_truth_csv(path) == {1: 10, 3: 30}


def test_ground_truth_rejects_bad_header(tmp_path):
    path = tmp_path / "gt.csv"
    path.write_text("frame,ref\n0,0\n")
    with pytest.raises(FormatError):
        fileio.read_ground_truth_csv(path)


def test_wifi_csv_roundtrip(tmp_path):
    path = tmp_path / "obs.csv"
    records = [WifiRecord(0, 2, -61.25), WifiRecord(1, 0, -80.0)]
    fileio.write_wifi_csv(path, records)
    assert fileio.read_wifi_csv(path) == records


@pytest.mark.parametrize(
    "body",
    [
        "frame_index,ap_id\n",  # wrong header
        "frame_index,ap_id,rssi\n0,1\n",  # missing field
        "frame_index,ap_id,rssi\n0,-1,-60\n",  # negative ap
        "frame_index,ap_id,rssi\n0,1,inf\n",  # non-finite rssi
        "frame_index,ap_id,rssi\nzero,1,-60\n",  # non-integer frame
    ],
)
def test_wifi_csv_rejects_malformed(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(FormatError):
        fileio.read_wifi_csv(path)


def test_shuffle_manifest_roundtrip(tmp_path):
    path = tmp_path / "manifest.csv"
    perm = np.array([2, 0, 1, 3], dtype=np.int64)
    fileio.write_shuffle_manifest(path, perm)
    assert np.array_equal(fileio.read_shuffle_manifest(path), perm)


def test_shuffle_manifest_rejects_non_permutation(tmp_path):
    path = tmp_path / "manifest.csv"
    path.write_text("new_index,old_index\n0,1\n1,1\n")
    with pytest.raises(FormatError, match="not a permutation"):
        fileio.read_shuffle_manifest(path)


def test_matches_and_trace_csv_headers(tmp_path):
    results = [
        LocalizationResult(0, 5, 10, -1.25, 0.01, HYPOTHESIS),
        LocalizationResult.none(1, 10),
    ]
    fileio.write_matches_csv(tmp_path / "m.csv", results)
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "query_index,best_ref,window_len,score,significance,status"
    assert lines[1] == "0,5,10,-1.25,0.01,hypothesis"
    assert lines[2] == "1,-1,10,nan,nan,no_hypothesis"

    fileio.write_trace_csv(tmp_path / "t.csv", results)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "query_index,chosen_L,best_ref,score,significance,status"
    assert lines[1] == "0,10,5,-1.25,0.01,hypothesis"


def test_pcurve_csv_marks_exactly_one_minimum(tmp_path):
    curves = [(5, [(10, 0.5), (20, 0.25), (30, 0.25)]), (6, [])]
    fileio.write_pcurve_csv(tmp_path / "p.csv", curves, flag_minimum=True)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "query_index,L,p,is_min"
    flags = [line.split(",")[-1] for line in lines[1:]]
    assert flags.count("1") == 1
    # tie on p resolves to the smaller L
    assert lines[2] == "5,20,0.25,1"


def test_pr_csv_format(tmp_path):
    points = [PRPoint(float("-inf"), 1.0, 0.0, 0, 0), PRPoint(0.5, 0.75, 0.3, 4, 3)]
    fileio.write_pr_csv(tmp_path / "pr.csv", points)
    lines = (tmp_path / "pr.csv").read_text().splitlines()
    assert lines[0] == "threshold,precision,recall,n_accepted,n_correct"
    assert lines[2] == "0.5,0.75,0.3,4,3"


def test_config_digest_stable_and_sensitive():
    a = fileio.config_digest({"x": 1, "y": "sad"})
    b = fileio.config_digest({"y": "sad", "x": 1})
    c = fileio.config_digest({"x": 2, "y": "sad"})
    assert a == b
    assert a != c
    assert len(a) == 16 and all(ch in "0123456789abcdef" for ch in a)


def test_report_json_deterministic(tmp_path):
    fileio.write_report_json(tmp_path / "r1.json", {"b": 2, "a": 1})
    fileio.write_report_json(tmp_path / "r2.json", {"a": 1, "b": 2})
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()
