import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fuzzseg.cli import main
from fuzzseg.imageio import GrayImage, compute_histogram, load_gray_image, save_gray_image
from fuzzseg.synthetic import bimodal_image

from oracles import grid_max_lv1


@pytest.fixture
def bimodal(tmp_path):
    path = tmp_path / "bimodal.pgm"
    save_gray_image(bimodal_image(60, 190, 12, seed=1, size=32), path)
    return path


def test_segment_writes_artifacts(bimodal, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["segment", "--input", str(bimodal), "--thresholds", "2", "--generations", "20",
                 "--seed", "5", "--output", str(out)]) == 0
    sidecar = json.loads((out / "bimodal_segment.json").read_text())
    assert sidecar["lv"] == 2 and len(sidecar["thresholds"]) == 2 and sidecar["seed"] == 5
    seg = load_gray_image(out / "bimodal_segmented.png")
    assert len(set(seg.flat())) <= 3
    lines = (out / "bimodal_convergence.csv").read_text().splitlines()
    assert len(lines) == 21
    assert "thresholds" in capsys.readouterr().out


def test_segment_deterministic(bimodal, tmp_path):
    for k in range(2):
        assert main(["segment", "--input", str(bimodal), "--generations", "20", "--format", "pgm",
                     "--output", str(tmp_path / str(k))]) == 0
    for name in ("bimodal_segmented.pgm", "bimodal_segment.json", "bimodal_convergence.csv"):
        assert (tmp_path / "0" / name).read_bytes() == (tmp_path / "1" / name).read_bytes()


def test_bimodal_threshold_between_modes(bimodal, tmp_path):
    assert main(["segment", "--input", str(bimodal), "--thresholds", "1", "--output", str(tmp_path)]) == 0
    sidecar = json.loads((tmp_path / "bimodal_segment.json").read_text())
    (t,) = sidecar["thresholds"]
    assert 60 < t < 190
    hist = compute_histogram(load_gray_image(bimodal))
    lo, hi = hist.nonzero_range()
    assert sidecar["fitness"] >= grid_max_lv1(list(hist.bins), lo, hi, step=1.0) - 1e-9


def test_zero_thresholds_is_usage_error(bimodal, tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["segment", "--input", str(bimodal), "--thresholds", "0", "--output", str(tmp_path / "x")])
    assert err.value.code == 1
    assert not (tmp_path / "x").exists()


def test_missing_input_is_io_error(tmp_path, capsys):
    out = tmp_path / "never"
    assert main(["segment", "--input", str(tmp_path / "nope.png"), "--output", str(out)]) == 2
    assert "nope.png" in capsys.readouterr().err
    assert not out.exists()


def test_corrupt_input_leaves_nothing(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n4 4\n255\n\x00")
    out = tmp_path / "o"
    assert main(["histogram", "--input", str(bad), "--output", str(out)]) == 2
    assert not out.exists()


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_benchmark(bimodal, tmp_path):
    args = ["benchmark", "--input", str(bimodal), "--runs", "2", "--generations", "10", "--algorithm",
            "appa", "pso", "ga", "gsa"]
    assert main(args + ["--output", str(tmp_path / "a")]) == 0
    assert main(args + ["--output", str(tmp_path / "b")]) == 0
    rows = _rows(tmp_path / "a" / "comparison.csv")
    assert [r["algorithm"] for r in rows] == ["appa", "pso", "ga", "gsa"]
    rows_b = _rows(tmp_path / "b" / "comparison.csv")
    for ra, rb in zip(rows, rows_b):
        ra.pop("mean_wall_time"), rb.pop("mean_wall_time")
        assert ra == rb
    assert len(list((tmp_path / "a" / "convergence").iterdir())) == 4


def test_benchmark_continues_past_missing_image(bimodal, tmp_path, capsys):
    code = main(["benchmark", "--input", str(tmp_path / "gone.pgm"), str(bimodal), "--runs", "1",
                 "--generations", "5", "--algorithm", "pso", "--output", str(tmp_path / "r")])
    assert code != 0
    assert "gone.pgm" in capsys.readouterr().err
    rows = _rows(tmp_path / "r" / "comparison.csv")
    assert [r["image"] for r in rows] == ["bimodal"]


def test_histogram_command(tmp_path):
    flat = tmp_path / "flat.png"
    save_gray_image(GrayImage(np.full((4, 4), 128)), flat)
    assert main(["histogram", "--input", str(flat), "--output", str(tmp_path)]) == 0
    assert (tmp_path / "flat_histogram.csv").read_text() == "level,frequency\n128,1.0\n"

    quad = tmp_path / "quad.pgm"
    save_gray_image(GrayImage([[0, 0], [255, 255]]), quad)
    assert main(["histogram", "--input", str(quad), "--output", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "quad_histogram.csv")
    assert [(r["level"], float(r["frequency"])) for r in rows] == [("0", 0.5), ("255", 0.5)]


def test_histogram_mass(bimodal, tmp_path):
    assert main(["histogram", "--input", str(bimodal), "--output", str(tmp_path)]) == 0
    total = sum(float(r["frequency"]) for r in _rows(tmp_path / "bimodal_histogram.csv"))
    assert abs(total - 1.0) <= 1e-9


def test_help_shows_defaults():
    proc = subprocess.run([sys.executable, "-m", "fuzzseg", "segment", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "default: 2" in proc.stdout and "default: appa" in proc.stdout


def test_bad_alpha_is_usage_error(bimodal):
    with pytest.raises(SystemExit) as err:
        main(["segment", "--input", str(bimodal), "--alpha", "1"])
    assert err.value.code == 1
