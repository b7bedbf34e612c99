import csv
import json

import numpy as np
import pytest

from sparse2d import io as sio
from sparse2d.beampattern import evaluate_bp
from sparse2d.cli import main
from sparse2d.geometry import ApertureLayout, DenseGridSpec, build_dense_layout
from sparse2d.metrics import ImageSlice

ROOT_CONFIGS = __import__("pathlib").Path(__file__).resolve().parents[1] / "configs"

SMALL_YAML = """\
grid: {n: 8, m: 8, pitch_x_mm: 0.3, pitch_y_mm: 0.3, f0_hz: 3.0e6}
mask: {r_ml: 0.3, sll_db: -12, outer_radius: 1.41}
synth: {du: 0.05, dv: 0.05}
"""


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ------------------------------------------------------------------ config

def test_parse_defaults():
    rc = sio.parse_config("")
    assert rc.grid == DenseGridSpec.reference_32x32()
    assert rc.sections["synth"]["epsilon"] == 1e-3
    with pytest.raises(sio.ConfigError):
        rc.mask


def test_parse_full_config():
    rc = sio.load_config(ROOT_CONFIGS / "full32.yaml")
    cfg = rc.synthesis_config()
    assert cfg.mask.sll_db == pytest.approx(-21.26)
    assert cfg.mask.outer_radius == pytest.approx(1 + np.sin(np.deg2rad(41)))
    assert cfg.du == 0.005 and cfg.grid.n_elements == 1024
    assert rc.spiral.n_seeds == 256


@pytest.mark.parametrize("text, line, fragment", [
    ("grid:\n  n: 8\n  bogus: 1\n", 3, "unknown key"),
    ("grid:\n  n: eight\n", 2, "cannot read"),
    ("grid:\n  n: 8\nmask:\n  r_ml: 0.1\n  outer_radius: 1.2\n", 4, "missing 'sll_db'"),
    ("grid: [1, 2\n", 2, ""),
    ("stuff:\n  a: 1\n", 1, "unknown section"),
    ("mask:\n  r_ml: 0.1\n  sll_db: -10\n", 2, "exactly one"),
    ("grid:\n  n: 8\n  pitch_x_mm: -1\n", 2, "pitch_x"),
])
def test_config_errors_name_the_line(text, line, fragment):
    with pytest.raises(sio.ConfigError) as info:
        sio.parse_config(text, "cfg.yaml")
    msg = str(info.value)
    assert msg.startswith(f"cfg.yaml:{line}:")
    assert fragment in msg


# ------------------------------------------------------------------ files

def test_layout_round_trip_is_bitwise(tmp_path, rng):
    g = DenseGridSpec(10, 7, 0.3, 0.27, 3e6)
    flat = rng.choice(70, 20, replace=False)
    layout = ApertureLayout(flat // 7 + 1, flat % 7 + 1, rng.uniform(0.01, 1, 20), g)
    path = sio.write_layout(tmp_path / "l.csv", layout)
    back = sio.read_layout(path, g)
    for name in ("cols", "rows", "x", "y", "weights"):
        assert np.array_equal(getattr(layout, name), getattr(back, name))
    with pytest.raises(ValueError, match="grid"):
        sio.read_layout(path, DenseGridSpec(10, 7, 0.25, 0.27, 3e6))


def test_atomic_write_leaves_no_temp(tmp_path):
    sio.atomic_write_text(tmp_path / "a.txt", "x")
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]


def test_raster_round_trip(tmp_path, rng):
    sl = ImageSlice(rng.uniform(-60, 0, (5, 7)).astype(np.float32), (0.1, 0.2), (-1, 2))
    p, _ = sio.write_raster(tmp_path / "r.f32", sl)
    back = sio.read_raster(p)
    assert np.array_equal(back.values, sl.values)
    assert back.spacing == sl.spacing and back.origin == sl.origin
    assert p.stat().st_size == 4 * 35


def test_raster_size_mismatch(tmp_path):
    sl = ImageSlice(np.zeros((4, 4)))
    p, s = sio.write_raster(tmp_path / "r.f32", sl)
    meta = json.loads(s.read_text())
    meta["width"] = 5
    s.write_text(json.dumps(meta))
    with pytest.raises(ValueError, match="sidecar declares"):
        sio.read_raster(p)
    assert main(["metrics", "--raster", str(p), "--out", str(tmp_path)]) == 1


# ------------------------------------------------------------------ cli

def test_reference_commands(tmp_path, grid32):
    for kind in ("dense", "spiral", "spiral-taper"):
        assert main(["reference", "--kind", kind, "--out", str(tmp_path),
                     "--config", str(ROOT_CONFIGS / "full32.yaml")]) == 0
    dense = sio.read_layout(tmp_path / "dense.csv", grid32)
    spiral = sio.read_layout(tmp_path / "spiral.csv", grid32)
    taper = sio.read_layout(tmp_path / "spiral-taper.csv", grid32)
    assert len(dense) == 1024
    assert len(spiral) == 256 and len(set(zip(spiral.cols, spiral.rows))) == 256
    assert np.hypot(taper.x, taper.y).mean() < np.hypot(spiral.x, spiral.y).mean()


def test_bp_command_dense(tmp_path, grid32):
    sio.write_layout(tmp_path / "dense.csv", build_dense_layout(grid32))
    assert main(["bp", "--layout", str(tmp_path / "dense.csv"), "--step", "0.01",
                 "--out", str(tmp_path)]) == 0
    img = sio.read_raster(tmp_path / "bp.f32")
    X, Y = img.coords()
    c = img.values.shape[0] // 2
    assert img.values[c, c] == 0.0 and X[c, c] == 0.0 and Y[c, c] == 0.0
    # the pixel closest to the (1, 0) grating lobe is within a fraction of a dB
    j = int(np.argmin(np.abs(X[c] - 1.7111)))
    assert img.values[c, j] > -0.5
    cut = read_rows(tmp_path / "cut_v0.csv")
    assert cut[0] == ["coord", "mag_db"]


def test_bp_single_element_flat(tmp_path, grid32):
    sio.write_layout(tmp_path / "one.csv", ApertureLayout([5], [9], [1.0], grid32))
    assert main(["bp", "--layout", str(tmp_path / "one.csv"), "--step", "0.1",
                 "--out", str(tmp_path)]) == 0
    assert np.allclose(sio.read_raster(tmp_path / "bp.f32").values, 0.0, atol=1e-5)


def test_bp_raster_spot_checks(tmp_path, grid32, rng):
    flat = rng.choice(1024, 100, replace=False)
    layout = ApertureLayout(flat // 32 + 1, flat % 32 + 1, rng.uniform(0.1, 1, 100),
                            grid32)
    sio.write_layout(tmp_path / "l.csv", layout)
    assert main(["bp", "--layout", str(tmp_path / "l.csv"), "--step", "0.02",
                 "--out", str(tmp_path)]) == 0
    img = sio.read_raster(tmp_path / "bp.f32")
    X, Y = img.coords()
    i = rng.integers(0, img.height, 100)
    j = rng.integers(0, img.width, 100)
    full = np.abs(evaluate_bp(layout, X.ravel(), Y.ravel())).max()
    spot = 20 * np.log10(np.abs(evaluate_bp(layout, X[i, j], Y[i, j])) / full)
    # float32 storage limits agreement to about 1e-5 dB
    assert np.allclose(img.values[i, j], np.maximum(spot, -240), atol=1e-4)


def test_bp_empty_layout_is_input_error(tmp_path):
    (tmp_path / "e.csv").write_text("col,row,x_mm,y_mm,weight\n")
    assert main(["bp", "--layout", str(tmp_path / "e.csv"), "--out", str(tmp_path)]) == 1


def test_gratings_command(tmp_path, capsys):
    assert main(["gratings", "--half-plane", "--out", str(tmp_path)]) == 0
    assert "1.7111" in capsys.readouterr().out
    rows = read_rows(tmp_path / "gratings.csv")
    assert rows[0] == ["u", "v", "n", "m"] and len(rows) == 6


def test_metrics_command(tmp_path):
    n = 81
    x = (np.arange(n) - 40) * 0.1
    X, Y = np.meshgrid(x, x)
    r = np.hypot(X, Y)
    # 1.05 avoids lattice points sitting exactly on the ROI edge
    amp = np.where(r <= 1.05, 0.1, 1.0)
    amp[40, 40] = 2.0  # unique peak for the FWHM rows
    sio.write_raster(tmp_path / "two.f32",
                     ImageSlice.from_linear(amp, spacing=(0.1, 0.1), origin=(-4, -4)))
    assert main(["metrics", "--raster", str(tmp_path / "two.f32"), "--out", str(tmp_path),
                 "--roi", "0", "0", "1.05", "2.0", "3.5"]) == 0
    rows = {r[0]: float(r[3]) for r in read_rows(tmp_path / "metrics.csv")[1:]}
    # the single bright pixel is part of the cyst mean
    cyst = np.where(r <= 1.05)
    mu_c = amp[cyst].mean()
    assert rows["cr"] == pytest.approx(20 * np.log10(mu_c / 1.0), abs=1e-5)
    assert rows["gcnr"] == 1.0


def test_metrics_identical_rois_and_blob(tmp_path):
    n, s = 101, 0.05
    x = (np.arange(n) - 50) * s
    X, Y = np.meshgrid(x, x)
    sigma = 0.4
    blob = np.exp(-(X**2 + Y**2) / (2 * sigma**2))
    sio.write_raster(tmp_path / "b.f32", ImageSlice.from_linear(
        blob, spacing=(s, s), origin=(x[0], x[0])), scale="linear")
    assert main(["metrics", "--raster", str(tmp_path / "b.f32"), "--out", str(tmp_path)]) == 0
    rows = {r[0]: float(r[3]) for r in read_rows(tmp_path / "metrics.csv")[1:]}
    assert rows["fwhm_x"] == pytest.approx(2 * np.sqrt(2 * np.log(2)) * sigma, abs=s)
    flat = ImageSlice(np.full((40, 40), -20.0), origin=(-20, -20))
    sio.write_raster(tmp_path / "flat.f32", flat)
    assert main(["metrics", "--raster", str(tmp_path / "flat.f32"), "--out", str(tmp_path),
                 "--roi", "0", "0", "5", "8", "15"]) == 0
    rows = {r[0]: float(r[3]) for r in read_rows(tmp_path / "metrics.csv")[1:]}
    assert rows["gcnr"] == 0.0 and rows["cr"] == pytest.approx(0.0, abs=1e-12)


def test_synthesize_missing_config(tmp_path):
    assert main(["synthesize", "--config", str(tmp_path / "nope.yaml"),
                 "--out", str(tmp_path)]) == 1


def test_synthesize_malformed_config(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("grid:\n  n: 8\nmask:\n  r_ml: zero\n")
    assert main(["synthesize", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert f"{p}:4:" in capsys.readouterr().err


def test_synthesize_infeasible_exit_2(tmp_path, capsys):
    p = tmp_path / "inf.yaml"
    p.write_text("grid: {n: 16, m: 16}\nmask: {r_ml: 0.01, sll_db: -40, outer_radius: 1.6}\n"
                 "synth: {du: 0.04, dv: 0.04}\n")
    assert main(["synthesize", "--config", str(p), "--out", str(tmp_path), "--quiet"]) == 2
    assert "Farkas certificate" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["termination"] == "Infeasible"
    assert manifest["certificate_residual"] <= 1e-6
    assert not (tmp_path / "layout.csv").exists()


def run_small(tmp_path, name, extra=()):
    cfg = tmp_path / "small.yaml"
    cfg.write_text(SMALL_YAML)
    out = tmp_path / name
    assert main(["synthesize", "--config", str(cfg), "--out", str(out), "--quiet", *extra]) == 0
    return json.loads((out / "manifest.json").read_text())


def test_synthesize_outputs_and_manifest(tmp_path):
    m = run_small(tmp_path, "a")
    out = tmp_path / "a"
    assert set(m["outputs"]) == {"layout.csv", "weights.csv"}
    assert set(m["timed_outputs"]) == {"trace.csv"}
    for name, digest in m["outputs"].items():
        assert sio.sha256_file(out / name) == digest
    trace = read_rows(out / "trace.csv")
    assert trace[0] == ["k", "count", "objective", "status", "seconds"]
    assert len(trace) - 1 >= 3
    assert m["termination"] == "Converged3Equal"
    assert m["config"]["grid"]["n"] == 8


def test_pipeline_digests_are_deterministic(tmp_path):
    a = run_small(tmp_path, "a")
    b = run_small(tmp_path, "b", ("--threads", "1"))
    assert a["outputs"] == b["outputs"]
    ta = [r[:4] for r in read_rows(tmp_path / "a" / "trace.csv")]
    tb = [r[:4] for r in read_rows(tmp_path / "b" / "trace.csv")]
    assert ta == tb


@pytest.mark.slow
def test_synthesize_desk_config(tmp_path):
    assert main(["synthesize", "--config", str(ROOT_CONFIGS / "desk16.yaml"),
                 "--out", str(tmp_path), "--quiet"]) == 0
    assert len(read_rows(tmp_path / "trace.csv")) - 1 >= 3
    assert main(["verify", "--config", str(ROOT_CONFIGS / "desk16.yaml"),
                 "--layout", str(tmp_path / "layout.csv"), "--out", str(tmp_path)]) == 0
    rows = dict(read_rows(tmp_path / "verify.csv")[1:])
    assert float(rows["worst_violation_db"]) < 1.0
