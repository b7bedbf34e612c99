"""Configuration files, CSV/raster artifacts and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .geometry import ApertureLayout, DenseGridSpec
from .metrics import ImageSlice
from .reference import SpiralSpec
from .synthesis import MaskSpec, SynthesisConfig

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "atomic_write_text",
    "atomic_write_bytes",
    "write_csv",
    "write_layout",
    "read_layout",
    "write_weights",
    "read_raster",
    "write_raster",
    "sha256_file",
    "write_manifest",
]


class ConfigError(ValueError):
    """Malformed configuration; the message starts with ``file:line:``."""


# section -> key -> (type, default).  ``None`` default marks a required key.
_SCHEMA = {
    "grid": {
        "n": (int, 32), "m": (int, 32),
        "pitch_x_mm": (float, 0.3), "pitch_y_mm": (float, 0.3),
        "f0_hz": (float, 3.0e6), "c_mps": (float, 1540.0),
    },
    "mask": {
        "r_ml": (float, None), "sll_db": (float, None),
        "outer_radius": (float, 0.0), "max_angle_deg": (float, 0.0),
    },
    "synth": {
        "epsilon": (float, 1e-3), "w_thre": (float, 0.05),
        "du": (float, 0.005), "dv": (float, 0.005),
        "max_iters": (int, 60), "half_plane": (bool, True), "polish": (bool, False),
    },
    "solver": {"tol": (float, 1e-8), "max_iter": (int, 200)},
    "spiral": {
        "n_seeds": (int, 256), "radius_mm": (float, 4.8), "taper_fraction": (float, 0.5),
    },
}


@dataclass
class RunConfig:
    """Parsed configuration.  ``sections`` holds every value after defaults."""

    sections: dict
    present: set = field(default_factory=set)
    text: str = ""

    @property
    def grid(self) -> DenseGridSpec:
        g = self.sections["grid"]
        return DenseGridSpec(g["n"], g["m"], g["pitch_x_mm"], g["pitch_y_mm"],
                             g["f0_hz"], g["c_mps"])

    @property
    def mask(self) -> MaskSpec:
        if "mask" not in self.present:
            raise ConfigError("configuration has no mask section")
        m = self.sections["mask"]
        return MaskSpec.from_db(m["r_ml"], m["sll_db"], m.get("outer_radius"),
                                m.get("max_angle_deg"))

    @property
    def spiral(self) -> SpiralSpec:
        s = self.sections["spiral"]
        return SpiralSpec(s["n_seeds"], s["radius_mm"], taper_fraction=s["taper_fraction"])

    def synthesis_config(self) -> SynthesisConfig:
        s, v = self.sections["synth"], self.sections["solver"]
        return SynthesisConfig(
            grid=self.grid, mask=self.mask, epsilon=s["epsilon"], w_thre=s["w_thre"],
            du=s["du"], dv=s["dv"], max_iterations=s["max_iters"],
            solver_tol=v["tol"], solver_max_iter=v["max_iter"],
            half_plane=s["half_plane"], polish=s["polish"],
        )

    def snapshot(self) -> dict:
        return {k: dict(v) for k, v in self.sections.items()}


def _coerce(node, typ, where):
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError(f"{where}: expected a scalar value")
    raw = node.value
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "on"):
                return True
            if low in ("false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            f = float(raw)
            if not f.is_integer():
                raise ValueError(raw)
            return int(f)
        value = float(raw)
        if not np.isfinite(value):
            raise ValueError(raw)
        return value
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r} as {typ.__name__}") from None


def parse_config(text: str, name: str = "<config>") -> RunConfig:
    """Parse YAML text; every error names the offending line."""
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else 0
        raise ConfigError(f"{name}:{line}: {exc.problem}") from None
    sections = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in _SCHEMA.items()}
    present: set = set()
    if root is None:
        return RunConfig(sections, present, text)
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError(f"{name}:{root.start_mark.line + 1}: top level must be a mapping")
    for knode, vnode in root.value:
        where = f"{name}:{knode.start_mark.line + 1}"
        sec = knode.value
        if sec not in _SCHEMA:
            raise ConfigError(f"{where}: unknown section {sec!r}")
        if sec in present:
            raise ConfigError(f"{where}: duplicate section {sec!r}")
        present.add(sec)
        if not isinstance(vnode, yaml.MappingNode):
            raise ConfigError(f"{where}: section {sec!r} must be a mapping")
        seen = set()
        for kn, vn in vnode.value:
            w = f"{name}:{kn.start_mark.line + 1}"
            key = kn.value
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"{w}: unknown key {sec}.{key}")
            if key in seen:
                raise ConfigError(f"{w}: duplicate key {sec}.{key}")
            seen.add(key)
            sections[sec][key] = _coerce(vn, _SCHEMA[sec][key][0], f"{w}: {sec}.{key}")
        line = f"{name}:{vnode.start_mark.line + 1}"
        for key, (_, default) in _SCHEMA[sec].items():
            if default is None and key not in seen:
                raise ConfigError(f"{line}: section {sec!r} is missing {key!r}")
        if sec == "mask":
            has_r = "outer_radius" in seen
            has_a = "max_angle_deg" in seen
            if has_r == has_a:
                raise ConfigError(f"{line}: mask needs exactly one of outer_radius, max_angle_deg")
            sections[sec]["outer_radius" if has_a else "max_angle_deg"] = None
    rc = RunConfig(sections, present, text)
    # surface range errors from the domain types with the section line
    for sec, build in (("grid", lambda: rc.grid), ("mask", lambda: rc.mask),
                       ("spiral", lambda: rc.spiral)):
        if sec in present:
            try:
                build()
            except ValueError as exc:
                node = next(v for k, v in root.value if k.value == sec)
                raise ConfigError(f"{name}:{node.start_mark.line + 1}: {exc}") from None
    if "mask" in present:
        try:
            rc.synthesis_config()
        except ValueError as exc:
            raise ConfigError(f"{name}:1: {exc}") from None
    return rc


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}:0: cannot read configuration ({exc.strerror})") from None
    return parse_config(text, str(path))


# ---------------------------------------------------------------- writing

def atomic_write_bytes(path, data: bytes) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, rows) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_num(x) for x in row])
    return atomic_write_text(path, buf.getvalue())


def write_layout(path, layout: ApertureLayout) -> Path:
    rows = [("col", "row", "x_mm", "y_mm", "weight")]
    rows += list(zip(layout.cols, layout.rows, layout.x, layout.y, layout.weights))
    return write_csv(path, rows)


def read_layout(path, grid: DenseGridSpec, name: str | None = None) -> ApertureLayout:
    """Read a layout CSV written by :func:`write_layout`.

    The stored positions must agree with ``grid``; a mismatch usually means
    the layout was made for a different grid.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["col", "row", "x_mm", "y_mm", "weight"]:
            raise ValueError(f"{path}: not a layout CSV (header {header})")
        data = [r for r in reader if r]
    if not data:
        raise ValueError(f"{path}: layout has no elements")
    try:
        cols = np.array([int(r[0]) for r in data])
        rows = np.array([int(r[1]) for r in data])
        xy = np.array([[float(r[2]), float(r[3])] for r in data])
        w = np.array([float(r[4]) for r in data])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed row ({exc})") from None
    layout = ApertureLayout(cols, rows, w, grid, name or Path(path).stem)
    if not np.allclose(layout.x, xy[:, 0], atol=1e-9) or not np.allclose(layout.y, xy[:, 1], atol=1e-9):
        raise ValueError(f"{path}: positions do not match the configured grid")
    return layout


def write_weights(path, weights) -> Path:
    w = np.asarray(weights, dtype=float)
    return write_csv(path, [("index", "weight")] + list(zip(range(w.size), w)))


# ---------------------------------------------------------------- rasters

def write_raster(path, sl: ImageSlice, scale: str = "db") -> tuple[Path, Path]:
    """Write ``path`` (float32 LE, row-major) and ``path.json`` sidecar."""
    values = sl.values if scale == "db" else sl.linear()
    data = np.ascontiguousarray(values, dtype="<f4").tobytes()
    side = {
        "width": sl.width, "height": sl.height, "spacing": list(sl.spacing),
        "origin": list(sl.origin), "units": sl.units, "scale": scale, "plane": sl.plane,
    }
    p = atomic_write_bytes(path, data)
    s = atomic_write_text(str(path) + ".json", json.dumps(side, indent=2) + "\n")
    return p, s


def read_raster(path, sidecar=None) -> ImageSlice:
    sidecar = Path(sidecar) if sidecar is not None else Path(str(path) + ".json")
    meta = json.loads(sidecar.read_text())
    try:
        w, h = int(meta["width"]), int(meta["height"])
        scale = meta.get("scale", "db")
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{sidecar}: bad sidecar ({exc})") from None
    raw = Path(path).read_bytes()
    if len(raw) != 4 * w * h:
        raise ValueError(
            f"{path}: raster holds {len(raw)} bytes, sidecar declares {w}x{h} float32"
        )
    values = np.frombuffer(raw, dtype="<f4").astype(float).reshape(h, w)
    kw = dict(
        spacing=tuple(meta.get("spacing", (1.0, 1.0))),
        origin=tuple(meta.get("origin", (0.0, 0.0))),
        units=meta.get("units", "mm"),
        plane=meta.get("plane", "C-plane"),
    )
    if scale == "linear":
        return ImageSlice.from_linear(values, **kw)
    if scale != "db":
        raise ValueError(f"{sidecar}: unknown scale {scale!r}")
    return ImageSlice(values, **kw)


# ---------------------------------------------------------------- manifests

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, *, command, config, inputs=(), outputs=(), timed=(),
                   wall_time=None, termination=None, extra=None) -> Path:
    """Record a run.

    ``outputs`` are reproducible artifacts; ``timed`` lists outputs that carry
    wall-clock timings and so differ between otherwise identical runs.
    """
    from . import __version__

    doc = {
        "tool": "sparse2d",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
        "timed_outputs": {Path(p).name: sha256_file(p) for p in timed},
        "wall_time_s": wall_time,
        "termination": termination,
    }
    if extra:
        doc.update(extra)
    return atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
