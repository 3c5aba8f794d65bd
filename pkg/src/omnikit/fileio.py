"""Atomic file output, CSV/JSON emission and the calibration file format."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError, SchemaError
from .geometry import CameraModel, RigidPose


def fmt(x) -> str:
    """Shortest round-trip decimal for floats, plain str otherwise."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj, indent=None) -> str:
    return json.dumps(to_jsonable(obj), indent=indent, sort_keys=False)


def write_json(path, obj, indent=1) -> None:
    atomic_write_text(path, dumps(obj, indent=indent) + "\n")


def write_jsonl(path, records) -> None:
    atomic_write_text(path, "".join(dumps(r) + "\n" for r in records))


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"{path}: file not found") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e


def read_jsonl(path):
    out = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise ConfigError(f"{path}:{lineno}: invalid JSON ({e.msg})") from e
    except FileNotFoundError as e:
        raise ConfigError(f"{path}: file not found") from e
    return out


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> None:
    atomic_write_text(path, csv_text(header, rows))


# ---------------------------------------------------------------- calibration file


def camera_to_dict(cam: CameraModel) -> dict:
    return {
        "id": cam.id,
        "width": cam.width,
        "height": cam.height,
        "fx": cam.fx,
        "fy": cam.fy,
        "cx": cam.cx,
        "cy": cam.cy,
        "dist": list(cam.dist),
        "T_world_cam": [float(v) for v in cam.cam_to_world.matrix().reshape(-1)],
    }


def camera_from_dict(d: dict) -> CameraModel:
    try:
        M = np.array(d["T_world_cam"], dtype=float)
        if M.size != 16:
            raise SchemaError("T_world_cam must hold 16 row-major floats")
        return CameraModel(
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            cam_to_world=RigidPose.from_matrix(M.reshape(4, 4)),
            dist=tuple(d.get("dist", (0.0,) * 5)),
            width=int(d["width"]),
            height=int(d["height"]),
            id=int(d["id"]),
        )
    except KeyError as e:
        raise SchemaError(f"camera entry missing field {e}") from e
    except (TypeError, ValueError) as e:
        raise SchemaError(f"camera entry {d.get('id', '?')}: {e}") from e


def calibration_text(cameras, stats=None) -> str:
    if stats is None:
        return dumps([camera_to_dict(c) for c in cameras], indent=1) + "\n"
    return dumps({"cameras": [camera_to_dict(c) for c in cameras], "stats": stats}, indent=1) + "\n"


def save_calibration(path, cameras, stats=None) -> None:
    atomic_write_text(path, calibration_text(cameras, stats))


def load_calibration(path) -> list[CameraModel]:
    data = read_json(path)
    if isinstance(data, dict):
        data = data.get("cameras")
    if not isinstance(data, list):
        raise SchemaError(f"{path}: expected an array of cameras")
    return [camera_from_dict(d) for d in data]
