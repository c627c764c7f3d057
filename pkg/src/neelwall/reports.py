"""Persistence: profile files and CSV / JSON-lines reports.

Profile format: an ASCII header (magic line ``NEELW1``, one metadata line,
blank line) followed by n little-endian float64 remainder samples.  The
header is human-inspectable; the payload round-trips bit-exactly.
"""
from __future__ import annotations

import dataclasses
import io
import json
import os

import numpy as np

from .grid import Field, Grid, l2_norm
from .profiles import Profile, traveling_residual
from .spectra import ResolventSample, SpectrumReport, SweepResult
from .dynamics import SimTrace

MAGIC = "NEELW1"

__all__ = ["MAGIC", "store_profile", "load_profile", "write_report"]


def _fmt(x: float) -> str:
    """Round-trippable float formatting (17 significant digits)."""
    return format(float(x), ".17g")


def store_profile(profile: Profile, path) -> None:
    """Write a profile: text header, blank line, n little-endian f64 samples."""
    header = (
        f"{MAGIC}\n"
        f"L={_fmt(profile.grid.L)} n={profile.grid.n} H={_fmt(profile.H)} "
        f"c={_fmt(profile.c)} nu={_fmt(profile.nu)} "
        f"background={profile.theta.background}\n\n"
    )
    payload = np.ascontiguousarray(profile.theta.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload)


def _parse_header(raw: bytes, path) -> tuple[dict, int]:
    end = raw.find(b"\n\n")
    if end < 0:
        raise ValueError(f"{path}: malformed header (no blank line)")
    lines = raw[:end].decode("ascii", errors="replace").splitlines()
    if not lines or lines[0] != MAGIC:
        found = lines[0] if lines else "<empty>"
        raise ValueError(
            f"{path}: bad magic: found {found!r}, expected {MAGIC!r}")
    meta = {}
    for token in lines[1].split():
        key, _, val = token.partition("=")
        meta[key] = val
    return meta, end + 2


def load_profile(path, grid: Grid | None = None) -> Profile:
    """Read a profile file; optionally resample onto a consumer grid.

    A grid mismatch is never silent: the profile is linearly resampled and
    the round-trip interpolation error is recorded in ``meta``.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    header, offset = _parse_header(raw, path)
    try:
        L = float(header["L"])
        n = int(header["n"])
        H = float(header["H"])
        c = float(header["c"])
        nu = float(header["nu"])
        background = header["background"]
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed header fields: {exc}") from exc
    payload = raw[offset:]
    if len(payload) != 8 * n:
        raise ValueError(
            f"{path}: truncated payload: {len(payload)} bytes, "
            f"expected {8 * n}")
    values = np.frombuffer(payload, dtype="<f8").astype(float)
    source = Grid(L, n)
    meta = {"source_path": os.fspath(path)}
    if grid is not None and grid != source:
        xs = np.concatenate([source.x, [source.L]])
        vs = np.concatenate([values, [values[0]]])
        resampled = np.interp(grid.x, xs, vs)
        back = np.interp(source.x, np.concatenate([grid.x, [grid.L]]),
                         np.concatenate([resampled, [resampled[0]]]))
        meta["resampled_from"] = (L, n)
        meta["resample_error"] = float(np.max(np.abs(back - values)))
        source, values = grid, resampled
    theta = Field(source, values, background)
    res = float(l2_norm(source, traveling_residual(source, theta, c, nu, H)))
    return Profile(theta, H, c, nu, res, meta)


# ---------------------------------------------------------------------------
# tabular reports


def _cell(value):
    """One value -> list of (suffix, text) columns; complex splits in two."""
    if isinstance(value, (complex, np.complexfloating)):
        return [("_re", _fmt(value.real)), ("_im", _fmt(value.imag))]
    if isinstance(value, (bool, np.bool_)):
        return [("", "true" if value else "false")]
    if isinstance(value, (float, np.floating)):
        return [("", _fmt(value))]
    if isinstance(value, (int, np.integer)):
        return [("", str(int(value)))]
    return [("", str(value))]


def _rows_of(record):
    """Normalize a report object to (name, list-of-ordered-dicts)."""
    if isinstance(record, SpectrumReport):
        return "spectrum", [
            {"index": i, "re": lam.real, "im": lam.imag}
            for i, lam in enumerate(record.eigenvalues)
        ]
    if isinstance(record, SweepResult):
        record = record.samples
    if isinstance(record, SimTrace):
        return "trace", [
            {"t": record.times[i],
             "residual_H1": record.residual_H1[i],
             "wall_position": record.wall_position[i],
             "s": record.s[i],
             "energy": record.energy[i],
             "v_norm": record.v_norm[i],
             "defect": record.defect[i]}
            for i in range(len(record.times))
        ]
    if isinstance(record, (list, tuple)):
        if record and isinstance(record[0], ResolventSample):
            return "resolvent", [
                {"re_lambda": s.lam.real, "im_lambda": s.lam.imag,
                 "norm_inv": s.norm_inv,
                 "norm_composed": (np.nan if s.norm_composed is None
                                   else s.norm_composed),
                 "region": s.region}
                for s in record
            ]
        if record and dataclasses.is_dataclass(record[0]):
            return "records", [_flatten(dataclasses.asdict(r)) for r in record]
        if record and isinstance(record[0], dict):
            return "records", [_flatten(r) for r in record]
        return "records", list(record)
    if dataclasses.is_dataclass(record):
        return "record", [_flatten(dataclasses.asdict(record))]
    if isinstance(record, dict):
        return "record", [_flatten(record)]
    raise TypeError(f"cannot serialize report of type {type(record).__name__}")


def _flatten(d: dict) -> dict:
    out = {}
    for key, value in d.items():
        if isinstance(value, dict):
            for k2, v2 in _flatten(value).items():
                out[f"{key}.{k2}"] = v2
        elif isinstance(value, np.ndarray):
            for i, v in enumerate(value.ravel()):
                out[f"{key}[{i}]"] = complex(v) if np.iscomplexobj(value) else float(v)
        else:
            out[key] = value
    return out


def _json_value(value):
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if np.isfinite(v) else repr(v)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return str(value)


def write_report(record, fmt: str, path) -> None:
    """Serialize a report record (or list of records) to csv or json-lines.

    CSV carries a header row; complex values become re,im column pairs; all
    floats are written with 17 significant digits.
    """
    if fmt not in ("csv", "json-lines"):
        raise ValueError(f"format must be 'csv' or 'json-lines', got {fmt!r}")
    _, rows = _rows_of(record)
    buf = io.StringIO()
    if fmt == "csv":
        if rows:
            header, cells = [], []
            for key, value in rows[0].items():
                for suffix, _ in _cell(value):
                    header.append(f"{key}{suffix}")
            buf.write(",".join(header) + "\n")
            for row in rows:
                cells = [text for value in row.values()
                         for _, text in _cell(value)]
                buf.write(",".join(cells) + "\n")
    else:
        for row in rows:
            payload = {k: _json_value(v) for k, v in row.items()}
            buf.write(json.dumps(payload, sort_keys=True) + "\n")
    try:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
