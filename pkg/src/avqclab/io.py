"""JSON and CSV formats with atomic file writes.

Matrices are nested lists of ``[re, im]`` pairs. A channel is
``{"dimIn", "dimOut", "kraus": [matrix, ...]}`` and an AVQC is
``{"label", "channels": [channel, ...]}``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .avqc import AVQC
from .channels import QuantumChannel
from .errors import AvqcError, ValidationError


class IOFailure(AvqcError):
    exit_code = 4


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(obj, where: str) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: matrix entries must be [re, im] number pairs") from exc
    if a.ndim != 3 or a.shape[2] != 2:
        raise ValidationError(f"{where}: expected an array of shape (rows, cols, 2), got {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def channel_to_json(ch: QuantumChannel) -> dict:
    return {"dimIn": ch.dim_in, "dimOut": ch.dim_out, "kraus": [matrix_to_json(k) for k in ch.kraus]}


def channel_from_json(obj, where: str = "channel") -> QuantumChannel:
    if not isinstance(obj, dict) or not {"dimIn", "dimOut", "kraus"} <= obj.keys():
        raise ValidationError(f"{where}: needs keys dimIn, dimOut, kraus")
    d_in, d_out = obj["dimIn"], obj["dimOut"]
    if not (isinstance(d_in, int) and isinstance(d_out, int) and d_in > 0 and d_out > 0):
        raise ValidationError(f"{where}: dimIn and dimOut must be positive integers")
    if not isinstance(obj["kraus"], list) or not obj["kraus"]:
        raise ValidationError(f"{where}: kraus must be a non-empty list")
    ks = []
    for k, m in enumerate(obj["kraus"]):
        a = matrix_from_json(m, f"{where}.kraus[{k}]")
        if a.shape != (d_out, d_in):
            raise ValidationError(f"{where}.kraus[{k}]: shape {a.shape} but dimOut x dimIn is {(d_out, d_in)}")
        ks.append(a)
    try:
        return QuantumChannel(np.asarray(ks))
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def avqc_to_json(avqc: AVQC) -> dict:
    return {"label": avqc.label, "channels": [channel_to_json(c) for c in avqc.channels]}


def avqc_from_json(obj) -> AVQC:
    if not isinstance(obj, dict) or "channels" not in obj:
        raise ValidationError("AVQC: needs a 'channels' list")
    chs = obj["channels"]
    if not isinstance(chs, list) or not chs:
        raise ValidationError("AVQC: 'channels' must be a non-empty list")
    members = tuple(channel_from_json(c, f"channels[{i}]") for i, c in enumerate(chs))
    return AVQC(members, str(obj.get("label", "")))


def parse_json_text(text: str, source: str = "<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror}") from exc


def load_avqc(path) -> AVQC:
    return avqc_from_json(parse_json_text(read_text(path), str(path)))


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory and rename it into place."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except (OSError, UnboundLocalError):
            pass
        raise IOFailure(f"cannot write {path}: {exc.strerror}") from exc


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def csv_text(header, rows) -> str:
    """CSV with a header row, 12 significant digits and LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(io.StringIO(read_text(path))))
    return rows[0], rows[1:]
