"""On-disk formats: matx matrices, RPRM checkpoints, JSONL trajectories.

matx text format
    Header line ``matx <rows> <cols>`` followed by rows*cols
    whitespace-separated decimal values in row-major order.

RPRM checkpoint (binary, little-endian)
    magic ``RPRM`` | version u32 | cell kind u8 (0 rnn, 1 lstm) |
    input_size u32 | hidden_size u32 | class_count u32 |
    five matrices (W_xh, W_hh, W_hy, b_h as 1 x rows, b_y as 1 x c),
    each ``rows u32 | cols u32 | rows*cols f64 row-major`` |
    two masks (W_xh, W_hh), each ``rows u32 | cols u32`` followed by the
    row-major boolean grid packed 8 bits per byte, LSB first.

Trajectory files are JSON lines, one record per line; non-finite floats
are serialized as the strings "inf", "-inf", "nan".
"""

from __future__ import annotations

import json
import math
import struct

import numpy as np

from .errors import DomainError, FormatError
from .nets import LSTM, PruneMask, RecurrentParams, RNN, gate_rows

CHECKPOINT_MAGIC = b"RPRM"
CHECKPOINT_VERSION = 1
_CELL_CODES = {RNN: 0, LSTM: 1}
_CELL_NAMES = {code: name for name, code in _CELL_CODES.items()}


def save_matrix_text(M: np.ndarray, path) -> None:
    M = np.asarray(M, dtype=np.float64)
    with open(path, "w") as f:
        f.write(f"matx {M.shape[0]} {M.shape[1]}\n")
        for row in M:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_matrix_text(path) -> np.ndarray:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 3 or header[0] != "matx":
            raise FormatError(f"{path}: expected header 'matx <rows> <cols>'")
        try:
            rows, cols = int(header[1]), int(header[2])
        except ValueError:
            raise FormatError(f"{path}: non-integer dimensions in header") from None
        if rows < 1 or cols < 1:
            raise FormatError(f"{path}: dimensions must be >= 1")
        tokens = f.read().split()
    if len(tokens) != rows * cols:
        raise FormatError(f"{path}: expected {rows * cols} values, found {len(tokens)}")
    try:
        values = np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return values.reshape(rows, cols)


def _write_matrix(f, M: np.ndarray) -> None:
    M = np.ascontiguousarray(np.atleast_2d(M), dtype="<f8")
    f.write(struct.pack("<II", M.shape[0], M.shape[1]))
    f.write(M.tobytes())


def _read_matrix(f, path) -> np.ndarray:
    head = f.read(8)
    if len(head) != 8:
        raise FormatError(f"{path}: truncated matrix header at byte offset {f.tell() - len(head)}")
    rows, cols = struct.unpack("<II", head)
    data = f.read(rows * cols * 8)
    if len(data) != rows * cols * 8:
        raise FormatError(f"{path}: truncated matrix data at byte offset {f.tell() - len(data)}")
    return np.frombuffer(data, dtype="<f8").reshape(rows, cols).copy()


def _write_mask(f, mask: np.ndarray) -> None:
    mask = np.asarray(mask, dtype=bool)
    f.write(struct.pack("<II", mask.shape[0], mask.shape[1]))
    f.write(np.packbits(mask.ravel(), bitorder="little").tobytes())


def _read_mask(f, path) -> np.ndarray:
    head = f.read(8)
    if len(head) != 8:
        raise FormatError(f"{path}: truncated mask header at byte offset {f.tell() - len(head)}")
    rows, cols = struct.unpack("<II", head)
    n_bytes = (rows * cols + 7) // 8
    data = f.read(n_bytes)
    if len(data) != n_bytes:
        raise FormatError(f"{path}: truncated mask data at byte offset {f.tell() - len(data)}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    return bits[: rows * cols].astype(bool).reshape(rows, cols)


def save_checkpoint(path, params: RecurrentParams, mask: PruneMask) -> None:
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<IB", CHECKPOINT_VERSION, _CELL_CODES[params.cell_kind]))
        f.write(struct.pack("<III", params.input_size, params.hidden_size, params.class_count))
        for M in (params.w_xh, params.w_hh, params.w_hy, params.b_h, params.b_y):
            _write_matrix(f, M)
        _write_mask(f, mask.w_xh)
        _write_mask(f, mask.w_hh)


def load_checkpoint(path) -> tuple[RecurrentParams, PruneMask]:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r} at byte offset 0")
        head = f.read(5)
        if len(head) != 5:
            raise FormatError(f"{path}: truncated header at byte offset 4")
        version, cell_code = struct.unpack("<IB", head)
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if cell_code not in _CELL_NAMES:
            raise FormatError(f"{path}: unknown cell kind code {cell_code}")
        sizes = f.read(12)
        if len(sizes) != 12:
            raise FormatError(f"{path}: truncated sizes at byte offset 9")
        input_size, hidden_size, class_count = struct.unpack("<III", sizes)
        cell_kind = _CELL_NAMES[cell_code]
        w_xh = _read_matrix(f, path)
        w_hh = _read_matrix(f, path)
        w_hy = _read_matrix(f, path)
        b_h = _read_matrix(f, path)[0]
        b_y = _read_matrix(f, path)[0]
        mask_xh = _read_mask(f, path)
        mask_hh = _read_mask(f, path)
    rows = gate_rows(cell_kind, hidden_size)
    expected = {
        "W_xh": (w_xh.shape, (rows, input_size)),
        "W_hh": (w_hh.shape, (rows, hidden_size)),
        "W_hy": (w_hy.shape, (class_count, hidden_size)),
        "b_h": (b_h.shape, (rows,)),
        "b_y": (b_y.shape, (class_count,)),
        "mask_xh": (mask_xh.shape, (rows, input_size)),
        "mask_hh": (mask_hh.shape, (rows, hidden_size)),
    }
    for name, (got, want) in expected.items():
        if got != want:
            raise FormatError(f"{path}: {name} has shape {got}, expected {want}")
    params = RecurrentParams(
        cell_kind=cell_kind,
        input_size=input_size,
        hidden_size=hidden_size,
        class_count=class_count,
        w_xh=w_xh,
        w_hh=w_hh,
        w_hy=w_hy,
        b_h=b_h,
        b_y=b_y,
    )
    return params, PruneMask(mask_xh, mask_hh)


def sanitize_json(value):
    """Replace non-finite floats with the strings 'inf'/'-inf'/'nan'."""
    if isinstance(value, dict):
        return {k: sanitize_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize_json(v) for v in value]
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def restore_json(value):
    """Inverse of sanitize_json for the non-finite markers."""
    if isinstance(value, dict):
        return {k: restore_json(v) for k, v in value.items()}
    if isinstance(value, list):
        return [restore_json(v) for v in value]
    if value == "inf":
        return math.inf
    if value == "-inf":
        return -math.inf
    if value == "nan":
        return math.nan
    return value


def dump_json_line(record: dict) -> str:
    """Canonical single-line JSON (sorted keys, compact separators)."""
    return json.dumps(sanitize_json(record), sort_keys=True, separators=(",", ":"))


def parse_json_line(line: str, path="<string>", line_no: int = 0):
    try:
        return restore_json(json.loads(line))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {line_no}: {exc}") from None
