"""CSV and JSON readers and writers.

Formats:

* net: header ``# delta_net d=<d> delta=<delta>``, one point per row;
* matrix: header ``# symmatrix d=<d>``, d rows of d values;
* spectrum: eigenvalues on the first row, then the eigenvector matrix with
  eigenvectors as columns;
* sample: no header, n rows of d values.

Infinite and NaN floats are written to JSON as the strings ``"inf"``,
``"-inf"`` and ``"nan"`` so that reports stay strict JSON.
"""

import io as _io
import json
import math
import re

import numpy as np

from .errors import ParameterError
from .net import DeltaNet
from .spectral import Spectrum, as_symmetric

_NET_HEADER = re.compile(r"#\s*delta_net\s+d=(\d+)\s+delta=([0-9.eE+-]+)")
_MAT_HEADER = re.compile(r"#\s*symmatrix\s+d=(\d+)")


def _fmt(x):
    return repr(float(x))


def _rows_to_text(rows):
    return "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)


def _write(path, text):
    if path is None or path == "-":
        return text
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def _read_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParameterError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _parse_rows(lines, path):
    buf = _io.StringIO("\n".join(lines))
    try:
        data = np.loadtxt(buf, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ParameterError(f"{path}: {exc}") from exc
    return data


def write_net_csv(net, path=None):
    head = f"# delta_net d={net.dim} delta={net.delta!r}\n"
    return _write(path, head + _rows_to_text(net.points))


def read_net_csv(path):
    text = _read_text(path).splitlines()
    if not text or not (match := _NET_HEADER.match(text[0].strip())):
        raise ParameterError(f"{path}: missing '# delta_net d=<d> delta=<delta>' header")
    d, delta = int(match.group(1)), float(match.group(2))
    pts = _parse_rows(text[1:], path)
    if pts.shape[1] != d:
        raise ParameterError(f"{path}: rows have {pts.shape[1]} columns, header says {d}")
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ParameterError(f"{path}: net points must be unit vectors")
    return DeltaNet(d, delta, pts)


def write_matrix_csv(m, path=None):
    m = np.asarray(m, dtype=float)
    return _write(path, f"# symmatrix d={m.shape[0]}\n" + _rows_to_text(m))


def read_matrix_csv(path):
    text = _read_text(path).splitlines()
    if not text or not (match := _MAT_HEADER.match(text[0].strip())):
        raise ParameterError(f"{path}: missing '# symmatrix d=<d>' header")
    d = int(match.group(1))
    m = _parse_rows(text[1:], path)
    if m.shape != (d, d):
        raise ParameterError(f"{path}: expected a {d}x{d} matrix, got {m.shape}")
    return as_symmetric(m, path)


def write_spectrum_csv(spec, path=None):
    rows = [spec.eigenvalues] + list(spec.eigenvectors)
    return _write(path, _rows_to_text(rows))


def read_spectrum_csv(path):
    data = _parse_rows(_read_text(path).splitlines(), path)
    d = data.shape[1]
    if data.shape[0] != d + 1:
        raise ParameterError(f"{path}: expected {d + 1} rows, got {data.shape[0]}")
    return Spectrum(data[0].copy(), data[1:].copy())


def read_sample_csv(path):
    lines = [ln for ln in _read_text(path).splitlines() if ln.strip()]
    if not lines:
        raise ParameterError(f"{path}: empty sample")
    x = _parse_rows(lines, path)
    if not np.all(np.isfinite(x)):
        raise ParameterError(f"{path}: non-finite values")
    return x


def write_sample_csv(x, path=None):
    return _write(path, _rows_to_text(np.atleast_2d(x)))


def to_jsonable(obj):
    """Recursively convert numpy values and non-finite floats for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj):
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path=None):
    return _write(path, dumps(obj))


def read_json(path):
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: invalid JSON ({exc.msg})") from exc
