"""Deterministic CSV and JSON emitters.

Identical inputs must produce byte-identical files, so floats are
always formatted with %.17g (17 significant digits round-trips any
double) and key order is fixed by construction rather than sorting.
"""

import io

import numpy as np

RESULT_SCHEMA = "scatrel-result/1"


def fmt(x):
    """Fixed float formatting; integers and bools pass through."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _csv_field(value):
    if isinstance(value, str):
        if any(c in value for c in ',"\n'):
            return '"' + value.replace('"', '""') + '"'
        return value
    return fmt(value)


def write_csv(header, rows, stream):
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(_csv_field(v) for v in row) + "\n")


def _json_value(value, indent, out):
    pad = " " * indent
    if isinstance(value, dict):
        if not value:
            out.write("{}")
            return
        out.write("{\n")
        items = list(value.items())
        for i, (key, val) in enumerate(items):
            out.write(pad + '  "' + key + '": ')
            _json_value(val, indent + 2, out)
            out.write(",\n" if i + 1 < len(items) else "\n")
        out.write(pad + "}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        seq = list(value)
        if not seq:
            out.write("[]")
            return
        simple = all(
            isinstance(v, (int, float, bool, np.integer, np.floating)) for v in seq
        )
        if simple:
            out.write("[" + ", ".join(fmt(v) for v in seq) + "]")
            return
        out.write("[\n")
        for i, v in enumerate(seq):
            out.write(pad + "  ")
            _json_value(v, indent + 2, out)
            out.write(",\n" if i + 1 < len(seq) else "\n")
        out.write(pad + "]")
    elif isinstance(value, str):
        escaped = (
            value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        )
        out.write('"' + escaped + '"')
    elif value is None:
        out.write("null")
    else:
        out.write(fmt(value))


def write_json(doc, stream):
    _json_value(doc, 0, stream)
    stream.write("\n")


def render_json(doc):
    buf = io.StringIO()
    write_json(doc, buf)
    return buf.getvalue()


def render_csv(header, rows):
    buf = io.StringIO()
    write_csv(header, rows, buf)
    return buf.getvalue()
