"""Plain-text ``key = value`` files used for ion models, calibration and CLI config."""
from pathlib import Path

from .errors import ParseError


def parse_kv(text, path=None):
    """Parse ``key = value`` lines. Blank lines and ``#`` comments are skipped.

    Values stay strings; callers convert. Duplicate keys keep the last value.
    """
    out = {}
    for row_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", path, row_no)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("empty key", path, row_no)
        out[key] = value
    return out


def read_kv(path):
    path = Path(path)
    return parse_kv(path.read_text(), path)


def float_values(mapping, path=None):
    out = {}
    for key, value in mapping.items():
        try:
            out[key] = float(value)
        except ValueError:
            raise ParseError(f"value for {key!r} is not a number: {value!r}", path) from None
    return out


def format_kv(mapping):
    return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n" for k, v in mapping.items())
