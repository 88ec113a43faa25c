"""Flat ``key = value`` run configuration files.

Blank lines and lines starting with ``#`` are ignored; trailing ``# ...``
comments are stripped. Every key may appear once. Errors name the file and
line number.
"""

import os

OUTPUT_ROOT_ENV = "VECTRANS_OUTPUT_ROOT"


class ConfigError(ValueError):
    def __init__(self, message, path=None, line=None):
        where = f"{path or '<config>'}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean (on/off), got {text!r}")


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise ValueError(f"expected a positive number, got {text!r}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise ValueError(f"expected a non-negative number, got {text!r}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise ValueError(f"expected a positive integer, got {text!r}")
    return v


def _int_list(text):
    vals = [_positive_int(p) for p in text.replace(",", " ").split()]
    if not vals:
        raise ValueError("expected a list of positive integers")
    return vals


def _float_list(text):
    return [_nonneg_float(p) for p in text.replace(",", " ").split()]


def _choice(*options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {t!r}")
        return t

    return parse


def _string(text):
    t = text.strip()
    if not t:
        raise ValueError("expected a non-empty value")
    return t


SCHEME = _choice("benchmark", "recovered", "vorticity")
GEOMETRY = _choice("bilinear", "exact")

TRANSPORT_KEYS = {
    "case": _choice("cylinder", "sphere"),
    "scheme": SCHEME,
    "n": _positive_int,
    "ladder": _int_list,
    "dt": _positive_float,
    "paper_dt": _bool,
    "supg": _bool,
    "lambda": _nonneg_float,
    "geometry": GEOMETRY,
    "out": _string,
    "vtk": _bool,
    "snapshots": _float_list,
    "time_check": _bool,
}

SWE_KEYS = {
    "case": _choice("williamson2", "galewsky"),
    "scheme": SCHEME,
    "n": _positive_int,
    "ladder": _int_list,
    "dt": _positive_float,
    "paper_dt": _bool,
    "days": _positive_float,
    "supg": _bool,
    "lambda": _nonneg_float,
    "geometry": GEOMETRY,
    "out": _string,
    "vtk": _bool,
    "snapshot_days": _float_list,
    "diag_every": _positive_int,
    "outer": _positive_int,
    "inner": _positive_int,
}


def parse_config_text(text, schema, path=None):
    """Parse configuration text into {key: value}, validating against ``schema``."""
    out = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", path, lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}; allowed keys: {', '.join(sorted(schema))}", path, lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", path, lineno)
        try:
            out[key] = schema[key](value)
        except ValueError as exc:
            raise ConfigError(f"invalid value for {key!r}: {exc}", path, lineno) from None
        lines[key] = lineno
    return out


def load_config(path, schema):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", path) from None
    return parse_config_text(text, schema, path)


def resolve_output_dir(out=None):
    """Output directory: relative paths are placed under $VECTRANS_OUTPUT_ROOT when set."""
    root = os.environ.get(OUTPUT_ROOT_ENV)
    out = out or "results"
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    os.makedirs(out, exist_ok=True)
    return out
