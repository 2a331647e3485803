"""Deterministic CSV/JSON serialization and run manifests.

All floating-point values are written with 17 significant digits so files
round-trip double precision exactly; row order is always input order, so
identical inputs produce byte-identical files regardless of worker count.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "fmt",
    "write_csv",
    "read_csv",
    "sha256_file",
    "RunManifest",
    "config_load",
    "ConfigError",
]


def fmt(value):
    """Render one cell: floats at 17 significant digits, ints verbatim."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.17g}"


def write_csv(path, columns, rows, comments=()):
    """Write a CSV with a '#'-prefixed comment block and a header row."""
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Read a CSV written by write_csv: (comments, columns, string cells)."""
    comments, columns, rows = [], None, []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif columns is None:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    if columns is None:
        raise ValueError(f"{path}: no header row found")
    return comments, columns, rows


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce one run bit-identically."""

    command: str
    argv: list
    parameters: dict
    provenance: dict = field(default_factory=dict)
    code_version: str = ""
    wall_time_s: float = 0.0
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    _t0: float = field(default_factory=time.monotonic, repr=False)

    def record_input(self, path):
        self.inputs[str(path)] = sha256_file(path)

    def record_output(self, path):
        self.outputs[str(path)] = sha256_file(path)

    def write(self, path):
        self.wall_time_s = time.monotonic() - self._t0
        payload = {
            "command": self.command,
            "argv": self.argv,
            "parameters": self.parameters,
            "provenance": self.provenance,
            "code_version": self.code_version,
            "wall_time_s": self.wall_time_s,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


class ConfigError(ValueError):
    pass


def config_load(path, known_keys):
    """Load key=value settings from an INI-style file.

    Sections are optional (a bare key=value file is accepted). Unknown keys
    are rejected by name so typos never pass silently. Values are returned
    as strings; the CLI applies the same converters it uses for flags.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key not in known_keys:
                raise ConfigError(f"{path}: unknown key {key!r}")
            values[key] = value
    return values
