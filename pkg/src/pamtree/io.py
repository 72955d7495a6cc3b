"""Artifact files: atomic writes and embedded provenance metadata.

CSV artifacts start with one ``# {json}`` metadata line followed by the header;
JSON artifacts carry the metadata under the ``"meta"`` key.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile

SCHEMA_VERSION = 1


def code_version():
    from . import __version__

    return __version__


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def metadata(config, seed):
    return {"schema_version": SCHEMA_VERSION, "config_hash": config_hash(config),
            "seed": seed, "code_version": code_version()}


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, csv_text, meta):
    line = "# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n"
    return atomic_write(path, line + csv_text)


def write_json(path, payload, meta):
    doc = {"meta": meta, **payload}
    return atomic_write(path, json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n")


def read_artifact(path):
    """Return ``(meta, kind, content)``: for CSV the header and data lines, for JSON the document."""
    with open(path, newline="") as fh:
        text = fh.read()
    if path.endswith(".json"):
        doc = json.loads(text)
        return doc.get("meta"), "json", doc
    lines = text.splitlines(keepends=True)
    meta = None
    if lines and lines[0].startswith("# "):
        meta = json.loads(lines[0][2:])
        lines = lines[1:]
    if not lines:
        return meta, "csv", ("", [])
    return meta, "csv", (lines[0], lines[1:])
