"""Python access to the stargen core: manifests, campaigns, reports, proposals."""

import json
import os

from . import _stargen
from ._stargen import StargenError

__all__ = [
    "StargenError",
    "canonical_manifest",
    "manifest_hash",
    "validate_manifest",
    "coverage",
    "registry_selfcheck",
    "categorize",
    "replay",
    "report",
    "propose",
]


def _text(doc):
    # Accepts a path, a JSON string, or an already-decoded dict.
    if isinstance(doc, dict):
        return json.dumps(doc)
    if isinstance(doc, os.PathLike) or (isinstance(doc, str) and not doc.lstrip().startswith(("{", "["))):
        with open(doc, encoding="utf-8") as f:
            return f.read()
    return doc


def _log_text(log):
    if isinstance(log, os.PathLike) or (isinstance(log, str) and "\n" not in log):
        with open(log, encoding="utf-8") as f:
            return f.read()
    return log


def canonical_manifest(manifest):
    return _stargen.canonical_manifest(_text(manifest))


def manifest_hash(manifest):
    return _stargen.manifest_hash(_text(manifest))


def validate_manifest(manifest):
    """List of diagnostics (dicts with code/subject/where/message); empty when valid."""
    return _stargen.validate_manifest(_text(manifest))


def coverage(manifest):
    return _stargen.coverage(_text(manifest))


def registry_selfcheck():
    return _stargen.registry_selfcheck()


def categorize(manifest, condition):
    """Category label ("S", "VB", ...) a condition derives relative to its base task."""
    return _stargen.categorize(_text(manifest), json.dumps(condition) if isinstance(condition, dict) else condition)


def replay(log):
    """Campaign state rebuilt from a log, as a dict."""
    return json.loads(_stargen.replay(_log_text(log)))


def report(log, manifest, format="csv", group=None):
    out = _stargen.report(_log_text(log), _text(manifest), format, group)
    return json.loads(out) if format.startswith("chart") else out


def propose(manifest, base_task, axis, mock_dir, count=3):
    """Draft conditions from the mock proposer backend."""
    return json.loads(_stargen.propose_mock(_text(manifest), base_task, axis, os.fspath(mock_dir), count))
