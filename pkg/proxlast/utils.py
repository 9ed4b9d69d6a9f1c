# -*- coding: utf-8 -*-
"""Common functions for reports, manifests and error payloads"""

# python stuff
import datetime
import hashlib
import json
import os
import sys
import tempfile
import traceback

# 3rd party stuff
import numpy as np


class NumpyJSONEncoder(json.JSONEncoder):
    """JSON encoder that handles numpy arrays, numpy scalars and datetime objects."""

    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, (datetime.datetime, datetime.date)):
            return o.isoformat()
        if isinstance(o, (set, frozenset)):
            return sorted(o)

        return super().default(o)


def to_json(obj, indent: int = 2) -> str:
    """Serialize to JSON with sorted keys, so that equal inputs yield equal bytes."""
    return json.dumps(obj, cls=NumpyJSONEncoder, sort_keys=True, indent=indent)


def stable_digest(obj) -> str:
    """sha256 of the compact sorted-key JSON form of obj."""
    payload = json.dumps(obj, cls=NumpyJSONEncoder, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def atomic_write_text(path: str, text: str) -> str:
    """
    Write text to path through a temp file in the same directory followed by a rename.

    Readers never observe a partially written file.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as file:
            file.write(text)
            file.flush()
            os.fsync(file.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


def exception_report(exception) -> dict:
    """
    Generate a standardized error dictionary that includes
    the Python exception type and stack trace.

    exception: a descendant of Python Exception class
    """
    exc_info = sys.exc_info()
    retval = {
        "error": str(exception),
        "type": type(exception).__name__,
        "description": "".join(traceback.format_exception(*exc_info)),
    }

    return retval


def recursive_sort_dict(d):
    """Recursively sort a dictionary by key."""
    return {k: recursive_sort_dict(v) if isinstance(v, dict) else v for k, v in sorted(d.items())}
