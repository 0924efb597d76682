"""
JSON serialisation helpers for reports and artefacts.
"""

import json
from dataclasses import asdict, is_dataclass
from enum import Enum
from json import JSONEncoder
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel


class ReportJsonEncoder(JSONEncoder):
    """
    JSON encoder for the value types that appear in run reports: pydantic
    models, dataclasses, numpy scalars and arrays, paths and exceptions.
    """

    def default(self, o: Any) -> Any:
        if isinstance(o, BaseModel):
            return o.model_dump(mode="json")
        if is_dataclass(o) and not isinstance(o, type):
            return asdict(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, Path):
            return o.as_posix()
        if isinstance(o, Enum):
            return o.value
        if isinstance(o, Exception):
            return {
                "error_type": type(o).__name__,
                "message": str(o),
                "args": [str(a) for a in o.args],
            }
        return super().default(o)


def canonical_json(obj: Any) -> str:
    """Stable JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, cls=ReportJsonEncoder, sort_keys=True, indent=2) + "\n"


def to_serializable(obj: Any) -> Any:
    """Plain lists, dicts and scalars for any report value."""
    return json.loads(json.dumps(obj, cls=ReportJsonEncoder))
