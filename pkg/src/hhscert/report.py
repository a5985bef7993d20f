"""Structured, byte-stable report documents.

A report is a JSON object with sorted keys and a fixed layout:

    {"format": "hhscert-report", "version": 1, "command": ..., "inputs": {...},
     "status": "pass" | "fail" | "partial", "exit_code": 0 | 1 | 2, "result": {...}}

Numbers are integers or exact rationals written "p/q"; numpy scalars and
arrays, fractions, tuples and sets are normalised before writing so that
repeated runs produce identical bytes.
"""
from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from typing import Any

import numpy as np

REPORT_FORMAT = "hhscert-report"
REPORT_VERSION = 1
STATUS_CODES = {"pass": 0, "fail": 1, "partial": 2}
MALFORMED = 3


def normalise(obj: Any) -> Any:
    """Plain JSON types only; floats are refused to keep output exact."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (float, np.floating)):
        raise TypeError("floating point value in a report; use integers or Fractions")
    if isinstance(obj, dict):
        return {str(k): normalise(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted((normalise(v) for v in obj), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [normalise(v) for v in (obj.tolist() if isinstance(obj, np.ndarray) else obj)]
    if hasattr(obj, "to_dict"):
        return normalise(obj.to_dict())
    return str(obj)


def make_report(command: str, inputs: dict, status: str, result: Any) -> dict:
    if status not in STATUS_CODES:
        raise ValueError(f"unknown status {status!r}")
    return {"format": REPORT_FORMAT, "version": REPORT_VERSION, "command": command,
            "inputs": normalise(inputs), "status": status, "exit_code": STATUS_CODES[status],
            "result": normalise(result)}


def error_report(command: str, inputs: dict, message: str) -> dict:
    return {"format": REPORT_FORMAT, "version": REPORT_VERSION, "command": command,
            "inputs": normalise(inputs), "status": "malformed", "exit_code": MALFORMED,
            "result": {"error": message}}


def dumps(report: dict, compact: bool = False) -> str:
    if compact:
        return json.dumps(report, sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n"
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def schema() -> dict:
    return json.loads(resources.files("hhscert").joinpath("report.schema.json").read_text())


def validate(report: dict) -> list[str]:
    """Light structural check against the schema's required keys and enums."""
    sch = schema()
    errs = []
    for key in sch["required"]:
        if key not in report:
            errs.append(f"missing {key}")
    props = sch["properties"]
    if report.get("format") != props["format"]["const"]:
        errs.append("wrong format tag")
    if report.get("status") not in props["status"]["enum"]:
        errs.append("bad status")
    if report.get("exit_code") not in props["exit_code"]["enum"]:
        errs.append("bad exit code")
    return errs
