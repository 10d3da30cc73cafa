"""Report envelopes shared by every JSON-emitting command."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import jsonschema

from . import __version__

TOOL_NAME = "buchi-bellman"

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["tool", "config", "result"],
    "additionalProperties": False,
    "properties": {
        "tool": {
            "type": "object",
            "required": ["name", "version"],
            "additionalProperties": False,
            "properties": {"name": {"const": TOOL_NAME}, "version": {"type": "string"}},
        },
        "config": {
            "type": "object",
            "required": ["command", "argv", "inputs", "output", "format", "seed", "flags"],
            "additionalProperties": False,
            "properties": {
                "command": {"type": "string"},
                "argv": {"type": "array", "items": {"type": "string"}},
                "inputs": {"type": "object", "additionalProperties": {"type": "string"}},
                "output": {"type": "string"},
                "format": {"enum": ["json", "csv"]},
                "seed": {"type": ["integer", "null"]},
                "flags": {"type": "object"},
            },
        },
        "result": {"type": "object"},
    },
}


@dataclass
class RunConfig:
    """Everything needed to rerun a command: rerunning ``argv`` reproduces it."""

    command: str
    argv: list
    inputs: dict = field(default_factory=dict)
    output: str = "-"
    format: str = "json"
    seed: int | None = None
    flags: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def envelope(config: RunConfig, result: dict) -> dict:
    return {
        "tool": {"name": TOOL_NAME, "version": __version__},
        "config": config.as_dict(),
        "result": result,
    }


def validate_report(doc) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``doc`` is a well-formed report."""
    jsonschema.validate(doc, REPORT_SCHEMA)


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False)
