# utils/logging_utils.py
# Logging Setup Module
# Line-delimited JSON records on standard error for the batch pipeline

import json
import logging
import sys

_HANDLER_NAME = "robus-jsonl"


class JsonLineFormatter(logging.Formatter):
    """
    Render each record as one JSON object per line.
    Extra fields passed as extra={"context": {...}} are merged into the object.
    """

    def format(self, record):
        payload = {
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        context = getattr(record, "context", None)
        if isinstance(context, dict):
            for key, value in context.items():
                payload.setdefault(key, value)
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, sort_keys=True, default=str)


def configure_logging(level="INFO"):
    """Install the JSON stderr handler on the root logger (safe to call repeatedly)"""
    root = logging.getLogger()
    root.setLevel(level.upper() if isinstance(level, str) else level)

    for handler in root.handlers:
        if handler.get_name() == _HANDLER_NAME:
            return handler

    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(JsonLineFormatter())
    root.addHandler(handler)
    return handler
