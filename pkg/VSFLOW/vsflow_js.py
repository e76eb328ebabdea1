#!/usr/bin/env python3
"""JSON frontend of vsflow: every result, error and usage message is printed as
one JSON document on stdout. The document layout is described in
doc/JSON api.md."""
# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.

import json
import os
import sys

try:
    import vsflow_impl
except (SystemError, ModuleNotFoundError):
    # running from the source tree
    from VSFLOW import vsflow_impl

# callers of the API get full tracebacks for unexpected errors
os.environ.setdefault("DEBUG", "1")


def unverbatim(obj):
    """Replace {'verbatim': text} by text, recursively."""
    if isinstance(obj, dict):
        if "verbatim" in obj:
            return obj["verbatim"]
        return {key: unverbatim(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [unverbatim(item) for item in obj]
    return obj


class JsonFormatter(vsflow_impl.OutputFormatter):
    """Each emitted document carries the collected warnings, if any, next to
    its "result", "error" or "usage" key."""

    def __init__(self, stream=None):
        self.stream = stream or sys.stdout

    def _write(self, document):
        json.dump(document, self.stream, indent=2, sort_keys=True)
        self.stream.write("\n")

    def _document(self, key, value):
        document = {key: unverbatim(value)}
        warnings = self.get_warnings()
        if warnings:
            document["warnings"] = warnings
        self._write(document)

    def emit_result(self, result):
        self._document("result", result)

    def emit_error(self, error):
        self._document("error", error)

    def emit_usage(self, usage, error=None):
        document = {"usage": usage}
        if error:
            document["error"] = error.rstrip()
        self._write(document)


def main():
    vsflow_impl.main(JsonFormatter()).run(sys.argv)


if __name__ == "__main__":
    main()
