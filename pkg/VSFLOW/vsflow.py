#!/usr/bin/env python3
# Variably saturated flow command line
# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
#
# Text frontend of the VSFLOW module: results, warnings and errors are printed
# as indented "key: value" lines. Everything else lives in vsflow_impl.

import shutil
import sys
import textwrap

import VSFLOW

try:
    import vsflow_impl
except (SystemError, ModuleNotFoundError):
    # running from the source tree
    from VSFLOW import vsflow_impl


def _scalar(value):
    if isinstance(value, float):
        return "%.6g" % value
    return str(value)


def _is_number_list(value):
    return isinstance(value, (list, tuple)) and all(
        isinstance(item, (float, int)) for item in value
    )


class TextFormatter(vsflow_impl.OutputFormatter):
    """Render the JSON-alike results of vsflow_impl for a terminal. Numbers
    are shortened to six significant digits, lists of numbers are joined by
    commas and {'verbatim': text} is printed as is."""

    def __init__(self):
        self.width = max(40, shutil.get_terminal_size()[0] - 2)

    def __lines(self, text, prefix, indent):
        wrapper = textwrap.TextWrapper(
            width=max(20, self.width - indent),
            initial_indent=" " * indent + prefix,
            subsequent_indent=" " * (indent + 2),
        )
        return wrapper.wrap(text) or [" " * indent + prefix.rstrip()]

    def render(self, obj, indent=0):
        """Return the lines of `obj` (nested dicts and lists of strings and
        numbers)."""
        if obj is None or obj == [] or obj == {}:
            return []
        if _is_number_list(obj):
            return self.__lines(", ".join(_scalar(i) for i in obj), "", indent)
        if isinstance(obj, (str, bool, float, int)):
            return self.__lines(_scalar(obj), "", indent)
        if isinstance(obj, (list, tuple)):
            return [line for item in obj for line in self.render(item, indent)]
        if "verbatim" in obj:
            return [" " * indent + line for line in obj["verbatim"].split("\n")]
        lines = []
        for key, value in obj.items():
            if _is_number_list(value):
                value = ", ".join(_scalar(i) for i in value)
            if isinstance(value, (str, bool, float, int)):
                lines += self.__lines(_scalar(value), "%s: " % key, indent)
            else:
                lines.append("%s%s:" % (" " * indent, key))
                lines += self.render(value, indent + 2)
        return lines

    def __write_warnings(self):
        warnings = self.get_warnings()
        if not warnings:
            return
        text = "".join(VSFLOW.common.format_warning(w) for w in warnings)
        sys.stderr.write("Warnings:\n")
        sys.stderr.write(textwrap.indent(text, "  "))

    def emit_result(self, result):
        self.__write_warnings()
        print("\n".join(self.render(result)).rstrip())

    def emit_error(self, error):
        self.__write_warnings()
        if isinstance(error, str):
            error = {"message": error}
        error = dict(error)
        error["message"] = {"verbatim": error["message"]}
        sys.stderr.write("\n".join(self.render({"error": error})) + "\n")

    def emit_usage(self, usage, error=None):
        if error:
            if not error.lower().startswith("error"):
                error = "Error: " + error
            print(error.rstrip(), end="\n\n")
        print(usage)


def main():
    vsflow_impl.main(TextFormatter()).run(sys.argv)


if __name__ == "__main__":
    main()
