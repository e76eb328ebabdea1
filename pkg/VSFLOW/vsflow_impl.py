"""Shared core of the command-line frontends vsflow (text) and vsflow_js
(JSON). The frontends only supply an OutputFormatter; argument parsing, the
subcommands and the mapping of errors to exit codes live here."""
# pylint: disable=invalid-name
from abc import ABCMeta, abstractmethod
import argparse
import collections
import io
import os
import sys
import traceback

import VSFLOW.common
import VSFLOW.config
import VSFLOW.errors
import VSFLOW.factories
import VSFLOW.master
from VSFLOW.config import Strategy
from VSFLOW.constitutive import ContinuationFunctionKind
from VSFLOW.discretization import KrScheme

PROCNAME = os.path.basename(sys.argv[0])

# installs `_`
VSFLOW.common.setup_i18n()

MAIN_USAGE = _(
    """%s <command> <options>

Commands:

compare         - solve a problem with all strategies and tabulate the effort
example         - print a bundled example configuration
solve           - solve a steady-state problem
version         - print the program version

Run %s <command> -h for the options of a command. The verbosity of the log is
set with the environment variable RICHARDS_LOG (debug, info, warning).
"""
    % (PROCNAME, PROCNAME)
)

DEFAULT_OUTPUT = "results"
#: exit code of unexpected errors
EXIT_UNEXPECTED = VSFLOW.errors.VSFLOW_error.exit_code
EXIT_UNKNOWN_COMMAND = 127


class OutputFormatter(metaclass=ABCMeta):
    """Presentation of results, errors and usage. Results are JSON-alike:
    strings, numbers, lists and dicts. A dict {'verbatim': text} marks text
    which must be shown unchanged (tables, configuration files); a JSON
    frontend replaces it by the text itself."""

    @staticmethod
    def register_warning(warn):
        """Add a {'message': ..., detail: ...} mapping to the warning
        registry."""
        if not hasattr(warn, "__getitem__"):
            raise TypeError("a warning must be a mapping")
        if "message" not in warn:
            raise ValueError("a warning needs a message")
        details = dict(warn)
        VSFLOW.common.WarningRegistry().register_warning(
            details.pop("message"), **details
        )

    def get_warnings(self):
        """All warnings registered so far; the registry is emptied."""
        return VSFLOW.common.WarningRegistry().get_warnings()

    @abstractmethod
    def emit_error(self, error):
        """Show an error, a string or a mapping as produced by
        `VSFLOW_error.to_json`, together with pending warnings."""

    @abstractmethod
    def emit_result(self, result):
        """Show the result of a subcommand together with pending warnings."""

    @abstractmethod
    def emit_usage(self, usage, error=None):
        """Show the usage text, optionally after an error message."""


class HelpfulParser(argparse.ArgumentParser):
    """ArgumentParser which sends help and usage errors to an output formatter
    instead of writing them to the terminal."""

    def __init__(self, name, output_formatter, description=None):
        self.formatter = output_formatter
        super().__init__(prog=name, description=description)

    def print_help(self, file=None):
        if file is not None:
            super().print_help(file)
            return
        buffer = io.StringIO()
        super().print_help(buffer)
        self.formatter.emit_usage(buffer.getvalue())

    def error(self, message):
        buffer = io.StringIO()
        self.print_help(buffer)
        self.formatter.emit_usage(buffer.getvalue(), error="Error: " + message)
        sys.exit(2)


# pylint: disable=too-few-public-methods
class ErrorHandler:
    """with ErrorHandler(formatter): ...
    Report an exception through the formatter and exit: errors of the VSFLOW
    module with their own exit code, anything else with 119. A traceback is
    attached if the environment variable DEBUG is set."""

    def __init__(self, output_formatter):
        self.output_formatter = output_formatter

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_value, tb):
        if exc_type is None or issubclass(exc_type, SystemExit):
            return False
        if isinstance(exc_value, VSFLOW.errors.VSFLOW_error):
            error, exit_code = exc_value.to_json(), exc_value.exit_code
        else:
            error = {"message": "%s: %s" % (exc_type.__name__, exc_value)}
            exit_code = EXIT_UNEXPECTED
        if os.environ.get("DEBUG"):
            text = "".join(traceback.format_exception(exc_type, exc_value, tb))
            error["traceback"] = {"verbatim": text}
        self.output_formatter.emit_error(error)
        sys.exit(exit_code)


def add_solver_overrides(parser):
    parser.add_argument(
        "--kr-scheme",
        dest="kr_scheme",
        choices=[s.value for s in KrScheme],
        help=_("relative permeability on faces (overrides the configuration)"),
        default=None,
    )
    parser.add_argument(
        "--mesh-scale",
        dest="mesh_scale",
        type=int,
        metavar="N",
        help=_("refine the mesh N times in every direction with more than one cell"),
        default=None,
    )
    parser.add_argument(
        "-o",
        "--out",
        dest="out",
        metavar="DIRECTORY",
        help=_("output directory (default: %s)") % DEFAULT_OUTPUT,
        default=DEFAULT_OUTPUT,
    )
    parser.add_argument("config", help=_("problem configuration file"))


def read_configuration(path):
    if not os.path.isfile(path):
        raise VSFLOW.errors.ConfigurationError(_("file not found"), path)
    return VSFLOW.config.read_config(path)


class main:
    """main(formatter).run(sys.argv)
    Dispatch `<program> <command> ...` to the method handle_<command>, which
    returns the exit code (None meaning 0)."""

    def __init__(self, output_formatter):
        self.output_formatter = output_formatter

    def run(self, args):
        VSFLOW.common.setup_logging()
        if len(args) < 2:
            self.output_formatter.emit_usage(MAIN_USAGE)
            return
        command = args[1]
        handler = getattr(self, "handle_%s" % command.replace("-", "_"), None)
        if handler is None:
            self.output_formatter.emit_usage(
                MAIN_USAGE, _("Invalid command: %s") % command
            )
            sys.exit(EXIT_UNKNOWN_COMMAND)
        sys.exit(handler("%s %s" % (PROCNAME, command), args[2:]) or 0)

    def handle_solve(self, cmd, args):
        """Solve a problem configuration."""
        parser = HelpfulParser(
            cmd,
            self.output_formatter,
            description=_(
                "Solve the steady-state problem of a configuration and write "
                "head.vtk, convergence.csv and summary.txt to the output "
                "directory. Flags override the [solver] section."
            ),
        )
        parser.add_argument(
            "--strategy",
            dest="strategy",
            choices=[s.value for s in Strategy],
            help=_("nonlinear solution strategy"),
            default=None,
        )
        parser.add_argument(
            "--kind",
            dest="kind",
            choices=[k.value for k in ContinuationFunctionKind],
            help=_("continuation function"),
            default=None,
        )
        add_solver_overrides(parser)
        options = parser.parse_args(args)

        with ErrorHandler(self.output_formatter):
            kind = options.kind and ContinuationFunctionKind.from_string(options.kind)
            cfg = read_configuration(options.config).with_overrides(
                strategy=options.strategy and Strategy.from_string(options.strategy),
                kind=kind,
                kr_scheme=options.kr_scheme and KrScheme.from_string(options.kr_scheme),
                mesh_scale=options.mesh_scale,
            )
            master = VSFLOW.master.Master(cfg, options.out)
            master.run()
            result = master.report.to_json()
            result["output"] = os.path.abspath(options.out)
            self.output_formatter.emit_result(result)

    def handle_compare(self, cmd, args):
        """Compare the solution strategies on one problem."""
        parser = HelpfulParser(
            cmd,
            self.output_formatter,
            description=_(
                "Solve a problem by continuation with the power and the linear "
                "function and by the pseudo-transient method. The computation "
                "time, the number of successful (failed) steps and the number "
                "of Newton iterations are written to comparison.txt."
            ),
        )
        add_solver_overrides(parser)
        options = parser.parse_args(args)
        with ErrorHandler(self.output_formatter):
            cfg = read_configuration(options.config).with_overrides(
                kr_scheme=options.kr_scheme and KrScheme.from_string(options.kr_scheme),
                mesh_scale=options.mesh_scale,
            )
            table, results = VSFLOW.master.compare(cfg, options.out)
            runs = collections.OrderedDict(
                (label, report.to_json())
                for label, report, _state in results
                if report is not None
            )
            self.output_formatter.emit_result(
                collections.OrderedDict(
                    [("table", {"verbatim": table.rstrip()}), ("runs", runs)]
                )
            )
            failing = [r.exit_code for _l, r, _s in results if r and r.exit_code]
            return failing[0] if failing else 0

    def handle_example(self, cmd, args):
        """Print or save a bundled configuration."""
        parser = HelpfulParser(
            cmd,
            self.output_formatter,
            description=_("Print a bundled example configuration.")
            + " "
            + "; ".join(
                "%s: %s" % item for item in sorted(VSFLOW.factories.EXAMPLES.items())
            ),
        )
        parser.add_argument(
            "-o",
            "--output",
            dest="output",
            help=_("write output to file instead of stdout"),
            metavar="FILENAME",
            default="stdout",
        )
        parser.add_argument(
            "name", choices=sorted(VSFLOW.factories.EXAMPLES), help=_("example name")
        )
        options = parser.parse_args(args)
        with ErrorHandler(self.output_formatter):
            text = VSFLOW.factories.example_text(options.name)
            if options.output == "stdout":
                self.output_formatter.emit_result({"verbatim": text.rstrip()})
            else:
                with open(options.output, "w", encoding="utf-8") as f:
                    f.write(text)

    def handle_version(self, _cmd, _args):
        self.output_formatter.emit_result("vsflow " + str(VSFLOW.config.VERSION))
