"""Helpers shared by all modules: the warning registry, translation and logging
setup."""
# vim: set expandtab sts=4 ts=4 sw=4:
# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
import atexit
import gettext
import logging
import os
import sys

#: environment variable controlling the log verbosity
LOG_ENV = "RICHARDS_LOG"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}


# pylint: disable=too-few-public-methods
class Singleton:
    """Class decorator: every call of the decorated class returns the same
instance, created lazily on the first call with an argument-less `__init__`.
Not thread-safe; decorated classes cannot be subclassed."""

    def __init__(self, decorated):
        self._decorated = decorated
        self._instance = None

    def __call__(self):
        if self._instance is None:
            self._instance = self._decorated()
        return self._instance

    def __instancecheck__(self, inst):
        return isinstance(inst, self._decorated)


def format_warning(warning):
    """Render a warning mapping: the message on the first line, each further
    key indented on a line of its own."""
    if not hasattr(warning, "get") or not warning.get("message"):
        raise TypeError("a warning is a mapping with at least a message")
    details = dict(warning)
    lines = ["Warning: %s\n" % details.pop("message")]
    lines.extend("  %s: %s\n" % (key.title(), value) for key, value in details.items())
    return "".join(lines)


@Singleton
class WarningRegistry:
    """This globally available class gathers all warnings raised while a
    problem is set up and solved (active relative permeability floor, diagonal
    shifts in the preconditioner, ...). They can be retrieved at the end. If
    they are not requested, they will be displayed when the program exits."""

    def __init__(self):
        self.__warnings = []

    def register_warning(self, msg, **details):
        """Details which are None are left out."""
        entry = {"message": msg}
        entry.update((k, v) for k, v in details.items() if v is not None)
        self.__warnings.append(entry)

    def get_warnings(self):
        """Hand out the gathered warnings and start over with an empty list."""
        gathered, self.__warnings = self.__warnings, []
        return gathered


def flush_warnings():
    """Write warnings nobody asked for to stderr."""
    for entry in WarningRegistry().get_warnings():
        sys.stderr.write(format_warning(entry))


# unretrieved warnings are shown when the interpreter exits
atexit.register(flush_warnings)


def setup_i18n():
    """Install the `_` function. No translations are shipped yet, so the
    fallback (identity) translation is used unless a `vsflow.mo` is found in
    the system locale directories."""
    trans = gettext.translation("vsflow", fallback=True)
    trans.install()


def setup_logging(level=None):
    """Configure the package logger. The level is taken from `level` or from
    the environment variable RICHARDS_LOG (debug, info, warning, error);
    warnings are logged by default."""
    if level is None:
        level = os.environ.get(LOG_ENV, "warning")
    numeric = LOG_LEVELS.get(str(level).strip().lower(), logging.WARNING)
    logger = logging.getLogger("VSFLOW")
    if not any(getattr(h, "_vsflow", False) for h in logger.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._vsflow = True  # pylint: disable=protected-access
        logger.addHandler(handler)
    logger.setLevel(numeric)
    return logger
