"""Error classes to be used in the whole VSFLOW module. Every error carries the
exit code the command-line frontends terminate with, so that a caller can tell
a broken configuration from a solver which did not converge."""
# vim: set expandtab sts=4 ts=4 sw=4:
# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.

import collections
import os


class VSFLOW_error(Exception):
    """VSFLOW_error(message, path=None, line=None)
    Parent of all errors; `path` and `line` locate the cause in a
    configuration file, if there is one."""

    exit_code = 119

    def __init__(self, message, path=None, line=None):
        self.message = message
        self.path = path
        self.line = line
        super().__init__(str(self))

    def to_json(self, **kwargs):
        """Mapping for the JSON API with path and line (if known), the message
        and any further `kwargs`."""
        data = collections.OrderedDict()
        for key in ("path", "line"):
            if getattr(self, key):
                data[key] = getattr(self, key)
        data["message"] = self.message
        data.update(kwargs)
        return data

    def __str__(self):
        location = ", line ".join(
            str(part) for part in (self.path, self.line) if part
        )
        return "%s: %s" % (location, self.message) if location else self.message


class ConfigurationError(VSFLOW_error):
    """ConfigurationError(message, path=None, line=None)
    Syntactic or semantic error in a problem configuration. The message should
    name the offending key."""

    exit_code = 1

    def __init__(self, message, path=None, line=None):
        super().__init__(message, path=path, line=line)

    def __str__(self):
        prefix = ""
        if self.path and os.path.exists(self.path):
            prefix = _("in configuration") + " "
        location = "" if not self.path else str(self.path)
        if self.line:
            location += (", " if location else "") + _("line %d") % self.line
        if not location:
            return self.message
        return "{}{}: {}".format(prefix, location, self.message)


class MeshError(VSFLOW_error):
    """Degenerate or inconsistent mesh geometry."""

    exit_code = 1


class LinearSolverError(VSFLOW_error):
    """LinearSolverError(message, iterations=0, residual=None)
    Breakdown of the Krylov iteration or exceeded iteration limit. The number
    of iterations done and the last residual norm are kept for the report."""

    exit_code = 2

    def __init__(self, message, iterations=0, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class FactorizationError(LinearSolverError):
    """FactorizationError(message, row)
    A zero (or non-finite) pivot was met in the incomplete factorization."""

    def __init__(self, message, row=None):
        self.row = row
        super().__init__(message)


class SolverFailure(VSFLOW_error):
    """SolverFailure(message, exit_code, outcome=None)
    A nonlinear solution strategy gave up. The outcome object of the strategy
    is attached so that callers may still inspect the last state."""

    def __init__(self, message, exit_code, outcome=None):
        self.exit_code = exit_code
        self.outcome = outcome
        super().__init__(message)
