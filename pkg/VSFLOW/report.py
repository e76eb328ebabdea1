# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Convergence reports of a run: one CSV row per Newton iteration, a short
summary in the format of the usual solver comparison tables and a JSON
representation for the JSON frontend."""

import collections
import csv
import typing

CSV_HEADER = (
    "stage",
    "step",
    "attempt",
    "q_or_dt",
    "newton_iter",
    "res_l2",
    "res_inf",
    "omega",
    "lin_iters",
    "accepted",
)


def _float(value):
    return "" if value is None else "%.17g" % value


class OuterRecord(typing.NamedTuple):
    """One continuation step, time step or plain Newton solve."""

    stage: str
    step: int
    attempt: int
    value: float
    accepted: bool
    newton_iterations: int
    norm2: float
    norm_inf: float


# pylint: disable=too-many-instance-attributes
class ConvergenceReport:
    """r = ConvergenceReport("continuation", kind="power", kr_scheme="upwind")
    r.add_linear(iterations, norm2, norm_inf)
    r.add_newton(stage, value, outcome)
    ...
    r.finish(status, wall_time)

    Step indices count accepted steps: all attempts towards the same accepted
    step share its index."""

    def __init__(self, strategy, kind=None, kr_scheme=None, correction=None):
        self.strategy = strategy
        self.kind = kind
        self.kr_scheme = kr_scheme
        self.correction = correction
        self.rows = []
        self.outer = []
        self.q_path = []
        self.linear_iterations = 0
        self.wall_time = 0.0
        self.status = None
        self.message = None
        self.exit_code = 0
        self.final_norms = None
        self.floor_cells = None
        self.fluxes = None
        self.__step = 1

    def add_linear(self, iterations, norm2, norm_inf):
        """Record the solve of the linear (q = 0) problem."""
        self.linear_iterations += iterations
        self.rows.append(
            ("linear", 0, 0, _float(0.0), 0, _float(norm2), _float(norm_inf), "",
             iterations, 1)
        )

    def add_newton(self, stage, value, outcome):
        """Record one Newton solve at continuation parameter or time step
        `value`, with all of its iterations."""
        attempt = len(self.outer) + 1
        accepted = outcome.converged
        for record in outcome.records:
            self.rows.append(
                (
                    stage,
                    self.__step,
                    attempt,
                    _float(value),
                    record.k,
                    _float(record.norm2),
                    _float(record.norm_inf),
                    _float(record.omega),
                    record.linear_iterations,
                    int(accepted),
                )
            )
        last = outcome.records[-1]
        self.outer.append(
            OuterRecord(
                stage, self.__step, attempt, value, accepted, outcome.iterations,
                last.norm2, last.norm_inf,
            )
        )
        self.linear_iterations += outcome.linear_iterations
        if accepted:
            self.__step += 1

    def finish(self, status, wall_time, exit_code=0, message=None):
        self.status = status
        self.wall_time = max(0.0, float(wall_time))
        self.exit_code = exit_code
        self.message = message

    @property
    def successful_steps(self):
        return sum(1 for r in self.outer if r.accepted)

    @property
    def failed_steps(self):
        return sum(1 for r in self.outer if not r.accepted)

    @property
    def newton_iterations(self):
        return sum(r.newton_iterations for r in self.outer)

    @property
    def steps(self):
        """Table format of the step counts, e.g. 65(10)."""
        return "%d(%d)" % (self.successful_steps, self.failed_steps)

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            writer.writerows(self.rows)

    def describe_strategy(self):
        details = [d for d in (self.kind, self.kr_scheme) if d]
        if not details:
            return self.strategy
        return "%s (%s)" % (self.strategy, ", ".join(details))

    def summary_lines(self):
        lines = [
            "strategy: %s" % self.describe_strategy(),
            "status: %s" % self.status,
            "T_comp, s: %.2f" % self.wall_time,
            "# of successful (failed) steps: %s" % self.steps,
            "# of Newton iterations: %d" % self.newton_iterations,
            "# of linear iterations: %d" % self.linear_iterations,
        ]
        if self.q_path:
            lines.append("q path: %s" % " -> ".join("%g" % q for q in self.q_path))
        if self.final_norms:
            lines.append("final residual: l2 %.6e, max %.6e" % tuple(self.final_norms))
        if self.fluxes is not None:
            for tag, value in sorted(self.fluxes.by_tag.items()):
                lines.append("outward flux %s, m^3/day: %.10g" % (tag, value))
            lines.append("source integral, m^3/day: %.10g" % self.fluxes.source)
        if self.floor_cells:
            lines.append(
                "relative permeability floor active in %d cells" % self.floor_cells
            )
        if self.correction:
            lines.append("correction: %s" % self.correction)
        if self.message:
            lines.append("failure: %s" % self.message)
        lines.append("exit code: %d" % self.exit_code)
        return lines

    def write_summary(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(self.summary_lines()) + "\n")

    def to_json(self):
        data = collections.OrderedDict()
        data["strategy"] = self.strategy
        if self.kind:
            data["kind"] = self.kind
        if self.kr_scheme:
            data["kr_scheme"] = self.kr_scheme
        data["status"] = self.status
        data["exit_code"] = self.exit_code
        data["wall_time"] = self.wall_time
        data["successful_steps"] = self.successful_steps
        data["failed_steps"] = self.failed_steps
        data["newton_iterations"] = self.newton_iterations
        data["linear_iterations"] = self.linear_iterations
        if self.q_path:
            data["q_path"] = list(self.q_path)
        if self.final_norms:
            data["final_residual"] = list(self.final_norms)
        if self.fluxes is not None:
            data["fluxes"] = dict(sorted(self.fluxes.by_tag.items()))
            data["source"] = self.fluxes.source
        if self.correction:
            data["correction"] = self.correction
        if self.message:
            data["message"] = self.message
        return data


COMPARISON_COLUMNS = (
    "Method",
    "T_comp, s",
    "# of successful (failed) steps",
    "# of Newton iterations",
)


def format_comparison(rows):
    """format_comparison([(label, report), ...]) -> str
    Table with computation time, step counts and Newton iterations of
    several runs of the same problem."""
    table = [COMPARISON_COLUMNS]
    for label, report in rows:
        table.append(
            (
                label,
                "%.2f" % report.wall_time,
                report.steps,
                str(report.newton_iterations),
            )
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(COMPARISON_COLUMNS))]
    lines = []
    for index, row in enumerate(table):
        cells = [row[0].ljust(widths[0])] + [
            cell.rjust(width) for cell, width in zip(row[1:], widths[1:])
        ]
        lines.append("  ".join(cells).rstrip())
        if index == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
