"""
Rich-based rendering of command results.

This is the ONLY place where human-readable terminal output happens; commands
hand finished library results to these functions.  With --json the commands
print the serialized result instead and nothing here is called.
"""

from __future__ import annotations

import math

from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from banditgap.analysis import BOUND, GapReport, ProjectionCertificate, SweepResult
from banditgap.flow import DecompositionResiduals, QDecomposition
from banditgap.lp.base import LpSolution
from banditgap.model import Instance, Violation
from banditgap.policies import DpResult, HalfScalingTables
from banditgap.simulator import SimulationReport

console = Console(legacy_windows=False)

MAX_ROWS = 40


def error(message: str) -> None:
    console.print(f"[red]Error:[/] {escape(message)}", highlight=False)


def _verdict(ok: bool) -> str:
    return "[bold green]PASS[/]" if ok else "[bold red]FAIL[/]"


def _num(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.9g}"


# --------------------------------------------------------------------------- #
# Instances                                                                   #
# --------------------------------------------------------------------------- #

def show_instance_summary(instance: Instance, title: str) -> None:
    table = Table(title=title, show_header=True, header_style="bold")
    table.add_column("arm", justify="right")
    table.add_column("root")
    table.add_column("nodes", justify="right")
    table.add_column("bridges", justify="right")
    for i, arm in enumerate(instance.arms):
        bridges = sum(n.is_bridge for n in arm.nodes.values())
        table.add_row(str(i), arm.root, str(len(arm.nodes)), str(bridges))
    console.print(table)
    console.print(
        f"[dim]mode={instance.mode}  budget={instance.budget}  actions={list(instance.actions)}[/]"
    )


def show_violations(path: str, violations: list[Violation]) -> None:
    if not violations:
        console.print(f"[green]valid[/] {escape(path)}")
        return
    console.print(f"[red]{len(violations)} violation(s)[/] in {escape(path)}")
    for v in violations:
        console.print(f"  • {escape(str(v))}", highlight=False)


# --------------------------------------------------------------------------- #
# Relaxations and decomposition                                               #
# --------------------------------------------------------------------------- #

def show_solution(solution: LpSolution) -> None:
    console.print(
        Panel(
            f"status     {solution.status}\n"
            f"objective  {_num(solution.objective)}\n"
            f"dual       {_num(solution.dual_objective) if solution.dual_objective is not None else '-'}\n"
            f"pivots     {solution.pivots}",
            title=f"[bold] relaxation: {solution.kind} [/]",
            border_style="cyan",
            expand=False,
        )
    )
    table = Table(show_header=True, header_style="bold")
    table.add_column("node")
    table.add_column("action", justify="right")
    table.add_column("t", justify="right")
    table.add_column("x", justify="right")
    rows = sorted((k, v) for k, v in solution.x.items() if v > 0.0)
    for (u, a, t), v in rows[:MAX_ROWS]:
        table.add_row(u, str(a), str(t), f"{v:.6f}")
    console.print(table)
    if len(rows) > MAX_ROWS:
        console.print(f"[dim]... {len(rows) - MAX_ROWS} more nonzero entries (use --json)[/]")


def show_decomposition(decomposition: QDecomposition, residuals: DecompositionResiduals) -> None:
    table = Table(show_header=True, header_style="bold")
    table.add_column("from (v, b, t')")
    table.add_column("to u")
    table.add_column("next statuses")
    table.add_column("abandon", justify="right")
    groups = sorted(decomposition.groups.values(), key=lambda g: (g.t, g.parent, g.action, g.child))
    for g in groups[:MAX_ROWS]:
        nxt = ", ".join(f"({a},{t}):{q:.4f}" for a, t, q in g.entries) or "-"
        table.add_row(f"({g.parent}, {g.action}, {g.t})", g.child, nxt, f"{g.abandon:.4f}")
    console.print(table)
    if len(groups) > MAX_ROWS:
        console.print(f"[dim]... {len(groups) - MAX_ROWS} more groups (use --json)[/]")
    console.print(
        f"group sums residual {residuals.group_sum:.3g}  •  child mass residual {residuals.child_mass:.3g}  "
        f"{_verdict(residuals.passes())}"
    )


# --------------------------------------------------------------------------- #
# Policies, DP, analysis                                                      #
# --------------------------------------------------------------------------- #

def show_report(report: SimulationReport, lp_value: float | None = None) -> None:
    body = (
        f"trials     {report.trials}\n"
        f"mean       {report.mean_reward:.6f}\n"
        f"stddev     {report.stddev:.6f}\n"
        f"ci95       ±{report.ci95:.6f}\n"
        f"seed       {report.seed}"
    )
    if lp_value is not None:
        body += f"\nLP value   {lp_value:.6f}"
    console.print(Panel(body, title=f"[bold] {report.policy_id} [/]", border_style="green", expand=False))

    table = Table(show_header=True, header_style="bold")
    table.add_column("status")
    table.add_column("count", justify="right")
    table.add_column("freq", justify="right")
    table.add_column("timely", justify="right")
    items = list(report.status_freq.items())
    for status, (count, freq) in items[:MAX_ROWS]:
        table.add_row(str(status), str(count), f"{freq:.5f}", str(report.timely.get(status, 0)))
    if items:
        console.print(table)
    if len(items) > MAX_ROWS:
        console.print(f"[dim]... {len(items) - MAX_ROWS} more statuses (use --json)[/]")


def show_tables(tables: HalfScalingTables) -> None:
    table = Table(title="availability", show_header=True, header_style="bold")
    table.add_column("arm", justify="right")
    table.add_column("t", justify="right")
    table.add_column("Free", justify="right")
    table.add_column("estimate", justify="right")
    table.add_column("start", justify="right")
    keys = sorted(set(tables.free_exact) | set(tables.free_emp or {}))
    for i, t in keys[:MAX_ROWS]:
        exact = tables.free_exact.get((i, t))
        emp = (tables.free_emp or {}).get((i, t))
        table.add_row(
            str(i), str(t),
            "-" if exact is None else f"{exact:.6f}",
            "-" if emp is None else f"{emp:.6f}",
            f"{tables.starts.get((i, t), 0.0):.6f}",
        )
    console.print(table)
    if tables.med is not None:
        console.print(f"[dim]eps={tables.epsilon} delta={tables.delta:.4g} med={tables.med} M={tables.M}[/]")


def show_dp(result: DpResult) -> None:
    console.print(f"DP value [bold]{result.value:.9g}[/]  [dim]({result.states} reachable states)[/]")


def show_gap(report: GapReport) -> None:
    table = Table(show_header=False)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row(f"LP ({report.kind})", _num(report.lp_value))
    table.add_row("DP", _num(report.dp_value))
    table.add_row("gap", _num(report.ratio) + ("  [red](dp = 0)[/]" if report.infinite else ""))
    console.print(table)


def show_certificate(cert: ProjectionCertificate) -> None:
    console.print(
        Panel(
            f"relaxation        {cert.kind}\n"
            f"projected value   {cert.objective:.12g}\n"
            f"policy value      {cert.policy_value:.12g}\n"
            f"max violation     {cert.max_violation:.3g}\n"
            f"objective match   {cert.objective_match:.3g}\n"
            f"widest layer      {cert.states}\n\n"
            f"{_verdict(cert.passed)}",
            title="[bold] projection [/]",
            border_style="green" if cert.passed else "red",
            expand=False,
        )
    )


def show_sweep(sweep: SweepResult) -> None:
    mu = ", ".join(f"{m:.6f}" for m in sweep.argmax)
    console.print(
        f"max = {sweep.maximum:.15f} at ({mu})  •  bound 5/9 = {BOUND:.15f}  •  "
        f"{sweep.cells} cells  {_verdict(sweep.passed)}"
    )
