"""``cosdyn`` command line: run scenario files and write report files.

Outputs in the output directory:

* ``report.json``   criterion reports and witness metrics (schema-versioned)
* ``decay.csv``     decay quantities over n (RFC 4180)
* ``manifest.json`` config echo, tool version and the run timestamp

Exit status: 0 on completion, 2 on a parameter or config error, 3 when a
search ran out of budget with an inconclusive verdict.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path

import click

from . import __version__
from .adjoint import check_adjoint_bounds
from .criteria import (
    CriterionReport,
    NotCertifiableError,
    backward_products,
    inverse_forward_products,
    json_scalar,
    run_all_checks,
    split_partition,
)
from .scenario import Scenario, load_scenario, sweep_cells
from .space import CompactSet, GridFunction, ParameterError, Scalar, to_float
from .witnesses import (
    build_periodic_point,
    build_transitivity_witness,
    orbit_trace,
    orbit_trace_csv,
    periodicity_residual,
    truncation_edge_bound,
    verify_transition,
)

SCHEMA_VERSION = "1.0"
EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_BUDGET = 3

DECAY_COLUMNS = (
    "backward_product_norm",
    "inverse_forward_product_norm",
    "series_S_partial",
    "series_T_partial",
)


def report_schema() -> dict:
    text = resources.files("cosdyn").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def csv_number(x: Scalar) -> str:
    v = to_float(x)
    return f"{v:.17g}"


# Report builders ------------------------------------------------------------

def decay_rows(scenario: Scenario) -> list[dict]:
    """Decay quantities with D = K for every n in the configured range.

    series_T_partial sums the backward-product norms over l (they bound the
    T-series of a periodic point), series_S_partial the inverse forward ones.
    """
    space, op, K = scenario.space, scenario.op, scenario.K
    L = scenario.decay["series_terms"]
    rows = []

    def q(products, m):
        return space(GridFunction(products(op, K, m), dim=K.dim))

    for n in range(scenario.decay["n_min"], scenario.decay["n_max"] + 1):
        back = [q(backward_products, l * n) for l in range(1, L + 1)]
        inv = [q(inverse_forward_products, l * n) for l in range(1, L + 1)]
        rows.append({
            "n": n,
            "backward_product_norm": back[0],
            "inverse_forward_product_norm": inv[0],
            "series_S_partial": _sum(inv),
            "series_T_partial": _sum(back),
        })
    return rows


def _sum(values):
    total = Fraction(0)
    for v in values:
        total = total + v
    return total


def decay_csv(rows: list[dict], exact: bool) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    header = ["n"]
    for col in DECAY_COLUMNS:
        header.append(col)
        if exact:
            header.append(f"{col}_exact")
    writer.writerow(header)
    for row in rows:
        out = [row["n"]]
        for col in DECAY_COLUMNS:
            out.append(csv_number(row[col]))
            if exact:
                v = row[col]
                out.append(str(v) if isinstance(v, Fraction) else "")
        writer.writerow(out)
    return buf.getvalue()


def witness_demo(scenario: Scenario) -> dict:
    space, op = scenario.space, scenario.op
    f = scenario.function(scenario.witness.get("f"))
    g = scenario.function(scenario.witness.get("g"))
    n = int(scenario.witness.get("n", 40))
    D = CompactSet(f.support | g.support)
    E, F = split_partition(op, D, n)
    bundle = build_transitivity_witness(op, f, g, n, E, F, D)
    dist_f, dist_g = verify_transition(space, op, bundle, f, g)
    trace_ns = sorted({0, *range(max(1, n - 20), n + 1, 5), n})
    trace = orbit_trace(space, op, bundle.v, [f, g], trace_ns)
    return {
        "n": n,
        "D": D.to_json(),
        "E": E.to_json(),
        "F": F.to_json(),
        "dist_to_f": dist_f,
        "dist_image_to_g": dist_g,
        "orbit": [{"n": m, "distances": d} for m, d in trace],
        "_trace": trace,
    }


def periodic_demo(scenario: Scenario) -> dict:
    space, op = scenario.space, scenario.op
    f = scenario.function(scenario.periodic.get("f"))
    n = int(scenario.periodic.get("n", 10))
    L = int(scenario.periodic.get("L", 12))
    bundle = build_periodic_point(space, op, f, f.support, n, L, scenario.budget.ratio_run)
    rows = []
    for l in range(1, 6):
        rows.append({
            "l": l,
            "residual": periodicity_residual(space, op, bundle, l),
            "edge_bound": truncation_edge_bound(space, op, f, bundle, l),
        })
    return {
        "n": n,
        "L": L,
        "tail_bound": bundle.tail_bound,
        "ratios": list(bundle.ratios or ()),
        "dist_to_f": space(bundle.v - f),
        "support_size": len(bundle.v),
        "residuals": rows,
    }


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items() if not k.startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (Fraction, float)):
        return json_scalar(obj)
    return obj


def execute(scenario: Scenario) -> tuple[dict, dict[str, str], int]:
    """Run a non-sweep scenario; returns (report, extra files, exit status)."""
    reports: list[CriterionReport] = []
    files: dict[str, str] = {}
    body: dict = {}
    status = EXIT_OK
    if scenario.command == "check":
        reports = run_all_checks(scenario.space, scenario.op, scenario.K, scenario.budget)
        reports.append(check_adjoint_bounds(scenario.op))
        if any(r.budget_exhausted for r in reports):
            status = EXIT_BUDGET
    elif scenario.command == "witness-demo":
        demo = witness_demo(scenario)
        files["orbit.csv"] = orbit_trace_csv(demo["_trace"])
        body["witness_demo"] = demo
    elif scenario.command == "periodic-demo":
        body["periodic_demo"] = periodic_demo(scenario)
    rows = decay_rows(scenario)
    files["decay.csv"] = decay_csv(rows, scenario.mode == "exact")
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "scenario": scenario.echo(),
        "reports": [r.to_json() for r in reports],
        **_clean(body),
        "exit_status": status,
    }
    return report, files, status


def write_outputs(out: Path, report: dict, files: dict[str, str], scenario: Scenario,
                  config_path: str) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps(report))
        for name, text in files.items():
            (out / name).write_text(text, newline="")
        manifest = {
            "tool": "cosdyn",
            "version": __version__,
            "config_path": config_path,
            "config": scenario.echo(),
            "outputs": sorted(["report.json", *files]),
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        (out / "manifest.json").write_text(dumps(manifest))
    except OSError as exc:
        raise ParameterError(f"cannot write output directory {out}: {exc.strerror}") from None


def run_sweep(scenario: Scenario, config_path: str) -> int:
    out = scenario.output_dir
    status = EXIT_OK
    summary = io.StringIO()
    writer = csv.writer(summary, lineterminator="\r\n")
    keys = sorted(scenario.sweep["grid"])
    # The bound check reports under one of three condition ids; keep it in
    # a fixed column and record which id fired.
    writer.writerow(["cell", *keys, "bounds_condition", "bounds", "periodic-decay-S",
                     "periodic-decay-T", "transitive-sufficient", "chaotic-sufficient",
                     "adjoint-bounds"])
    for i, (params, cell) in enumerate(sweep_cells(scenario)):
        cell.command = "check"
        report, files, cell_status = execute(cell)
        report["sweep_cell"] = params
        write_outputs(out / f"cell_{i:03d}", report, files, cell, config_path)
        status = max(status, cell_status)
        bounds, *rest = report["reports"]
        writer.writerow([f"cell_{i:03d}", *(params[k] for k in keys), bounds["condition_id"],
                         bounds["verdict"], *(r["verdict"] for r in rest)])
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(summary.getvalue(), newline="")
    except OSError as exc:
        raise ParameterError(f"cannot write output directory {out}: {exc.strerror}") from None
    return status


def run_scenario(config_path: str | Path, **overrides) -> int:
    """Load, execute and write one scenario; returns the exit status."""
    try:
        scenario = load_scenario(config_path, {k: v for k, v in overrides.items() if v is not None})
        if scenario.command == "sweep":
            return run_sweep(scenario, str(config_path))
        report, files, status = execute(scenario)
        write_outputs(scenario.output_dir, report, files, scenario, str(config_path))
        return status
    except NotCertifiableError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_BUDGET
    except ParameterError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_PARAMETER


# Click wiring ---------------------------------------------------------------

def _options(fn):
    fn = click.option("--mode", type=click.Choice(["exact", "float"]), default=None,
                      help="Numeric mode (overrides the config).")(fn)
    fn = click.option("--tol", type=float, default=None, help="Decay tolerance.")(fn)
    fn = click.option("--budget-n", type=int, default=None, help="Largest n searched.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None,
                      help="Output directory (overrides output_dir).")(fn)
    fn = click.argument("config", type=click.Path(dir_okay=False))(fn)
    return fn


def _run(config, command, out, budget_n, tol, mode):
    sys.exit(run_scenario(config, command=command, out=out, budget_n=budget_n, tol=tol, mode=mode))


@click.group()
@click.version_option(__version__, prog_name="cosdyn")
def main():
    """Dynamics of weighted-translation cosine sequences."""


@main.command()
@_options
def run(config, out, budget_n, tol, mode):
    """Run the command named in CONFIG."""
    _run(config, None, out, budget_n, tol, mode)


@main.command()
@_options
def check(config, out, budget_n, tol, mode):
    """Evaluate every criterion."""
    _run(config, "check", out, budget_n, tol, mode)


@main.command("demo-witness")
@_options
def demo_witness(config, out, budget_n, tol, mode):
    """Build and verify a transitivity witness."""
    _run(config, "witness-demo", out, budget_n, tol, mode)


@main.command("demo-periodic")
@_options
def demo_periodic(config, out, budget_n, tol, mode):
    """Build a truncated periodic point and measure its residuals."""
    _run(config, "periodic-demo", out, budget_n, tol, mode)


@main.command()
@_options
def sweep(config, out, budget_n, tol, mode):
    """Run the check command over a grid of weight parameters."""
    _run(config, "sweep", out, budget_n, tol, mode)


if __name__ == "__main__":
    main()
