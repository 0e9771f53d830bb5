#!/usr/bin/env python3
"""
delayident CLI
Structural identifiability analysis for nonlinear delay models
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from config import TOOL_VERSION, RunConfig, configure_logging, load_config
from pipeline.identifiability_pipeline import IdentifiabilityPipeline
from pipeline.report_models import AnalysisReport, LinearizationReport, Verdict
from tools.errors import ConfigError, DelayIdentError, ModelParseError
from tools.model_ir_tool import ModelFile
from tools.model_parser_tool import parse_model_file

console = Console()

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_IO = 4

VERDICT_STYLE = {
    Verdict.IDENTIFIABLE: "bold green",
    Verdict.LOCALLY_IDENTIFIABLE: "green",
    Verdict.INCONCLUSIVE: "yellow",
    Verdict.UNSUPPORTED: "red",
}


def parse_complex(text: str) -> complex:
    """Accept 2, 1+i, 1+1j, -0.5-2i"""
    cleaned = text.strip().replace(" ", "").replace("i", "j")
    if cleaned.endswith("j") and cleaned[:-1] in ("", "+", "-"):
        cleaned = cleaned[:-1] + "1j"
    cleaned = cleaned.replace("+j", "+1j").replace("-j", "-1j")
    try:
        return complex(cleaned)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delayident",
        description="Structural identifiability of nonlinear delay models",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", help="run the full identifiability analysis")
    analyze.add_argument("model", type=Path)
    analyze.add_argument("--config", type=Path)
    analyze.add_argument("--z", action="append", type=parse_complex, dest="z", default=None,
                         help="extra complex sample for the rank test (repeatable)")
    analyze.add_argument("--samples", type=int, help="random parameter points to draw")
    analyze.add_argument("--seed", type=int, help="seed for every random stage")
    analyze.add_argument("--rank-tol", type=float)
    analyze.add_argument("--scaling", action="store_true", default=None,
                         help="attach an eps-scaling experiment to the nominal point")
    analyze.add_argument("--report", type=Path, help="write the JSON report here")

    simulate = commands.add_parser("simulate", help="simulate the nonlinear model")
    simulate.add_argument("model", type=Path)
    simulate.add_argument("--config", type=Path)
    simulate.add_argument("--input", choices=("square", "constant"))
    simulate.add_argument("--T", type=float, dest="T")
    simulate.add_argument("--h", type=float, dest="h")
    simulate.add_argument("--amplitude", type=float)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--eps-scaling", action="store_true",
                          help="run the eps-scaling experiment instead of a single trajectory")
    simulate.add_argument("--csv", type=Path,
                          help="trajectory CSV output (default <model>_trajectory.csv)")
    simulate.add_argument("--json", type=Path,
                          help="JSON summary output (default <model>_simulation.json, "
                               "<model>_scaling.json with --eps-scaling)")

    linearize = commands.add_parser("linearize", help="equilibria and coefficient matrices")
    linearize.add_argument("model", type=Path)
    linearize.add_argument("--config", type=Path)
    linearize.add_argument("--json", type=Path, help="write the matrices as JSON")

    return parser


def overrides_from(args: argparse.Namespace) -> Dict:
    seed = getattr(args, "seed", None)
    return {
        "rank.extra_z": getattr(args, "z", None),
        "rank.rel_tol": getattr(args, "rank_tol", None),
        "rank.seed": seed,
        "solver.seed": seed,
        "sampling.seed": seed,
        "sampling.n_samples": getattr(args, "samples", None),
        "simulation.scaling": getattr(args, "scaling", None),
        "simulation.input": getattr(args, "input", None),
        "simulation.T": getattr(args, "T", None),
        "simulation.h": getattr(args, "h", None),
        "simulation.amplitude": getattr(args, "amplitude", None),
    }


def load_model(path: Path) -> ModelFile:
    return parse_model_file(path.read_text(encoding="utf-8"))


def print_diagnostics(error: ModelParseError, source: str, path: Path):
    table = Table(title=f"Parse errors in {path}", header_style="bold red")
    table.add_column("Where", style="cyan")
    table.add_column("Kind", style="magenta")
    table.add_column("Message")
    for diagnostic in error.diagnostics:
        line, col = diagnostic.span.line_col(source)
        table.add_row(f"{line}:{col}", diagnostic.kind, escape(diagnostic.message))
    console.print(table)


def print_analysis(report: AnalysisReport):
    table = Table(title="Parameter points", show_header=True, header_style="bold magenta")
    table.add_column("Sample", style="cyan")
    table.add_column("Equilibria")
    table.add_column("Rank test")
    table.add_column("Injective")
    table.add_column("Witness z")
    for sample in report.samples:
        outcome = sample.outcome()
        witness = next(
            (e.rank["z_witness"] for e in sample.equilibria if e.rank and e.rank["z_witness"]),
            None,
        )
        table.add_row(
            "nominal" if sample.seed is None else f"#{sample.index} (seed {sample.seed})",
            str(len(sample.equilibria)),
            "[green]pass[/green]" if outcome.rank_passed else "[yellow]fail[/yellow]",
            "yes" if outcome.injective else "no",
            "-" if witness is None else f"{witness[0]:g}{witness[1]:+g}i",
        )
    console.print(table)

    body = [f"[{VERDICT_STYLE[report.verdict]}]{report.verdict.value}[/]"]
    body += [f"- {escape(note)}" for note in report.verdict_notes]
    body += [f"- {escape(v['message'])}" for v in report.violations]
    console.print(Panel("\n".join(body), title="Verdict", border_style="green"))


def print_linearization(report: LinearizationReport):
    if not report.linear_models:
        console.print(Panel(report.outcome, title="Linearization", border_style="yellow"))
        return
    for index, model in enumerate(report.linear_models):
        x_e = ", ".join(f"{v:.6g}" for v in model["equilibrium"]["x_e"])
        console.print(f"\n[bold]Equilibrium {index + 1}:[/bold] x_e = ({x_e})")
        for family in ("A", "B"):
            for d, entry in enumerate(model[family]):
                table = Table(title=f"{family}{d} (delay {entry['tag']:g})", show_header=False)
                for row in entry["matrix"]:
                    table.add_row(*[f"{v:.6g}" for v in row])
                console.print(table)


def write_text(path: Optional[Path], text: str):
    if path is not None:
        path.write_text(text + "\n", encoding="utf-8")
        console.print(f"[green]Wrote {path}[/green]")


def cmd_analyze(args: argparse.Namespace, config: RunConfig) -> int:
    model = load_model(args.model)
    pipeline = IdentifiabilityPipeline(config)
    with console.status("[bold green]Analyzing model...", spinner="dots"):
        report = pipeline.analyze(model)
    print_analysis(report)
    write_text(args.report, report.to_json())
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, config: RunConfig) -> int:
    model = load_model(args.model)
    pipeline = IdentifiabilityPipeline(config)

    if args.eps_scaling:
        with console.status("[bold green]Running eps-scaling simulations...", spinner="dots"):
            scaling = pipeline.nominal_scaling(model)
        table = Table(title="eps scaling", header_style="bold magenta")
        table.add_column("eps")
        table.add_column("max |x - x_e|")
        table.add_column("max |x - x_e - xi|")
        for row in zip(scaling.eps, scaling.max_deviation, scaling.max_remainder):
            table.add_row(*[f"{v:.3e}" for v in row])
        console.print(table)
        console.print(
            f"slopes: deviation {scaling.slope_deviation}, remainder {scaling.slope_remainder}"
        )
        json_path = args.json or Path(f"{args.model.stem}_scaling.json")
        write_text(json_path, json.dumps(scaling.to_dict(), indent=2))
        return EXIT_OK

    trajectory, eq = pipeline.simulate(model)
    summary = trajectory.to_dict()
    summary["equilibrium"] = eq.to_dict()
    if trajectory.truncated:
        console.print(f"[yellow]Trajectory truncated: {trajectory.diagnostic}[/yellow]")
    console.print(
        f"Simulated {summary['steps']} steps to T={summary['T']:g}; "
        f"final state {summary['final_state']}"
    )
    csv_path = args.csv or Path(f"{args.model.stem}_trajectory.csv")
    trajectory.to_csv(csv_path)
    console.print(f"[green]Wrote {csv_path}[/green]")
    json_path = args.json or Path(f"{args.model.stem}_simulation.json")
    write_text(json_path, json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_linearize(args: argparse.Namespace, config: RunConfig) -> int:
    model = load_model(args.model)
    report = IdentifiabilityPipeline(config).linearize(model)
    print_linearization(report)
    write_text(args.json, report.to_json())
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "linearize": cmd_linearize}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        config = load_config(args.config, overrides_from(args))
        return COMMANDS[args.command](args, config)
    except ModelParseError as e:
        print_diagnostics(e, args.model.read_text(encoding="utf-8"), args.model)
        return EXIT_PARSE
    except ConfigError as e:
        console.print(f"[red]Configuration error: {escape(str(e))}[/red]")
        return EXIT_USAGE
    except OSError as e:
        console.print(f"[red]I/O error: {escape(str(e))}[/red]")
        return EXIT_IO
    except DelayIdentError as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        return EXIT_USAGE


def run():
    """Console-script entry point"""
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        console.print("\n\n[yellow]Interrupted by user. Exiting...[/yellow]\n")
        sys.exit(130)


if __name__ == "__main__":
    run()
