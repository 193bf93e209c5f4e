"""``vqls-heat`` command line: solves, decompositions, sweeps and figure presets."""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DegenerateStateError, NotConvergedError, NumericalFailure, SingularMatrixError, SizeError
from .harness import (
    CONDITION_PRESETS,
    DEFAULT_RESTARTS,
    SolveSettings,
    SweepConfig,
    emit_outputs,
    run_solve,
    run_sweep,
    slug,
    write_solve,
)
from .pauli import DEFAULT_TOLERANCE, decompose
from .problems import custom_problem, parse_label

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_NOT_CONVERGED = 0, 1, 2, 3

# flag name -> (type, default); the same keys are accepted in --config files
COMMON = {
    "seed": (int, 0),
    "output_dir": (str, "results"),
    "workers": (int, 1),
    "format": (str, "both"),
    "ansatz_layers": (int, None),
    "ansatz_layout": (str, "pairs"),
    "optimizer": (str, "momentum"),
    "lr": (float, None),
    "momentum": (float, 0.995),
    "max_iter": (int, 50000),
    "cost_mode": (str, "analytic"),
    "epsilon": (float, None),
    "stopping_rule": (str, "precision"),
    "repetitions": (int, 10),
    "restarts": (int, DEFAULT_RESTARTS),
}
CHOICES = {"format": ("csv", "json", "both"), "ansatz_layout": ("pairs", "columns"), "optimizer": ("momentum", "adam"),
           "stopping_rule": ("precision", "cost")}
HELP = {
    "seed": "master seed (default 0)",
    "output_dir": "directory for result files (default ./results)",
    "workers": "worker processes for sweeps (default 1)",
    "format": "output files to write (default both)",
    "ansatz_layers": "ansatz depth (default depends on qubit count)",
    "ansatz_layout": "entangling block shape (default pairs)",
    "lr": "learning rate (default 0.05 for both optimizers)",
    "momentum": "momentum coefficient beta (default 0.995)",
    "max_iter": "iteration cap per run (default 50000)",
    "cost_mode": "analytic or shots:<count>",
    "epsilon": "target precision (default 0.001 for test problems, 0.05 for heat)",
    "stopping_rule": "read epsilon as a solution precision or as a raw cost threshold",
    "repetitions": "runs per sweep point (default 10)",
    "restarts": "extra seeded attempts when a solve does not converge (default 5)",
}

SHOT_POINTS = tuple(100 * 2**k for k in range(11))
TEST_EPSILONS = (0.05, 0.02, 0.01, 0.005, 0.002, 0.001)
HEAT_EPSILONS = (0.05, 0.02, 0.01, 0.005, 0.002)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps unset flags out of the namespace so config-file values can fill them
    p = argparse.ArgumentParser(add_help=False)
    for key, (kind, _) in COMMON.items():
        flag = "--" + key.replace("_", "-")
        p.add_argument(flag, dest=key, type=kind, default=argparse.SUPPRESS,
                       choices=CHOICES.get(key), help=HELP.get(key))
    p.add_argument("--config", default=argparse.SUPPRESS, help="key = value file mirroring the flags")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = _Parser(prog="vqls-heat", parents=[common],
                     description="Variational quantum linear solver for heat-conduction systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<command>")
    sub.required = True

    p = sub.add_parser("solve", parents=[common], help="solve one problem and write its result")
    p.add_argument("label", nargs="?", help="test:c0=1,n=3 | heat1d:n=3 | heat2d:npd=3")
    p.add_argument("--matrix", help="CSV file with a dense matrix (instead of a label)")
    p.add_argument("--rhs", help="CSV file with the right-hand side for --matrix")
    p.add_argument("--trace", action="store_true", help="also write the per-iteration cost trace CSV")

    p = sub.add_parser("decompose", parents=[common], help="Pauli-decompose a matrix")
    p.add_argument("source", help="CSV matrix file or a problem label")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("-o", "--out", help="write the JSON here instead of stdout")

    for name, what in (("sweep-shots", "shot counts"), ("sweep-epsilon", "precisions"),
                       ("sweep-qubits", "qubit counts"), ("sweep-condition", "c0 values at n=4")):
        p = sub.add_parser(name, parents=[common], help=f"sweep over {what}")
        default = "test:n=4" if name == "sweep-condition" else None
        p.add_argument("label", nargs="?" if default else None, default=default)
        p.add_argument("--points", help="comma-separated sweep points")

    p = sub.add_parser("repro", parents=[common], help="figure presets fig9 .. fig19")
    p.add_argument("figure", choices=sorted(PRESETS, key=lambda f: int(f[3:])))
    p.add_argument("--full", action="store_true", help="extend to the largest sizes (slow)")
    return parser


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; keys may use dashes or underscores."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, _, value = line.partition(" ")
        key = key.strip().lstrip("-").replace("-", "_")
        if key not in COMMON:
            raise UsageError(f"{path}:{number}: unknown setting {key!r}")
        kind = COMMON[key][0]
        value = value.strip()
        try:
            out[key] = None if value.lower() in ("", "none") else kind(value)
        except ValueError as exc:
            raise UsageError(f"{path}:{number}: bad value for {key}: {value!r}") from exc
        if key in CHOICES and out[key] not in CHOICES[key]:
            raise UsageError(f"{path}:{number}: {key} must be one of {CHOICES[key]}")
    return out


def resolve_options(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    opts = {key: default for key, (_, default) in COMMON.items()}
    if getattr(args, "config", None):
        opts.update(read_config(args.config))
    opts.update({k: v for k, v in vars(args).items() if k in COMMON})
    return opts


def _formats(opts) -> tuple[str, ...]:
    return ("csv", "json") if opts["format"] == "both" else (opts["format"],)


def _default_epsilon(label: str) -> float:
    return 0.001 if label.startswith("test") else 0.05


def settings_from(opts: dict, label: str, epsilon: float | None = None) -> SolveSettings:
    eps = opts["epsilon"] if opts["epsilon"] is not None else epsilon
    return SolveSettings(
        label=label,
        epsilon=eps if eps is not None else _default_epsilon(label),
        stopping_rule=opts["stopping_rule"],
        layers=opts["ansatz_layers"],
        layout=opts["ansatz_layout"],
        method=opts["optimizer"],
        learning_rate=opts["lr"],
        momentum_beta=opts["momentum"],
        max_iterations=opts["max_iter"],
        cost_mode=opts["cost_mode"],
    )


def read_matrix_csv(path: str) -> np.ndarray:
    """Row-major CSV of reals or ``a+bi`` complex literals."""
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                cells = [c.strip() for c in row if c.strip()]
                if cells:
                    rows.append([complex(c.replace(" ", "").replace("i", "j")) for c in cells])
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise UsageError(f"{path}: rows must be non-empty and of equal length")
    out = np.array(rows)
    return out.real if np.all(out.imag == 0) else out


def _say(text: str) -> None:
    print(text, flush=True)


def cmd_solve(args, opts) -> int:
    if args.matrix:
        if not args.rhs:
            raise UsageError("--matrix needs --rhs")
        matrix = read_matrix_csv(args.matrix)
        rhs = read_matrix_csv(args.rhs).real.ravel()
        problem = custom_problem(matrix, rhs, label=f"custom:{Path(args.matrix).stem}")
        settings = settings_from(opts, problem.label)
    elif args.label:
        problem = None
        settings = settings_from(opts, args.label)
    else:
        raise UsageError("solve needs a problem label or --matrix/--rhs")
    outcome = run_solve(settings, opts["seed"], opts["restarts"], problem=problem)
    paths = write_solve(outcome, opts["output_dir"], _formats(opts), trace=args.trace)
    r = outcome.result
    _say(f"{outcome.problem.label}: converged={r.converged} iterations={r.iterations} "
         f"cost={r.final_cost:.3e} threshold={outcome.cost_threshold:.3e} fidelity={outcome.fidelity:.6f}")
    for path in paths:
        _say(f"wrote {path}")
    return EXIT_OK if r.converged else EXIT_NOT_CONVERGED


def cmd_decompose(args, opts) -> int:
    if Path(args.source).exists():
        matrix = read_matrix_csv(args.source)
    else:
        matrix = parse_label(args.source).dense_matrix
    text = decompose(matrix, args.tolerance).to_json(indent=2)
    if args.out:
        try:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {args.out}: {exc.strerror or exc}") from exc
        _say(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def _parse_points(text: str | None, default, kind=float) -> tuple:
    if text is None:
        return tuple(default)
    try:
        points = tuple(kind(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise UsageError(f"bad --points value {text!r}") from exc
    if not points:
        raise UsageError("--points is empty")
    return points


def _run_and_emit(kind: str, label: str, points, opts, epsilon=None, stem=None) -> None:
    settings = settings_from(opts, label, epsilon)
    config = SweepConfig(kind, points, settings, opts["repetitions"], opts["seed"])
    result = run_sweep(config, opts["workers"], opts["restarts"])
    for path in emit_outputs(result, opts["output_dir"], _formats(opts), stem):
        _say(f"wrote {path}")
    fit = result.fit()
    flagged = [rec.point for rec in result.records if rec.flagged]
    summary = "  ".join(f"{k}={v:.4g}" for k, v in fit.items() if isinstance(v, float))
    _say(f"{kind} sweep of {label}: {summary}" + (f"  flagged points: {flagged}" if flagged else ""))


def _heat_qubit_default(label: str):
    return (3, 4, 5) if label.startswith("heat1d") else (4, 6)


def cmd_sweep(args, opts) -> int:
    kind = args.command.split("-", 1)[1]
    label = args.label
    if kind == "shots":
        points = _parse_points(args.points, SHOT_POINTS, int)
    elif kind == "epsilon":
        points = _parse_points(args.points, TEST_EPSILONS if label.startswith("test") else HEAT_EPSILONS)
    elif kind == "qubits":
        default = (3, 4, 5) if label.startswith("test") else _heat_qubit_default(label)
        points = _parse_points(args.points, default, int)
    else:
        points = _parse_points(args.points, CONDITION_PRESETS)
    _run_and_emit(kind, label, points, opts)
    return EXIT_OK


@dataclass(frozen=True)
class Preset:
    """One figure's worth of sweeps or solves at desk scale (``full`` extends the sizes)."""

    kind: str
    labels: tuple[str, ...]
    full_labels: tuple[str, ...] = ()
    points: tuple = ()
    epsilons: tuple = (None,)
    full_points: tuple = ()


PRESETS = {
    "fig9": Preset("shots", ("test:c0=1,n=3", "test:c0=1,n=4", "test:c0=1,n=5"),
                   ("test:c0=1,n=8",), SHOT_POINTS),
    "fig10": Preset("epsilon", ("test:c0=1,n=3", "test:c0=1,n=4", "test:c0=1,n=5"),
                    ("test:c0=1,n=8",), TEST_EPSILONS),
    "fig11": Preset("qubits", ("test:c0=1",), (), (3, 4, 5), (0.001,), (3, 4, 5, 6, 7, 8)),
    "fig12": Preset("condition", ("test:n=4",), (), CONDITION_PRESETS, (0.01, 0.03)),
    "fig13": Preset("solve", ("heat1d:n=5",), ("heat1d:n=8",)),
    "fig14": Preset("epsilon", ("heat1d:n=3", "heat1d:n=4", "heat1d:n=5"),
                    ("heat1d:n=8",), HEAT_EPSILONS),
    "fig15": Preset("qubits", ("heat1d",), (), (3, 4, 5), (0.05,), (3, 4, 5, 6, 7, 8)),
    "fig16": Preset("solve", ("heat2d:npd=3",)),
    "fig17": Preset("solve", (), ("heat2d:npd=4",)),
    "fig18": Preset("epsilon", ("heat2d:npd=2", "heat2d:npd=3"), ("heat2d:npd=4",), HEAT_EPSILONS),
    "fig19": Preset("qubits", ("heat2d",), (), (4, 6), (0.05,), (4, 6, 8)),
}


def cmd_repro(args, opts) -> int:
    preset = PRESETS[args.figure]
    labels = preset.labels + (preset.full_labels if args.full else ())
    if not labels:
        raise UsageError(f"{args.figure} only has a long-running configuration; pass --full")
    points = preset.full_points if args.full and preset.full_points else preset.points
    status = EXIT_OK
    for label in labels:
        if preset.kind == "solve":
            settings = settings_from(opts, label, 0.05)
            outcome = run_solve(settings, opts["seed"], opts["restarts"])
            for path in write_solve(outcome, opts["output_dir"], _formats(opts),
                                    stem=f"{args.figure}_{slug(label)}"):
                _say(f"wrote {path}")
            _say(f"{label}: converged={outcome.converged} fidelity={outcome.fidelity:.6f}")
            if not outcome.converged:
                status = EXIT_NOT_CONVERGED
            continue
        for eps in preset.epsilons:
            stem = f"{args.figure}_{slug(label)}" + (f"_eps{eps:g}" if len(preset.epsilons) > 1 else "")
            _run_and_emit(preset.kind, label, points, opts, epsilon=eps, stem=stem)
    return status


COMMANDS = {"solve": cmd_solve, "decompose": cmd_decompose, "repro": cmd_repro}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code
    try:
        opts = resolve_options(args)
        handler = COMMANDS.get(args.command, cmd_sweep)
        return handler(args, opts)
    except (UsageError, SizeError, ValueError) as exc:
        print(f"vqls-heat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotConvergedError as exc:
        print(f"vqls-heat: not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except NumericalFailure as exc:
        print(f"vqls-heat: numerical failure at iteration {exc.iteration}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DegenerateStateError, SingularMatrixError, ArithmeticError) as exc:
        print(f"vqls-heat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"vqls-heat: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
