"""Command-line entry point: ``chronoslit <subcommand> [flags]``.

Exit codes: 0 success, 1 invalid input or configuration, 2 a numerical
check above its tolerance.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import algebra, constraint, detection, experiment
from .config import EMISSION_CHOICES, parse_config, parse_emission
from .errors import ChronoslitError
from .grids import make_grid

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2
OPERATOR_TOL = 1e-6
RESIDUAL_TOL = 1e-5
NEGATIVE_WEIGHT_TOL = 1e-6
NORM_DRIFT_TOL = 1e-10
OPERATOR_GRID_SIZES = (64, 128, 256)

# One table drives both argument parsing and --help.
FLAGS = {
    "config": (("--config",), dict(metavar="PATH", required=True,
               help="config file, or a shipped preset name such as photon_tuned.cfg")),
    "emission": (("--emission",), dict(choices=EMISSION_CHOICES, default=None,
                 help="emission model; overrides [emission] model in the config")),
    "events": (("--events",), dict(type=int, metavar="N", default=0,
               help="number of Monte Carlo detections to accumulate (0 = none)")),
    "seed": (("--seed",), dict(type=int, metavar="S", default=0,
             help="seed for the counter-based event generator")),
    "out": (("--out",), dict(metavar="DIR", default=".",
            help="directory receiving CSV, JSON summary and manifest files")),
    "scan_param": (("--scan-param",), dict(metavar="NAME", required=True,
                   choices=experiment.SCAN_PARAMETERS,
                   help="parameter to scan: delta_T, pulse_sigma or weight_split")),
    "scan_from": (("--scan-from",), dict(type=float, metavar="A", required=True,
                  help="first scan value (SI units; weight_split is |cA|^2)")),
    "scan_to": (("--scan-to",), dict(type=float, metavar="B", required=True,
                help="last scan value")),
    "scan_steps": (("--scan-steps",), dict(type=int, metavar="K", required=True,
                   help="number of equally spaced scan points, including both ends")),
    "n": (("--n",), dict(type=int, metavar="N", default=None,
          help="grid size for operator checks (default: 64, 128 and 256)")),
}


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12e" % value
    return str(value)


def csv_text(units: str, header: list[str], rows) -> str:
    lines = [f"# {units}", ",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        # mkstemp creates 0600; give the file the usual umask-derived mode
        mask = os.umask(0)
        os.umask(mask)
        os.fchmod(fd, 0o666 & ~mask)
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Run:
    """Collects outputs and phase timings; writes everything at the end."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.files: dict[str, str] = {}
        self.timing: dict[str, float] = {}
        self.config_echo: dict = {}
        self.seed = getattr(args, "seed", 0)
        self._t = time.perf_counter()

    def phase(self, name: str) -> None:
        now = time.perf_counter()
        self.timing[name] = round(now - self._t, 6)
        self._t = now

    def finish(self) -> list[Path]:
        out = Path(self.args.out)
        written = []
        for name, text in self.files.items():
            write_atomic(out / name, text)
            written.append(out / name)
        manifest = {
            "command": self.command,
            "arguments": {k: v for k, v in sorted(vars(self.args).items())
                          if k not in ("handler",)},
            "config_echo": self.config_echo,
            "tool_version": __version__,
            "seed": self.seed,
            "rng": "numpy Philox4x32-10, stream SeedSequence([seed, shard]), shard size "
                   f"{detection.SHARD_SIZE}",
            "outputs": [str(p) for p in written],
            "timing": self.timing,
        }
        write_atomic(out / "manifest.json", json_text(manifest))
        return written


def _load(args):
    rc = parse_config(args.config)
    emission = rc.emission
    if getattr(args, "emission", None):
        em = rc.echo["emission"]
        em["model"] = args.emission
        emission = parse_emission(args.emission, em["weight_a"], em["relative_phase"])
    return rc, emission


def cmd_check_operators(args, run: Run) -> int:
    sizes = (args.n,) if args.n else OPERATOR_GRID_SIZES
    rows, worst = [], 0.0
    for n in sizes:
        grid = make_grid(0.0, 1.0, n, periodic=True)
        pairs = [
            ("time_energy", algebra.time_operator(grid), algebra.energy_operator(grid), -1),
            ("position_momentum", algebra.position_operator(grid),
             algebra.momentum_operator(grid), +1),
        ]
        probes = algebra.probe_suite(grid)
        for relation, A, B, sign in pairs:
            for i, probe in enumerate(probes):
                r = algebra.canonical_residual(A, B, sign, probe)
                worst = max(worst, r)
                rows.append((relation, n, i, r))
    run.seed = 20210630
    run.phase("residuals")
    run.files["operators.csv"] = csv_text(
        "canonical commutator residuals ||((1/i hbar)[A,B] - sign I) probe|| (dimensionless)",
        ["relation", "n", "probe_id", "residual"], rows)
    status = EXIT_OK if worst < OPERATOR_TOL else EXIT_CHECK
    print(f"worst residual {worst:.3e} (tolerance {OPERATOR_TOL:g})", file=sys.stderr)
    return status


def cmd_constraint_demo(args, run: Run) -> int:
    rc, _ = _load(args)
    if rc.constraint is None:
        raise ChronoslitError(f"{rc.source}: constraint-demo needs a [constraint] section")
    run.config_echo = rc.echo
    H, grid_t, psi0 = rc.constraint.build()
    state = constraint.solve_constraint(H, grid_t, psi0)
    run.phase("propagate")
    summary = {
        "residual_interior": constraint.constraint_residual(state, H, "interior"),
        "residual_spectral": constraint.constraint_residual(state, H, "spectral"),
        "negative_energy_weight": constraint.negative_energy_weight(state, H.hbar),
        "norm_drift": constraint.norm_drift(state),
    }
    run.phase("checks")
    mag = np.abs(state.amp)
    header = ["q"] + [_fmt(t) for t in grid_t.points]
    rows = ([q, *row] for q, row in zip(state.grid_q.points, mag))
    run.files["constraint_psi.csv"] = csv_text(
        "|psi(q,t)|; rows: q, columns: t (config units)", header, rows)
    run.files["constraint_summary.json"] = json_text(summary)
    ok = (summary["residual_interior"] < RESIDUAL_TOL
          and summary["negative_energy_weight"] < NEGATIVE_WEIGHT_TOL
          and summary["norm_drift"] < NORM_DRIFT_TOL)
    return EXIT_OK if ok else EXIT_CHECK


def _need_experiment(rc):
    if rc.experiment is None:
        raise ChronoslitError(f"{rc.source}: needs [experiment] and [screen] sections")
    return rc.experiment


def cmd_run(args, run: Run) -> int:
    rc, emission = _load(args)
    cfg = _need_experiment(rc)
    run.config_echo = rc.echo
    pattern = experiment.intensity_pattern(cfg, emission)
    vis = experiment.visibility(pattern)
    try:
        spacing = experiment.fringe_spacing(pattern) if vis > 0.5 else None
    except ChronoslitError:
        spacing = None
    summary = {
        "visibility": vis,
        "fringe_spacing_m": spacing,
        "synchrony_mismatch_center_s": experiment.synchrony_mismatch(cfg, 0.0),
        "emission_model": emission.label,
    }
    run.phase("pattern")
    columns = [pattern.screen.points, pattern.intensity, pattern.path_A_intensity,
               pattern.path_B_intensity, pattern.gamma, pattern.phase]
    header = ["x_m", "intensity", "path_A_intensity", "path_B_intensity", "gamma", "phase_rad"]
    units = "x [m], intensities [1/m^2], gamma [1], phase [rad]"
    if args.events > 0:
        hist = detection.sample_detections(pattern, args.events, args.seed,
                                           workers=experiment.worker_count())
        chi2, _, p_value = detection.histogram_gof(hist, pattern)
        try:
            v_mc, v_err = detection.visibility_from_histogram(hist)
        except ChronoslitError:
            v_mc = v_err = None
        summary.update(n_events=args.events, seed=args.seed, chi2=chi2, p_value=p_value,
                       visibility_mc=v_mc, visibility_mc_stderr=v_err)
        columns.append(hist.counts)
        header.append("counts")
        units += ", counts [events]"
        run.phase("monte_carlo")
    run.files["pattern.csv"] = csv_text(units, header, zip(*columns))
    run.files["summary.json"] = json_text(summary)
    return EXIT_OK


def cmd_scan(args, run: Run) -> int:
    rc, emission = _load(args)
    cfg = _need_experiment(rc)
    if args.scan_steps < 1:
        raise ChronoslitError("--scan-steps must be at least 1")
    run.config_echo = rc.echo
    values = np.linspace(args.scan_from, args.scan_to, args.scan_steps)
    curve = experiment.visibility_scan(cfg, emission, args.scan_param, values)
    run.phase("scan")
    run.files["scan.csv"] = csv_text(
        f"param_value [{args.scan_param}, SI], visibility [1]",
        ["param_value", "visibility"], curve)
    return EXIT_OK


SUBCOMMANDS = {
    "check-operators": ("check discrete canonical commutators on band-limited probes",
                        ["n", "out"], cmd_check_operators),
    "constraint-demo": ("solve the constraint equation for a [constraint] config",
                        ["config", "out"], cmd_constraint_demo),
    "run": ("screen pattern (and optional Monte Carlo detections) for one emission model",
            ["config", "emission", "events", "seed", "out"], cmd_run),
    "scan": ("visibility versus one parameter",
             ["config", "emission", "scan_param", "scan_from", "scan_to", "scan_steps", "out"],
             cmd_scan),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chronoslit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for name, (help_text, flags, handler) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        for flag in flags:
            names, kwargs = FLAGS[flag]
            p.add_argument(*names, dest=flag, **kwargs)
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; that code is reserved for failed checks
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    run = Run(args.command, args)
    try:
        status = args.handler(args, run)
        run.finish()
    except (ChronoslitError, OSError) as exc:
        print(f"chronoslit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
