"""
Command-line front end for the two-qubit correlation toolkit

Subcommands:
- figure:      data table behind one of the six figures
- classify:    symmetry class, orbit sizes and Omega_Max dimension of an MMMS
- mi:          mutual information of one pair, a pair grid, or the average
- coherence:   coherence of one basis, a pair grid, or the average
- rsp-eval:    one remote-state-preparation task, optionally simulated
- rsp-average: sphere averages of F and the gain over all targets
- simulate:    trial-by-trial protocol run
- verify:      acceptance checks, exit status 0 iff all pass
- serve:       the HTTP surface in app.py

Configuration precedence: flags > --config file > environment / .env > defaults.
The effective configuration is echoed into every output.

Examples:
  python cli.py figure 1 --step 0.05 --out fig1.csv
  python cli.py classify --kappa 0.5 --c-hat 0,0,1
  python cli.py rsp-eval --lambda 0.8 --target 1,0,0 --beta 0,0,1 --simulate 10000
  python cli.py verify --suite all
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Callable, Iterator

import numpy as np
from dotenv import dotenv_values

import config
from bloch_core import (
    ISOTROPIC_DIRECTION,
    ObservablePair,
    TwoQubitState,
    is_in_tetrahedron,
    joint_distribution,
    make_mmms,
    make_state,
    purity,
    unit,
)
from coherence import avg_coherence, coherence_of_basis, von_neumann_entropy
from errors import DegenerateInputError, DomainError, InvalidInputError, TwoQubitError
from figures import DEFAULT_GRID, DEFAULT_STEP, FIGURE_IDS, Table, build_figure, write_table
from mutual_info import avg_mi_general, mutual_information, omega_max_dim, pair_mi_integrand
from rsp import (
    RspTask,
    average_over_relevant,
    default_beta,
    evaluate,
    pure_state,
    simulate_trials,
)
from sphere_avg import McSpec, QuadratureSpec, mc_average
from symmetry import classify, orbit_physical_subset, orbit_size, spin_flip_admissible
from verify import SUITES, all_passed, run_suite

logger = logging.getLogger(__name__)

DEFAULT_PAIR_GRID = 19
DEFAULT_TARGET = (1.0, 0.0, 0.0)


def parse_vector(text: str) -> tuple[float, float, float]:
    """'x,y,z' -> 3-tuple of floats."""
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if len(parts) != 3:
        raise InvalidInputError(f"expected a vector 'x,y,z', got {text!r}")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError as e:
        raise InvalidInputError(f"expected a vector 'x,y,z', got {text!r}") from e
    if not all(np.isfinite(values)):
        raise InvalidInputError(f"vector components must be finite, got {text!r}")
    return values


def _format_vector(values) -> str:
    return ",".join(format(float(v), ".17g") for v in values)


# config key -> converter; keys double as the long flag names
CONFIG_KEYS: dict[str, Callable[[str], Any]] = {
    "kappa": float,
    "c-hat": parse_vector,
    "lambda": float,
    "b": parse_vector,
    "target": parse_vector,
    "beta": parse_vector,
    "quad-theta": int,
    "quad-phi": int,
    "mc-samples": int,
    "seed": int,
    "out": str,
    "format": str,
    "trials": int,
    "workers": int,
}


@dataclass
class RunConfig:
    command: str
    kappa: float | None = None
    c_hat: tuple[float, float, float] | None = None
    lam: float | None = None
    b: tuple[float, float, float] | None = None
    target: tuple[float, float, float] | None = None
    beta: tuple[float, float, float] | None = None
    quad_theta: int = config.QUAD_THETA
    quad_phi: int = config.QUAD_PHI
    mc_samples: int = config.MC_SAMPLES
    seed: int = config.SEED
    out: str | None = None
    fmt: str = config.OUTPUT_FORMAT
    trials: int = config.TRIALS
    workers: int = config.WORKERS

    def __post_init__(self):
        if self.fmt not in ("csv", "json"):
            raise InvalidInputError(f"format must be csv or json, got {self.fmt!r}")
        if self.kappa is not None and (self.kappa < 0 or not np.isfinite(self.kappa)):
            raise InvalidInputError(f"kappa must be a finite number >= 0, got {self.kappa}")
        if self.lam is not None and not 0.0 <= self.lam <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam}")
        for name in ("mc_samples", "trials", "workers"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name.replace('_', '-')} must be >= 1, got {getattr(self, name)}")
        # validates the orders
        self.quadrature()

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(self.quad_theta, self.quad_phi)

    def direction(self) -> np.ndarray:
        return ISOTROPIC_DIRECTION if self.c_hat is None else unit(self.c_hat, "c_hat")

    def state(self) -> TwoQubitState:
        """--lambda gives a pure state, --b a polarized one, otherwise an MMMS."""
        if self.lam is not None:
            if self.b is not None or self.kappa is not None:
                raise InvalidInputError("--lambda cannot be combined with --kappa or --b")
            return pure_state(self.lam)
        if self.kappa is None:
            raise InvalidInputError("a state needs --kappa (with --c-hat, --b) or --lambda")
        if self.b is not None:
            return make_state((0.0, 0.0, 0.0), self.b, self.kappa * self.direction())
        return make_mmms(self.kappa, self.direction())

    def task(self) -> RspTask:
        target = unit(self.target or DEFAULT_TARGET, "target")
        beta = default_beta(target)[0] if self.beta is None else self.beta
        return RspTask.of(target, beta)

    def echo(self) -> dict:
        record = {"command": self.command}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ("command", "out") or value is None:
                continue
            key = {"lam": "lambda", "fmt": "format"}.get(f.name, f.name.replace("_", "-"))
            record[key] = _format_vector(value) if isinstance(value, tuple) else value
        return record


def _attr(key: str) -> str:
    return {"lambda": "lam", "format": "fmt"}.get(key, key.replace("-", "_"))


def read_config_file(path: str) -> dict:
    if not Path(path).is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    values = {}
    for raw_key, raw_value in dotenv_values(path).items():
        key = raw_key.strip().lower().replace("_", "-")
        if key not in CONFIG_KEYS:
            logger.warning("[config] ignoring unknown key %r in %s", raw_key, path)
            continue
        if raw_value is None or raw_value == "":
            continue
        try:
            values[key] = CONFIG_KEYS[key](raw_value)
        except ValueError as e:
            raise InvalidInputError(f"bad value for {key} in {path}: {raw_value!r}") from e
    logger.info("[config] %d values from %s", len(values), path)
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    settings: dict[str, Any] = {}
    env = config.effective_config()
    for key in CONFIG_KEYS:
        if key in env:
            settings[_attr(key)] = env[key]
    if getattr(args, "config", None):
        for key, value in read_config_file(args.config).items():
            settings[_attr(key)] = value
    for key in CONFIG_KEYS:
        value = getattr(args, _attr(key), None)
        if value is not None:
            settings[_attr(key)] = value
    return RunConfig(command=args.command, **settings)


# --------------------------------------------------------------------
#  OUTPUT
# --------------------------------------------------------------------
@contextmanager
def _output(cfg: RunConfig) -> Iterator:
    if cfg.out is None:
        yield sys.stdout
        return
    with open(cfg.out, "w", newline="", encoding="utf-8") as stream:
        yield stream
    logger.info("[output] wrote %s", cfg.out)


def emit_table(cfg: RunConfig, table: Table) -> None:
    with _output(cfg) as stream:
        write_table(table, stream, cfg.fmt, cfg.echo())


def emit_record(cfg: RunConfig, record: dict) -> None:
    with _output(cfg) as stream:
        json.dump({"config": cfg.echo(), **record}, stream, indent=2, default=json_default)
        stream.write("\n")


def json_default(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


# --------------------------------------------------------------------
#  REPORTS (shared with app.py)
# --------------------------------------------------------------------
def classification_report(kappa: float, c_hat) -> dict:
    c = unit(c_hat, "c_hat")
    if not is_in_tetrahedron(kappa * c):
        raise DomainError(f"kappa * c_hat = {(kappa * c).tolist()} lies outside the tetrahedron")
    state = make_mmms(kappa, c)
    symmetry_class = classify(c, config.CLASSIFY_TOL)
    try:
        dim = omega_max_dim(state)
    except DegenerateInputError:
        dim = None
    return {
        "class": symmetry_class.label,
        "epsilon": symmetry_class.epsilon,
        "near_boundary": symmetry_class.near_boundary,
        "orbit": orbit_size(c),
        "physical_orbit": len(orbit_physical_subset(kappa, c)),
        "omega_max_dim": dim,
        "purity": purity(state),
        "spin_flip_admissible": spin_flip_admissible(state.c_vec),
    }


def pair_record(state: TwoQubitState, n, m) -> dict:
    pair = ObservablePair.along(n, m)
    joint = joint_distribution(state, pair)
    return {"I": mutual_information(state, pair), **joint.as_dict()}


def _planar_axis(theta: float) -> np.ndarray:
    return np.array([np.sin(theta), 0.0, np.cos(theta)])


def pair_grid(points: int) -> Iterator[tuple[float, float, ObservablePair]]:
    """n and m swept over the x-z great circle, theta in [0, pi]."""
    if points < 2:
        raise InvalidInputError(f"pair grid needs at least 2 points, got {points}")
    thetas = np.linspace(0.0, np.pi, points)
    for theta_n in thetas:
        for theta_m in thetas:
            yield theta_n, theta_m, ObservablePair.along(_planar_axis(theta_n), _planar_axis(theta_m))


# --------------------------------------------------------------------
#  COMMANDS
# --------------------------------------------------------------------
def cmd_figure(args: argparse.Namespace, cfg: RunConfig) -> int:
    table = build_figure(args.id, args.step, args.grid, args.normalize, cfg.quadrature())
    emit_table(cfg, table)
    return 0


def cmd_classify(args: argparse.Namespace, cfg: RunConfig) -> int:
    if cfg.kappa is None:
        raise InvalidInputError("classify needs --kappa")
    emit_record(cfg, classification_report(cfg.kappa, cfg.direction()))
    return 0


def cmd_mi(args: argparse.Namespace, cfg: RunConfig) -> int:
    state = cfg.state()
    if args.n is not None or args.m is not None:
        if args.n is None or args.m is None:
            raise InvalidInputError("--n and --m must be given together")
        emit_record(cfg, pair_record(state, args.n, args.m))
        return 0

    if args.average:
        mean, stderr = mc_average(
            pair_mi_integrand(state), McSpec(cfg.mc_samples, cfg.seed), "s2xs2", cfg.workers
        )
        emit_record(
            cfg,
            {"avg_I": avg_mi_general(state, cfg.quadrature()), "mc_mean": mean, "mc_std_error": stderr},
        )
        return 0

    table = Table("mi", ["theta_n", "theta_m", "x", "I"])
    for theta_n, theta_m, pair in pair_grid(args.grid):
        joint = joint_distribution(state, pair)
        table.rows.append([theta_n, theta_m, joint.x, mutual_information(state, pair)])
    emit_table(cfg, table)
    return 0


def cmd_coherence(args: argparse.Namespace, cfg: RunConfig) -> int:
    state = cfg.state()
    if args.n is not None or args.m is not None:
        if args.n is None or args.m is None:
            raise InvalidInputError("--n and --m must be given together")
        emit_record(cfg, coherence_of_basis(state, ObservablePair.along(args.n, args.m)).as_dict())
        return 0

    if args.average:
        emit_record(
            cfg,
            {"avg_coherence": avg_coherence(state, cfg.quadrature()), "S": von_neumann_entropy(state)},
        )
        return 0

    table = Table("coherence", ["theta_n", "theta_m", "I", "Coh", "H_basis", "S"])
    for theta_n, theta_m, pair in pair_grid(args.grid):
        parts = coherence_of_basis(state, pair)
        table.rows.append([theta_n, theta_m, parts.I, parts.coherence, parts.H_basis, parts.S_vn])
    emit_table(cfg, table)
    return 0


def cmd_rsp_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    state = cfg.state()
    task = cfg.task()
    record = evaluate(state, task).as_dict()
    if args.simulate:
        record["simulation"] = simulate_trials(
            state, task, args.simulate, cfg.seed, workers=cfg.workers
        ).as_dict()
    emit_record(cfg, record)
    return 0


def cmd_rsp_average(args: argparse.Namespace, cfg: RunConfig) -> int:
    averages = average_over_relevant(cfg.state(), quad=cfg.quadrature()).as_dict()
    emit_table(cfg, Table("rsp-average", list(averages), [list(averages.values())]))
    return 0


def cmd_simulate(args: argparse.Namespace, cfg: RunConfig) -> int:
    stats = simulate_trials(cfg.state(), cfg.task(), cfg.trials, cfg.seed, workers=cfg.workers).as_dict()
    emit_table(cfg, Table("simulate", list(stats), [list(stats.values())]))
    return 0


def cmd_verify(args: argparse.Namespace, cfg: RunConfig) -> int:
    results = run_suite(args.suite, cfg.seed, cfg.quadrature(), args.scale)
    table = Table("verify", ["check", "tolerance", "measured", "slack", "passed", "seconds"])
    for r in results:
        table.rows.append([r.name, r.tolerance, r.measured, r.slack, r.passed, r.seconds])
    emit_table(cfg, table)

    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error("[verify] %d of %d checks failed: %s", len(failed), len(results), ", ".join(failed))
    return 0 if all_passed(results) else 1


def cmd_serve(args: argparse.Namespace, cfg: RunConfig) -> int:
    from app import DEBUG, app

    app.run(host=args.host, port=args.port, debug=DEBUG)
    return 0


# --------------------------------------------------------------------
#  PARSER
# --------------------------------------------------------------------
def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="dotenv-style KEY=VALUE file with defaults for these flags")
    common.add_argument("--kappa", type=float, help="correlation strength")
    common.add_argument("--c-hat", type=parse_vector, help="correlation direction x,y,z (default -(1,1,1)/sqrt3)")
    common.add_argument("--lambda", dest="lam", type=float, help="Schmidt coefficient of a pure state")
    common.add_argument("--b", type=parse_vector, help="Bloch vector of B's marginal x,y,z")
    common.add_argument("--target", type=parse_vector, help="RSP target direction x,y,z (default 1,0,0)")
    common.add_argument("--beta", type=parse_vector, help="correction axis x,y,z, orthogonal to the target")
    common.add_argument("--quad-theta", type=int, help=f"polar quadrature order (default {config.QUAD_THETA})")
    common.add_argument("--quad-phi", type=int, help=f"azimuthal quadrature order (default {config.QUAD_PHI})")
    common.add_argument("--mc-samples", type=int, help=f"Monte-Carlo samples (default {config.MC_SAMPLES})")
    common.add_argument("--seed", type=int, help=f"random seed (default {config.SEED})")
    common.add_argument("--trials", type=int, help=f"simulated trials (default {config.TRIALS})")
    common.add_argument("--workers", type=int, help=f"worker threads (default {config.WORKERS})")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", dest="fmt", choices=["csv", "json"], help="table format")
    common.add_argument("--verbose", "-v", action="store_true", help="enable INFO logging")
    return common


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Mutual information, coherence and remote state preparation for two-qubit states",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = _common_options()
    subparsers = parser.add_subparsers(dest="command", help="commands")

    cmd = subparsers.add_parser("figure", parents=[common], help="data table behind a figure")
    cmd.add_argument("id", type=int, choices=FIGURE_IDS)
    cmd.add_argument("--step", type=float, default=DEFAULT_STEP, help=f"1-d grid step (default {DEFAULT_STEP})")
    cmd.add_argument("--grid", type=int, default=DEFAULT_GRID, help=f"points per axis on (kappa, b) maps (default {DEFAULT_GRID})")
    cmd.add_argument("--normalize", choices=["classical", "isotropic"], default="isotropic")

    subparsers.add_parser("classify", parents=[common], help="symmetry class and orbit of an MMMS")

    for name, text in (("mi", "mutual information"), ("coherence", "basis coherence")):
        cmd = subparsers.add_parser(name, parents=[common], help=text)
        cmd.add_argument("--n", type=parse_vector, help="A's observable x,y,z")
        cmd.add_argument("--m", type=parse_vector, help="B's observable x,y,z")
        cmd.add_argument("--average", action="store_true", help="average over both spheres")
        cmd.add_argument("--grid", type=int, default=DEFAULT_PAIR_GRID, help="pair grid points per observable")

    cmd = subparsers.add_parser("rsp-eval", parents=[common], help="evaluate one RSP task")
    cmd.add_argument("--simulate", type=int, metavar="N", help="append N simulated trials")

    subparsers.add_parser("rsp-average", parents=[common], help="averages over all targets")
    subparsers.add_parser("simulate", parents=[common], help="simulate protocol trials")

    cmd = subparsers.add_parser("verify", parents=[common], help="run the acceptance checks")
    cmd.add_argument("--suite", choices=SUITES, default="all")
    cmd.add_argument("--scale", type=float, default=1.0, help="shrink sample counts (quick runs)")

    cmd = subparsers.add_parser("serve", parents=[common], help="run the HTTP API")
    cmd.add_argument("--host", default="127.0.0.1")
    cmd.add_argument("--port", type=int, default=config.PORT)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = create_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1

    level = logging.INFO if args.verbose else getattr(logging, config.LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")

    command_map = {
        "figure": cmd_figure,
        "classify": cmd_classify,
        "mi": cmd_mi,
        "coherence": cmd_coherence,
        "rsp-eval": cmd_rsp_eval,
        "rsp-average": cmd_rsp_average,
        "simulate": cmd_simulate,
        "verify": cmd_verify,
        "serve": cmd_serve,
    }
    try:
        cfg = resolve_config(args)
        return command_map[args.command](args, cfg)
    except (TwoQubitError, OSError) as e:
        print(f"error: [{args.command}] {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
