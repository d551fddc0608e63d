"""Command-line entry point.

Subcommands ``solve``, ``search``, ``asymptotics``, ``simulate`` and
``tables`` read one JSON configuration and write CSV/JSON files into the
output directory.  Exit codes: 0 success, 1 usage or configuration error,
2 bubble detected.

Configuration keys (all blocks optional)::

    {"mu": 0.26, "lambda": 0.1, "xi": 0.4, "beta": 0.05,
     "utility": "power", "alpha": 0.5,
     "solve": {"b": 1.9, "x_max": 10, "rel_tol": 1e-10, "abs_tol": 1e-10,
               "max_step": 0.05, "dense_spacing": 0.01},
     "search": {"b_start": null, "step_schedule": [0.01, ...], "epsilon": 0.005,
                "fit_count": 11, "x_max": 10, "mc_check": null,
                "quad_tol": 1e-11, "max_evaluations": 1000},
     "simulate": {"strategy": {"kind": "grid"}, "x0": 0, "n_paths": 100000,
                  "seed": 0, "horizon": null, "dt": 0.01},
     "asymptotics": {"x_points": null}}

A missing ``solve.b`` means "use the slope found by the search".  The
simulate strategy is ``{"kind": "grid"}`` (the solved policy),
``{"kind": "linear", "a1": .., "b1": ..}`` or ``{"kind": "constant", "c0": ..}``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .asymptotics import convergence_diagnostic
from .hjb import HjbSolution, Regime, solve_value_function
from .model import DomainError, ModelParams, UtilitySpec, net_profit_check
from .numerics import IvpConfig
from .shooting import DEFAULT_SCHEDULE, ShootingConfig, ShootingReport, search_initial_slope
from .simulator import ConstantPolicy, GridPolicy, LinearPolicy, estimate_value

__all__ = ["ConfigError", "RunConfig", "read_csv", "main", "EXIT_OK", "EXIT_CONFIG", "EXIT_BUBBLE"]

EXIT_OK, EXIT_CONFIG, EXIT_BUBBLE = 0, 1, 2

TABLE_PARAMS = {"mu": 0.26, "lambda": 0.1, "xi": 0.4, "beta": 0.05, "utility": "power", "alpha": 0.5}
TABLE_ROWS = np.arange(11.0)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SolveBlock:
    b: float | None = None
    x_max: float = 10.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = 0.05
    dense_spacing: float = 0.01

    @property
    def ivp(self) -> IvpConfig:
        return IvpConfig(self.rel_tol, self.abs_tol, self.max_step, self.dense_spacing)


@dataclass(frozen=True)
class SearchBlock:
    b_start: float | None = None
    step_schedule: tuple = DEFAULT_SCHEDULE
    epsilon: float = 0.005
    fit_count: int = 11
    x_max: float = 10.0
    mc_check: int | None = None
    quad_tol: float = 1e-11
    max_evaluations: int = 1000


@dataclass(frozen=True)
class SimulateBlock:
    strategy: dict = field(default_factory=lambda: {"kind": "grid"})
    x0: float = 0.0
    n_paths: int = 100_000
    seed: int = 0
    horizon: float | None = None
    dt: float = 0.01


@dataclass(frozen=True)
class AsymptoticsBlock:
    x_points: tuple | None = None


_STRATEGY_KEYS = {"grid": set(), "linear": {"a1", "b1"}, "constant": {"c0"}}


def _number(key, value, *, integer=False, optional=False, positive=False, nonneg=False):
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(key, "must be finite")
    if positive and not value > 0:
        raise ConfigError(key, f"must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ConfigError(key, f"must be nonnegative, got {value!r}")
    return int(value) if integer else float(value)


def _block(d: dict, name: str, cls, schema: dict):
    raw = d.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(name, "must be an object")
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", "unknown key")
    kwargs = {}
    for key, conv in schema.items():
        if key in raw:
            kwargs[key] = conv(f"{name}.{key}", raw[key])
    return cls(**kwargs)


def _schedule(key, value):
    if not isinstance(value, list) or not value:
        raise ConfigError(key, "must be a non-empty list of step sizes")
    steps = tuple(_number(key, v, positive=True) for v in value)
    if any(b >= a for a, b in zip(steps, steps[1:])):
        raise ConfigError(key, "steps must be strictly decreasing")
    return steps


def _strategy(key, value):
    if not isinstance(value, dict) or value.get("kind") not in _STRATEGY_KEYS:
        raise ConfigError(key, 'must be {"kind": "grid" | "linear" | "constant", ...}')
    kind = value["kind"]
    extra = set(value) - {"kind"} - _STRATEGY_KEYS[kind]
    if extra:
        raise ConfigError(f"{key}.{sorted(extra)[0]}", "unknown key")
    out = {"kind": kind}
    for k in sorted(_STRATEGY_KEYS[kind]):
        if k not in value:
            raise ConfigError(f"{key}.{k}", "missing")
        out[k] = _number(f"{key}.{k}", value[k])
    return out


def _x_points(key, value):
    if value is None:
        return None
    if not isinstance(value, list) or not value:
        raise ConfigError(key, "must be a non-empty list")
    return tuple(_number(key, v, nonneg=True) for v in value)


_SOLVE_KEYS = {
    "b": lambda k, v: _number(k, v, optional=True, positive=True),
    "x_max": lambda k, v: _number(k, v, positive=True),
    "rel_tol": lambda k, v: _number(k, v, positive=True),
    "abs_tol": lambda k, v: _number(k, v, positive=True),
    "max_step": lambda k, v: _number(k, v, positive=True),
    "dense_spacing": lambda k, v: _number(k, v, positive=True),
}
_SEARCH_KEYS = {
    "b_start": lambda k, v: _number(k, v, optional=True, positive=True),
    "step_schedule": _schedule,
    "epsilon": lambda k, v: _number(k, v, positive=True),
    "fit_count": lambda k, v: _number(k, v, integer=True, positive=True),
    "x_max": lambda k, v: _number(k, v, positive=True),
    "mc_check": lambda k, v: _number(k, v, integer=True, optional=True, positive=True),
    "quad_tol": lambda k, v: _number(k, v, positive=True),
    "max_evaluations": lambda k, v: _number(k, v, integer=True, positive=True),
}
_SIMULATE_KEYS = {
    "strategy": _strategy,
    "x0": lambda k, v: _number(k, v, nonneg=True),
    "n_paths": lambda k, v: _number(k, v, integer=True, positive=True),
    "seed": lambda k, v: _number(k, v, integer=True, nonneg=True),
    "horizon": lambda k, v: _number(k, v, optional=True, positive=True),
    "dt": lambda k, v: _number(k, v, positive=True),
}
_ASYMPTOTICS_KEYS = {"x_points": _x_points}
_TOP_KEYS = {"mu", "lambda", "xi", "beta", "utility", "alpha", "solve", "search", "simulate", "asymptotics"}


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    utility: UtilitySpec
    solve: SolveBlock = SolveBlock()
    search: SearchBlock = SearchBlock()
    simulate: SimulateBlock = SimulateBlock()
    asymptotics: AsymptoticsBlock = AsymptoticsBlock()

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        unknown = set(d) - _TOP_KEYS
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key")
        for key in ("mu", "lambda", "xi", "beta", "utility"):
            if key not in d:
                raise ConfigError(key, "missing")
        vals = {k: _number(k, d[k], positive=True) for k in ("mu", "lambda", "xi", "beta")}
        model = ModelParams(vals["mu"], vals["lambda"], vals["xi"], vals["beta"])
        if not net_profit_check(model):
            raise ConfigError("mu", f"net profit condition fails: mu={model.mu:g} <= lambda/xi="
                                    f"{model.lam / model.xi:g}")
        kind = d["utility"]
        try:
            if kind == "power":
                if "alpha" not in d:
                    raise ConfigError("alpha", "missing for power utility")
                utility = UtilitySpec.power(_number("alpha", d["alpha"]))
            elif kind == "log":
                if "alpha" in d:
                    raise ConfigError("alpha", "log utility takes no alpha")
                utility = UtilitySpec.log()
            else:
                raise ConfigError("utility", f'must be "power" or "log", got {kind!r}')
        except DomainError as exc:
            raise ConfigError("alpha", str(exc)) from None
        search = _block(d, "search", SearchBlock, _SEARCH_KEYS)
        try:
            _ = cls._shooting(search, SolveBlock())
        except ValueError as exc:
            raise ConfigError("search", str(exc)) from None
        return cls(model, utility,
                   _block(d, "solve", SolveBlock, _SOLVE_KEYS),
                   search,
                   _block(d, "simulate", SimulateBlock, _SIMULATE_KEYS),
                   _block(d, "asymptotics", AsymptoticsBlock, _ASYMPTOTICS_KEYS))

    def to_dict(self) -> dict:
        out = {**self.model.to_dict(), **self.utility.to_dict()}
        for name in ("solve", "search", "simulate", "asymptotics"):
            block = asdict(getattr(self, name))
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in block.items()}
        return out

    @staticmethod
    def _shooting(search: SearchBlock, solve: SolveBlock) -> ShootingConfig:
        return ShootingConfig(b_start=search.b_start, step_schedule=search.step_schedule,
                              epsilon=search.epsilon, fit_count=search.fit_count, x_max=search.x_max,
                              mc_check=search.mc_check, ivp=solve.ivp, quad_tol=search.quad_tol,
                              max_evaluations=search.max_evaluations)

    @property
    def shooting(self) -> ShootingConfig:
        return self._shooting(self.search, self.solve)


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig.from_dict(dict(TABLE_PARAMS))
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from None
    return RunConfig.from_dict(raw)


def read_csv(path) -> dict:
    """Read a CSV written by this package into ``{column: array}``.

    Numeric columns become float arrays (blank cells are NaN); any other
    column is returned as an array of strings.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        cells = [r[j] for r in body]
        try:
            out[name] = np.array([float(c) if c != "" else np.nan for c in cells])
        except ValueError:
            out[name] = np.array(cells)
    return out


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_rows(path: Path, sol: HjbSolution, xs):
    xs = [x for x in xs if x <= sol.x_max + 1e-12]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "v", "vx", "c"])
        for row in sol.rows_at(xs):
            w.writerow([f"{val:.6f}" for val in row])


def _slope(cfg: RunConfig, log) -> float:
    if cfg.solve.b is not None:
        return cfg.solve.b
    report = search_initial_slope(cfg.model, cfg.utility, cfg.shooting)
    b = report.decaying_slope
    if b is None:
        raise ConfigError("solve.b", "not given and the search found no usable slope")
    log(f"solve.b not given; using searched slope {b:.12g}")
    return b


def _solution(cfg: RunConfig, log) -> HjbSolution:
    return solve_value_function(cfg.model, cfg.utility, _slope(cfg, log), cfg.solve.x_max, cfg.solve.ivp)


def _summary(sol: HjbSolution) -> dict:
    return {"b": sol.b, "v0": float(sol.vs[0]), "regime": sol.regime.value, "stop_reason": sol.stop_reason,
            "x_stop": sol.x_stop, "x_end": sol.x_max}


def cmd_solve(cfg: RunConfig, out: Path, log) -> int:
    sol = _solution(cfg, log)
    sol.to_csv(out / "solution.csv")
    _write_json(out / "solve_summary.json", _summary(sol))
    log(f"classification: {sol.regime.value}")
    return EXIT_BUBBLE if sol.regime is Regime.BUBBLE else EXIT_OK


def _search(cfg: RunConfig, out: Path, log, stem: str) -> ShootingReport:
    try:
        report = search_initial_slope(cfg.model, cfg.utility, cfg.shooting)
    except ValueError as exc:
        raise ConfigError("search.b_start", str(exc)) from None
    report.to_csv(out / f"{stem}.csv")
    report.to_json(out / f"{stem}_summary.json")
    s = report.summary()
    log(f"b_final={s['b_final']} a_final={s['a_final']} gap={s['gap']} converged={s['converged']}")
    for w in report.warnings:
        log(f"warning: {w}")
    return report


def cmd_search(cfg: RunConfig, out: Path, log) -> int:
    _search(cfg, out, log, "search")
    return EXIT_OK


def cmd_asymptotics(cfg: RunConfig, out: Path, log) -> int:
    sol = _solution(cfg, log)
    if sol.regime is not Regime.DECAYING:
        log(f"classification: {sol.regime.value}; asymptotic ratios need a decaying solution")
        return EXIT_BUBBLE if sol.regime is Regime.BUBBLE else EXIT_CONFIG
    diag = convergence_diagnostic(sol, xs=cfg.asymptotics.x_points)
    diag.to_csv(out / "asymptotics.csv")
    log(f"trend toward 1: v={diag.trend_v} vx={diag.trend_vx} c={diag.trend_c}")
    return EXIT_OK


def _policy(cfg: RunConfig, log):
    strat = cfg.simulate.strategy
    if strat["kind"] == "linear":
        return LinearPolicy(strat["a1"], strat["b1"])
    if strat["kind"] == "constant":
        return ConstantPolicy(strat["c0"])
    sol = _solution(cfg, log)
    if sol.regime is not Regime.DECAYING:
        raise ConfigError("simulate.strategy", f"grid policy needs a decaying solution, got {sol.regime.value}")
    return GridPolicy.from_solution(sol)


def cmd_simulate(cfg: RunConfig, out: Path, log, seed: int | None = None) -> int:
    sim = cfg.simulate
    est = estimate_value(cfg.model, cfg.utility, _policy(cfg, log), sim.x0, sim.n_paths, sim.horizon,
                         sim.seed if seed is None else seed, sim.dt)
    text = est.to_json()
    (out / "estimate.json").write_text(text)
    log(text.rstrip())
    return EXIT_OK


def cmd_tables(cfg: RunConfig, out: Path, log) -> int:
    for name, b in (("table1", 1.9), ("table2", 2.0)):
        sol = solve_value_function(cfg.model, cfg.utility, b, cfg.solve.x_max, cfg.solve.ivp)
        _write_rows(out / f"{name}.csv", sol, TABLE_ROWS)
        _write_json(out / f"{name}_summary.json", _summary(sol))
        log(f"{name}: b={b} classification={sol.regime.value} v(0)={sol.vs[0]:.6f}")
    _search(cfg, out, log, "table3")
    return EXIT_OK


HELP = {
    "solve": "integrate the ODE for slope solve.b; writes solution.csv",
    "search": "locate the initial slope; writes search.csv and search_summary.json",
    "asymptotics": "ratios to the large-reserve formulas; writes asymptotics.csv",
    "simulate": "Monte Carlo value of a policy; writes estimate.json",
    "tables": "fixed-slope solves at 1.9 and 2.0 plus the slope search",
}

COMMANDS = {"solve": cmd_solve, "search": cmd_search, "asymptotics": cmd_asymptotics,
            "simulate": cmd_simulate, "tables": cmd_tables}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file (default: the reference parameter set)")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--seed", type=int, help="override simulate.seed")
    parser = argparse.ArgumentParser(prog="cramer-dividends",
                                     description="Value function and dividend policy for the Cramer-Lundberg model.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    def log(msg):
        print(msg)

    try:
        cfg = load_config(args.config)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed", "must be nonnegative")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, log, args.seed)
        return COMMANDS[args.command](cfg, out, log)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
