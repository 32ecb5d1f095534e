"""Command line front end.

    inftorus <command> --config run.json --out results/ [--seed N] [--verbose]

``command`` may also be given as ``"command"`` inside the config.  Reports are
JSON, tables and trajectories CSV; identical config and seed give identical
bytes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from . import __version__
from .arith import format_rational
from .ergodic import (
    CharacterIndex,
    equidistribution_stat,
    ergodicity_verdict,
    sample_trajectory,
    space_average_mc,
    time_average_closed,
    time_average_quadrature,
)
from .frequency import system_from_json, system_to_json
from .recurrence import (
    InfeasibleTolerance,
    classify_trajectory,
    nonwandering_evidence,
    projection_period_growth,
)
from .torus import (
    FlowParams,
    FlowTime,
    PhasePoint,
    TailBoundUnavailable,
    TorusSpec,
    torus_from_json,
    torus_to_json,
    trajectory_rows,
)

COMMANDS = ("classify", "simulate", "ergodic-test", "recurrence", "period-table")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("inftorus")


class ConfigError(ValueError):
    pass


def _canonical(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _dump(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _param(params: dict, key: str, kind, default=None, positive: bool = False):
    if key not in params:
        if default is None:
            raise ConfigError(f"params.{key} is required")
        return default
    try:
        val = kind(params[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params.{key}: {exc}") from exc
    if positive and not val > 0:
        raise ConfigError(f"params.{key} must be positive, got {params[key]!r}")
    return val


def _turn(v) -> Any:
    return Fraction(v) if isinstance(v, (str, int)) else float(v)


def _load_point(params: dict, torus: TorusSpec, n: int) -> PhasePoint:
    doc = params.get("point")
    if doc is None:
        return PhasePoint.origin(torus, n)
    if "turns" in doc:
        return PhasePoint(torus, tuple(_turn(v) for v in doc["turns"]))
    if "angles" in doc:
        return PhasePoint.from_angles(torus, [float(a) for a in doc["angles"]])
    raise ConfigError("params.point needs 'turns' or 'angles'")


def _flow_time(v) -> FlowTime:
    """A time is a float number of seconds or {"t_over_2pi": "p/q", "offset": s}."""
    if isinstance(v, dict):
        return FlowTime(Fraction(str(v.get("t_over_2pi", "0"))), float(v.get("offset", 0.0)))
    return FlowTime(Fraction(0), float(v))


def _default_torus(n: int) -> TorusSpec:
    return TorusSpec((Fraction(1),) * n)


# pipelines ---------------------------------------------------------------------

def _classify(system, torus, params, seed):
    upto = _param(params, "upto", int, len(system))
    cls = classify_trajectory(system, torus, upto)
    table = projection_period_growth(system, upto)
    verdict = ergodicity_verdict(system, min(upto, len(system)))
    report = {
        **cls.to_json(),
        "ergodicity": verdict.to_json(),
        "period_table": [[N, None if p is None else format_rational(p)] for N, p in table],
    }
    files = {"period_table.csv": _period_csv(table)}
    return report, files


def _period_csv(table) -> str:
    return _csv(["N", "period_over_2pi"], [[N, "none" if p is None else format_rational(p)] for N, p in table])


def _period_table(system, torus, params, seed):
    n_max = _param(params, "N_max", int, len(system), positive=True)
    table = projection_period_growth(system, n_max)
    report = {"period_table": [[N, None if p is None else format_rational(p)] for N, p in table]}
    return report, {"period_table.csv": _period_csv(table)}


def _simulate(system, torus, params, seed):
    n = _param(params, "trunc", int, min(len(system), torus.dimension or len(system)))
    x0 = _load_point(params, torus, n)
    if "times" in params:
        times = [_flow_time(v) for v in params["times"]]
    else:
        t_end = _flow_time(params.get("t", 0.0))
        steps = _param(params, "steps", int, 1)
        times = [
            FlowTime(t_end.cycles * Fraction(j, steps), t_end.offset * j / steps) for j in range(steps + 1)
        ] if steps > 0 else [FlowTime()]
    header, rows = trajectory_rows(x0, system, times, bool(params.get("with_qp", False)))
    final = rows[-1]
    report = {"trunc_level": n, "samples": len(rows), "final_angles": final[1 : n + 1]}
    return report, {"trajectory.csv": _csv(header, rows)}


def _ergodic_test(system, torus, params, seed):
    if seed is None:
        raise ConfigError("seed is required for ergodic-test (pass --seed or params.seed)")
    upto = _param(params, "upto", int, len(system))
    verdict = ergodicity_verdict(system, upto)
    if "character" in params:
        ch = CharacterIndex([tuple(p) for p in params["character"]])
    elif verdict.witness is not None:
        ch = CharacterIndex(verdict.witness)
    else:
        ch = CharacterIndex({1: 1, 2: -1}) if upto >= 2 else CharacterIndex({1: 1})
    T = _param(params, "T", float, 1e4, positive=True)
    steps = _param(params, "steps", int, 10**6, positive=True)
    samples = _param(params, "samples", int, 10**5, positive=True)
    workers = _param(params, "workers", int, 1, positive=True)
    n = max(ch.max_index, 1)
    x0 = _load_point(params, torus, n)
    fp = FlowParams(system)
    closed = time_average_closed(ch, fp, x0, T)
    quad = time_average_quadrature(ch, fp, x0, T, steps)
    est, err = space_average_mc(torus, ch, samples, seed, workers)
    dims = sorted({k for k, _ in ch.support}) or [1]
    traj = sample_trajectory(PhasePoint.origin(torus, max(dims), exact=x0.is_exact), system, T,
                             _param(params, "traj_samples", int, 20000, positive=True))
    stat = equidistribution_stat(traj, dims)
    stats = {
        "character": ch.to_json(),
        "time_average_closed": _complex(closed),
        "time_average_quadrature": _complex(quad.value),
        "quadrature_error_bound": quad.error_bound,
        "space_average_mc": _complex(est),
        "space_average_stderr": err,
        "equidistribution_stat": stat,
        "T": T,
        "samples": samples,
    }
    doc = verdict.to_json()
    doc["stats"] = stats
    return doc, {}


def _recurrence(system, torus, params, seed):
    n = _param(params, "trunc", int, min(len(system), torus.dimension or len(system)))
    x0 = _load_point(params, torus, n)
    eps = _param(params, "eps", float, positive=True)
    t_floor = _param(params, "T_floor", float, positive=True)
    horizon = _param(params, "horizon", float, 1e6, positive=True)
    rec = nonwandering_evidence(x0, FlowParams(system), eps, t_floor, horizon,
                                _param(params, "max_hits", int, 10, positive=True))
    return rec.to_json(), {}


PIPELINES = {
    "classify": _classify,
    "simulate": _simulate,
    "ergodic-test": _ergodic_test,
    "recurrence": _recurrence,
    "period-table": _period_table,
}


def run(config: dict, out_dir: Optional[Path] = None, seed: Optional[int] = None,
        command: Optional[str] = None, workers: Optional[int] = None) -> tuple[dict, dict[str, str]]:
    """Execute one pipeline; returns the report and the extra files (name -> text).

    ``workers`` only changes how Monte Carlo blocks are scheduled, never the
    numbers, so it is kept out of the config hash.
    """
    command = command or config.get("command")
    if command not in PIPELINES:
        raise ConfigError(f"command: unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    if config.get("command") not in (None, command):
        raise ConfigError(f"command: config says {config['command']!r} but {command!r} was requested")
    if seed is None and "seed" in config.get("params", {}):
        seed = config["params"]["seed"]
    if seed is not None:
        if not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
    try:
        system = system_from_json(config["system"])
    except KeyError as exc:
        raise ConfigError("system: missing") from exc
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"system: {exc}") from exc
    try:
        torus = torus_from_json(config["torus"]) if "torus" in config else _default_torus(len(system))
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"torus: {exc}") from exc
    params = dict(config.get("params", {}))
    if workers is not None:
        params["workers"] = workers
    hashed_params = {k: v for k, v in params.items() if k != "workers"}
    resolved = {**config, "params": hashed_params, "command": command, "seed": seed}
    log.info("running %s on %d frequencies", command, len(system))
    report, files = PIPELINES[command](system, torus, params, seed)
    envelope = {
        "command": command,
        "config_hash": hashlib.sha256(_canonical(resolved).encode()).hexdigest(),
        "version": __version__,
        "seed": seed,
        "system": system_to_json(system),
        "torus": torus_to_json(torus),
        "report": report,
    }
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(_dump(envelope))
        for name, text in files.items():
            (out_dir / name).write_text(text)
    return envelope, files


def main(argv: Optional[list[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="inftorus", description="Linear flows on infinite-dimensional tori")
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
    ap.add_argument("--workers", type=int, default=None, help="threads for Monte Carlo sampling")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        try:
            config = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config: file {args.config} not found")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: malformed JSON ({exc.msg} at line {exc.lineno})")
        if not isinstance(config, dict):
            raise ConfigError("config: top level must be an object")
        run(config, Path(args.out), args.seed, args.command, args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleTolerance, TailBoundUnavailable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: params: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
