"""Config-driven experiment runner.

Commands: run (one configured game), reproduce (a named preset suite),
list-presets, version. Reports are JSON with a stable schema; the flat-table
format emits one CSV row per trial for external plotting.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import os
import sys
import time
from dataclasses import asdict

import click

from . import __version__
from .data import DataSpec
from .games import (
    ConfigInvalidError,
    GameConfig,
    run_deletion_inference,
    run_known_instance,
    run_reconstruction,
)
from .compliance import di_env_adapter, run_compliance
from .learners import LearnerSpec
from .presets import PRESETS

REPORT_SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "UNLEARN_AUDIT_OUTPUT_DIR"

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2


def _parse_value(section: str, key: str, raw: str, kind):
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return kind(raw)
    except ValueError as exc:
        raise ConfigInvalidError(f"{section}.{key}: {exc}") from None


# allowed keys per section with their parsers
GAME_KEYS = {
    "type": str, "trials": int, "sessions": int, "seed": int, "loss": str,
    "metric": str, "eps": float, "instance_only": bool, "label_only": bool,
    "deletion_hiding": bool, "batch_size": int, "lam": float,
    "tune_trials": int, "tune_grid": str, "workers": int,
}
LEARNER_KEYS = {
    "kind": str, "alpha": float, "k": int, "order": int, "max_iter": int,
    "tol": float, "l2": float, "value": float, "n_classes": int,
}
DATA_KEYS = {
    "kind": str, "n": int, "d": int, "noise": float, "classes": int,
    "spread": float, "label_mode": str, "path": str, "label_column": str,
    "label_kind": str,
}
ATTACKER_KEYS = {
    "id": str, "mode": str, "holdout": int, "probes": int, "aux_size": int,
    "rec": str, "oracles": str, "rule": str, "tau": float, "max_repeats": int,
    "full_enumeration_limit": int, "query_budget": int, "challenge": str,
}
COMPLIANCE_KEYS = {"n": int, "k": int}
ASSERT_KEYS = {
    "min_success": float, "max_success": float, "min_exact": float,
    "min_f1": float, "min_rho": float, "max_ratio": float,
    "min_advantage": float, "max_advantage": float,
}
OUTPUT_KEYS = {"path": str, "format": str}

SECTIONS = {
    "game": GAME_KEYS,
    "learner": LEARNER_KEYS,
    "data": DATA_KEYS,
    "attacker": ATTACKER_KEYS,
    "compliance": COMPLIANCE_KEYS,
    "assert": ASSERT_KEYS,
    "output": OUTPUT_KEYS,
}


def parse_config(text: str) -> dict:
    """Parse and validate the INI experiment config; unknown sections or
    keys are rejected by name."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigInvalidError(f"config parse error: {exc}") from None
    out: dict = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigInvalidError(f"unknown section [{section}]")
        allowed = SECTIONS[section]
        values = {}
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigInvalidError(f"unknown key {section}.{key}")
            values[key] = _parse_value(section, key, raw, allowed[key])
        out[section] = values
    if "learner" not in out or "kind" not in out.get("learner", {}):
        raise ConfigInvalidError("learner.kind is required")
    if "data" not in out or "kind" not in out.get("data", {}):
        raise ConfigInvalidError("data.kind is required")
    return out


def build_game_config(conf: dict, seed_override=None, trials_override=None) -> GameConfig:
    game = dict(conf.get("game", {}))
    learner = LearnerSpec(**conf["learner"])
    data = DataSpec(**conf["data"])
    attacker_conf = dict(conf.get("attacker", {}))
    attacker_id = attacker_conf.pop("id", "loss-increase")
    tune_grid = ()
    if "tune_grid" in game:
        tune_grid = tuple(float(v) for v in game.pop("tune_grid").split(","))
    cfg = GameConfig(
        learner=learner,
        data=data,
        game=game.get("type", "deletion-inference"),
        attacker=attacker_id,
        attacker_params=tuple(sorted(attacker_conf.items())),
        trials=trials_override or game.get("trials", 1000),
        seed=seed_override if seed_override is not None else game.get("seed", 0),
        loss=game.get("loss", "squared"),
        metric=game.get("metric", "exact"),
        eps=game.get("eps", 0.0),
        instance_only=game.get("instance_only", False),
        label_only=game.get("label_only", False),
        deletion_hiding=game.get("deletion_hiding", False),
        batch_size=game.get("batch_size", 1),
        lam=game.get("lam"),
        tune_grid=tune_grid,
        tune_trials=game.get("tune_trials", 100),
    )
    return cfg


def _results_dict(kind: str, stats) -> dict:
    if kind == "deletion-inference":
        return {
            "estimate": stats.estimate, "wins": stats.wins, "trials": stats.trials,
            "ci_low": stats.ci_low, "ci_high": stats.ci_high, "ties": stats.ties,
            "collisions": stats.collisions,
            "mean_queries_before": stats.mean_queries_before,
            "mean_queries_after": stats.mean_queries_after,
        }
    if kind == "reconstruction":
        return {
            "rho_at_eps": stats.rho_at_eps, "eps": stats.eps,
            "exact_match": stats.exact_match,
            "expected_accuracy": stats.expected_accuracy,
            "f1_mean": stats.f1_mean,
            "mean_distance": sum(stats.distances) / len(stats.distances),
            "trials": len(stats.distances),
            "mean_queries_before": stats.mean_queries_before,
            "mean_queries_after": stats.mean_queries_after,
        }
    if kind == "known-instance":
        return {
            "lam": stats.lam, "mean_attacker": stats.mean_attacker,
            "mean_baseline": stats.mean_baseline,
            "ratio": stats.mean_attacker / stats.mean_baseline,
            "trials": len(stats.rows),
        }
    if kind == "compliance":
        return {
            "advantage": stats.advantage,
            "p_guess1_world1": stats.p_guess1_world1,
            "p_guess1_world0": stats.p_guess1_world0,
            "ci_world1": list(stats.ci_world1), "ci_world0": list(stats.ci_world0),
            "se_combined": stats.se_combined, "sessions": stats.sessions,
        }
    raise ConfigInvalidError(f"game.type: unknown game {kind!r}")


def _flat_table(kind: str, stats) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    if kind == "deletion-inference":
        writer.writerow(["trial", "win"])
        for t, w in enumerate(stats.trial_wins):
            writer.writerow([t, w])
    elif kind == "reconstruction":
        if stats.f1_scores:
            writer.writerow(["trial", "distance", "f1"])
            for t, (d, f) in enumerate(zip(stats.distances, stats.f1_scores)):
                writer.writerow([t, d, f])
        else:
            writer.writerow(["trial", "distance"])
            for t, d in enumerate(stats.distances):
                writer.writerow([t, d])
    elif kind == "known-instance":
        writer.writerow(["trial", "attacker_distance", "baseline_distance"])
        for t, (a, b) in enumerate(stats.rows):
            writer.writerow([t, a, b])
    elif kind == "compliance":
        writer.writerow(["session", "world", "guess"])
        for s, (w, g) in enumerate(stats.outcomes):
            writer.writerow([s, w, g])
    return buf.getvalue()


def _check_assertions(asserts: dict, kind: str, results: dict) -> list:
    failures = []

    def check(name, ok, detail):
        if not ok:
            failures.append(f"{name}: {detail}")

    if "min_success" in asserts:
        val = results.get("estimate", results.get("exact_match"))
        check("min_success", val >= asserts["min_success"], f"{val} < {asserts['min_success']}")
    if "max_success" in asserts:
        val = results.get("estimate", results.get("exact_match"))
        check("max_success", val <= asserts["max_success"], f"{val} > {asserts['max_success']}")
    if "min_exact" in asserts:
        check("min_exact", results["exact_match"] >= asserts["min_exact"],
              f"{results['exact_match']} < {asserts['min_exact']}")
    if "min_f1" in asserts:
        check("min_f1", (results.get("f1_mean") or 0.0) >= asserts["min_f1"],
              f"{results.get('f1_mean')} < {asserts['min_f1']}")
    if "min_rho" in asserts:
        check("min_rho", results["rho_at_eps"] >= asserts["min_rho"],
              f"{results['rho_at_eps']} < {asserts['min_rho']}")
    if "max_ratio" in asserts:
        check("max_ratio", results["ratio"] <= asserts["max_ratio"],
              f"{results['ratio']} > {asserts['max_ratio']}")
    if "min_advantage" in asserts:
        check("min_advantage", results["advantage"] >= asserts["min_advantage"],
              f"{results['advantage']} < {asserts['min_advantage']}")
    if "max_advantage" in asserts:
        check("max_advantage", results["advantage"] <= asserts["max_advantage"],
              f"{results['advantage']} > {asserts['max_advantage']}")
    return failures


def _serializable_config(cfg: GameConfig) -> dict:
    out = asdict(cfg)
    out["attacker_params"] = dict(cfg.attacker_params)
    return out


def _default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, "reports")


def _execute(conf: dict, seed_override, trials_override, workers: int):
    kind = conf.get("game", {}).get("type", "deletion-inference")
    if kind == "compliance":
        comp = conf.get("compliance", {})
        n = comp.get("n", conf["data"].get("n", 100))
        k = comp.get("k", 1)
        sessions = conf.get("game", {}).get("sessions", conf.get("game", {}).get("trials", 1000))
        cfg = build_game_config({**conf, "game": {**conf.get("game", {}), "type": "deletion-inference"}},
                                seed_override, trials_override)
        stats = run_compliance(cfg.learner, di_env_adapter(cfg), n=n, k=k,
                               sessions=sessions, seed=cfg.seed)
        return kind, cfg, stats
    cfg = build_game_config(conf, seed_override, trials_override)
    if kind == "deletion-inference":
        return kind, cfg, run_deletion_inference(cfg, workers)
    if kind == "reconstruction":
        return kind, cfg, run_reconstruction(cfg, workers)
    if kind == "known-instance":
        return kind, cfg, run_known_instance(cfg, workers)
    raise ConfigInvalidError(f"game.type: unknown game {kind!r}")


@click.group()
def main():
    """Privacy audit toolkit for machine unlearning."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--trials", type=int, default=None, help="Override the trial count.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--output", "output_path", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["report", "flat-table"]), default=None,
              help="Report format [default: report, or the config's output.format]")
def run(config_path, seed, trials, workers, output_path, fmt):
    """Run one configured experiment and write its report."""
    started = time.time()
    try:
        with open(config_path) as f:
            conf = parse_config(f.read())
        kind, cfg, stats = _execute(conf, seed, trials, workers)
    except ConfigInvalidError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    results = _results_dict(kind, stats)
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": {"name": "unlearn-audit", "version": __version__},
        "game": kind,
        "config": _serializable_config(cfg),
        "seed": cfg.seed,
        "results": results,
        "wall_clock_s": round(time.time() - started, 3),
    }
    out_conf = conf.get("output", {})
    if fmt is None:  # explicit flag beats the config; default is "report"
        fmt = out_conf.get("format", "report")
    if output_path is None:
        output_path = out_conf.get("path")
    if output_path is None:
        stem = os.path.splitext(os.path.basename(config_path))[0]
        suffix = "csv" if fmt == "flat-table" else "json"
        os.makedirs(_default_output_dir(), exist_ok=True)
        output_path = os.path.join(_default_output_dir(), f"{stem}-report.{suffix}")
    else:
        parent = os.path.dirname(output_path)
        if parent:
            os.makedirs(parent, exist_ok=True)
    try:
        with open(output_path, "w") as f:
            if fmt == "flat-table":
                f.write(_flat_table(kind, stats))
            else:
                json.dump(report, f, indent=2, sort_keys=True)
                f.write("\n")
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"wrote {output_path}")
    for key in sorted(results):
        click.echo(f"  {key} = {results[key]}")
    failures = _check_assertions(conf.get("assert", {}), kind, results)
    for failure in failures:
        click.echo(f"ASSERTION FAILED {failure}", err=True)
    sys.exit(EXIT_ASSERTION if failures else EXIT_OK)


@main.command()
@click.argument("preset_name")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--output", "output_path", type=click.Path(dir_okay=False), default=None)
def reproduce(preset_name, workers, output_path):
    """Run a named preset suite and print one pass/fail line per criterion."""
    if preset_name not in PRESETS:
        click.echo(f"unknown preset {preset_name!r}; try list-presets", err=True)
        sys.exit(EXIT_CONFIG)
    preset = PRESETS[preset_name]
    started = time.time()
    results = preset.runner(workers)
    elapsed = time.time() - started
    for r in results:
        click.echo(r.line)
    click.echo(f"{preset.name}: {sum(r.passed for r in results)}/{len(results)} criteria passed "
               f"in {elapsed:.1f}s")
    if output_path:
        report = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool": {"name": "unlearn-audit", "version": __version__},
            "preset": preset.name,
            "criteria": [
                {"name": r.name, "passed": r.passed, "detail": r.detail, "values": r.values}
                for r in results
            ],
            "wall_clock_s": round(elapsed, 3),
        }
        parent = os.path.dirname(output_path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(output_path, "w") as f:
            json.dump(report, f, indent=2, sort_keys=True, default=float)
            f.write("\n")
        click.echo(f"wrote {output_path}")
    sys.exit(EXIT_OK if all(r.passed for r in results) else EXIT_ASSERTION)


@main.command("list-presets")
def list_presets():
    """List the available reproduction presets."""
    for name in sorted(PRESETS):
        click.echo(f"{name:10s} {PRESETS[name].description}")


@main.command()
def version():
    click.echo(f"unlearn-audit {__version__}")


if __name__ == "__main__":
    main()
