"""Command line entry point: ``ibnr <command> --config run.json``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional

import numpy as np

from . import semimarkov
from .config import COMMANDS, RunConfig, SemiTarget, parse_config, validate
from .dispatch import LIMIT, analytic_value
from .errors import ConfigError, IbnrError
from .simulator import estimate

HEADER = ["initial_state", "terminal_state", "target", "value", "stderr"]
COMPARE_HEADER = ["initial_state", "terminal_state", "target", "value", "estimate", "stderr", "z"]


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return repr(v) if np.isfinite(v) else ("nan" if np.isnan(v) else repr(v))


class Report:
    """Rows of (initial, terminal, target, value[, estimate], stderr[, z])."""

    def __init__(self, command: str, compare: bool = False):
        self.command = command
        self.compare = compare
        self.rows = []
        self.notes = []
        self.meta = {}

    def add_matrix(self, target: str, values, row_labels, col_labels, stderr=None, estimate_=None):
        values = np.asarray(values)
        parts = [("", lambda a: a)]
        if np.iscomplexobj(values) or (stderr is not None and np.iscomplexobj(stderr)) or \
                (estimate_ is not None and np.iscomplexobj(estimate_)):
            parts = [(".re", np.real), (".im", np.imag)]
        for suffix, part in parts:
            for a, rl in enumerate(row_labels):
                for b, cl in enumerate(col_labels):
                    v = part(values[a, b])
                    se = None if stderr is None else part(stderr[a, b])
                    if self.compare:
                        est = part(estimate_[a, b])
                        z = (est - v) / se if se and se > 0 else (0.0 if est == v else float("inf"))
                        self.rows.append([rl, cl, target + suffix, v, est, se, z])
                    else:
                        self.rows.append([rl, cl, target + suffix, v, se])

    def render(self, fmt: str) -> str:
        header = COMPARE_HEADER if self.compare else HEADER
        if fmt == "json":
            records = []
            for row in self.rows:
                rec = {}
                for k, v in zip(header, row):
                    rec[k] = v if isinstance(v, str) or v is None else float(v)
                records.append(rec)
            doc = {"command": self.command, "notes": self.notes, **self.meta, "records": records}
            return json.dumps(doc, indent=2, allow_nan=True) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in self.rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) for c in row])
        return buf.getvalue()


def _labels(model):
    return [model.space.label(n) for n in range(model.size)]


def _t_for(cfg: RunConfig, command: str):
    if command == "asymptotic":
        return LIMIT
    if cfg.t is None:
        raise ConfigError(f"{command} needs t", "/t")
    if command == "transient" and cfg.t == LIMIT:
        raise ConfigError("transient needs a finite t", "/t")
    if command in ("simulate", "compare") and cfg.t == LIMIT:
        raise ConfigError("t = \"limit\" cannot be simulated", "/t")
    return cfg.t


def _require_targets(cfg: RunConfig, command: str):
    if not cfg.targets:
        raise ConfigError("at least one target is required", "/targets")
    if command == "mgf":
        if any(getattr(tg, "kind", None) != "mgf" for tg in cfg.targets):
            raise ConfigError("the mgf command takes only mgf targets", "/targets")


def run(cfg: RunConfig, command: str) -> Report:
    validate(cfg)
    if command == "embed-info":
        return _embed_info(cfg)
    _require_targets(cfg, command)
    t = _t_for(cfg, command)
    if cfg.is_semi:
        return _run_semi(cfg, command, t)
    model = cfg.model
    labels = _labels(model)
    report = Report(command, compare=(command == "compare"))
    report.meta = {"t": t, "marks": model.marks}
    if command in ("simulate", "compare"):
        report.meta.update({"reps": cfg.reps, "seed": cfg.seed})
    if command == "simulate":
        rep = estimate(model, float(t), cfg.targets, cfg.reps, cfg.seed)
        for tg in cfg.targets:
            report.add_matrix(tg.label, rep.value(tg), labels, labels, rep.se(tg))
        return report
    if command == "compare":
        rep = estimate(model, float(t), cfg.targets, cfg.reps, cfg.seed)
    for tg in cfg.targets:
        value, note = analytic_value(model, tg, t, cfg.numeric, cfg.tol)
        if note not in report.notes:
            report.notes.append(note)
        if command == "compare":
            report.add_matrix(tg.label, value, labels, labels, rep.se(tg), rep.value(tg))
        else:
            report.add_matrix(tg.label, value, labels, labels)
    return report


def _pair_labels(spec):
    return [f"({l},{m})" for l, m in spec.pairs()]


def _semi_analytic(cfg: RunConfig, tg: SemiTarget, t):
    spec = cfg.semi
    if tg.kind == "mgf":
        return semimarkov.modulated_mgf(spec, tg.z, t, tg.form, cfg.numeric, cfg.tol)
    fn = {"first": semimarkov.modulated_first_moment, "first_by_last": semimarkov.modulated_first_moment_by_last_switch,
          "second": semimarkov.modulated_second_moment, "workload": semimarkov.modulated_workload}[tg.kind]
    return fn(spec, t, "analytic", cfg.numeric)


def _semi_sim(cfg: RunConfig, tg: SemiTarget, t):
    if tg.kind == "mgf":
        raise ConfigError("mgf targets cannot be simulated for semi-Markov runs; use the analytic commands",
                          "/targets")
    fn = {"first": semimarkov.modulated_first_moment, "first_by_last": semimarkov.modulated_first_moment_by_last_switch,
          "second": semimarkov.modulated_second_moment, "workload": semimarkov.modulated_workload}[tg.kind]
    return fn(cfg.semi, float(t), cfg.method, cfg.numeric, cfg.reps, cfg.seed)


def _run_semi(cfg: RunConfig, command: str, t) -> Report:
    labels = _pair_labels(cfg.semi)
    report = Report(command, compare=(command == "compare"))
    report.meta = {"t": t, "columns": "jump type (j2,j3)"}
    if command in ("simulate", "compare"):
        report.meta.update({"reps": cfg.reps, "seed": cfg.seed, "method": cfg.method})
    for tg in cfg.targets:
        if command == "simulate":
            res = _semi_sim(cfg, tg, t)
            report.add_matrix(tg.label, res.values, labels, labels, res.stderr)
            continue
        res = _semi_analytic(cfg, tg, t)
        if res.method and res.method not in report.notes:
            report.notes.append(res.method)
        if command == "compare":
            sim = _semi_sim(cfg, tg, t)
            report.add_matrix(tg.label, res.values, labels, labels, sim.stderr, sim.values)
        else:
            report.add_matrix(tg.label, res.values, labels, labels)
    return report


def _embed_info(cfg: RunConfig) -> Report:
    emb = semimarkov.embed(cfg.semi)
    model = emb.model
    report = Report("embed-info")
    labels = [f"e({l},{m})" for l, m in emb.pair_of_state]
    report.add_matrix("P", model.P, labels, labels)
    report.add_matrix("pi", model.pi[None, :], ["-"], labels)
    report.add_matrix("pi_closed_form", emb.closed_form_pi()[None, :], ["-"], labels)
    report.meta = {"dimensions": {f"({l},{m})": d for (l, m), d in emb.dim_of.items()}}
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ibnr", description="Moments, transforms and simulation of IBNR processes.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--t", help='time horizon or "limit"')
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--tol", type=float, help="truncation tolerance of lattice limits")
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be >= 0", "/sim/seed")
        cfg.seed = args.seed
    if args.reps is not None:
        if args.reps < 2:
            raise ConfigError("reps must be >= 2", "/sim/reps")
        cfg.reps = args.reps
    if args.t is not None:
        if args.t == LIMIT:
            cfg.t = LIMIT
        else:
            try:
                cfg.t = float(args.t)
            except ValueError:
                raise ConfigError(f"--t must be a number or \"limit\", got {args.t!r}", "/t") from None
            if cfg.t < 0:
                raise ConfigError("t must be >= 0", "/t")
    if args.format is not None:
        cfg.fmt = args.format
    if args.out is not None:
        cfg.path = args.out
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("tol must be > 0", "/tol")
        cfg.tol = args.tol
    cfg.command = args.command
    return cfg


def _error_record(exc: IbnrError) -> dict:
    rec = {"error": exc.kind, "message": str(exc), "exit_code": exc.exit_code}
    pointer = getattr(exc, "pointer", None)
    if pointer:
        rec["pointer"] = pointer
    return rec


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "") from exc
        cfg = _apply_overrides(parse_config(text), args)
        report = run(cfg, args.command)
        out = report.render(cfg.fmt)
        if cfg.path:
            with open(cfg.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(out)
        else:
            sys.stdout.write(out)
    except IbnrError as exc:
        sys.stderr.write(json.dumps(_error_record(exc)) + "\n")
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last resort keeps the error record machine-readable
        sys.stderr.write(json.dumps({"error": "internal", "message": repr(exc), "exit_code": 1}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
