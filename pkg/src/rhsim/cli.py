"""Experiment runner CLI.

Subcommands:
  run      one experiment -> CSV row + text report (+ figures with --plot)
  sweep    cross-product of trackers x workloads x n_rh x seeds
  analyze  closed-form tables (storage, vulnerability, capture, bounds)
  audit    legality check of a command log

Exit codes: 0 success, 1 usage/audit failure, 2 any ground-truth security
violation (so CI can gate on it).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import analysis
from .engine import run_experiment, slowdown
from .geometry import (ConfigError, ExperimentConfig, config_hash, load_config,
                       make_config, serialize_config)
from .oracles import audit_log

_TIME_UNITS = {"ns": 1.0, "us": 1e3, "ms": 1e6, "s": 1e9}


def parse_time_ns(text: str) -> float:
    t = text.strip().lower().replace("µs", "us")
    for unit in ("ns", "us", "ms", "s"):
        if t.endswith(unit):
            return float(t[: -len(unit)]) * _TIME_UNITS[unit]
    return float(t)


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            a, b = part.split(":")
            out.extend(range(int(a), int(b)))
        elif part:
            out.append(int(part))
    return out


def _build_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        if args.preset and args.preset != "full":
            raise ConfigError("--preset and --config are mutually exclusive")
    else:
        cfg = make_config(args.preset or "full")
    # flags override config-file keys
    for attr, flag in (("tracker", "tracker"), ("workload", "workload"),
                       ("n_rh", "n_rh"), ("seed", "seed"),
                       ("duration_windows", "windows"),
                       ("mitigation_mode", "mitigation_mode")):
        v = getattr(args, flag, None)
        if v is not None:
            setattr(cfg, attr, v)
    if getattr(args, "t_rrd_s", None) is not None:
        from dataclasses import replace
        cfg.timing = replace(cfg.timing, t_rrd_s_ns=args.t_rrd_s)
    if getattr(args, "log", False):
        cfg.log_commands = True
    cfg.validate()
    return cfg


def _out_dir(args) -> str:
    out = args.out or os.environ.get("RHSIM_OUT", "out")
    os.makedirs(out, exist_ok=True)
    return out


def _write_outputs(report, out_dir, plot=False, log=None):
    tag = report.config_hash
    csv_path = os.path.join(out_dir, f"{tag}.csv")
    with open(csv_path, "w") as fh:
        fh.write(analysis.emit_report([report]))
    with open(os.path.join(out_dir, f"{tag}.txt"), "w") as fh:
        fh.write(report.text_block())
    if log:
        with open(os.path.join(out_dir, f"{tag}.cmdlog"), "w") as fh:
            fh.write("\n".join(log) + "\n")
    if plot:
        from . import plots
        plots.plot_blocked_time(report, os.path.join(out_dir, f"{tag}_blocked.png"))
    return csv_path


def cmd_run(args) -> int:
    cfg = _build_config(args)
    report = run_experiment(cfg)
    out = _out_dir(args)
    csv_path = _write_outputs(report, out, plot=args.plot,
                              log=getattr(report, "command_log", None))
    print(report.text_block(), end="")
    print(f"wrote {csv_path}")
    return 2 if report.security_violation else 0


def _sweep_one(serialized: str) -> tuple[str, str, dict]:
    cfg = load_config(serialized.splitlines())
    report = run_experiment(cfg)
    return config_hash(cfg), serialized, report.__dict__


def cmd_sweep(args) -> int:
    base = _build_config(args)
    trackers = args.trackers.split(",") if args.trackers else [base.tracker]
    workloads = args.workloads.split(",") if args.workloads else [base.workload]
    n_rhs = _int_list(args.n_rh_list) if args.n_rh_list else [base.n_rh]
    seeds = _int_list(args.seeds) if args.seeds else [base.seed]
    out = _out_dir(args)
    plans = []
    for tr in trackers:
        for wl in workloads:
            for nrh in n_rhs:
                for seed in seeds:
                    cfg = load_config(serialize_config(base).splitlines())
                    cfg.tracker, cfg.workload, cfg.n_rh, cfg.seed = tr, wl, nrh, seed
                    cfg.validate()
                    plans.append(serialize_config(cfg))
    results, errors = [], []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_sweep_one, p) for p in plans]
            for f, plan in zip(futures, plans):
                try:
                    results.append(f.result())
                except Exception as e:                      # noqa: BLE001
                    errors.append((plan, repr(e)))
    else:
        for plan in plans:
            try:
                results.append(_sweep_one(plan))
            except Exception as e:                          # noqa: BLE001
                errors.append((plan, repr(e)))
    from .engine import SimReport
    reports = []
    for _tag, _plan, rdict in results:
        r = SimReport()
        r.__dict__.update(rdict)
        reports.append(r)
    # slowdown against the matching null-tracker run when present
    base_by_key = {(r.workload, r.seed, r.total_acts): r for r in reports
                   if r.tracker == "null"}
    slowdowns = {}
    for r in reports:
        b = base_by_key.get((r.workload, r.seed, r.total_acts))
        if b is not None:
            slowdowns[id(r)] = slowdown(r, b)
    combined = analysis.emit_report(reports, slowdowns)
    path = os.path.join(out, "sweep.csv")
    with open(path, "w") as fh:
        fh.write(combined)
    for r in reports:
        with open(os.path.join(out, f"{r.config_hash}.txt"), "w") as fh:
            fh.write(r.text_block())
    if errors:
        with open(os.path.join(out, "sweep_errors.txt"), "w") as fh:
            for plan, err in errors:
                fh.write(f"{err}\n{plan}\n---\n")
    print(f"wrote {path} ({len(reports)} runs, {len(errors)} failures)")
    if args.plot:
        from . import plots
        rows = list(csv.DictReader(combined.splitlines()))
        if plots.plot_slowdowns(rows, os.path.join(out, "sweep_slowdown.png")):
            print(f"wrote {os.path.join(out, 'sweep_slowdown.png')}")
    if any(r.security_violation for r in reports):
        return 2
    return 0


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    if args.table == "storage":
        cfg = make_config(args.preset or "full")
        res = analysis.storage_overhead(cfg.geometry, cfg.n_rh // 2, cfg.group_size)
        rows = [[k, v] for k, v in res.items()]
        print(analysis.format_table(["quantity", "value"], rows, "storage overhead"))
        return 0
    if args.table == "dapper-s-vuln":
        t_resets = [parse_time_ns(s) for s in (args.t_reset or "12us,24us,36us").split(",")]
        table = analysis.vulnerability_table(t_resets, t_rrd_s_ns=args.t_rrd_s or 3.6)
        rows = [[f"{r['t_reset_ns']/1000:g}us", r["act_max"], f"{r['p_s']:.6f}",
                 f"{r['at_iter']:.1f}", f"{r['at_time_ns']/1e6:.4f}ms"] for r in table]
        print(analysis.format_table(
            ["t_reset", "act_max", "P_S", "AT_iter", "AT_time"], rows,
            f"single-table capture vulnerability (tRRD_S = {args.t_rrd_s or 3.6} ns)"))
        if args.plot:
            from . import plots
            png = os.path.join(out, "vulnerability.png")
            plots.plot_vulnerability(table, png)
            print(f"wrote {png}")
        return 0
    if args.table == "capture-h":
        n = args.n_groups or 8192
        trials = args.trials or 2500
        res = analysis.capture_success_h(n, trials)
        print(analysis.format_table(
            ["n_groups", "trials", "p_per_trial", "P_S"],
            [[n, trials, f"{res['p']:.3e}", f"{res['p_s']:.3e}"]],
            "dual-table capture probability"))
        if args.plot:
            from . import plots
            axis = [max(1, trials * i // 20) for i in range(1, 21)]
            ps = [analysis.capture_success_h(n, t)["p_s"] for t in axis]
            png = os.path.join(out, "capture_h.png")
            plots.plot_capture_probability(n, axis, ps, png)
            print(f"wrote {png}")
        return 0
    if args.table == "streaming-bound":
        cfg = make_config(args.preset or "full")
        b = analysis.streaming_bound(cfg.geometry, cfg.timing, cfg.group_size)
        print(analysis.format_table(["group_size", "bound"], [[cfg.group_size, b]],
                                    "streaming-attack gated-counter bound"))
        return 0
    print(f"unknown analyze table {args.table!r}", file=sys.stderr)
    return 1


def cmd_audit(args) -> int:
    cfg = _build_config(args)
    with open(args.log_file) as fh:
        verdict = audit_log(fh, cfg)
    if verdict.ok:
        print(f"audit ok ({verdict.checked} activations checked)")
        return 0
    print(f"audit FAILED: {verdict.detail}", file=sys.stderr)
    return 1


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rhsim", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--preset", choices=["desk", "full"],
                        help="desk: tiny fast geometry; full: default system")
        sp.add_argument("--out", help="output directory (default $RHSIM_OUT or ./out)")
        sp.add_argument("--n-rh", dest="n_rh", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--windows", type=int)
        sp.add_argument("--t-rrd-s", dest="t_rrd_s", type=float)
        sp.add_argument("--mitigation-mode", dest="mitigation_mode",
                        choices=["vrr", "drfm_sb", "rfm_sb"])
        sp.add_argument("--plot", action="store_true",
                        help="render figures beside the CSV output")

    sp = sub.add_parser("run", help="run one experiment")
    common(sp)
    sp.add_argument("--tracker")
    sp.add_argument("--workload")
    sp.add_argument("--log", action="store_true", help="write the command log")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run a cross-product of experiments")
    common(sp)
    sp.add_argument("--tracker")
    sp.add_argument("--workload")
    sp.add_argument("--trackers", help="comma list")
    sp.add_argument("--workloads", help="comma list")
    sp.add_argument("--n-rh-list", dest="n_rh_list", help="comma list, e.g. 125,250,500")
    sp.add_argument("--seeds", help="comma list or a:b range")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("analyze", help="closed-form tables only")
    common(sp)
    sp.add_argument("--table", required=True,
                    choices=["storage", "dapper-s-vuln", "capture-h", "streaming-bound"])
    sp.add_argument("--t-reset", help="comma list with units, e.g. 12us,24us,36us")
    sp.add_argument("--n-groups", dest="n_groups", type=int)
    sp.add_argument("--trials", type=int)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("audit", help="check a command log for timing legality")
    common(sp)
    sp.add_argument("log_file")
    sp.set_defaults(func=cmd_audit)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
