"""Batch command-line front-end.

Commands: run one scenario to CSV, compare all five stabilizers, dump the
rule tables, dump the config template. All file output is atomic (temp
file plus rename) and full precision (shortest round-trip decimal), so a
written trace re-parses to exactly the in-memory values.

Exit codes: 0 ok, 2 config error, 3 simulation failure, 4 unwritable
output, 5 ordering assertion failed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, backend
from .config import ConfigError, dump_config_template, parse_config
from .engine import ScenarioConfig, SimulationTrace, simulate
from .errors import NonFiniteStateError, PssimError
from .metrics import ComparisonReport, compare_report, trace_metrics
from .stabilizers import PSS_LABELS, SURFACE_LABELS, FPSS_RULE_GRID, FSMC_RULE_LIST, StabilizerKind

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIM = 3
EXIT_OUTPUT = 4
EXIT_ORDERING = 5

CSV_HEADER = "t,x1,x2,x3,u,v_stab,S,eta,P_e,y"


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".pssim-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_to_csv(trace: SimulationTrace) -> str:
    lines = [CSV_HEADER]
    for row in trace.data:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def read_trace_csv(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected CSV header {header!r}")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return np.array(rows, dtype=np.float64)


def _trace_paths(base: str, n_generators: int) -> list[str]:
    if n_generators == 1:
        return [base]
    stem, ext = os.path.splitext(base)
    return [f"{stem}_g{i + 1}{ext or '.csv'}" for i in range(n_generators)]


def _write_traces(traces, base_path: str) -> list[str]:
    paths = _trace_paths(base_path, len(traces))
    for trace, path in zip(traces, paths):
        _atomic_write(path, trace_to_csv(trace))
    return paths


def _fmt_settle(v: float) -> str:
    return "not-settled" if math.isinf(v) else f"{v:.4f}"


def _print_summary(traces):
    for trace in traces:
        m = trace_metrics(trace)
        print(
            f"generator {trace.meta['generator'] + 1} [{m.controller}] "
            f"settling={_fmt_settle(m.settling_time)} s overshoot={m.peak_overshoot:.3f} "
            f"ISE={m.ise:.3e} ITAE={m.itae:.3e} chattering={m.chattering_index:.3f} "
            f"max|S|={m.max_abs_surface:.3f}"
        )


def report_csv(report: ComparisonReport) -> str:
    lines = ["controller,rank,settling_time,peak_overshoot,ise,itae,chattering_index,max_abs_S"]
    for r in report.rows:
        lines.append(
            f"{r.controller},{r.rank},{r.settling_time!r},{r.peak_overshoot!r},"
            f"{r.ise!r},{r.itae!r},{r.chattering_index!r},{r.max_abs_surface!r}"
        )
    return "\n".join(lines) + "\n"


def report_text(report: ComparisonReport) -> str:
    head = f"{'rank':>4} {'controller':<10} {'settling[s]':>12} {'overshoot':>10} " \
           f"{'ISE':>12} {'ITAE':>12} {'chattering':>12} {'max|S|':>10}"
    lines = [head, "-" * len(head)]
    for r in report.rows:
        lines.append(
            f"{r.rank:>4} {r.controller:<10} {_fmt_settle(r.settling_time):>12} "
            f"{r.peak_overshoot:>10.4f} {r.ise:>12.5e} {r.itae:>12.5e} "
            f"{r.chattering_index:>12.4f} {r.max_abs_surface:>10.4f}"
        )
    lines.append("")
    if report.ordering_ok:
        lines.append("expected ordering: satisfied "
                     "(fsmcpss <= smcpss < fpss < nopss, cpss < nopss)")
    else:
        lines.append("expected ordering: VIOLATED")
        for v in report.violations:
            lines.append(f"  - {v}")
    return "\n".join(lines) + "\n"


def fpss_rule_text(grid=None) -> str:
    grid = FPSS_RULE_GRID if grid is None else grid
    width = 4
    lines = ["speed \\ accel" + " |" + "".join(f"{c:>{width}}" for c in PSS_LABELS)]
    lines.append("-" * len(lines[0]))
    for label, row in zip(PSS_LABELS, grid):
        lines.append(f"{label:<13} |" + "".join(f"{c:>{width}}" for c in row))
    return "\n".join(lines) + "\n"


def fsmc_rule_text(rules=None) -> str:
    rules = FSMC_RULE_LIST if rules is None else rules
    lines = [f"{i + 1}  {ante:>3} -> {cons}" for i, (ante, cons) in enumerate(zip(SURFACE_LABELS, rules))]
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    try:
        cfg = parse_config(args.config)
        if args.controller:
            cfg.controller = StabilizerKind(args.controller)
            cfg.validate()
    except (ConfigError, PssimError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        traces = simulate(cfg)
    except NonFiniteStateError as exc:
        print(f"error: simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIM
    try:
        paths = _write_traces(traces, args.output)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    _print_summary(traces)
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        cfg = parse_config(args.config)
    except (ConfigError, PssimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(args.output_dir, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output dir: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    all_traces: dict[str, list[SimulationTrace]] = {}
    for kind in StabilizerKind:
        run_cfg = replace_controller(cfg, kind)
        try:
            all_traces[kind.value] = simulate(run_cfg)
        except NonFiniteStateError as exc:
            print(f"error: {kind.value} failed: {exc}", file=sys.stderr)
            return EXIT_SIM
    try:
        for kind, traces in all_traces.items():
            _write_traces(traces, os.path.join(args.output_dir, f"{kind}.csv"))
        reports = []
        for gi in range(len(cfg.generators)):
            report = compare_report({k: v[gi] for k, v in all_traces.items()})
            reports.append(report)
            suffix = "" if len(cfg.generators) == 1 else f"_g{gi + 1}"
            _atomic_write(os.path.join(args.output_dir, f"report{suffix}.csv"), report_csv(report))
            _atomic_write(os.path.join(args.output_dir, f"report{suffix}.txt"), report_text(report))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    for gi, report in enumerate(reports):
        if len(reports) > 1:
            print(f"generator {gi + 1}:")
        print(report_text(report), end="")
    if args.assert_ordering and not all(r.ordering_ok for r in reports):
        print("error: expected controller ordering violated", file=sys.stderr)
        return EXIT_ORDERING
    return EXIT_OK


def replace_controller(cfg: ScenarioConfig, kind: StabilizerKind) -> ScenarioConfig:
    out = ScenarioConfig(
        t_end=cfg.t_end,
        dt=cfg.dt,
        control_period=cfg.control_period,
        controller=kind,
        generators=cfg.generators,
        disturbances=cfg.disturbances,
        configs=cfg.configs,
    )
    out.validate()
    return out


def cmd_dump_rules(args) -> int:
    if args.config:
        try:
            cfg = parse_config(args.config)
        except (ConfigError, PssimError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if args.which == "fpss":
            grid = [
                [cons for (_, cons) in cfg.configs.fpss.system.rules.rules[i * 7:(i + 1) * 7]]
                for i in range(7)
            ]
            print(fpss_rule_text(grid), end="")
        else:
            rules = [cons for _, cons in cfg.configs.fsmc.system.rules.rules]
            print(fsmc_rule_text(rules), end="")
        return EXIT_OK
    print(fpss_rule_text() if args.which == "fpss" else fsmc_rule_text(), end="")
    return EXIT_OK


def cmd_dump_template(_args) -> int:
    print(dump_config_template(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pssim",
        description="Swing-dynamics stabilizer simulation and comparison harness "
                    f"(v{__version__}, {backend.BACKEND_NAME} backend)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario and write trace CSVs")
    p_run.add_argument("--config", required=True, help="scenario config file")
    p_run.add_argument("--controller", choices=[k.value for k in StabilizerKind],
                       help="override the controller from the config")
    p_run.add_argument("--output", default="trace.csv", help="output CSV path")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run all five stabilizers and rank them")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--output-dir", default="compare_out")
    p_cmp.add_argument("--assert-ordering", action="store_true",
                       help="exit 5 if the expected settling-time ordering fails")
    p_cmp.set_defaults(func=cmd_compare)

    p_rules = sub.add_parser("dump-rules", help="print a rule table")
    p_rules.add_argument("which", choices=["fpss", "fsmc"])
    p_rules.add_argument("--config", help="dump the configured (possibly overridden) table")
    p_rules.set_defaults(func=cmd_dump_rules)

    p_tpl = sub.add_parser("dump-config-template", help="print the default config")
    p_tpl.set_defaults(func=cmd_dump_template)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
