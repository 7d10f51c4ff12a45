"""Scenario configuration file: flat INI-style sections.

Sections: [scenario], [generator] (+ optional [generator.2]), any number of
[disturbance.N], and one section per controller family ([smc], [cpss],
[fpss], [fsmc]). `dump_config_template()` emits the documented defaults;
parsing its output reproduces them exactly.
"""

from __future__ import annotations

import configparser
import io
import re

from .engine import Disturbance, GeneratorSpec, ScenarioConfig
from .errors import PssimError
from .genmodel import GeneratorParams
from .presets import (
    DEFAULT_ANGLE,
    DEFAULT_CPSS,
    DEFAULT_DISTURBANCES,
    DEFAULT_FPSS,
    DEFAULT_FSMC,
    DEFAULT_GENERATOR,
    DEFAULT_SCENARIO,
    DEFAULT_SMC,
)
from .smc import SmcGains
from .stabilizers import (
    FpssConfig,
    FsmcConfig,
    LeadLagPssConfig,
    PSS_LABELS,
    StabilizerConfigs,
    StabilizerKind,
    SURFACE_LABELS,
    build_fpss_system,
    build_fsmc_system,
)


class ConfigError(PssimError, ValueError):
    """Parse or validation failure; message names the key and line."""


def _find_line(text: str, section: str, key: str | None) -> int | None:
    """Best-effort line number of a key inside its section."""
    sec_re = re.compile(r"^\s*\[(?P<name>[^\]]+)\]\s*$")
    key_re = re.compile(rf"^\s*{re.escape(key)}\s*[=:]") if key else None
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = sec_re.match(line)
        if m:
            current = m.group("name").strip()
            if key is None and current == section:
                return lineno
            continue
        if key_re and current == section and key_re.match(line):
            return lineno
    return None


class _Parser:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        self.cp = configparser.ConfigParser(interpolation=None)
        self.cp.optionxform = str
        try:
            self.cp.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from exc

    def fail(self, section: str, key: str | None, message: str):
        line = _find_line(self.text, section, key)
        where = f"{self.source}:{line}" if line else self.source
        target = f"[{section}] {key}" if key else f"[{section}]"
        raise ConfigError(f"{where}: {target}: {message}")

    def get_float(self, section: str, key: str, default=None) -> float:
        if not self.cp.has_option(section, key):
            if default is not None:
                return default
            self.fail(section, key, "missing required key")
        raw = self.cp.get(section, key)
        try:
            return float(raw)
        except ValueError:
            self.fail(section, key, f"not a number: {raw!r}")

    def get_int(self, section: str, key: str, default=None) -> int:
        v = self.get_float(section, key, default)
        if v != int(v):
            self.fail(section, key, f"not an integer: {v}")
        return int(v)

    def get_str(self, section: str, key: str, default=None) -> str:
        if not self.cp.has_option(section, key):
            if default is not None:
                return default
            self.fail(section, key, "missing required key")
        return self.cp.get(section, key).strip()


def _parse_generator(p: _Parser, section: str) -> GeneratorSpec:
    values = {}
    for key in DEFAULT_GENERATOR:
        values[key] = p.get_float(section, key, DEFAULT_GENERATOR[key])
    try:
        params = GeneratorParams(**values)
    except PssimError as exc:
        p.fail(section, None, str(exc))
    angle = p.get_float(section, "angle", 0.0) if p.cp.has_option(section, "angle") else None
    field_input = (
        p.get_float(section, "field_input", 0.0)
        if p.cp.has_option(section, "field_input")
        else None
    )
    if angle is not None and field_input is not None:
        p.fail(section, "angle", "give either angle or field_input, not both")
    if angle is None and field_input is None:
        angle = DEFAULT_ANGLE
    try:
        return GeneratorSpec(params=params, angle=angle, field_input=field_input)
    except PssimError as exc:
        p.fail(section, None, str(exc))


def _parse_disturbances(p: _Parser) -> list[Disturbance]:
    out = []
    sections = sorted(
        (s for s in p.cp.sections() if s.startswith("disturbance")),
        key=lambda s: (len(s), s),
    )
    for section in sections:
        kind = p.get_str(section, "kind")
        magnitude = p.get_float(section, "magnitude")
        t_start = p.get_float(section, "t_start", 0.0)
        t_end = p.get_float(section, "t_end", 0.0) if p.cp.has_option(section, "t_end") else None
        try:
            out.append(Disturbance(kind=kind, magnitude=magnitude, t_start=t_start, t_end=t_end))
        except PssimError as exc:
            p.fail(section, "kind", str(exc))
    return out


def _parse_fpss_rules(p: _Parser):
    keys = [f"rule_{label}" for label in PSS_LABELS]
    present = [k for k in keys if p.cp.has_option("fpss", k)]
    if not present:
        return None
    if len(present) != 7:
        p.fail("fpss", present[0], "rule override needs all seven rule_<label> rows")
    grid = []
    for key in keys:
        row = p.get_str("fpss", key).split()
        if len(row) != 7 or any(label not in PSS_LABELS for label in row):
            p.fail("fpss", key, f"need 7 labels from {PSS_LABELS}")
        grid.append(row)
    return grid


def _parse_fsmc_rules(p: _Parser):
    if not p.cp.has_option("fsmc", "rules"):
        return None
    row = p.get_str("fsmc", "rules").split()
    if len(row) != 7 or any(label not in SURFACE_LABELS for label in row):
        p.fail("fsmc", "rules", f"need 7 labels from {SURFACE_LABELS}")
    return row


REQUIRED_SECTIONS = ("scenario", "generator", "smc", "cpss", "fpss", "fsmc")


def parse_config_text(text: str, source: str = "<config>") -> ScenarioConfig:
    p = _Parser(text, source)

    for section in REQUIRED_SECTIONS:
        if not p.cp.has_section(section):
            raise ConfigError(f"{source}: missing required section [{section}]")

    controller_name = p.get_str("scenario", "controller", "fsmcpss")
    try:
        controller = StabilizerKind(controller_name)
    except ValueError:
        p.fail("scenario", "controller", f"unknown controller {controller_name!r}")
    t_end = p.get_float("scenario", "t_end", DEFAULT_SCENARIO["t_end"])
    dt = p.get_float("scenario", "dt", DEFAULT_SCENARIO["dt"])
    control_period = p.get_int("scenario", "control_period", DEFAULT_SCENARIO["control_period"])
    if dt <= 0.0:
        p.fail("scenario", "dt", "dt must be > 0")
    if t_end <= 0.0:
        p.fail("scenario", "t_end", "t_end must be > 0")
    if control_period < 1:
        p.fail("scenario", "control_period", "control_period must be >= 1")

    generators = [_parse_generator(p, "generator")]
    if p.cp.has_section("generator.2"):
        generators.append(_parse_generator(p, "generator.2"))

    try:
        smc = SmcGains(
            k1=p.get_float("smc", "k1", DEFAULT_SMC["k1"]),
            k2=p.get_float("smc", "k2", DEFAULT_SMC["k2"]),
            eta=p.get_float("smc", "eta", DEFAULT_SMC["eta"]),
            phi=p.get_float("smc", "phi", DEFAULT_SMC["phi"]),
            eps_sin=p.get_float("smc", "eps_sin", DEFAULT_SMC["eps_sin"]),
            u_max=p.get_float("smc", "u_max", DEFAULT_SMC["u_max"]),
        )
    except PssimError as exc:
        p.fail("smc", None, str(exc))
    try:
        cpss = LeadLagPssConfig(**{
            key: p.get_float("cpss", key, DEFAULT_CPSS[key]) for key in DEFAULT_CPSS
        })
    except PssimError as exc:
        p.fail("cpss", None, str(exc))
    grid_res = p.get_int("fpss", "grid_resolution", 201)
    try:
        fpss = FpssConfig(
            k_w=p.get_float("fpss", "k_w", DEFAULT_FPSS["k_w"]),
            k_a=p.get_float("fpss", "k_a", DEFAULT_FPSS["k_a"]),
            k_out=p.get_float("fpss", "k_out", DEFAULT_FPSS["k_out"]),
            system=build_fpss_system(_parse_fpss_rules(p), grid_resolution=grid_res),
        )
    except PssimError as exc:
        p.fail("fpss", None, str(exc))
    grid_res = p.get_int("fsmc", "grid_resolution", 201)
    try:
        fsmc = FsmcConfig(
            s_max=p.get_float("fsmc", "s_max", DEFAULT_FSMC["s_max"]),
            eta_min=p.get_float("fsmc", "eta_min", DEFAULT_FSMC["eta_min"]),
            eta_max=p.get_float("fsmc", "eta_max", DEFAULT_FSMC["eta_max"]),
            system=build_fsmc_system(_parse_fsmc_rules(p), grid_resolution=grid_res),
        )
    except PssimError as exc:
        p.fail("fsmc", None, str(exc))

    cfg = ScenarioConfig(
        t_end=t_end,
        dt=dt,
        control_period=control_period,
        controller=controller,
        generators=generators,
        disturbances=_parse_disturbances(p),
        configs=StabilizerConfigs(smc=smc, cpss=cpss, fpss=fpss, fsmc=fsmc),
    )
    try:
        cfg.validate()
    except PssimError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return cfg


def parse_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=path)


def dump_config_template() -> str:
    """The documented defaults as a ready-to-edit config file."""
    out = io.StringIO()
    w = out.write
    w("# pssim scenario configuration (all values shown are the defaults)\n\n")
    w("[scenario]\n")
    w(f"t_end = {DEFAULT_SCENARIO['t_end']}\n")
    w(f"dt = {DEFAULT_SCENARIO['dt']}\n")
    w(f"control_period = {DEFAULT_SCENARIO['control_period']}\n")
    w("# one of: nopss cpss fpss smcpss fsmcpss\n")
    w("controller = fsmcpss\n\n")
    w("[generator]\n")
    for key, value in DEFAULT_GENERATOR.items():
        w(f"{key} = {value}\n")
    w("# operating point: rotor angle in rad (or give field_input instead)\n")
    w(f"angle = {DEFAULT_ANGLE}\n\n")
    w("# optional second machine: add a [generator.2] section with the same keys\n\n")
    for i, d in enumerate(DEFAULT_DISTURBANCES, start=1):
        w(f"[disturbance.{i}]\n")
        w(f"kind = {d['kind']}\n")
        for key in ("t_start", "t_end", "magnitude"):
            if key in d:
                w(f"{key} = {d[key]}\n")
        w("\n")
    w("[smc]\n")
    for key, value in DEFAULT_SMC.items():
        w(f"{key} = {value}\n")
    w("\n[cpss]\n")
    for key, value in DEFAULT_CPSS.items():
        w(f"{key} = {value}\n")
    w("\n[fpss]\n")
    for key, value in DEFAULT_FPSS.items():
        w(f"{key} = {value}\n")
    w("# optional: override the 7x7 rule table with rule_NB ... rule_PB rows\n")
    w("\n[fsmc]\n")
    for key, value in DEFAULT_FSMC.items():
        w(f"{key} = {value}\n")
    w("# optional: override the consequents with `rules = VVS VS S M L VL VVL`\n")
    return out.getvalue()
