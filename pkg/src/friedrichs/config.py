"""Line-oriented run configuration: ``[section]`` headers and ``key = value`` lines."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .dispersion import PRESETS, Dispersion, dispersion_from_lines
from .errors import ConfigError
from .model import ConstPhi, FourierPhi, ModelSpec, SinPhi
from .quadrature import GridSpec
from .tables import fmt

__all__ = ["MuToken", "RunConfig", "parse_config", "load_config"]

_SINGLE = {
    "model": {"dispersion", "phi", "mu"},
    "dispersion": {"constant"},
    "phi": set(),
    "grid": {"n", "levels"},
    "scan": {"p_grid", "mu_ladder", "delta"},
    "output": {"directory", "prefix"},
}
_REPEATED = {"dispersion": {"site"}, "phi": {"mode"}}

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_MU_RE = re.compile(rf"^(?:({_NUM})\s*\*\s*)?mu0(?:\s*/\s*({_NUM}))?$")


@dataclass(frozen=True)
class MuToken:
    """Either an absolute coupling or a multiple of the critical coupling."""

    factor: float
    relative: bool

    @classmethod
    def parse(cls, text: str) -> "MuToken":
        text = text.strip()
        m = _MU_RE.match(text)
        if m:
            factor = float(m.group(1)) if m.group(1) else 1.0
            if m.group(2):
                factor /= float(m.group(2))
            tok = cls(factor, True)
        else:
            try:
                tok = cls(float(text), False)
            except ValueError:
                raise ValueError(f"cannot read coupling {text!r}; use a number or forms like mu0, 2*mu0, mu0/2") from None
        if not tok.factor > 0:
            raise ValueError(f"coupling must be positive, got {text!r}")
        return tok

    def resolve(self, mu0: Optional[float]) -> float:
        if not self.relative:
            return self.factor
        if mu0 is None:
            raise ValueError("mu0 has not been computed")
        return self.factor * mu0

    def __str__(self) -> str:
        if not self.relative:
            return fmt(self.factor)
        return "mu0" if self.factor == 1.0 else f"{fmt(self.factor)}*mu0"


@dataclass(frozen=True)
class RunConfig:
    dispersion_name: str = "cubic-nn"
    dispersion: Dispersion = field(default_factory=PRESETS["cubic-nn"])
    phi: object = field(default_factory=ConstPhi)
    phi_text: str = "const 1"
    mu: MuToken = MuToken(1.0, True)
    grid: GridSpec = GridSpec()
    p_grid: int = 9
    mu_ladder: tuple = ()
    delta: float = 1.0
    directory: str = "out"
    prefix: str = "run"

    @property
    def ladder(self) -> tuple:
        return self.mu_ladder or (self.mu,)

    @property
    def needs_mu0(self) -> bool:
        return any(t.relative for t in (self.mu, *self.ladder))

    def model(self, mu: float = 1.0) -> ModelSpec:
        return ModelSpec(phi=self.phi, mu=mu, dispersion=self.dispersion)

    def with_output(self, directory: Optional[str]) -> "RunConfig":
        return self if directory is None else replace(self, directory=directory)

    def render(self) -> list:
        """Every setting, defaults included, as ``section.key = value`` lines.

        The output directory is left out so that a run's files do not depend
        on where they were written.
        """
        lines = [
            f"model.dispersion = {self.dispersion_name}",
            f"model.phi = {self.phi_text}",
            f"model.mu = {self.mu}",
        ]
        if self.dispersion_name == "custom":
            lines.append(f"dispersion.constant = {fmt(self.dispersion.constant)}")
            for s, c in self.dispersion.coefficients:
                lines.append(f"dispersion.site = {s[0]} {s[1]} {s[2]}, coeff = {fmt(c)}")
        if isinstance(self.phi, FourierPhi):
            for s, a, b in self.phi.modes:
                lines.append(f"phi.mode = {s[0]} {s[1]} {s[2]}, cos = {fmt(a)}, sin = {fmt(b)}")
        lines += [
            f"grid.n = {self.grid.n}",
            f"grid.levels = {self.grid.levels}",
            f"scan.p_grid = {self.p_grid}",
            "scan.mu_ladder = " + ", ".join(str(t) for t in self.ladder),
            f"scan.delta = {fmt(self.delta)}",
            f"output.prefix = {self.prefix}",
        ]
        return lines


    def to_text(self) -> str:
        """Configuration text that parses back to an equal ``RunConfig`` (output directory included)."""
        out, current = [], None
        for line in self.render() + [f"output.directory = {self.directory}"]:
            name, value = line.split(" = ", 1)
            section, key = name.split(".", 1)
            if section != current:
                out.append(f"[{section}]")
                current = section
            out.append(f"{key} = {value}")
        return "\n".join(out) + "\n"


def _strip(line: str) -> str:
    for mark in ("#", ";"):
        idx = line.find(mark)
        if idx == 0 or (idx > 0 and line[idx - 1].isspace()):
            line = line[:idx]
    return line.strip()


def _parse_mode(text: str):
    fields = {}
    for part in (p.strip() for p in text.split(",")):
        if "=" in part:
            k, v = (x.strip() for x in part.split("=", 1))
            fields[k] = v
        else:
            fields.setdefault("site", part)
    if "site" not in fields or not set(fields) <= {"site", "cos", "sin"}:
        raise ValueError("expected `mode = s1 s2 s3, cos = a, sin = b`")
    site = tuple(int(v) for v in fields["site"].split())
    if len(site) != 3:
        raise ValueError("a mode needs three integer components")
    return site, float(fields.get("cos", 0.0)), float(fields.get("sin", 0.0))


def _parse_phi(text: str):
    tokens = text.split()
    if not tokens:
        raise ValueError("empty phi")
    kind = tokens[0]
    if kind == "const" and len(tokens) <= 2:
        c = float(tokens[1]) if len(tokens) == 2 else 1.0
        return ConstPhi(c), f"const {fmt(c)}"
    if kind == "sin" and 2 <= len(tokens) <= 3:
        k = int(tokens[1])
        amp = float(tokens[2]) if len(tokens) == 3 else 1.0
        return SinPhi(k, amp), f"sin {k}" + ("" if amp == 1.0 else f" {fmt(amp)}")
    if kind == "table" and len(tokens) == 1:
        return None, "table"
    raise ValueError(f"unknown phi {text!r}; use `const c`, `sin k [amplitude]` or `table`")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration; errors carry the line number and key."""
    values: dict = {}
    lines_of: dict = {}
    repeated: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", lineno)
            section = line[1:-1].strip()
            if section not in _SINGLE:
                raise ConfigError(f"unknown section '{section}'", lineno, section)
            continue
        if "=" not in line:
            raise ConfigError("expected `key = value`", lineno)
        key, value = (x.strip() for x in line.split("=", 1))
        if section is None:
            raise ConfigError(f"key '{key}' appears before any section", lineno, key)
        name = f"{section}.{key}"
        if key in _REPEATED.get(section, ()):
            repeated.setdefault(name, []).append((lineno, f"{key} = {value}"))
            continue
        if key not in _SINGLE[section]:
            raise ConfigError(f"unknown key '{name}'", lineno, name)
        if name in values:
            raise ConfigError(f"duplicate key '{name}'", lineno, name)
        values[name] = value
        lines_of[name] = lineno

    def get(name, convert, default):
        if name not in values:
            return default
        try:
            return convert(values[name])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{name}: {exc}", lines_of[name], name) from None

    kw = {}
    disp_name = values.get("model.dispersion", "cubic-nn")
    if disp_name == "custom":
        sites = repeated.get("dispersion.site", [])
        if not sites:
            raise ConfigError("custom dispersion needs `site = ...` lines in [dispersion]", lines_of.get("model.dispersion"), "dispersion.site")
        constant = get("dispersion.constant", float, 0.0)
        for lineno, line in sites:
            try:
                dispersion_from_lines([line], constant)
            except ValueError as exc:
                raise ConfigError(f"dispersion.site: {exc}", lineno, "dispersion.site") from None
        try:
            kw["dispersion"] = dispersion_from_lines([l for _, l in sites], constant)
        except ValueError as exc:
            raise ConfigError(f"dispersion.site: {exc}", sites[-1][0], "dispersion.site") from None
    elif disp_name in PRESETS:
        for name in ("dispersion.constant", "dispersion.site"):
            if name in values or name in repeated:
                line = lines_of.get(name) or repeated[name][0][0]
                raise ConfigError(f"'{name}' requires model.dispersion = custom", line, name)
        kw["dispersion"] = PRESETS[disp_name]()
    else:
        raise ConfigError(f"model.dispersion: unknown preset '{disp_name}' (known: {', '.join(sorted(PRESETS))}, custom)",
                          lines_of.get("model.dispersion"), "model.dispersion")
    kw["dispersion_name"] = disp_name

    phi, phi_text = get("model.phi", _parse_phi, (ConstPhi(), "const 1"))
    modes = repeated.get("phi.mode", [])
    if phi_text == "table":
        if not modes:
            raise ConfigError("phi = table needs `mode = ...` lines in [phi]", lines_of.get("model.phi"), "phi.mode")
        parsed = []
        for lineno, line in modes:
            try:
                parsed.append(_parse_mode(line.split("=", 1)[1]))
            except ValueError as exc:
                raise ConfigError(f"phi.mode: {exc}", lineno, "phi.mode") from None
        try:
            phi = FourierPhi(tuple(parsed))
        except ValueError as exc:
            raise ConfigError(f"phi.mode: {exc}", modes[0][0], "phi.mode") from None
    elif modes:
        raise ConfigError("'phi.mode' requires model.phi = table", modes[0][0], "phi.mode")
    kw["phi"], kw["phi_text"] = phi, phi_text

    kw["mu"] = get("model.mu", MuToken.parse, MuToken(1.0, True))
    n = get("grid.n", int, 64)
    levels = get("grid.levels", int, 3)
    try:
        kw["grid"] = GridSpec(n=n, levels=levels)
    except ValueError as exc:
        key = "grid.levels" if str(exc).startswith("levels") else "grid.n"
        raise ConfigError(f"{key}: {exc}", lines_of.get(key), key) from None
    kw["p_grid"] = get("scan.p_grid", int, 9)
    if kw["p_grid"] < 1:
        raise ConfigError("scan.p_grid: must be >= 1", lines_of["scan.p_grid"], "scan.p_grid")
    kw["mu_ladder"] = get("scan.mu_ladder", lambda v: tuple(MuToken.parse(t) for t in v.split(",")), (kw["mu"],))
    kw["delta"] = get("scan.delta", float, 1.0)
    if not 0.0 < kw["delta"] <= 3.0:
        raise ConfigError("scan.delta: must lie in (0, 3]", lines_of["scan.delta"], "scan.delta")
    kw["directory"] = values.get("output.directory", "out")
    kw["prefix"] = values.get("output.prefix", "run")
    cfg = RunConfig(**kw)
    try:
        cfg.model(1.0)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}", lines_of.get("model.phi"), "model.phi") from None
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
