"""Run configuration: YAML loading, schema checks and command-line overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .oracle import MAX_SITES, ChainConfig
from .twist import CountingSpec, Twist

MODES = ("maba", "oracle", "verify")
FORMATS = ("csv", "json")
BRANCHES = ("0", "1", "both")
SIDES = ("K", "Kt")
TOP_KEYS = {"L", "c", "twist", "beta", "ell", "state", "branch", "mode", "output", "side", "tolerance"}
TWIST_KEYS = ("k1", "k2", "kp", "km")


@dataclass(frozen=True)
class RunConfig:
    L: int = 4
    c: complex = 1.0 + 0j
    twist: tuple = (0j, 0j, 1 + 0j, 1 + 0j)
    beta: tuple = (1 + 0j, 0j, 1 + 0j)
    ells: tuple | None = None
    state_index: int = 0
    branch: str = "0"
    mode: str = "maba"
    output: str | None = None
    fmt: str = "csv"
    side: str = "K"
    tolerance: float | None = None

    def __post_init__(self):
        validate(self)

    @property
    def chain(self) -> ChainConfig:
        return ChainConfig(self.L, self.c)

    @property
    def twist_obj(self) -> Twist:
        return Twist(*self.twist)

    @property
    def spec(self) -> CountingSpec:
        return CountingSpec(self.beta)

    @property
    def ell_list(self) -> list[int]:
        return list(range(self.L + 1)) if self.ells is None else list(self.ells)

    @property
    def branches(self) -> list[int]:
        return [0, 1] if self.branch == "both" else [int(self.branch)]

    def echo(self) -> dict:
        """Serializable view; complex values as [re, im]."""
        return {
            "L": self.L,
            "c": _cpair(self.c),
            "twist": {k: _cpair(v) for k, v in zip(TWIST_KEYS, self.twist)},
            "beta": [_cpair(b) for b in self.beta],
            "ell": self.ell_list,
            "state": self.state_index,
            "branch": self.branch,
            "mode": self.mode,
            "side": self.side,
            "tolerance": self.tolerance,
        }

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})


def _cpair(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def validate(cfg: RunConfig) -> None:
    if not isinstance(cfg.L, int) or not 2 <= cfg.L <= MAX_SITES or cfg.L % 2:
        raise ConfigError(f"L must be an even integer in 2..{MAX_SITES}", field="L")
    if cfg.c == 0:
        raise ConfigError("c must be nonzero", field="c")
    if len(cfg.twist) != 4:
        raise ConfigError("twist needs k1, k2, kp, km", field="twist")
    k1, k2, kp, km = cfg.twist
    if k1 * k2 - kp * km == 0:
        raise ConfigError("twist determinant gamma vanishes", field="twist")
    if len(cfg.beta) != 3:
        raise ConfigError("beta needs three components", field="beta")
    if cfg.ells is not None:
        for ell in cfg.ells:
            if not 0 <= ell <= cfg.L:
                raise ConfigError(f"ell={ell} outside 0..{cfg.L}", field="ell")
    if not 0 <= cfg.state_index < 2 ** cfg.L:
        raise ConfigError(f"state index outside 0..{2 ** cfg.L - 1}", field="state")
    for name, value, allowed in (
        ("branch", cfg.branch, BRANCHES),
        ("mode", cfg.mode, MODES),
        ("output.format", cfg.fmt, FORMATS),
        ("side", cfg.side, SIDES),
    ):
        if value not in allowed:
            raise ConfigError(f"{name} must be one of {', '.join(allowed)}", field=name)
    if cfg.tolerance is not None and not cfg.tolerance > 0:
        raise ConfigError("tolerance must be positive", field="tolerance")


def parse_complex(value: Any, name: str, line: int | None = None) -> complex:
    """[re, im] pair or a plain real number."""
    if isinstance(value, bool):
        raise ConfigError("expected a number or [re, im]", field=name, line=line)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(f"cannot read '{value}' as a complex number", field=name, line=line) from None
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        return complex(value[0], value[1])
    raise ConfigError("expected a number or [re, im]", field=name, line=line)


def parse_ell_range(text: str, name: str = "ell", line: int | None = None) -> tuple:
    """'a..b' (inclusive) or a single integer."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return (int(text),)
    except ValueError:
        raise ConfigError(f"cannot read ell range '{text}' (use a..b)", field=name, line=line) from None


class _Lines:
    """Line numbers (1-based) for keys of a YAML mapping, via the node tree."""

    def __init__(self, text: str):
        self.lines: dict[str, int] = {}
        try:
            node = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"malformed YAML: {exc}", line=mark.line + 1 if mark else None) from None
        if node is not None:
            self._walk(node, "")

    def _walk(self, node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, val in node.value:
                name = f"{prefix}{key.value}"
                self.lines[name] = key.start_mark.line + 1
                self._walk(val, name + ".")

    def __call__(self, name: str) -> int | None:
        return self.lines.get(name)


def load_config(path: str | Path, **overrides) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    return config_from_text(text, **overrides)


def config_from_text(text: str, **overrides) -> RunConfig:
    lines = _Lines(text)
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", line=1)
    for key in data:
        if key not in TOP_KEYS:
            raise ConfigError(f"unknown key '{key}'", field=str(key), line=lines(str(key)))
    kw: dict[str, Any] = {}

    def fail(msg, name):
        raise ConfigError(msg, field=name, line=lines(name))

    if "L" in data:
        if not isinstance(data["L"], int) or isinstance(data["L"], bool):
            fail("L must be an integer", "L")
        kw["L"] = data["L"]
    if "c" in data:
        kw["c"] = parse_complex(data["c"], "c", lines("c"))
    if "twist" in data:
        tw = data["twist"]
        if isinstance(tw, dict):
            for key in tw:
                if key not in TWIST_KEYS:
                    fail(f"unknown twist entry '{key}'", f"twist.{key}")
            missing = [k for k in TWIST_KEYS if k not in tw]
            if missing:
                fail(f"twist is missing {', '.join(missing)}", "twist")
            kw["twist"] = tuple(parse_complex(tw[k], f"twist.{k}", lines(f"twist.{k}")) for k in TWIST_KEYS)
        elif isinstance(tw, list) and len(tw) == 4:
            kw["twist"] = tuple(parse_complex(x, "twist", lines("twist")) for x in tw)
        else:
            fail("twist must map k1, k2, kp, km or list four entries", "twist")
    if "beta" in data:
        b = data["beta"]
        if not isinstance(b, list) or len(b) != 3:
            fail("beta must list three entries", "beta")
        kw["beta"] = tuple(parse_complex(x, "beta", lines("beta")) for x in b)
    if "ell" in data:
        e = data["ell"]
        if isinstance(e, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in e):
            kw["ells"] = tuple(e)
        elif isinstance(e, (str, int)) and not isinstance(e, bool):
            kw["ells"] = parse_ell_range(e, "ell", lines("ell"))
        else:
            fail("ell must be 'a..b' or a list of integers", "ell")
    if "state" in data:
        if not isinstance(data["state"], int) or isinstance(data["state"], bool):
            fail("state must be an integer", "state")
        kw["state_index"] = data["state"]
    if "branch" in data:
        kw["branch"] = str(data["branch"])
    for key in ("mode", "side"):
        if key in data:
            kw[key] = str(data[key])
    if data.get("tolerance") is not None:
        try:
            kw["tolerance"] = float(data["tolerance"])
        except (TypeError, ValueError):
            fail("tolerance must be a number", "tolerance")
    if "output" in data:
        out = data["output"]
        if not isinstance(out, dict):
            fail("output must be a mapping with path and format", "output")
        for key in out:
            if key not in ("path", "format"):
                fail(f"unknown output entry '{key}'", f"output.{key}")
        if "path" in out:
            kw["output"] = str(out["path"])
        if "format" in out:
            kw["fmt"] = str(out["format"])
    kw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**kw)
    except ConfigError as exc:
        if exc.line is None and exc.field is not None:
            raise ConfigError(exc.message, field=exc.field, line=lines(exc.field)) from None
        raise
