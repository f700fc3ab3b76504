# src/run_config.py
"""
RunConfig resolution: defaults < config file < RATCHET_SEED < command-line flags.

The config file is flat `key = value` text; `#` starts a comment. Keys are the
long flag names without dashes (n, lambda, s, gamma, generations, horizon, dt,
regime, seed, out, workers, format).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from src.config import DEFAULT_SEED, SEED_ENV_VAR, DiffusionDefaults
from src.core import RatchetParams, solve_s_for_gamma
from src.errors import RatchetValueError

MAX_SEED = 2 ** 64 - 1
FORMATS = ("csv", "svg")


def _as_int(raw: Any) -> int:
    value = float(raw)
    if not value.is_integer():
        raise ValueError(f"{raw!r} is not an integer")
    return int(value)


def _as_formats(raw: Any) -> Tuple[str, ...]:
    if isinstance(raw, (tuple, list)):
        items = [str(x).strip().lower() for x in raw]
    else:
        items = [x.strip().lower() for x in str(raw).split(",") if x.strip()]
    bad = [x for x in items if x not in FORMATS]
    if bad or not items:
        raise ValueError(f"format must be a subset of {', '.join(FORMATS)}, got {raw!r}")
    return tuple(dict.fromkeys(items))


# key -> (RunConfig field, converter)
_KEYS: Dict[str, Tuple[str, Callable[[Any], Any]]] = {
    "n": ("N", _as_int),
    "lambda": ("lam", float),
    "s": ("s", float),
    "gamma": ("gamma", float),
    "generations": ("generations", float),
    "horizon": ("horizon", float),
    "dt": ("dt", float),
    "regime": ("regime", str),
    "seed": ("seed", _as_int),
    "out": ("out", str),
    "workers": ("workers", _as_int),
    "format": ("formats", _as_formats),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    N: Optional[int] = None
    lam: Optional[float] = None
    s: Optional[float] = None
    gamma: Optional[float] = None
    generations: Optional[float] = None
    horizon: Optional[float] = None
    dt: float = DiffusionDefaults.DT
    regime: Optional[str] = None
    seed: int = DEFAULT_SEED
    out: Optional[str] = None
    workers: Optional[int] = None
    formats: Tuple[str, ...] = ("csv",)
    sources: Dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= MAX_SEED:
            raise RatchetValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.s is not None and self.gamma is not None:
            raise RatchetValueError("give either s or gamma, not both")
        if self.workers is not None and self.workers < 1:
            raise RatchetValueError(f"workers must be >= 1, got {self.workers}")

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            flags = ", ".join("--" + _flag_of(n) for n in missing)
            raise RatchetValueError(f"'{self.command}' needs {flags}")

    def resolved_s(self) -> float:
        """Explicit s, or the s that gives the requested gamma."""
        self.require("N", "lam")
        if self.s is not None:
            return self.s
        if self.gamma is None:
            raise RatchetValueError(f"'{self.command}' needs exactly one of --s or --gamma")
        return solve_s_for_gamma(self.N, self.lam, self.gamma)

    def params(self) -> RatchetParams:
        return RatchetParams(N=self.N, lam=self.lam, s=self.resolved_s())

    def as_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "N": self.N,
            "lambda": self.lam,
            "s": self.s,
            "gamma": self.gamma,
            "generations": self.generations,
            "horizon": self.horizon,
            "dt": self.dt,
            "regime": self.regime,
            "seed": self.seed,
            "workers": self.workers,
            "format": list(self.formats),
        }


def _flag_of(field_name: str) -> str:
    for key, (name, _) in _KEYS.items():
        if name == field_name:
            return key
    return field_name


def parse_config_file(path: Path) -> Dict[str, str]:
    """Flat `key = value` lines; blank lines and `#` comments are ignored."""
    out: Dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not sep or not key or not value:
            raise RatchetValueError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in _KEYS:
            raise RatchetValueError(
                f"{path}:{lineno}: unknown key '{key}'. Known keys: {', '.join(sorted(_KEYS))}"
            )
        out[key] = value
    return out


def _convert(key: str, raw: Any, source: str) -> Tuple[str, Any]:
    name, conv = _KEYS[key]
    try:
        return name, conv(raw)
    except (TypeError, ValueError) as exc:
        raise RatchetValueError(f"{source}: bad value for '{key}': {exc}") from None


def resolve_config(
    command: str,
    flags: Mapping[str, Any],
    config_path: Optional[Path] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """`flags` holds only the options given on the command line (None means unset)."""
    environ = os.environ if environ is None else environ
    values: Dict[str, Any] = {}
    sources: Dict[str, str] = {}

    if config_path is not None:
        for key, raw in parse_config_file(config_path).items():
            name, value = _convert(key, raw, str(config_path))
            values[name], sources[name] = value, "file"

    env_seed = environ.get(SEED_ENV_VAR)
    if env_seed not in (None, ""):
        name, value = _convert("seed", env_seed, SEED_ENV_VAR)
        values[name], sources[name] = value, "env"

    for key, raw in flags.items():
        if raw is None or key not in _KEYS:
            continue
        name, value = _convert(key, raw, "--" + key)
        values[name], sources[name] = value, "flag"

    # a flag for one of s/gamma overrides the other coming from the file
    if sources.get("s") == "flag" and sources.get("gamma") == "file":
        values.pop("gamma")
    if sources.get("gamma") == "flag" and sources.get("s") == "file":
        values.pop("s")
    return RunConfig(command=command, sources=sources, **values)
