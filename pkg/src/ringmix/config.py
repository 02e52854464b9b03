"""Flat key=value experiment configuration with a closed key set.

One ``key = value`` pair per line; ``#`` starts a comment; blank lines are
ignored. Unknown and duplicated keys are errors, by design: a config file
plus the code version pins every output byte. Lists use commas
(``alpha = 0, 1, 2``).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError


@dataclass
class ExperimentConfig:
    """Every knob the CLI subcommands read.

    ``snr_db`` may be a single value or one per source; ``alpha`` is always
    a sweep list (often of length one). ``profile_e1``/``profile_e2`` set
    the analytic landscape profile; they default to the balanced noise
    energy implied by ``snr_db`` for a unit-energy source.
    """

    seed: int = 0
    sample_rate: int = 8000
    segment_length: int = 8000
    batch_k: int = 8
    snr_db: tuple[float, ...] = (10.0,)
    normalize_sources: bool = True
    alpha: tuple[float, ...] = (1.0,)
    grid_points: int = 101
    mc_trials: int = 64
    profile_e1: float | None = None
    profile_e2: float | None = None
    steps: int = 2000
    step_size: float = 0.05
    init_lambda: float = 0.9
    tied: bool = True
    mode: str = "ring"
    corpus: str | None = None
    encoding: str = "float32"
    write_references: bool = False
    out: str = "out"

    def __post_init__(self) -> None:
        if self.batch_k < 1:
            raise ConfigError(f"batch_k: must be >= 1, got {self.batch_k}")
        if self.segment_length < 1:
            raise ConfigError(f"segment_length: must be >= 1, got {self.segment_length}")
        if self.sample_rate < 1:
            raise ConfigError(f"sample_rate: must be >= 1, got {self.sample_rate}")
        if self.grid_points < 2:
            raise ConfigError(f"grid_points: must be >= 2, got {self.grid_points}")
        if self.steps < 1:
            raise ConfigError(f"steps: must be >= 1, got {self.steps}")
        if not 0.0 < self.init_lambda < 1.0:
            raise ConfigError(f"init_lambda: must lie in (0, 1), got {self.init_lambda}")
        if self.mode not in ("ring", "conventional"):
            raise ConfigError(f"mode: must be 'ring' or 'conventional', got {self.mode!r}")
        if self.encoding not in ("pcm16", "float32"):
            raise ConfigError(f"encoding: must be 'pcm16' or 'float32', got {self.encoding!r}")
        if self.mc_trials < 0:
            raise ConfigError(f"mc_trials: must be >= 0, got {self.mc_trials}")

    @property
    def profile(self) -> tuple[float, float]:
        """Analytic landscape profile, defaulting to the SNR-implied balance."""
        default = 10.0 ** (-self.snr_db[0] / 10.0)
        e1 = default if self.profile_e1 is None else self.profile_e1
        e2 = default if self.profile_e2 is None else self.profile_e2
        return e1, e2

    def snr_for_source(self, index: int, count: int) -> float:
        if len(self.snr_db) == 1:
            return self.snr_db[0]
        if len(self.snr_db) != count:
            raise ConfigError(
                f"snr_db: got {len(self.snr_db)} values for {count} sources"
            )
        return self.snr_db[index]

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


def _parse_bool(key: str, text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_float_list(key: str, text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part.strip()) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None


_PARSERS = {
    "seed": lambda k, v: int(v),
    "sample_rate": lambda k, v: int(v),
    "segment_length": lambda k, v: int(v),
    "batch_k": lambda k, v: int(v),
    "snr_db": _parse_float_list,
    "normalize_sources": _parse_bool,
    "alpha": _parse_float_list,
    "grid_points": lambda k, v: int(v),
    "mc_trials": lambda k, v: int(v),
    "profile_e1": lambda k, v: float(v),
    "profile_e2": lambda k, v: float(v),
    "steps": lambda k, v: int(v),
    "step_size": lambda k, v: float(v),
    "init_lambda": lambda k, v: float(v),
    "tied": _parse_bool,
    "mode": lambda k, v: v,
    "corpus": lambda k, v: v,
    "encoding": lambda k, v: v,
    "write_references": _parse_bool,
    "out": lambda k, v: v,
}


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a config file; any problem raises ConfigError."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        try:
            values[key] = _PARSERS[key](key, value)
        except ConfigError:
            raise
        except ValueError:
            raise ConfigError(f"{key}: cannot parse value {value!r}") from None
    return ExperimentConfig(**values)
