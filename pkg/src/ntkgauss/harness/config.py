"""Run configuration.

Configs are TOML files (format version 1)::

    version = 1
    activation = "sigmoid"
    widths = [16, 32, 64, 128, 256]
    replicas = "auto"          # or an integer
    replicas_cap = 2000
    lr = 0.1
    steps = 10
    seed = 0

    [dataset]
    lo = -10.0
    hi = 10.0
    n = 1
    noise_sd = 0.1

    [test]
    count = 200
    lo = -10.0
    hi = 10.0
    spacing = "grid"           # or "uniform"

Any key may be omitted; missing keys fall back to the named preset
(``default`` unless ``preset = "..."`` is given). ``replicas = "auto"``
means ``min(min_samples_for_width(width), replicas_cap)`` per width.
"""

import dataclasses
import hashlib
import json
import re
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..activations import ACTIVATIONS
from ..errors import ConfigError

CONFIG_VERSION = 1


@dataclass
class DatasetSpec:
    lo: float = -10.0
    hi: float = 10.0
    n: int = 2
    noise_sd: float = 0.1


@dataclass
class TestSpec:
    count: int = 200
    lo: float = -10.0
    hi: float = 10.0
    spacing: str = "grid"


@dataclass
class RunConfig:
    activation: str = "sigmoid"
    n0: int = 1
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    widths: List[int] = field(default_factory=lambda: [16, 32, 64, 128, 256])
    replicas: Union[int, str] = "auto"
    replicas_cap: int = 2000
    lr: float = 0.1
    steps: int = 10
    checkpoint_every: Optional[int] = None
    test: TestSpec = field(default_factory=TestSpec)
    test_x: Optional[float] = None
    level: float = 0.95
    seed: int = 0
    quadrature_order: Optional[int] = None
    out: str = "out"
    ack_undersampled: bool = False
    workers: Optional[int] = None
    preset: str = "default"
    version: int = CONFIG_VERSION

    @property
    def t(self):
        return self.lr * self.steps

    def to_dict(self):
        return dataclasses.asdict(self)

    def digest(self):
        """Hash of everything that affects results (not output dir or workers)."""
        d = self.to_dict()
        for k in ("out", "workers"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


PRESETS = {
    # desk-scale width sweep: replicas capped at 2000, so the larger widths
    # are undersampled and sweeps need ack_undersampled
    "default": dict(
        dataset=dict(n=1), widths=[16, 32, 64, 128, 256], replicas="auto",
        replicas_cap=2000, lr=0.1, steps=10,
    ),
    "paper-fig1-right": dict(
        dataset=dict(n=1), widths=[2, 4, 8, 16, 32, 64, 128, 256], replicas=10_000,
        lr=0.1, steps=100, ack_undersampled=True,  # 10^4 < 10x rule above width ~160
    ),
    "desk-bands": dict(
        dataset=dict(n=2), widths=[512], replicas=100, lr=1 / 700, steps=20_000,
        test=dict(count=200, lo=-10.0, hi=10.0, spacing="grid"),
    ),
    "paper-fig1-left": dict(
        dataset=dict(n=2), widths=[700], replicas=100, lr=1 / 700, steps=20_000,
        test=dict(count=200, lo=-10.0, hi=10.0, spacing="grid"),
    ),
    "paper-fig1-center": dict(
        dataset=dict(n=2), widths=[1000], replicas=100, lr=7 / 1000, steps=20_000,
        test=dict(count=200, lo=-10.0, hi=10.0, spacing="grid"),
    ),
}
SLOW_PRESETS = {"paper-fig1-right", "paper-fig1-left", "paper-fig1-center"}

_TOP_TYPES = {
    "activation": str, "n0": int, "widths": list, "replicas": (int, str),
    "replicas_cap": int, "lr": (int, float), "steps": int,
    "checkpoint_every": (int, type(None)), "test_x": (int, float, type(None)),
    "level": (int, float), "seed": int, "quadrature_order": (int, type(None)),
    "out": str, "ack_undersampled": bool, "workers": (int, type(None)),
    "preset": str, "version": int, "dataset": dict, "test": dict,
}
_NESTED = {"dataset": DatasetSpec, "test": TestSpec}


def _line_of(text, key):
    if text is None:
        return None
    m = re.search(rf"^\s*{re.escape(key)}\s*=", text, re.MULTILINE)
    return text[: m.start()].count("\n") + 1 if m else None


def _fail(msg, field_name, text=None):
    line = _line_of(text, field_name.split(".")[-1])
    where = f" (line {line})" if line else ""
    raise ConfigError(f"{field_name}: {msg}{where}", field=field_name, line=line)


def _merge(base, over):
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def build_config(raw, text=None):
    """Validate a raw mapping (already merged with overrides) into a RunConfig."""
    raw = dict(raw)
    preset = raw.get("preset", "default")
    if preset not in PRESETS:
        _fail(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}", "preset", text)
    merged = _merge(PRESETS[preset], raw)
    merged["preset"] = preset

    for key, value in merged.items():
        if key not in _TOP_TYPES:
            _fail("unknown key", key, text)
        types = _TOP_TYPES[key]
        if isinstance(value, bool) and types is not bool:
            _fail("expected a number or string, got a boolean", key, text)
        if not isinstance(value, types):
            _fail(f"expected {types}, got {type(value).__name__}", key, text)

    kwargs = {}
    for key, value in merged.items():
        if key in _NESTED:
            cls = _NESTED[key]
            names = {f.name: f.type for f in dataclasses.fields(cls)}
            for sub in value:
                if sub not in names:
                    _fail("unknown key", f"{key}.{sub}", text)
            try:
                kwargs[key] = cls(**value)
            except TypeError as exc:
                _fail(str(exc), key, text)
        else:
            kwargs[key] = value
    cfg = RunConfig(**kwargs)
    _check(cfg, text)
    return cfg


def _check(cfg, text):
    if cfg.version != CONFIG_VERSION:
        _fail(f"unsupported config version {cfg.version}", "version", text)
    if cfg.activation.lower() not in ACTIVATIONS:
        _fail(f"unknown activation {cfg.activation!r}", "activation", text)
    if cfg.n0 < 1:
        _fail("must be >= 1", "n0", text)
    if not cfg.widths or any(not isinstance(w, int) or w < 1 for w in cfg.widths):
        _fail("must be a nonempty list of positive integers", "widths", text)
    if isinstance(cfg.replicas, str) and cfg.replicas != "auto":
        _fail('must be an integer or "auto"', "replicas", text)
    if isinstance(cfg.replicas, int) and cfg.replicas < 0:
        _fail("must be >= 0", "replicas", text)
    if cfg.lr <= 0:
        _fail("must be positive", "lr", text)
    if cfg.steps < 0:
        _fail("must be >= 0", "steps", text)
    if not 0 < cfg.level < 1:
        _fail("must lie in (0, 1)", "level", text)
    ds = cfg.dataset
    if not ds.lo < ds.hi:
        _fail("interval must satisfy lo < hi", "dataset.lo", text)
    if ds.n < 1:
        _fail("must be >= 1", "dataset.n", text)
    if ds.noise_sd < 0:
        _fail("must be >= 0", "dataset.noise_sd", text)
    if cfg.test.spacing not in ("grid", "uniform"):
        _fail('must be "grid" or "uniform"', "test.spacing", text)
    if cfg.test.count < 1 or not cfg.test.lo <= cfg.test.hi:
        _fail("needs count >= 1 and lo <= hi", "test.count", text)


def load_config(path=None, overrides=None):
    """Read a TOML config (or none) and apply flag overrides."""
    raw, text = {}, None
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}", path=str(path)) from None
        text = data.decode("utf-8", errors="replace")
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}", path=str(path)) from None
    raw = _merge(raw, {k: v for k, v in (overrides or {}).items() if v is not None})
    return build_config(raw, text)
