"""Pipeline configuration: defaults, validation and a lossless JSON form."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

from molftp.metakeys import STAT_3D
from molftp.prevalence import STAT_1D
from molftp.vectorizer import POOLING, VIEWS

LEAKAGE = ("dummy_mask", "key_loo", "train_only", "none")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class PipelineConfig:
    radius: int = 6
    sim_threshold: float = 0.5
    sim_radius: int = 2
    mode: str = "presence"
    stat_1d: str = "fisher_onetailed"
    stat_3d: str = "binomial"
    pooling: str = "margin_count"
    gate: float = 0.0
    views: tuple[str, ...] = VIEWS
    leakage: str = "key_loo"
    k: int = 2
    s: float | None = None
    c_alpha: float | None = None
    alpha: float = 0.5
    cap_per_anchor: int = 10
    cv_k: int = 10
    seed: int = 0
    l2: float = 1.0
    tol: float = 1e-8
    max_iter: int = 1000
    threshold: float = 0.5
    extra_feature_columns: tuple[str, ...] = ()

    def __post_init__(self):
        _validate(self)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["views"] = list(self.views)
        d["extra_feature_columns"] = list(self.extra_feature_columns)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def replace(self, **changes) -> PipelineConfig:
        return parse_config({**self.to_dict(), **changes})


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(key, message)


def _validate(c: PipelineConfig) -> None:
    _require(isinstance(c.radius, int) and c.radius >= 0, "radius", "must be an integer >= 0")
    _require(0.0 <= c.sim_threshold <= 1.0, "sim_threshold", "must lie in [0, 1]")
    _require(
        isinstance(c.sim_radius, int) and 0 <= c.sim_radius <= c.radius,
        "sim_radius",
        "must be an integer in [0, radius]",
    )
    _require(c.mode in ("presence", "count"), "mode", "must be presence or count")
    _require(c.stat_1d in STAT_1D, "stat_1d", f"must be one of {STAT_1D}")
    _require(c.stat_3d in STAT_3D, "stat_3d", f"must be one of {STAT_3D}")
    _require(c.pooling in POOLING, "pooling", f"must be one of {POOLING}")
    _require(c.gate >= 0, "gate", "must be >= 0")
    _require(
        len(c.views) > 0 and all(v in VIEWS for v in c.views) and len(set(c.views)) == len(c.views),
        "views",
        f"must be a non-empty subset of {VIEWS}",
    )
    _require(c.leakage in LEAKAGE, "leakage", f"must be one of {LEAKAGE}")
    _require(isinstance(c.k, int) and c.k >= 1, "k", "must be an integer >= 1")
    _require(c.s is None or 0.0 < c.s <= 1.0, "s", "must lie in (0, 1]")
    _require(c.c_alpha is None or c.c_alpha > 0, "c_alpha", "must be > 0")
    _require(c.alpha > 0, "alpha", "must be > 0")
    _require(isinstance(c.cap_per_anchor, int) and c.cap_per_anchor >= 1, "cap_per_anchor", "must be >= 1")
    _require(isinstance(c.cv_k, int) and c.cv_k >= 2, "cv_k", "must be an integer >= 2")
    _require(isinstance(c.seed, int), "seed", "must be an integer")
    _require(c.l2 >= 0, "l2", "must be >= 0")
    _require(c.tol > 0, "tol", "must be > 0")
    _require(isinstance(c.max_iter, int) and c.max_iter >= 1, "max_iter", "must be >= 1")
    _require(0.0 <= c.threshold <= 1.0, "threshold", "must lie in [0, 1]")


_FIELDS = {f.name: f for f in fields(PipelineConfig)}
_INT_KEYS = {"radius", "sim_radius", "k", "cap_per_anchor", "cv_k", "seed", "max_iter"}
_FLOAT_KEYS = {"sim_threshold", "gate", "alpha", "l2", "tol", "threshold"}
_OPT_FLOAT_KEYS = {"s", "c_alpha"}
_LIST_KEYS = {"views", "extra_feature_columns"}


def _coerce(key: str, value: Any) -> Any:
    try:
        if key in _INT_KEYS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _OPT_FLOAT_KEYS:
            return None if value in (None, "", "none", "None") else float(value)
        if key in _LIST_KEYS:
            if isinstance(value, str):
                value = [v.strip() for v in value.split(",") if v.strip()]
            return tuple(str(v) for v in value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot interpret {value!r}") from None


def parse_config(source: dict | str | Path | None = None, **overrides) -> PipelineConfig:
    """Build a config from a mapping or a JSON file, then apply ``overrides``.

    Keys may use ``-`` or ``_``; unknown keys are rejected.
    """
    if source is None:
        raw: dict = {}
    elif isinstance(source, dict):
        raw = dict(source)
    else:
        text = Path(source).read_text(encoding="utf-8")
        raw = json.loads(text) if text.strip() else {}
        if not isinstance(raw, dict):
            raise ConfigError("<file>", "config file must hold a JSON object")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    values = {}
    for key, value in raw.items():
        name = key.replace("-", "_")
        if name not in _FIELDS:
            raise ConfigError(key, "unknown configuration key")
        values[name] = _coerce(name, value)
    return PipelineConfig(**values)
