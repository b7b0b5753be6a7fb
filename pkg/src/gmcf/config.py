"""Experiment configuration: a line-based ``key = value`` format.

Lines hold one ``key = value`` pair each; ``#`` starts a comment and blank
lines are skipped.  List values are comma-separated; matrix-valued
parameters are flattened row-major.  Later occurrences of a key win, and
override flags (``--key=value``) take precedence over the file.  Unknown
keys, malformed lines, and invalid enum values are hard errors.

Keys and defaults:

    resolution        nodes per axis (required), e.g. ``64,64``
    period            box lengths per axis (default: 2*pi each)
    family            initial-data family (required); see ``gmcf list-families``
    map.<param>       family parameters, e.g. ``map.eps = 0.4``
    target_kind       euclidean | torus (default: family choice)
    target_dim        target dimension (default: derived from the family)
    target_period     target box lengths (torus only; default: domain periods)
    scheme            euler | rk4 (default euler)
    stencil_order     2 | 4 (default 2)
    dt_mode           cfl | fixed (default cfl)
    safety            step-bound factor in (0, 0.5] (default 0.2)
    dt                fixed step size (required iff dt_mode = fixed)
    t_max             time horizon (default 10.0)
    tol_converged     stationarity tolerance on the max speed (default 1e-8)
    guard             none | area_preserving | area_decreasing (default none)
    j_floor           projection Jacobian floor (default 1e-3)
    preserve_tol      allowed |det df - 1| under area_preserving (default 1e-2)
    margin_floor      dilation margin under area_decreasing (default 1e-3)
    sample_every      record every k-th step (default 10)
    csv               time-series output path (default run.csv)
    json              summary output path (default run.json)
    plot              optional figure path; rendered next to the CSV
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .flow import GuardPolicy
from .maps import FAMILIES

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """A config file or override that cannot be accepted."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description; every field has a value."""

    resolution: tuple[int, ...]
    period: tuple[float, ...]
    family: str
    family_params: tuple[tuple[str, Any], ...]
    target_kind: str
    target_dim: int
    target_period: tuple[float, ...] | None
    scheme: str
    stencil_order: int
    dt_mode: str
    safety: float
    dt: float | None
    t_max: float
    tol_converged: float
    guard: GuardPolicy
    sample_every: int
    csv_path: str
    json_path: str
    plot_path: str | None

    @property
    def params(self) -> dict[str, Any]:
        return dict(self.family_params)


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"invalid integer {raw!r} for key {key!r}") from None


def _parse_float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"invalid number {raw!r} for key {key!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"non-finite value {raw!r} for key {key!r}")
    return value


def _parse_ints(key: str, raw: str) -> tuple[int, ...]:
    return tuple(_parse_int(key, part.strip()) for part in raw.split(","))


def _parse_floats(key: str, raw: str) -> tuple[float, ...]:
    return tuple(_parse_float(key, part.strip()) for part in raw.split(","))


def _parse_enum(key: str, raw: str, valid: Sequence[str]) -> str:
    if raw not in valid:
        raise ConfigError(
            f"invalid value {raw!r} for key {key!r} (valid: {', '.join(valid)})"
        )
    return raw


_PARAM_PARSERS = {
    "int": _parse_int,
    "float": _parse_float,
    "ints": _parse_ints,
    "floats": _parse_floats,
}

_TOP_KEYS = (
    "resolution", "period", "family", "target_kind", "target_dim", "target_period",
    "scheme", "stencil_order", "dt_mode", "safety", "dt", "t_max", "tol_converged",
    "guard", "j_floor", "preserve_tol", "margin_floor", "sample_every",
    "csv", "json", "plot",
)


def _collect(text: str, overrides: Iterable[str]) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        entries[key] = value
    for ov in overrides:
        body = ov[2:] if ov.startswith("--") else ov
        if "=" not in body:
            raise ConfigError(f"malformed override {ov!r}, expected --key=value")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"malformed override {ov!r}, empty key")
        entries[key] = value
    return entries


def parse_config(text: str, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Parse config text plus override flags into an :class:`ExperimentConfig`.

    Raises:
        ConfigError: on malformed lines, unknown keys, invalid enum values,
            missing required keys, or values violating their bounds.
    """
    entries = _collect(text, overrides)

    unknown = [
        k for k in entries if k not in _TOP_KEYS and not k.startswith("map.")
    ]
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}")

    if "resolution" not in entries:
        raise ConfigError("missing required key 'resolution'")
    resolution = _parse_ints("resolution", entries["resolution"])
    n = len(resolution)
    if "period" in entries:
        period = _parse_floats("period", entries["period"])
        if len(period) != n:
            raise ConfigError(
                f"period has {len(period)} entries but resolution has {n}"
            )
    else:
        period = (TWO_PI,) * n

    if "family" not in entries:
        raise ConfigError("missing required key 'family'")
    family = _parse_enum("family", entries["family"], sorted(FAMILIES))
    fam = FAMILIES[family]
    schema = {p.name: p for p in fam.params}

    params: dict[str, Any] = {}
    for key, raw in entries.items():
        if not key.startswith("map."):
            continue
        pname = key[len("map."):]
        if pname not in schema:
            valid = ", ".join(p.name for p in fam.params) or "none"
            raise ConfigError(
                f"unknown parameter {key!r} for family {family!r} (valid: {valid})"
            )
        params[pname] = _PARAM_PARSERS[schema[pname].kind](key, raw)
    for p in fam.params:
        if p.required and p.name not in params:
            raise ConfigError(
                f"family {family!r} requires parameter 'map.{p.name}'"
            )

    derived_dim = fam.target_dim(_GridShim(n), params)
    if "target_dim" in entries:
        target_dim = _parse_int("target_dim", entries["target_dim"])
        if target_dim != derived_dim:
            raise ConfigError(
                f"target_dim = {target_dim} conflicts with family "
                f"{family!r} (expects {derived_dim})"
            )
    else:
        target_dim = derived_dim

    if "target_kind" in entries:
        target_kind = _parse_enum(
            "target_kind", entries["target_kind"], ("euclidean", "torus")
        )
    else:
        target_kind = fam.default_target_kind

    if target_kind == "torus":
        if "target_period" in entries:
            target_period = _parse_floats("target_period", entries["target_period"])
        elif target_dim == n:
            target_period = period
        else:
            raise ConfigError("torus target with m != n requires 'target_period'")
        if len(target_period) != target_dim:
            raise ConfigError(
                f"target_period has {len(target_period)} entries, expected {target_dim}"
            )
    else:
        if "target_period" in entries:
            raise ConfigError("'target_period' requires target_kind = torus")
        target_period = None

    scheme = _parse_enum("scheme", entries.get("scheme", "euler"), ("euler", "rk4"))
    stencil_order = _parse_int("stencil_order", entries.get("stencil_order", "2"))
    if stencil_order not in (2, 4):
        raise ConfigError(
            f"invalid value {stencil_order!r} for key 'stencil_order' (valid: 2, 4)"
        )
    dt_mode = _parse_enum("dt_mode", entries.get("dt_mode", "cfl"), ("cfl", "fixed"))
    safety = _parse_float("safety", entries.get("safety", "0.2"))
    if not 0.0 < safety <= 0.5:
        raise ConfigError(f"safety must lie in (0, 0.5], got {safety}")
    if dt_mode == "fixed":
        if "dt" not in entries:
            raise ConfigError("dt_mode = fixed requires key 'dt'")
        dt = _parse_float("dt", entries["dt"])
        if dt <= 0:
            raise ConfigError(f"dt must be positive, got {dt}")
    else:
        if "dt" in entries:
            raise ConfigError("key 'dt' requires dt_mode = fixed")
        dt = None
    t_max = _parse_float("t_max", entries.get("t_max", "10.0"))
    if t_max <= 0:
        raise ConfigError(f"t_max must be positive, got {t_max}")
    tol_converged = _parse_float("tol_converged", entries.get("tol_converged", "1e-8"))
    if tol_converged <= 0:
        raise ConfigError(f"tol_converged must be positive, got {tol_converged}")

    guard_kind = _parse_enum(
        "guard", entries.get("guard", "none"),
        ("none", "area_preserving", "area_decreasing"),
    )
    j_floor = _parse_float("j_floor", entries.get("j_floor", "1e-3"))
    preserve_tol = _parse_float("preserve_tol", entries.get("preserve_tol", "1e-2"))
    margin_floor = _parse_float("margin_floor", entries.get("margin_floor", "1e-3"))
    if j_floor <= 0:
        raise ConfigError(f"j_floor must be positive, got {j_floor}")
    if guard_kind == "area_preserving" and (n != 2 or target_dim != 2):
        raise ConfigError("area_preserving guard requires n = m = 2")
    guard = GuardPolicy(guard_kind, j_floor, preserve_tol, margin_floor)

    sample_every = _parse_int("sample_every", entries.get("sample_every", "10"))
    if sample_every < 1:
        raise ConfigError(f"sample_every must be at least 1, got {sample_every}")

    csv_path = entries.get("csv", "run.csv")
    json_path = entries.get("json", "run.json")
    plot_path = entries.get("plot") or None

    ordered_params = tuple(
        (p.name, params[p.name]) for p in fam.params if p.name in params
    )
    return ExperimentConfig(
        resolution=resolution,
        period=period,
        family=family,
        family_params=ordered_params,
        target_kind=target_kind,
        target_dim=target_dim,
        target_period=target_period,
        scheme=scheme,
        stencil_order=stencil_order,
        dt_mode=dt_mode,
        safety=safety,
        dt=dt,
        t_max=t_max,
        tol_converged=tol_converged,
        guard=guard,
        sample_every=sample_every,
        csv_path=csv_path,
        json_path=json_path,
        plot_path=plot_path,
    )


class _GridShim:
    """Just enough grid for Family.target_dim before a GridSpec exists."""

    def __init__(self, n: int) -> None:
        self.n = n


def _fmt_value(value: Any) -> str:
    if isinstance(value, tuple):
        return ",".join(_fmt_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_items(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    """Canonical ``(key, value-string)`` pairs; parsing them reproduces ``cfg``."""
    items: list[tuple[str, str]] = [
        ("resolution", _fmt_value(cfg.resolution)),
        ("period", _fmt_value(cfg.period)),
        ("family", cfg.family),
    ]
    for name, value in cfg.family_params:
        items.append((f"map.{name}", _fmt_value(value)))
    items.append(("target_kind", cfg.target_kind))
    items.append(("target_dim", str(cfg.target_dim)))
    if cfg.target_period is not None:
        items.append(("target_period", _fmt_value(cfg.target_period)))
    items.extend(
        [
            ("scheme", cfg.scheme),
            ("stencil_order", str(cfg.stencil_order)),
            ("dt_mode", cfg.dt_mode),
            ("safety", repr(cfg.safety)),
        ]
    )
    if cfg.dt is not None:
        items.append(("dt", repr(cfg.dt)))
    items.extend(
        [
            ("t_max", repr(cfg.t_max)),
            ("tol_converged", repr(cfg.tol_converged)),
            ("guard", cfg.guard.kind),
            ("j_floor", repr(cfg.guard.j_floor)),
            ("preserve_tol", repr(cfg.guard.preserve_tol)),
            ("margin_floor", repr(cfg.guard.margin_floor)),
            ("sample_every", str(cfg.sample_every)),
            ("csv", cfg.csv_path),
            ("json", cfg.json_path),
        ]
    )
    if cfg.plot_path is not None:
        items.append(("plot", cfg.plot_path))
    return items


def config_to_text(cfg: ExperimentConfig) -> str:
    """Serialize a config to the line format; round-trips through parsing."""
    return "\n".join(f"{k} = {v}" for k, v in config_items(cfg)) + "\n"
