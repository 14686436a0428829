"""Flat key=value configuration files for the tracker."""

from __future__ import annotations

from ..errors import ConfigError
from ..session import SessionConfig


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def _parse_optional_float(s: str):
    return None if s.strip().lower() in ("none", "auto") else float(s)


def _parse_optional_int(s: str):
    return None if s.strip().lower() in ("none", "auto") else int(s)


_PARSERS = {
    "mode": str,
    "penalty": str,
    "centered": _parse_bool,
    "m": _parse_optional_float,
    "epsilon": float,
    "rank": _parse_optional_int,
    "window": int,
    "penalty_min_window": int,
    "template_size": int,
    "pyramid_levels": int,
    "min_iters": int,
    "max_iters": int,
    "step_init": float,
    "step_doublings": int,
    "step_tol": float,
    "registration_level": int,
    "registration_iters": int,
}


def parse_config_text(text: str) -> dict:
    """key=value lines into typed values; '#' starts a comment; unknown keys fail."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](val.strip())
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return values


def config_from_text(text: str, base: SessionConfig | None = None) -> SessionConfig:
    base = base or SessionConfig()
    values = parse_config_text(text)
    try:
        return SessionConfig(**{**base.__dict__, **values})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str, base: SessionConfig | None = None) -> SessionConfig:
    with open(path) as fh:
        return config_from_text(fh.read(), base)


def config_to_text(cfg: SessionConfig) -> str:
    def fmt(v):
        if v is None:
            return "none"
        if isinstance(v, bool):
            return "true" if v else "false"
        return f"{v:g}" if isinstance(v, float) else str(v)

    return "".join(f"{key}={fmt(getattr(cfg, key))}\n" for key in _PARSERS)


def apply_overrides(cfg: SessionConfig, pairs: list[str]) -> SessionConfig:
    """Apply repeated --set key=value CLI overrides on top of a config."""
    return config_from_text("\n".join(pairs), base=cfg)
