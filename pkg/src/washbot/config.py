"""Layered application configuration: defaults < TOML file < env vars < flags."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .rag import (
    DEFAULT_CHUNK_OVERLAP,
    DEFAULT_CHUNK_SIZE,
    DEFAULT_REFUSAL_THRESHOLD,
    DEFAULT_TOP_K,
)


class InvalidConfig(ValueError):
    pass


_SECRET_FIELDS = frozenset({
    "wa_verify_token", "wa_app_secret", "wa_access_token",
    "embed_api_key", "llm_api_key",
})

_ENV_MAP = {
    "PROVIDER": "provider",
    "DATA_DIR": "data_dir",
    "WA_VERIFY_TOKEN": "wa_verify_token",
    "WA_APP_SECRET": "wa_app_secret",
    "WA_ACCESS_TOKEN": "wa_access_token",
    "WA_PHONE_NUMBER_ID": "wa_phone_number_id",
    "WA_SEND_ENDPOINT": "wa_send_endpoint",
    "EMBED_API_URL": "embed_api_url",
    "EMBED_API_KEY": "embed_api_key",
    "LLM_API_URL": "llm_api_url",
    "LLM_API_KEY": "llm_api_key",
}


@dataclass
class AppConfig:
    provider: str = "mock"
    embed_dim: int = 256
    k: int = DEFAULT_TOP_K
    tau: float = DEFAULT_REFUSAL_THRESHOLD
    chunk_size: int = DEFAULT_CHUNK_SIZE
    overlap: int = DEFAULT_CHUNK_OVERLAP
    prompt_template: str | None = None
    refusal_text: str | None = None
    provider_timeout: float = 30.0
    index_path: str = "kb.idx"
    data_dir: str = "washbot_data"
    host: str = "127.0.0.1"
    port: int = 8080
    privacy_url: str = "https://example.org/privacy"
    ui_dir: str | None = None
    wa_verify_token: str = ""
    wa_app_secret: str = ""
    wa_access_token: str = ""
    wa_phone_number_id: str = ""
    wa_send_endpoint: str = ""
    embed_api_url: str = ""
    embed_api_key: str = ""
    llm_api_url: str = ""
    llm_api_key: str = ""

    def __repr__(self) -> str:  # secrets never printed
        parts = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in _SECRET_FIELDS and value:
                value = "***"
            parts.append(f"{f.name}={value!r}")
        return f"AppConfig({', '.join(parts)})"

    def to_dict(self, mask_secrets: bool = True) -> dict:
        result = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if mask_secrets and f.name in _SECRET_FIELDS and value:
                value = "***"
            result[f.name] = value
        return result


_FIELD_TYPES = {f.name: f.type for f in fields(AppConfig)}


def _coerce(key: str, value: Any) -> Any:
    default = getattr(AppConfig(), key)
    target = type(default) if default is not None else str
    if isinstance(value, bool) and target is not bool:
        raise InvalidConfig(f"config key '{key}': expected {target.__name__}, got a boolean")
    if target is float and isinstance(value, (int, float)):
        return float(value)
    if target is int:
        if isinstance(value, int):
            return value
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError as exc:
                raise InvalidConfig(f"config key '{key}': {value!r} is not an integer") from exc
        raise InvalidConfig(f"config key '{key}': expected an integer, got {value!r}")
    if target is float and isinstance(value, str):
        try:
            return float(value)
        except ValueError as exc:
            raise InvalidConfig(f"config key '{key}': {value!r} is not a number") from exc
    if target is str and not isinstance(value, str):
        raise InvalidConfig(f"config key '{key}': expected a string, got {value!r}")
    return value


def config_resolve(config_file: str | Path | None = None,
                   env: Mapping[str, str] | None = None,
                   flags: Mapping[str, Any] | None = None) -> AppConfig:
    """Merge configuration sources with precedence flags > env > file > defaults.

    Unknown keys in the file (including inside sections) are hard errors,
    reported with their full key path.
    """
    merged: dict[str, Any] = {}

    if config_file is not None:
        path = Path(config_file)
        try:
            raw = tomllib.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise InvalidConfig(f"cannot read config file {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise InvalidConfig(f"config file {path} is not valid TOML: {exc}") from exc
        for key_path, key, value in _flatten(raw):
            if key not in _FIELD_TYPES:
                raise InvalidConfig(f"unknown config key '{key_path}' in {path}")
            merged[key] = _coerce(key, value)

    env = os.environ if env is None else env
    for env_name, key in _ENV_MAP.items():
        if env_name in env and env[env_name] != "":
            merged[key] = _coerce(key, env[env_name])

    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise InvalidConfig(f"unknown config key '{key}' (flag)")
        merged[key] = _coerce(key, value)

    cfg = AppConfig(**merged)
    _validate(cfg)
    return cfg


def _flatten(mapping: Mapping[str, Any], prefix: str = "") -> list[tuple[str, str, Any]]:
    """Yield (full key path, flat field name, value); sections map onto flat fields."""
    items: list[tuple[str, str, Any]] = []
    for key, value in mapping.items():
        path = f"{prefix}{key}"
        if isinstance(value, Mapping):
            items.extend(_flatten(value, prefix=f"{path}."))
        else:
            items.append((path, key, value))
    return items


def _validate(cfg: AppConfig) -> None:
    if cfg.provider not in ("mock", "http"):
        raise InvalidConfig(f"config key 'provider': must be 'mock' or 'http', got {cfg.provider!r}")
    if cfg.k < 1:
        raise InvalidConfig("config key 'k': must be >= 1")
    if not -1.0 <= cfg.tau <= 1.0:
        raise InvalidConfig("config key 'tau': must be in [-1, 1]")
    if cfg.chunk_size <= cfg.overlap or cfg.overlap < 0:
        raise InvalidConfig("config keys 'chunk_size'/'overlap': need chunk_size > overlap >= 0")
    if cfg.embed_dim < 8:
        raise InvalidConfig("config key 'embed_dim': must be >= 8")
    if not 1 <= cfg.port <= 65535:
        raise InvalidConfig("config key 'port': must be in 1..65535")
    if cfg.provider == "http" and (not cfg.embed_api_url or not cfg.llm_api_url):
        raise InvalidConfig("provider 'http' needs embed_api_url and llm_api_url")
