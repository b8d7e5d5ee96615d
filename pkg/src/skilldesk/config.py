"""Runtime configuration: YAML file plus SKILLDESK_* environment overrides.

Precedence is dataclass defaults, then the YAML file, then environment
variables, so a deployment can ship one config file and still flip
individual knobs per process.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import FormatError

ENV_PREFIX = "SKILLDESK_"

BACKENDS = ("mock", "chat")


@dataclass(frozen=True)
class AppConfig:
    data_root: str = "skilldesk-data"
    backend: str = "mock"
    chat_base_url: str = ""
    chat_model: str = ""
    chat_api_key: str = ""
    match_error_rate: float = 0.0
    precondition_error_rate: float = 0.0
    seed: int = 0
    views: tuple = ("right",)
    control_dt: float = 0.1
    train_epochs: int = 600
    host: str = "127.0.0.1"
    port: int = 8080

    def validate(self) -> None:
        if self.backend not in BACKENDS:
            raise FormatError(f"backend must be one of {BACKENDS},"
                              f" got {self.backend!r}")
        if self.backend == "chat" and not (self.chat_base_url
                                           and self.chat_model):
            raise FormatError("chat backend needs chat_base_url and"
                              " chat_model")
        if self.control_dt <= 0:
            raise FormatError(f"control_dt must be positive,"
                              f" got {self.control_dt}")
        if not self.views:
            raise FormatError("at least one camera view is required")
        if self.train_epochs < 1:
            raise FormatError(f"train_epochs must be >= 1,"
                              f" got {self.train_epochs}")


def _coerce(name: str, field_type, value):
    try:
        if field_type is int:
            return int(value)
        if field_type is float:
            return float(value)
        if field_type is tuple:
            if isinstance(value, str):
                value = [v.strip() for v in value.split(",") if v.strip()]
            return tuple(str(v) for v in value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise FormatError(f"config field {name!r}: cannot read {value!r}"
                          f" as {field_type.__name__}") from e


def load_config(path: str | Path | None = None,
                env: dict | None = None) -> AppConfig:
    env = os.environ if env is None else env
    fields = {f.name: f.type for f in dataclasses.fields(AppConfig)}
    # dataclasses stores annotations as strings under future-annotations
    types = {"data_root": str, "backend": str, "chat_base_url": str,
             "chat_model": str, "chat_api_key": str,
             "match_error_rate": float, "precondition_error_rate": float,
             "seed": int, "views": tuple, "control_dt": float,
             "train_epochs": int, "host": str, "port": int}
    values: dict = {}

    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            doc = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise FormatError(f"config file is not valid YAML: {e}") from e
        if not isinstance(doc, dict):
            raise FormatError("config file must hold a mapping")
        unknown = set(doc) - set(fields)
        if unknown:
            raise FormatError(f"unknown config keys {sorted(unknown)}")
        for key, value in doc.items():
            values[key] = _coerce(key, types[key], value)

    for name in fields:
        env_key = ENV_PREFIX + name.upper()
        if env_key in env:
            values[name] = _coerce(name, types[name], env[env_key])

    config = AppConfig(**values)
    config.validate()
    return config


def build_orchestrator(config: AppConfig | None = None, **overrides):
    """Construct a ready orchestrator from configuration."""
    from .backends import ChatCompletionsBackend, MockBackend
    from .orchestrator import Orchestrator
    from .transcripts import Transcript

    config = config if config is not None else AppConfig()
    config.validate()
    if config.backend == "chat":
        backend = ChatCompletionsBackend(config.chat_base_url,
                                         config.chat_model,
                                         api_key=config.chat_api_key or None)
    else:
        backend = MockBackend(
            match_error_rate=config.match_error_rate,
            precondition_error_rate=config.precondition_error_rate,
            seed=config.seed)
    kwargs = dict(
        text_backend=backend, vision_backend=backend,
        data_root=config.data_root, views=config.views,
        control_dt=config.control_dt, train_epochs=config.train_epochs,
        transcript=Transcript(
            path=os.path.join(config.data_root, "transcript.jsonl")),
    )
    kwargs.update(overrides)
    return Orchestrator(**kwargs)
