"""Service configuration: one JSON file plus environment overrides.

Validation is strict and happens before the listener binds; a bad config
aborts startup with a diagnostic instead of serving with surprise
defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .indexes import InvariantViolation, ThresholdPolicy
from .ledger import AnomalyPolicy

__all__ = ["ConfigError", "ServiceConfig", "load_config"]

ENV_LISTEN = "CONTIVOTE_LISTEN"
ENV_LEDGER_PATH = "CONTIVOTE_LEDGER_PATH"
ENV_ADMIN_TOKEN = "CONTIVOTE_ADMIN_TOKEN"

_TOP_LEVEL_KEYS = {
    "listen",
    "ledger_path",
    "admin_token",
    "trusted_proxy",
    "thresholds",
    "scheduler",
    "anomalies",
}
_THRESHOLD_KEYS = {"alpha_bar", "gamma_bar", "eta_bar", "fraction", "dynamic"}


class ConfigError(ValueError):
    """The configuration is unusable; the message says why."""


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    ledger_path: Path = Path("data/ledger.jsonl")
    admin_token: str = ""
    trusted_proxy: bool = False
    balance_exposure: bool = False
    thresholds: ThresholdPolicy = field(default_factory=ThresholdPolicy)
    anomalies: AnomalyPolicy = field(default_factory=AnomalyPolicy)


def _parse_listen(value: str) -> tuple[str, int]:
    host, sep, port_text = value.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"listen must look like host:port, got {value!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"listen port must be an integer, got {port_text!r}") from None
    if not 0 <= port <= 65535:
        raise ConfigError(f"listen port out of range: {port}")
    return host, port


def _build_thresholds(raw: dict) -> ThresholdPolicy:
    unknown = set(raw) - _THRESHOLD_KEYS
    if unknown:
        raise ConfigError(f"unknown threshold keys: {sorted(unknown)}")
    eta_bar = raw.get("eta_bar")
    fraction = raw.get("fraction")
    if eta_bar is None and fraction is None:
        fraction = 0.15
    try:
        return ThresholdPolicy(
            gamma_bar=float(raw.get("gamma_bar", 0.5)),
            alpha_bar=float(raw.get("alpha_bar", 0.5)),
            eta_bar=eta_bar,
            sampling_fraction=fraction,
            dynamic=bool(raw.get("dynamic", False)),
        )
    except (InvariantViolation, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid thresholds: {exc}") from exc


def load_config(path: str | Path) -> ServiceConfig:
    """Read, override from the environment, and validate."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    listen = os.environ.get(ENV_LISTEN, raw.get("listen", "127.0.0.1:8080"))
    host, port = _parse_listen(str(listen))
    ledger_path = Path(
        os.environ.get(ENV_LEDGER_PATH, raw.get("ledger_path", "data/ledger.jsonl"))
    )
    admin_token = os.environ.get(ENV_ADMIN_TOKEN, raw.get("admin_token", ""))
    if not isinstance(admin_token, str):
        raise ConfigError("admin_token must be a string")

    scheduler_raw = raw.get("scheduler", {})
    if not isinstance(scheduler_raw, dict) or set(scheduler_raw) - {"balance_exposure"}:
        raise ConfigError("scheduler section accepts only balance_exposure")

    anomalies_raw = raw.get("anomalies", {})
    if not isinstance(anomalies_raw, dict) or set(anomalies_raw) - {
        "max_votes_per_ip_per_minute",
        "max_votes_per_ip_per_proposal",
    }:
        raise ConfigError("unknown keys in anomalies section")
    try:
        anomalies = AnomalyPolicy(
            max_votes_per_ip_per_minute=int(anomalies_raw.get("max_votes_per_ip_per_minute", 30)),
            max_votes_per_ip_per_proposal=int(anomalies_raw.get("max_votes_per_ip_per_proposal", 3)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid anomaly policy: {exc}") from exc

    thresholds_raw = raw.get("thresholds", {})
    if not isinstance(thresholds_raw, dict):
        raise ConfigError("thresholds section must be an object")

    return ServiceConfig(
        host=host,
        port=port,
        ledger_path=ledger_path,
        admin_token=admin_token,
        trusted_proxy=bool(raw.get("trusted_proxy", False)),
        balance_exposure=bool(scheduler_raw.get("balance_exposure", False)),
        thresholds=_build_thresholds(thresholds_raw),
        anomalies=anomalies,
    )
