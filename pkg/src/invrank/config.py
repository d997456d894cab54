"""Flat key=value pipeline configuration with INVRANK_* env overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .embeddings import ProviderConfig
from .errors import InvrankError
from .llm_client import ChatConfig, GenBudget
from .ranker import Hyperparams
from .verifier import SolverConfig

PROVIDER_ALIASES = {"remote": "remote", "local": "local_hash", "local_hash": "local_hash", "tfidf": "tfidf"}


@dataclass
class PipelineConfig:
    problems_dir: str = "problems"
    candidates_dir: str = "candidates"
    responses_dir: str = "responses"
    cache_dir: str = "cache"
    models_dir: str = "models"
    reports_dir: str = "reports"
    dataset_path: str = "dataset.jsonl"

    solver_path: str = ""
    solver_timeout: float = 10.0

    provider_kind: str = "local_hash"
    provider_dim: int = 64
    endpoint_url: str = ""
    model_name: str = ""
    api_key_env: str = "INVRANK_API_KEY"
    max_batch: int = 64
    retries: int = 3

    epochs: int = 20
    learning_rate: float = 5e-5
    weight_decay: float = 0.001
    max_grad_norm: float = 1.0
    warmup_steps: int = 500
    batch_size: int = 32

    gen_max_seconds: float = 600.0
    gen_stop_on_first: bool = True
    chat_endpoint_url: str = ""
    chat_model: str = ""
    temperature: float = 1.0

    seed: int = 0
    jobs: int = 1
    ks: tuple[int, ...] = (1, 5, 10)

    def solver(self) -> SolverConfig:
        if self.solver_path:
            return SolverConfig(solver_path=self.solver_path, timeout=self.solver_timeout)
        return SolverConfig.default(timeout=self.solver_timeout)

    def provider(self) -> ProviderConfig:
        kind = PROVIDER_ALIASES.get(self.provider_kind)
        if kind is None:
            raise InvrankError(f"unknown provider {self.provider_kind!r}")
        return ProviderConfig(
            kind=kind,
            dim=self.provider_dim,
            endpoint_url=self.endpoint_url or None,
            model_name=self.model_name or None,
            api_key_env=self.api_key_env,
            max_batch=self.max_batch,
            retries=self.retries,
            cache_dir=self.cache_dir,
            seed=self.seed,
        )

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            max_grad_norm=self.max_grad_norm,
            warmup_steps=self.warmup_steps,
            batch_size=self.batch_size,
            seed=self.seed,
        )

    def budget(self) -> GenBudget:
        return GenBudget(
            max_seconds=self.gen_max_seconds, stop_on_first_verified=self.gen_stop_on_first
        )

    def chat(self) -> ChatConfig | None:
        if not self.chat_endpoint_url:
            return None
        return ChatConfig(
            endpoint_url=self.chat_endpoint_url,
            model_name=self.chat_model or "gpt-3.5-turbo",
            api_key_env=self.api_key_env,
            temperature=self.temperature,
        )


_BOOLS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(name: str, kind, raw: str):
    if kind is bool:
        value = _BOOLS.get(raw.strip().lower())
        if value is None:
            raise InvrankError(f"config key {name}: expected a boolean, got {raw!r}")
        return value
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if name == "ks":
        return tuple(int(x) for x in raw.replace(",", " ").split())
    return raw


def load_config(path: str | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Read key = value lines, then apply INVRANK_<KEY> env vars and overrides."""
    raw: dict[str, str] = {}
    if path:
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvrankError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip().strip('"')

    cfg = PipelineConfig()
    typed = {f.name: f.type for f in fields(PipelineConfig)}
    kinds = {
        name: (bool if "bool" in str(t) else int if str(t).startswith("int") else
               float if str(t).startswith("float") else str)
        for name, t in typed.items()
    }
    for name in typed:
        env_key = f"INVRANK_{name.upper()}"
        if name in raw:
            setattr(cfg, name, _coerce(name, kinds[name], raw[name]))
        if env_key in os.environ:
            setattr(cfg, name, _coerce(name, kinds[name], os.environ[env_key]))
    unknown = set(raw) - set(typed)
    if unknown:
        raise InvrankError(f"unknown config keys: {sorted(unknown)}")
    # the solver path env override uses the documented short name
    if os.environ.get("INVRANK_SOLVER"):
        cfg.solver_path = os.environ["INVRANK_SOLVER"]
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg
