"""Run and task configuration documents (TOML on disk)."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .gateway import TaskSpec
from .reward import DEFAULT_WEIGHTS, RewardWeights
from .sandbox import DEFAULT_ALLOW_LIST, ExecOptions


@dataclass(frozen=True)
class AblationFlags:
    disable_domain_init: bool = False
    disable_moeo: bool = False


@dataclass(frozen=True)
class SearchConfig:
    iteration_budget: int = 200
    parallelism: int = 3
    tau_max: float = 300.0
    weights: RewardWeights = DEFAULT_WEIGHTS
    selection_temperature: float = 0.25
    debug_retry_cap: int = 3
    patience: int = 30
    random_seed: int = 0
    ablation: AblationFlags = field(default_factory=AblationFlags)

    def __post_init__(self):
        if self.iteration_budget < 1:
            raise ValueError("iteration_budget must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.selection_temperature <= 0:
            raise ValueError("selection_temperature must be positive")
        if self.tau_max <= 0:
            raise ValueError("tau_max must be positive")


@dataclass(frozen=True)
class BackendConfig:
    mode: str = "mock"  # "mock" or "remote"
    playbook: Path | None = None
    endpoint: str | None = None
    model: str | None = None


@dataclass(frozen=True)
class RunConfig:
    search: SearchConfig = field(default_factory=SearchConfig)
    exec_options: ExecOptions = field(default_factory=ExecOptions)
    backend: BackendConfig = field(default_factory=BackendConfig)
    catalog_path: Path | None = None
    sample_budget: int = 5


def load_task(path: str | os.PathLike) -> TaskSpec:
    raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    return TaskSpec.from_dict(raw)


def load_run_config(path: str | os.PathLike) -> RunConfig:
    raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    search_kwargs = {}
    for key in ("iteration_budget", "parallelism", "tau_max", "selection_temperature",
                "debug_retry_cap", "patience", "random_seed"):
        if key in raw:
            search_kwargs[key] = raw[key]
    if "weights" in raw:
        search_kwargs["weights"] = RewardWeights.from_dict(raw["weights"])
    if "ablation" in raw:
        search_kwargs["ablation"] = AblationFlags(**raw["ablation"])
    search = SearchConfig(**search_kwargs)

    exec_options = ExecOptions(
        interpreter_cmd=tuple(raw.get("interpreter_cmd", ("python3",))),
        allow_list=frozenset(raw.get("allow_list", DEFAULT_ALLOW_LIST)),
        script_filename=raw.get("script_filename", "candidate.py"),
        timing_mode=raw.get("timing_mode", "measured"),
    )

    backend_raw = raw.get("backend", {})
    backend = BackendConfig(
        mode=backend_raw.get("mode", "mock"),
        playbook=Path(backend_raw["playbook"]) if "playbook" in backend_raw else None,
        endpoint=backend_raw.get("endpoint"),
        model=backend_raw.get("model"),
    )

    return RunConfig(
        search=search,
        exec_options=exec_options,
        backend=backend,
        catalog_path=Path(raw["catalog"]) if "catalog" in raw else None,
        sample_budget=int(raw.get("sample_budget", 5)),
    )
