"""
Configuration management for causal-alarm-rl.

Application settings (paths, logging, results database) come from the
environment through pydantic-settings. Experiment configuration is a tree of
pydantic models (environment, training, discovery, run) that can be loaded
from a flat ``key=value`` file and overridden from the command line.
"""

import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

from loguru import logger
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)
from pydantic_settings import BaseSettings, SettingsConfigDict

from causal_alarm_rl.errors import ConfigError

CLI_LOG_FORMAT = "<level>{level: <8}</level> <level>{message}</level>"
FILE_LOG_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss zz} {level: <8} | [{name}:{function}:{line}] - {message}"
)
FILE_LOG_NAME = "trace.jsonl"


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Application
    APP_NAME: str = "causal-alarm-rl"
    DEBUG: bool = False

    # Paths (relative to current working directory)
    LOG_DIR: Path = Path("logs")
    RESULTS_DIR: Path = Path("results")

    # Results database
    DATABASE_URL: str = ""

    # Logging
    LOG_LEVEL: str = "INFO"

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    def __init__(self, **kwargs):
        super().__init__(**kwargs)

        self.LOG_DIR.mkdir(parents=True, exist_ok=True)
        self.RESULTS_DIR.mkdir(parents=True, exist_ok=True)

        if not self.DATABASE_URL:
            self.DATABASE_URL = f"sqlite:///{self.RESULTS_DIR / 'runs.db'}"

    def model_post_init(self, context):
        logger.remove()
        log_file_path = self.LOG_DIR / FILE_LOG_NAME
        config = {
            "handlers": [
                {
                    "sink": sys.stdout,
                    "format": CLI_LOG_FORMAT,
                    "level": "DEBUG" if self.DEBUG else self.LOG_LEVEL,
                },
                {
                    "sink": str(log_file_path),
                    "format": FILE_LOG_FORMAT,
                    "level": "DEBUG",
                    "serialize": True,
                    # seed workers run in separate processes
                    "enqueue": True,
                },
            ]
        }
        logger.configure(**config)
        return super().model_post_init(context)


# Global settings instance
settings = Settings()


def _split_csv(value: Any) -> Any:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


class EnvConfig(BaseModel):
    """FaultAlarmRL environment parameters (defaults: the 18-type, 50-device setting)."""

    model_config = ConfigDict(extra="forbid")

    num_nodes: int = Field(50, ge=1)
    num_types: int = Field(18, ge=1)
    step_max: int = Field(100, ge=1)
    max_hop: int = Field(2, ge=0)
    alpha_range: Tuple[float, float] = (0.0001, 0.0013)
    mu_range: Tuple[float, float] = (0.0005, 0.0008)
    kernel_kappa: float = Field(1.0, gt=0.0, le=1.0)
    warmup_time_range: int = Field(50, ge=1)
    root_cause_num: int = Field(50, ge=0)
    count_cap: int = Field(10, ge=1)
    boost_scale: float = Field(50.0, ge=1.0)
    topology_free: bool = False
    delta_t: float = Field(1.0, gt=0.0)
    topology_density: float = Field(0.05, ge=0.0, le=1.0)
    max_reset_attempts: int = Field(10, ge=1)

    @field_validator("alpha_range", "mu_range", mode="before")
    @classmethod
    def _parse_range(cls, value):
        return _split_csv(value)

    @field_validator("alpha_range", "mu_range")
    @classmethod
    def _check_range(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = value
        if lo < 0 or hi < lo:
            raise ValueError(f"range must satisfy 0 <= lo <= hi, got [{lo}, {hi}]")
        return value

    @model_validator(mode="after")
    def _force_single_hop(self):
        if self.topology_free and self.max_hop != 1:
            logger.debug("topology_free forces max_hop=1")
            self.max_hop = 1
        return self

    @property
    def action_space_size(self) -> int:
        return self.num_nodes * self.num_types

    @property
    def observation_size(self) -> int:
        return 2 * self.num_nodes * self.num_types

    @classmethod
    def topology_free_preset(cls, **overrides) -> "EnvConfig":
        """The 100-type single-device environment without a device topology."""
        values: Dict[str, Any] = {
            "num_nodes": 1,
            "num_types": 100,
            "step_max": 100,
            "max_hop": 1,
            "alpha_range": (0.00015, 0.0025),
            "mu_range": (0.0005, 0.0008),
            "warmup_time_range": 100,
            "root_cause_num": 20,
            "topology_free": True,
        }
        values.update(overrides)
        return cls(**values)


class TrainConfig(BaseModel):
    """Policy learning hyper-parameters for Causal PPO / Causal DQN."""

    model_config = ConfigDict(extra="forbid")

    algo: Literal["ppo", "dqn"] = "ppo"
    lr: float = Field(3e-4, gt=0.0)
    gamma: float = Field(0.99, ge=0.0, lt=1.0)
    batch_size: int = Field(64, ge=1)
    hidden_size: int = Field(128, ge=1)

    # PPO
    clip: float = Field(0.2, gt=0.0, lt=1.0)
    k_epochs: int = Field(50, ge=1)
    ppo_update_timestep: int = Field(256, ge=1)
    gae_lambda: float = Field(0.95, ge=0.0, le=1.0)
    entropy_coef: float = Field(0.01, ge=0.0)
    value_coef: float = Field(0.5, ge=0.0)

    # DQN
    buffer_size: int = Field(100_000, ge=1)
    dqn_update_timestep: int = Field(5, ge=1)
    target_sync: int = Field(100, ge=1)
    eps_greedy: float = Field(0.1, ge=0.0, le=1.0)

    # Causal exploration / masking
    eta_causal: Optional[float] = Field(None, ge=0.0, le=1.0)
    random_sample_timestep: int = Field(512, ge=0)
    topk: int = Field(7, ge=1)

    # Optimizer
    max_grad_norm: float = Field(0.5, ge=0.0)
    adam_beta1: float = Field(0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(1e-8, gt=0.0)

    @model_validator(mode="after")
    def _default_eta(self):
        if self.eta_causal is None:
            self.eta_causal = 0.3 if self.algo == "ppo" else 0.2
        return self

    @property
    def update_timestep(self) -> int:
        return self.ppo_update_timestep if self.algo == "ppo" else self.dqn_update_timestep


class DiscoveryConfig(BaseModel):
    """Structure learning parameters (ATT orientation and score pruning)."""

    model_config = ConfigDict(extra="forbid")

    # minimum |ATT| in expected arrivals per step
    att_threshold: float = Field(0.05, gt=0.0)
    n_min: int = Field(20, ge=1)
    # None means the BIC weight 0.5 * ln(T)
    score_penalty: Optional[float] = Field(None, ge=0.0)
    max_prune_passes: int = Field(10, ge=1)
    # L-BFGS-B iterations per Poisson fit (counterfactual and score)
    score_max_iter: int = Field(200, ge=1)

    def penalty_for(self, num_transitions: int) -> float:
        if self.score_penalty is not None:
            return float(self.score_penalty)
        return 0.5 * math.log(max(num_transitions, 1))


class InitGraphSpec(BaseModel):
    """How the learned graph is initialised: ``random:p``, ``file:PATH`` or ``truth``."""

    kind: Literal["random", "file", "truth"] = "random"
    edge_prob: float = Field(0.1, ge=0.0, le=1.0)
    path: Optional[Path] = None

    @classmethod
    def parse(cls, text: str) -> "InitGraphSpec":
        text = text.strip()
        if text == "truth":
            return cls(kind="truth")
        if text.startswith("random"):
            _, _, prob = text.partition(":")
            return cls(kind="random", edge_prob=float(prob) if prob else 0.1)
        if text.startswith("file:"):
            return cls(kind="file", path=Path(text[len("file:"):]))
        raise ValueError(f"init_graph must be random:p, file:PATH or truth, got {text!r}")

    def __str__(self) -> str:
        if self.kind == "random":
            return f"random:{self.edge_prob}"
        if self.kind == "file":
            return f"file:{self.path}"
        return "truth"


class RunConfig(BaseModel):
    """One experiment: environment, learner, discovery and run bookkeeping."""

    model_config = ConfigDict(extra="forbid")

    env: EnvConfig = Field(default_factory=EnvConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    discovery: DiscoveryConfig = Field(default_factory=DiscoveryConfig)
    episodes: int = Field(200, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [0])
    init_graph: InitGraphSpec = Field(default_factory=InitGraphSpec)
    mask_mode: Literal["causal", "none"] = "causal"
    discovery_enabled: bool = True
    out_dir: Path = Path("results/run")
    workers: int = Field(1, ge=1)
    topology_seed: Optional[int] = None
    topology_file: Optional[Path] = None
    truth_file: Optional[Path] = None
    truth_edge_prob: float = Field(0.05, ge=0.0, le=1.0)

    @field_validator("seeds", mode="before")
    @classmethod
    def _parse_seeds(cls, value):
        if isinstance(value, int):
            return [value]
        return _split_csv(value)

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one seed is required")
        return value

    @field_validator("init_graph", mode="before")
    @classmethod
    def _parse_init_graph(cls, value):
        if isinstance(value, str):
            return InitGraphSpec.parse(value)
        return value


def _coerce_scalar(raw: str) -> Any:
    value = raw.strip()
    if "," in value:
        return _split_csv(value)
    return value


def _set_dotted(tree: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    node = tree
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def parse_flat_config(text: str) -> Dict[str, Any]:
    """Parse flat ``key=value`` lines into a nested dict keyed by namespace."""
    tree: Dict[str, Any] = {}
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        _set_dotted(tree, key.strip(), _coerce_scalar(value))
    return tree


def build_run_config(
    tree: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Validate a nested config dict with dotted-key overrides applied on top."""
    merged: Dict[str, Any] = {}
    for key, value in (tree or {}).items():
        if isinstance(value, Mapping):
            merged[key] = dict(value)
        else:
            merged[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(merged, key, value)
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration:\n{e}") from e


def load_run_config(
    path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """Load a flat config file (optional) and apply CLI overrides."""
    tree: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        tree = parse_flat_config(path.read_text(encoding="utf-8"))
        logger.info(f"Loaded run configuration from {path}")
    return build_run_config(tree, overrides)
