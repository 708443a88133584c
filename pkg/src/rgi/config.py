"""JSON run configuration for the command line.

Unknown keys are rejected at every level and referenced paths must exist.
Relative paths are resolved against the config file's directory.
"""

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .data import SbmConfig, generate_sbm, load_manifest
from .encoder import EncoderConfig
from .errors import ConfigError
from .graph import PropagationConfig
from .loss import LossWeights
from .trainer import ScheduleConfig, TrainConfig


@dataclass
class EncoderSection:
    hidden_dim: int = 1024
    output_dim: int = 512
    num_layers: int = 2
    p_input: float = 0.5
    norm: str = "batch"


@dataclass
class PropagationSection:
    kind: str = "sym_norm_adj"
    steps: int = 1


@dataclass
class LossSection:
    lambda1: float = 10.0
    lambda2: float = 5.0
    lambda3: float = 1.0


@dataclass
class ScheduleSection:
    base_lr: float = 1e-4
    n_epochs: int = 1000
    n_warmup: int = None


@dataclass
class EvalSection:
    num_seeds: int = 20
    split: list = field(default_factory=lambda: [0.1, 0.1, 0.8])


@dataclass
class RunConfig:
    output_dir: Path
    dataset: Path = None
    sbm: dict = None
    encoder: EncoderSection = field(default_factory=EncoderSection)
    propagation: PropagationSection = field(default_factory=PropagationSection)
    loss: LossSection = field(default_factory=LossSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    eval: EvalSection = field(default_factory=EvalSection)
    predictor_hidden: int = None
    p_local: float = 0.0
    weight_decay: float = 1e-5
    seed: int = 0
    precision: str = "double"
    checkpoint_every: int = None

    def load_dataset(self):
        if self.sbm is not None:
            return generate_sbm(SbmConfig(**self.sbm))
        return load_manifest(self.dataset)

    def train_config(self, input_dim):
        e, s = self.encoder, self.schedule
        n_warmup = s.n_warmup if s.n_warmup is not None else max(1, s.n_epochs // 10)
        return TrainConfig(
            encoder=EncoderConfig(input_dim, e.hidden_dim, e.output_dim, e.num_layers, e.p_input, e.norm),
            propagation=PropagationConfig(self.propagation.kind, self.propagation.steps),
            weights=LossWeights(self.loss.lambda1, self.loss.lambda2, self.loss.lambda3),
            schedule=ScheduleConfig(s.base_lr, n_warmup, s.n_epochs),
            p_local=self.p_local,
            weight_decay=self.weight_decay,
            pred_hidden=self.predictor_hidden,
            seed=self.seed,
            precision=self.precision,
        )


SECTIONS = {"encoder": EncoderSection, "propagation": PropagationSection, "loss": LossSection,
            "schedule": ScheduleSection, "eval": EvalSection}


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in SECTIONS and cls is RunConfig:
            value = _build(SECTIONS[key], value, f"{where}.{key}")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_run_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if "output_dir" not in data:
        raise ConfigError(f"{path}: missing required key 'output_dir'")
    cfg = _build(RunConfig, data, path.name)
    base = path.parent
    cfg.output_dir = (base / cfg.output_dir).resolve()
    if (cfg.dataset is None) == (cfg.sbm is None):
        raise ConfigError(f"{path}: set exactly one of 'dataset' (manifest path) or 'sbm'")
    if cfg.dataset is not None:
        cfg.dataset = (base / cfg.dataset).resolve()
        if not cfg.dataset.exists():
            raise ConfigError(f"dataset manifest not found: {cfg.dataset}")
    else:
        _build(SbmConfig, cfg.sbm, f"{path.name}.sbm")
    try:
        cfg.train_config(1)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg
