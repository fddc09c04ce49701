"""One config object for the whole pipeline, JSON file plus flag overrides.

Precedence: built-in defaults < config file (``--config`` flag or the
WHYMINE_CONFIG environment variable) < command-line flags.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .dataset import TASKS
from .extract import ExtractionConfig
from .nn.optim import TrainConfig

ENV_VAR = "WHYMINE_CONFIG"


@dataclass
class ModelConfig:
    kind: str = "seq2seq"
    d_w: int = 64
    d_h: int = 128
    layers: int = 1
    shared_embeddings: bool = True


@dataclass
class DecodeConfig:
    mode: str = "beam"
    beam_size: int = 5
    max_len: int = 30
    length_norm: Optional[float] = None


@dataclass
class PipelineConfig:
    corpus: str = "corpus.conllu"
    pairs: str = "pairs.jsonl"
    dataset_dir: str = "dataset"
    checkpoint: str = "model.ckpt"
    task: str = "L2EC"
    min_freq: int = 1
    max_vocab: int = 50000
    max_src_len: int = 200
    split_seed: int = 13
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    serve_port: int = 8080
    ui_dir: Optional[str] = None
    parser_command: Optional[str] = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


_SECTIONS = {"extraction": ExtractionConfig, "train": TrainConfig,
             "model": ModelConfig, "decode": DecodeConfig}


def load_config(path=None) -> PipelineConfig:
    """Read a config file; fall back to WHYMINE_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return PipelineConfig()
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _SECTIONS[key](**value)
        else:
            kwargs[key] = value
    return PipelineConfig(**kwargs)
