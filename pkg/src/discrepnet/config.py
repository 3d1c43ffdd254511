"""Training configuration and its TOML round-trip."""

import sys
from dataclasses import asdict, dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .encoder import BackboneConfig
from .losses import LossWeights


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    lr: float = 1e-4
    weight_decay: float = 1e-5
    lr_gamma: float = 0.5
    lr_step_epochs: int = 5
    epochs: int = 5
    seed: int = 0
    ablation: str = "full"
    recon_norm: str = "l2"
    loss_weights: LossWeights = field(default_factory=LossWeights)
    backbone: BackboneConfig = field(default_factory=BackboneConfig)

    def to_dict(self):
        d = asdict(self)
        d["backbone"] = {k: list(v) if isinstance(v, tuple) else v
                         for k, v in d["backbone"].items()}
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "loss_weights" in data:
            data["loss_weights"] = LossWeights(**data["loss_weights"])
        if "backbone" in data:
            raw = dict(data["backbone"])
            for key in ("stage_channels", "input_size", "stage_strides"):
                if key in raw:
                    raw[key] = tuple(raw[key])
            data["backbone"] = BackboneConfig(**raw)
        return cls(**data)


def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {value!r}")


def to_toml(config: TrainConfig) -> str:
    data = config.to_dict()
    lines = []
    tables = {}
    for key, value in data.items():
        if isinstance(value, dict):
            tables[key] = value
        else:
            lines.append(f"{key} = {_toml_value(value)}")
    for name, table in tables.items():
        lines.append(f"\n[{name}]")
        for key, value in table.items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def load_config(path) -> TrainConfig:
    with open(path, "rb") as fh:
        return TrainConfig.from_dict(tomllib.load(fh))


def save_config(config: TrainConfig, path):
    with open(path, "w") as fh:
        fh.write(to_toml(config))
