"""Config documents for experiment runs.

One JSON document describes one run; the same pydantic models validate CLI
config files and service request bodies, and their canonical dump is what the
manifest digest covers. Every experiment kind carries an explicit seed — there
are no wall-clock or entropy defaults anywhere.
"""

from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from .datagen import DatasetSpec, NoiseSpec
from .propcheck import CHECK_IDS


class MixtureConfig(BaseModel):
    means: list[list[float]]
    covariances: list[Union[float, list[float]]]
    counts: list[int]
    seed: int

    def build(self) -> DatasetSpec:
        covs = tuple(
            tuple(c) if isinstance(c, list) else (float(c),) for c in self.covariances
        )
        return DatasetSpec(
            class_means=tuple(tuple(m) for m in self.means),
            class_covariances=covs,
            class_counts=tuple(self.counts),
            seed=self.seed,
        )


class NoiseConfig(BaseModel):
    kind: Literal["uniform_label", "flip_label", "feature"]
    rate: float
    seed: int
    epsilon: float = 0.0
    direction: Literal["adversarial", "promoted"] = "adversarial"

    def build(self) -> NoiseSpec:
        return NoiseSpec(
            kind=self.kind, rate=self.rate, seed=self.seed,
            epsilon=self.epsilon, direction=self.direction,
        )


class DataSource(BaseModel):
    """Either a CSV path or an inline mixture, with optional label corruption."""

    path: Optional[str] = None
    mixture: Optional[MixtureConfig] = None
    label_noise: Optional[NoiseConfig] = None

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.path is None) == (self.mixture is None):
            raise ValueError("give exactly one of `path` or `mixture`")
        if self.label_noise is not None and self.label_noise.kind == "feature":
            raise ValueError("feature noise needs reference gradients; use the API")
        return self


class ModelConfig(BaseModel):
    kind: Literal["linear", "mlp2"]
    hidden: int = 0
    outputs: int = 1

    def dims(self, d: int) -> tuple[int, int, int]:
        return (d, self.hidden, self.outputs)


class LossConfig(BaseModel):
    kind: Literal["exponential", "logistic", "squared", "cross_entropy"]


class HyperConfig(BaseModel):
    learning_rate: float = 0.1
    epochs: int = 100
    reg_lambda: float = 0.0
    reg_power: float = 2.0


class SchemeConfig(BaseModel):
    kind: Literal[
        "equal", "inverse_margin", "error_hard_first",
        "error_easy_first", "class_balanced", "custom_static",
    ] = "equal"
    lower: float = 0.1
    upper: float = 10.0
    dynamic: bool = False
    custom: Optional[list[float]] = None


class GenConfig(BaseModel):
    experiment: Literal["gen"]
    mixture: MixtureConfig
    label_noise: Optional[NoiseConfig] = None


class TrainConfig(BaseModel):
    experiment: Literal["train"]
    data: DataSource
    model: ModelConfig
    loss: LossConfig
    hyper: HyperConfig = HyperConfig()
    scheme: SchemeConfig = SchemeConfig()
    seed: int
    reference: Optional[Literal["max_margin"]] = None

    @model_validator(mode="after")
    def _reference_needs_linear(self):
        if self.reference == "max_margin" and self.model.kind != "linear":
            raise ValueError("the max-margin reference direction is a linear-model diagnostic")
        return self


class DifficultyConfig(BaseModel):
    experiment: Literal["difficulty"]
    data: DataSource
    model: ModelConfig
    loss: LossConfig
    hyper: HyperConfig = HyperConfig()
    folds: int = 5
    repeats: int = 20
    mode: Literal["kfold", "perturb"] = "kfold"
    delta: float = 0.0
    tau_inv: float = 0.0
    master_seed: int
    with_input_gradients: bool = False


class BoundSettings(BaseModel):
    gamma: float
    delta: float = 0.1
    q: int = 2
    L: Optional[float] = None  # None: use sup ||x|| of the evaluation set


class BoundConfig(BaseModel):
    experiment: Literal["bound"]
    data: DataSource  # evaluation draw
    train_data: Optional[DataSource] = None  # defaults to `data`
    model: ModelConfig
    loss: LossConfig
    hyper: HyperConfig = HyperConfig()
    scheme: SchemeConfig = SchemeConfig()
    ensemble: int = 1
    seed: int
    bound: BoundSettings
    convention: Literal["paper", "standard"] = "paper"
    target: Literal["source", "uniform"] = "source"
    clean_target: bool = False

    @model_validator(mode="after")
    def _static_scheme_only(self):
        if self.scheme.kind in ("inverse_margin", "error_hard_first", "error_easy_first"):
            raise ValueError(
                "bound runs need a fixed training distribution: use a static scheme "
                "or materialize difficulty weights as custom_static"
            )
        return self


class CheckConfig(BaseModel):
    experiment: Literal["check"]
    checks: Union[Literal["all"], list[str]] = "all"
    seed: int

    @model_validator(mode="after")
    def _known_checks(self):
        if self.checks != "all":
            unknown = [c for c in self.checks if c not in CHECK_IDS]
            if unknown:
                raise ValueError(f"unknown checks: {unknown}; valid ids: {list(CHECK_IDS)}")
        return self


class ReportConfig(BaseModel):
    experiment: Literal["report"]
    inputs: str  # directory holding artifacts from earlier runs


ExperimentConfig = Annotated[
    Union[GenConfig, TrainConfig, DifficultyConfig, BoundConfig, CheckConfig, ReportConfig],
    Field(discriminator="experiment"),
]


class RunRequest(BaseModel):
    config: ExperimentConfig
    out_dir: str
    jobs: int = Field(default=1, ge=1)


class ArtifactRecord(BaseModel):
    path: str  # relative to the run's out_dir
    sha256: str


class RunManifest(BaseModel):
    schema_version: int
    experiment: str
    config_digest: str
    tool_version: str
    started_at: str
    finished_at: str
    out_dir: str
    artifacts: list[ArtifactRecord]
