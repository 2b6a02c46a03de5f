from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

DEFAULT_SEED = 20240101


@dataclass
class PitConfig:
    trials: int = 3
    seed: int = DEFAULT_SEED
    max_retries: int = 8  # extra models drawn when one makes a denominator vanish


@dataclass
class SamplingConfig:
    lambda_numerator: int = 128
    omega_numerator: int = 64
    denominator: int = 64
    diagonal_slack: int = 64

    @property
    def support_size(self) -> int:
        """Fewest distinct values any free parameter can take."""
        return 2 * min(self.lambda_numerator, self.omega_numerator)


@dataclass
class SearchConfig:
    max_cycle_len: int | None = None  # None means the number of non-root nodes
    max_cycles: int = 64


@dataclass
class Config:
    pit: PitConfig = field(default_factory=PitConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    verify_models: int = 100

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "Config":
        data = data or {}

        pit_data = data.get("pit") or {}
        pit = PitConfig(
            trials=pit_data.get("trials", 3),
            seed=pit_data.get("seed", DEFAULT_SEED),
            max_retries=pit_data.get("max_retries", 8),
        )

        sampling_data = data.get("sampling") or {}
        sampling = SamplingConfig(
            lambda_numerator=sampling_data.get("lambda_numerator", 128),
            omega_numerator=sampling_data.get("omega_numerator", 64),
            denominator=sampling_data.get("denominator", 64),
            diagonal_slack=sampling_data.get("diagonal_slack", 64),
        )

        search_data = data.get("search") or {}
        search = SearchConfig(
            max_cycle_len=search_data.get("max_cycle_len"),
            max_cycles=search_data.get("max_cycles", 64),
        )

        verify_data = data.get("verify") or {}
        config = cls(
            pit=pit,
            sampling=sampling,
            search=search,
            verify_models=verify_data.get("models", 100),
        )
        config.validate()
        return config

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")

        with open(path) as f:
            data = yaml.safe_load(f)

        return cls.from_dict(data)

    def validate(self) -> None:
        positive = {
            "pit.trials": self.pit.trials,
            "sampling.lambda_numerator": self.sampling.lambda_numerator,
            "sampling.omega_numerator": self.sampling.omega_numerator,
            "sampling.denominator": self.sampling.denominator,
            "search.max_cycles": self.search.max_cycles,
            "verify.models": self.verify_models,
        }
        for key, value in positive.items():
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{key} must be a positive integer")
        for key, value in {
            "pit.max_retries": self.pit.max_retries,
            "sampling.diagonal_slack": self.sampling.diagonal_slack,
        }.items():
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{key} must be a nonnegative integer")
        if self.search.max_cycle_len is not None and (
            not isinstance(self.search.max_cycle_len, int) or self.search.max_cycle_len < 3
        ):
            raise ValueError("search.max_cycle_len must be at least 3")


@dataclass
class CliConfig:
    graph_path: Path
    config: Config = field(default_factory=Config)
    format: str = "edgelist"
    output: str = "text"
    report_path: Path | None = None
