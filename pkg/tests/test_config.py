from pathlib import Path

import pytest
import yaml

from src.config import DEFAULT_SEED, Config, SamplingConfig


class TestConfig:
    def test_load_valid_config(self, tmp_path: Path) -> None:
        config_data = {
            "pit": {"trials": 5, "seed": 42, "max_retries": 2},
            "sampling": {
                "lambda_numerator": 32,
                "omega_numerator": 16,
                "denominator": 8,
                "diagonal_slack": 0,
            },
            "search": {"max_cycle_len": 4, "max_cycles": 10},
            "verify": {"models": 7},
        }

        config_file = tmp_path / "config.yaml"
        with open(config_file, "w") as f:
            yaml.dump(config_data, f)

        config = Config.load(config_file)

        assert config.pit.trials == 5
        assert config.pit.seed == 42
        assert config.pit.max_retries == 2
        assert config.sampling.lambda_numerator == 32
        assert config.sampling.omega_numerator == 16
        assert config.sampling.denominator == 8
        assert config.sampling.diagonal_slack == 0
        assert config.search.max_cycle_len == 4
        assert config.search.max_cycles == 10
        assert config.verify_models == 7

    def test_load_config_with_defaults(self, tmp_path: Path) -> None:
        config_file = tmp_path / "config.yaml"
        with open(config_file, "w") as f:
            yaml.dump({"pit": {"trials": 4}}, f)

        config = Config.load(config_file)

        assert config.pit.trials == 4
        assert config.pit.seed == DEFAULT_SEED
        assert config.pit.max_retries == 8
        assert config.search.max_cycle_len is None
        assert config.search.max_cycles == 64
        assert config.verify_models == 100

    def test_load_empty_file_gives_defaults(self, tmp_path: Path) -> None:
        config_file = tmp_path / "config.yaml"
        config_file.write_text("")

        config = Config.load(config_file)

        assert config == Config()

    def test_load_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(FileNotFoundError):
            Config.load(tmp_path / "nonexistent.yaml")

    @pytest.mark.parametrize(
        "data",
        [
            {"pit": {"trials": 0}},
            {"pit": {"max_retries": -1}},
            {"sampling": {"denominator": 0}},
            {"sampling": {"diagonal_slack": -3}},
            {"search": {"max_cycles": 0}},
            {"search": {"max_cycle_len": 2}},
            {"verify": {"models": "many"}},
        ],
    )
    def test_invalid_values_rejected(self, data: dict) -> None:
        with pytest.raises(ValueError):
            Config.from_dict(data)

    def test_validate_after_override(self) -> None:
        config = Config()
        config.pit.trials = -2

        with pytest.raises(ValueError, match="pit.trials"):
            config.validate()


class TestSamplingConfig:
    def test_support_size_uses_smaller_range(self) -> None:
        assert SamplingConfig().support_size == 128
        assert SamplingConfig(lambda_numerator=10, omega_numerator=64).support_size == 20
