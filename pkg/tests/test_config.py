# tests/test_config.py

import json

import pytest

from config.app_config import DEFAULT_PIPELINE_CONFIG, AppConfig, PipelineConfig, Thresholds, parse_override
from utils.errors import ConfigurationError, MissingInputError


class TestDefaults:
    def test_file_matches_dataclass(self):
        assert PipelineConfig.from_file(DEFAULT_PIPELINE_CONFIG) == PipelineConfig()

    def test_no_path_uses_bundled_file(self):
        assert PipelineConfig.from_file() == PipelineConfig()

    def test_thresholds(self):
        th = PipelineConfig().thresholds
        assert (th.road_len_km, th.entropy_nats, th.bdensity, th.bheight_m) == (8.64, 2.0, (0.1, 0.3), (12.0, 30.0))


class TestOverrides:
    def test_scalar_nested_and_string(self):
        config = PipelineConfig.from_file(overrides=["c_tr=0.9", "thresholds.road_len_km=9.5", "task=road_gen"])
        assert config.c_tr == 0.9
        assert config.thresholds.road_len_km == 9.5
        assert config.task == "road_gen"

    def test_boolean(self):
        assert PipelineConfig.from_file(overrides=["strict_faces=true"]).strict_faces is True

    def test_threshold_pair(self):
        config = PipelineConfig.from_file(overrides=["thresholds.bheight_m=[10, 40]"])
        assert config.thresholds.bheight_m == (10.0, 40.0)

    @pytest.mark.parametrize("item", ["c_tr", "=3"])
    def test_malformed(self, item):
        with pytest.raises(ConfigurationError):
            parse_override(item)

    def test_value_may_contain_equals(self):
        assert parse_override("output_dir=a=b") == ("output_dir", "a=b")


class TestValidation:
    @pytest.mark.parametrize("data", [
        {"unknown_key": 1},
        {"thresholds": {"nope": 1}},
        {"density_window_px": 64},
        {"stride_px": 300},
        {"c_tr": 1.0},
        {"resolution_m": 0},
        {"cycle_cutoff": 2},
        {"task": "everything"},
        {"neighbor_aggregate": "max"},
        {"convenience_unreachable": "inf"},
        {"workers": -1},
        {"thresholds": {"bdensity": [0.3, 0.1]}},
        {"resolution_m": "abc"},
        {"tile_px": 25.5},
        {"strict_faces": "maybe"},
        {"task": ["all"]},
        {"thresholds": 5},
        {"thresholds": {"bdensity": 0.5}},
        {"thresholds": {"bheight_m": [1, 2, 3]}},
        {"thresholds": {"road_len_km": "far"}},
    ])
    def test_rejected(self, data):
        with pytest.raises(ConfigurationError):
            PipelineConfig.from_dict(data)

    def test_numeric_strings_coerced(self):
        config = PipelineConfig.from_dict({"resolution_m": "2.5", "tile_px": 128.0, "stride_px": "100"})
        assert (config.resolution_m, config.tile_px, config.stride_px) == (2.5, 128, 100)
        assert isinstance(config.tile_px, int)

    def test_override_into_scalar_rejected(self):
        with pytest.raises(ConfigurationError):
            PipelineConfig.from_file(overrides=["resolution_m.x=1"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingInputError):
            PipelineConfig.from_file(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            PipelineConfig.from_file(path)

    def test_threshold_order(self):
        with pytest.raises(ConfigurationError):
            Thresholds(bheight_m=(30.0, 12.0)).validate()


class TestHash:
    def test_dict_round_trip(self):
        config = PipelineConfig(c_tr=0.95, task="building_gen")
        assert PipelineConfig.from_dict(json.loads(json.dumps(config.to_dict()))) == config

    def test_stable_and_hex(self):
        h = PipelineConfig().config_hash()
        assert h == PipelineConfig().config_hash()
        assert len(h) == 64 and int(h, 16) >= 0

    def test_ignores_output_dir_and_workers(self):
        a = PipelineConfig(output_dir="a", workers=1)
        b = PipelineConfig(output_dir="b", workers=8)
        assert a.config_hash() == b.config_hash()

    def test_paths_reduced_to_base_names(self):
        a = PipelineConfig(features_path="/data/one/city.geojson")
        b = PipelineConfig(features_path="/other/place/city.geojson")
        assert a.config_hash() == b.config_hash()

    def test_parameters_change_hash(self):
        assert PipelineConfig(c_tr=0.9).config_hash() != PipelineConfig().config_hash()
        assert PipelineConfig(thresholds=Thresholds(road_len_km=5.0)).config_hash() != PipelineConfig().config_hash()


class TestWorkers:
    def test_explicit(self):
        assert PipelineConfig(workers=3).effective_workers() == 3

    def test_environment(self, monkeypatch):
        monkeypatch.setattr(AppConfig, "WORKERS", "4")
        assert PipelineConfig().effective_workers() == 4

    def test_environment_garbage(self, monkeypatch):
        monkeypatch.setattr(AppConfig, "WORKERS", "many")
        with pytest.raises(ConfigurationError):
            PipelineConfig().effective_workers()

    def test_available_parallelism(self, monkeypatch):
        monkeypatch.setattr(AppConfig, "WORKERS", None)
        assert PipelineConfig().effective_workers() >= 1
