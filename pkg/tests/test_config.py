import pytest

from config import MelConfig, PredictorConfig, RunConfig, TTSConfig, config_hash, load_run_config
from config.config import DATA_DIR_ENV
from services.errors import ConfigError


def test_defaults_match_f5_frontend():
    cfg = RunConfig()
    assert (cfg.mel.sample_rate, cfg.mel.n_fft, cfg.mel.hop, cfg.mel.n_mels) == (24000, 1024, 256, 100)
    assert cfg.mel.frames_per_second == 93.75
    assert cfg.sampler.nfe == 32 and cfg.sampler.sway == -1.0 and cfg.sampler.cfg_strength == 2.0
    assert cfg.duration.max_duration == 60.0


def test_full_presets_scale_up():
    assert PredictorConfig.full().d_model == 512
    assert PredictorConfig.full(n_layers=3).n_layers == 3
    assert TTSConfig.full().n_layers == 22
    assert TTSConfig.desk().n_layers < TTSConfig.full().n_layers


@pytest.mark.parametrize(
    "kwargs",
    [{"hop": 2048}, {"fmax": 20000.0}, {"n_mels": 0}, {"sample_rate": 0}],
)
def test_invalid_mel_config_rejected(kwargs):
    with pytest.raises(ConfigError):
        MelConfig(**kwargs)


def test_predictor_heads_must_divide_width():
    with pytest.raises(ConfigError):
        PredictorConfig(d_model=30, n_heads=4)


def test_yaml_then_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv(DATA_DIR_ENV, raising=False)
    path = tmp_path / "run.yaml"
    path.write_text("mel.hop: 128\npredictor.epochs: 3\nseed: 7\n", encoding="utf-8")
    cfg = load_run_config(str(path), {"seed": 11, "paths.out_dir": None})
    assert cfg.mel.hop == 128
    assert cfg.predictor.epochs == 3
    assert cfg.seed == 11
    assert cfg.paths.out_dir == "runs"


def test_unknown_keys_are_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_flat({"mel.bogus": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_flat({"nosuch.hop": 1})
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "missing.yaml"))


def test_env_sets_data_root(tmp_path, monkeypatch):
    monkeypatch.setenv(DATA_DIR_ENV, str(tmp_path))
    cfg = load_run_config()
    assert cfg.paths.resolve("manifest.jsonl") == tmp_path / "manifest.jsonl"
    explicit = load_run_config(overrides={"paths.data_dir": "/elsewhere"})
    assert str(explicit.paths.resolve("m.jsonl")) == "/elsewhere/m.jsonl"


def test_config_hash_tracks_content():
    a, b = RunConfig(), RunConfig()
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(RunConfig.from_flat({"seed": 1}))


def test_flat_round_trip():
    cfg = RunConfig.from_flat({"tts.d_model": 64, "tts.n_heads": 4})
    assert RunConfig.from_flat(cfg.to_flat()) == cfg
