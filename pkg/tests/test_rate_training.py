import json
from dataclasses import replace

import numpy as np
import pytest

from config import PredictorConfig
from models.alignment import Language
from models.duration import SyntheticRateSpec
from models.rate import Granularity
from services.audio import save_mel
from services.errors import ConfigError, ConfigMismatch, InvalidDataset
from services.evaluation import generate_synthetic_rate_corpus, sample_rate_specs
from services.rate import (
    bin_accuracy,
    load_rate_examples,
    load_rate_predictor,
    predict_proba,
    rate_to_category,
    save_rate_predictor,
    train_rate_predictor,
)
from services.rate.trainer import epoch_order, epoch_size, random_crop


@pytest.fixture
def corpus(mel_config):
    specs = [SyntheticRateSpec(rate=r, duration=3.0) for r in (1.0, 2.0, 4.0, 6.0, 1.5, 5.0)]
    return generate_synthetic_rate_corpus(specs, seed=0, mel_config=mel_config)


def test_training_is_deterministic(corpus, tiny_predictor):
    first = train_rate_predictor(corpus, tiny_predictor, epochs=2, seed=3)
    second = train_rate_predictor(corpus, tiny_predictor, epochs=2, seed=3)
    assert len(first.losses) == 2
    assert first.losses == second.losses
    assert first.step == 2 * 2


def test_empty_and_mixed_datasets_rejected(corpus, tiny_predictor):
    with pytest.raises(InvalidDataset):
        train_rate_predictor([], tiny_predictor)
    mixed = corpus[:2] + [replace(corpus[2], granularity=Granularity.WORD)]
    with pytest.raises(InvalidDataset):
        train_rate_predictor(mixed, tiny_predictor, epochs=1)


def test_single_example_overfits(corpus, tiny_predictor):
    example = corpus[2]
    config = replace(tiny_predictor, batch_size=1, learning_rate=3e-3, warmup_fraction=0.0)
    run = train_rate_predictor([example], config, epochs=60, seed=0)
    probs = predict_proba(run.model, [example.mel])[0]
    assert int(np.argmax(probs)) == rate_to_category(example.true_rate, run.model.categories)
    assert run.losses[-1] < run.losses[0]


def test_random_crop_bounds(mel_config, tiny_predictor, rng):
    (example,) = generate_synthetic_rate_corpus([SyntheticRateSpec(rate=3.0, duration=8.0)], mel_config=mel_config)
    for _ in range(20):
        crop = random_crop(example.mel, tiny_predictor, rng)
        assert 281 <= crop.shape[0] <= 750
    short = replace(tiny_predictor, crop_min_s=None)
    assert random_crop(example.mel, short, rng).shape[0] == example.mel.n_frames


def test_language_balancing(corpus, tiny_predictor, rng):
    tagged = [replace(ex, language=Language.ZH) if i == 0 else ex for i, ex in enumerate(corpus)]
    config = replace(tiny_predictor, balance_languages=True)
    assert epoch_size(tagged, config) == 10
    order = epoch_order(tagged, config, rng)
    assert len(order) == 10
    assert int(np.sum(order == 0)) == 5


def test_checkpoint_round_trip(tmp_path, corpus, tiny_predictor, mel_config):
    run = train_rate_predictor(corpus, tiny_predictor, epochs=1, seed=0)
    path = tmp_path / "rate.ckpt"
    save_rate_predictor(path, run, {"config_hash": "abc"})
    loaded = load_rate_predictor(path, mel_config)
    assert loaded.step == run.step and loaded.losses == run.losses
    mels = [ex.mel for ex in corpus[:3]]
    np.testing.assert_allclose(predict_proba(loaded.model, mels), predict_proba(run.model, mels), atol=1e-6)


def test_resume_continues_step_count(tmp_path, corpus, tiny_predictor, mel_config):
    run = train_rate_predictor(corpus, tiny_predictor, epochs=1, seed=0)
    save_rate_predictor(tmp_path / "rate.ckpt", run)
    previous = load_rate_predictor(tmp_path / "rate.ckpt", mel_config, with_optimizer=True)
    resumed = train_rate_predictor(corpus, tiny_predictor, epochs=1, seed=1, resume=previous)
    assert resumed.step == 2 * run.step
    assert resumed.losses[:1] == run.losses
    assert len(resumed.losses) == 2


def test_load_errors(tmp_path, mel_config):
    with pytest.raises(ConfigError):
        load_rate_predictor(tmp_path / "missing.ckpt", mel_config)


def test_load_rejects_a_different_log_floor(tmp_path, corpus, tiny_predictor, mel_config):
    run = train_rate_predictor(corpus, tiny_predictor, epochs=1, seed=0)
    save_rate_predictor(tmp_path / "rate.ckpt", run)
    with pytest.raises(ConfigMismatch) as excinfo:
        load_rate_predictor(tmp_path / "rate.ckpt", replace(mel_config, log_floor=-5.0))
    assert excinfo.value.exit_code == 4
    assert excinfo.value.details["config"] == -5.0


def test_load_rate_examples(tmp_path, corpus, mel_config):
    lines = []
    for ex in corpus[:2]:
        save_mel(tmp_path / "mels" / f"{ex.utt_id}.mel", ex.mel)
        lines.append(json.dumps({"utt_id": ex.utt_id, "mel": f"mels/{ex.utt_id}.mel", "rate": ex.true_rate, "granularity": "syllable", "lang": "en"}))
    (tmp_path / "rate.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    loaded = load_rate_examples(tmp_path / "rate.jsonl", mel_config)
    assert [ex.true_rate for ex in loaded] == [1.0, 2.0]
    assert loaded[0].mel.data.tobytes() == corpus[0].mel.data.tobytes()

    (tmp_path / "bad.jsonl").write_text(json.dumps({"mel": "mels/syn00000.mel"}) + "\n", encoding="utf-8")
    with pytest.raises(InvalidDataset):
        load_rate_examples(tmp_path / "bad.jsonl", mel_config)


@pytest.mark.slow
def test_synthetic_rates_are_learnable(mel_config):
    config = PredictorConfig.desk()
    specs = sample_rate_specs(2400, seed=0, noise_level=0.1)
    corpus = generate_synthetic_rate_corpus(specs, seed=0, mel_config=mel_config)
    train, heldout = corpus[:2000], corpus[2000:]
    assert len(heldout) == 400
    run = train_rate_predictor(train, config, epochs=config.epochs, seed=0)
    assert run.losses[-1] < run.losses[0]
    assert bin_accuracy(run.model, heldout, tolerance=1) >= 0.9
