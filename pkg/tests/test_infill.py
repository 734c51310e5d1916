import numpy as np
import pytest
import torch

from config import SamplerConfig, TTSConfig
from models.audio import MelSpectrogram
from services.alignment import partition
from services.errors import DegenerateSplit, ShapeError, TextOverflow
from services.infill import (
    FILLER_ID,
    FIRST_CHAR_ID,
    CharVocab,
    InfillCondition,
    InfillCorpus,
    InfillTransformer,
    acoustic_context,
    build_extended_sequence,
    collate_examples,
    infill_forward,
    load_tts,
    make_train_example,
    save_tts,
    synthesize,
    train_tts,
)

from conftest import floor_mel, make_utterance

VOCAB = CharVocab.build(["ab"])
A, B = VOCAB.encode("ab")
F = FILLER_ID


def test_vocab_layout():
    assert (A, B) == (FIRST_CHAR_ID, FIRST_CHAR_ID + 1)
    assert VOCAB.size == FIRST_CHAR_ID + 2
    assert VOCAB.encode("é") == [1 + 0xC3, 1 + 0xA9]
    assert CharVocab.from_dict(VOCAB.to_dict()) == VOCAB


def test_extended_sequence_layout():
    z = build_extended_sequence("ab", 10, 4, VOCAB)
    assert z.ids.tolist() == [F, F, F, F, A, B, F, F, F, F]
    assert len(z) == 10
    full = build_extended_sequence("abab", 4, 0, VOCAB)
    assert F not in full.ids.tolist()
    with pytest.raises(TextOverflow):
        build_extended_sequence("abababa", 10, 5, VOCAB)


def test_overflow_counts_byte_ids_of_unknown_characters():
    assert len(VOCAB.encode("a\u00e9")) == 3
    z = build_extended_sequence("a\u00e9", 5, 2, VOCAB)
    assert z.ids.tolist() == [F, F, A, 1 + 0xC3, 1 + 0xA9]
    with pytest.raises(TextOverflow) as excinfo:
        build_extended_sequence("a\u00e9", 4, 2, VOCAB)
    assert excinfo.value.details == {"text_ids": 3, "target_frames": 2}


def _three_second_utterance():
    return make_utterance([("hello", 0.6), ("there", 1.2), ("my", 1.8), ("friend", 2.6)], 3.0)


def test_train_example_mask_starts_at_boundary_frame(mel_config):
    utt = _three_second_utterance()
    mel = floor_mel(282, mel_config)
    vocab = CharVocab.build(t.text for t in utt.tokens)
    example = make_train_example(utt, partition(utt, 1), mel, vocab)
    assert example.mask.start == 113
    assert example.mask.n_masked == 282 - 113
    assert example.z.ids[:113].tolist() == [F] * 113
    assert example.z.ids[113:113 + 9].tolist() == vocab.encode("my friend")


def test_train_example_never_sees_prompt_text(mel_config):
    utt = _three_second_utterance()
    mel = floor_mel(282, mel_config)
    vocab = CharVocab.build(t.text for t in utt.tokens)
    rng = np.random.default_rng(0)
    corpus = InfillCorpus([(utt, mel)], vocab)
    id_to_char = {i: ch for ch, i in vocab.chars.items()}
    for _ in range(20):
        (example,) = corpus.sample_epoch(rng)
        decoded = "".join(id_to_char.get(i, " ") for i in example.z.ids.tolist() if i != F)
        assert decoded in {"my friend", "friend"}


def _letters(k):
    word = ""
    while True:
        k, digit = divmod(k, 26)
        word = "abcdefghijklmnopqrstuvwxyz"[digit] + word
        if k == 0:
            return "q" + word


def test_corpus_never_conditions_on_prompt_words(mel_config):
    rng = np.random.default_rng(11)
    items, words_by_id, counter = [], {}, 0
    for i in range(100):
        n_words = int(rng.integers(6, 12))
        ends = np.cumsum(rng.uniform(0.4, 0.6, size=n_words))
        words = [_letters(counter + j) for j in range(n_words)]
        counter += n_words
        utt = make_utterance(list(zip(words, ends)), float(ends[-1]) + 0.2, utt_id=f"u{i:03d}")
        words_by_id[utt.utt_id] = words
        items.append((utt, floor_mel(int(utt.total_duration * mel_config.frames_per_second) + 1, mel_config)))
    corpus = InfillCorpus(items)
    id_to_char = {i: ch for ch, i in corpus.vocab.chars.items()}
    seen = 0
    for _ in range(3):
        for example in corpus.sample_epoch(rng):
            words = words_by_id[example.utt_id]
            ids = example.z.ids.tolist()
            assert ids[: example.mask.start] == [F] * example.mask.start
            target = "".join(id_to_char.get(i, " ") for i in ids if i != F).split()
            prompt = words[: len(words) - len(target)]
            assert target == words[len(prompt) :] and prompt
            assert not set(prompt) & set(target)
            seen += 1
    assert seen == 300


def test_degenerate_split(mel_config):
    utt = make_utterance([("a", 0.001), ("b", 2.0)], 2.0)
    with pytest.raises(DegenerateSplit):
        make_train_example(utt, partition(utt, 0), floor_mel(188, mel_config), CharVocab.build(["ab"]))


def test_acoustic_context_zeroes_masked_frames():
    x1 = torch.ones(1, 4, 3)
    mask = torch.tensor([[False, False, True, True]])
    ctx = acoustic_context(x1, mask)
    assert torch.all(ctx[0, :2] == 1) and torch.all(ctx[0, 2:] == 0)


@pytest.fixture
def network(small_mel_config, tiny_tts):
    torch.manual_seed(0)
    return InfillTransformer(small_mel_config.n_mels, VOCAB.size, tiny_tts).eval()


def test_infill_forward_shapes(network, small_mel_config):
    n = small_mel_config.n_mels
    x = torch.randn(12, n)
    z = build_extended_sequence("ab", 12, 6, VOCAB)
    assert infill_forward(network, x, torch.zeros(12, n), z, 0.5).shape == (12, n)
    batch = infill_forward(network, x.repeat(3, 1, 1), torch.zeros(3, 12, n), np.tile(z.ids, (3, 1)), 0.5)
    assert batch.shape == (3, 12, n)
    with pytest.raises(ShapeError):
        infill_forward(network, x, torch.zeros(12, n), z.ids[:10], 0.5)


def test_infill_forward_batch_matches_single(network, small_mel_config):
    n = small_mel_config.n_mels
    gen = torch.Generator().manual_seed(1)
    x = torch.randn(2, 9, n, generator=gen)
    ids = np.tile(build_extended_sequence("ab", 9, 3, VOCAB).ids, (2, 1))
    batch = infill_forward(network, x, torch.zeros_like(x), ids, torch.tensor([0.2, 0.8]))
    single = infill_forward(network, x[1], torch.zeros(9, n), ids[1], 0.8)
    torch.testing.assert_close(batch[1], single, rtol=1e-5, atol=1e-5)


def test_drop_text_keeps_context():
    cond = InfillCondition(torch.ones(2, 3, 4), torch.tensor([[5, 6, 7], [8, 9, 10]]))
    dropped = cond.drop_text(torch.tensor([True, False]))
    assert dropped.text_ids.tolist() == [[F, F, F], [8, 9, 10]]
    assert torch.equal(dropped.context, cond.context)
    assert torch.all(cond.drop_text().text_ids == F)


def test_collate_pads_with_filler(small_mel_config):
    vocab = CharVocab.build(["hi there friend"])
    examples = []
    for n_frames in (60, 80):
        utt = make_utterance([("hi", 0.2), ("there", 0.4), ("friend", n_frames * 64 / 8000)], n_frames * 64 / 8000)
        examples.append(make_train_example(utt, partition(utt, 1), floor_mel(n_frames, small_mel_config), vocab))
    x1, ids, mask, padding = collate_examples(examples)
    assert x1.shape == (2, 80, small_mel_config.n_mels)
    assert torch.all(ids[0, 60:] == F) and torch.all(padding[0, 60:]) and not padding[1].any()
    assert not mask[0, 60:].any()


def _toy_corpus(small_mel_config, n=4, seed=0):
    rng = np.random.default_rng(seed)
    items = []
    for i in range(n):
        duration = 3.0
        words = [("ba", 0.5), ("da", 1.0), ("ga", 1.5), ("ba", 2.0), ("da", 2.5), ("ga", 3.0)]
        utt = make_utterance(words, duration, utt_id=f"toy{i}")
        n_frames = int(duration * 8000 / 64) + 1
        data = rng.normal(-4.0, 1.0, size=(n_frames, small_mel_config.n_mels)).astype(np.float32)
        items.append((utt, MelSpectrogram(data=data, config=small_mel_config)))
    return InfillCorpus(items)


def test_train_tts_is_deterministic(small_mel_config, tiny_tts):
    corpus = _toy_corpus(small_mel_config)
    first = train_tts(corpus, tiny_tts, epochs=2, seed=4)
    second = train_tts(corpus, tiny_tts, epochs=2, seed=4)
    assert first.losses == second.losses
    assert first.step == 4


def test_tts_checkpoint_and_synthesis(tmp_path, small_mel_config, tiny_tts):
    run = train_tts(_toy_corpus(small_mel_config), tiny_tts, epochs=1, seed=0)
    save_tts(tmp_path / "tts.ckpt", run)
    loaded = load_tts(tmp_path / "tts.ckpt", small_mel_config)
    assert loaded.vocab == run.vocab and loaded.step == run.step

    prompt = floor_mel(40, small_mel_config)
    sampler = SamplerConfig(nfe=4, seed=9)
    a = synthesize(loaded.model, loaded.vocab, prompt, "ba da", 1.0, sampler)
    b = synthesize(run.model, run.vocab, prompt, "ba da", 1.0, sampler)
    assert a.n_frames == 125
    assert a.data.tobytes() == b.data.tobytes()
    assert np.all(a.data >= prompt.floor)


def test_synthesize_frame_count_at_default_hop(mel_config, tiny_tts):
    network = InfillTransformer(mel_config.n_mels, VOCAB.size, tiny_tts)
    out = synthesize(network, VOCAB, floor_mel(20, mel_config), "ab", 2.0, SamplerConfig(nfe=2))
    assert out.n_frames == 188


@pytest.mark.slow
def test_toy_infill_loss_halves(small_mel_config):
    config = TTSConfig(n_layers=2, n_heads=4, d_model=64, text_dim=16, conv_pos_kernel=15, batch_size=4, learning_rate=1e-3)
    run = train_tts(_toy_corpus(small_mel_config, n=20), config, epochs=40, seed=0)
    assert run.losses[-1] <= 0.5 * run.losses[0]
    rerun = train_tts(_toy_corpus(small_mel_config, n=20), config, epochs=40, seed=0)
    assert rerun.losses == run.losses
