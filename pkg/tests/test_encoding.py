"""Tokenizer, node construction, and the trainable encoder backend."""

import dataclasses

import pytest
import torch

from hopcheck import (
    ArticleInstance,
    ConfigError,
    NodeBatch,
    VocabularyError,
    WordTokenizer,
    build_nodes,
    make_backend,
)
from hopcheck.encoding import TinyBackend, word_split


def small_tokenizer() -> WordTokenizer:
    return WordTokenizer(
        words=("alpha", "beta", "claimword", "gamma", "sp"), num_reserved=4
    )


def small_instance() -> ArticleInstance:
    return ArticleInstance(
        id="t1",
        claim="claimword",
        speaker="sp",
        label="true",
        sentences=("alpha beta", "gamma"),
        evidence_chains=((0,),),
        split="train",
    )


# ---------------------------------------------------------------------------
# tokenizer


def test_special_and_reserved_ids():
    tok = small_tokenizer()
    assert (tok.pad_id, tok.cls_id, tok.sep_id, tok.unk_id) == (0, 1, 2, 3)
    assert tok.reserved_id(0) == 4
    assert tok.reserved_id(3) == 7
    assert tok.encode("alpha") == [8]  # words start after the reserved block
    assert tok.vocab_size == 4 + 4 + 5


def test_reserved_id_range_checked():
    tok = small_tokenizer()
    with pytest.raises(ConfigError, match="reserved"):
        tok.reserved_id(4)
    with pytest.raises(ConfigError):
        tok.reserved_id(-1)


def test_word_split_casefolds_and_separates_punctuation():
    assert word_split("Don't Stop-Now!") == ["don", "'", "t", "stop", "-", "now", "!"]


def test_encode_unknown_words():
    tok = small_tokenizer()
    assert tok.encode("alpha zzz beta") == [8, 3, 9]


def test_from_texts_orders_by_count_then_word():
    tok = WordTokenizer.from_texts(["b b a", "a c"], num_reserved=4)
    assert tok.words == ("a", "b", "c")
    capped = WordTokenizer.from_texts(["b b a", "a c"], max_vocab=1, num_reserved=4)
    assert capped.words == ("a",)


def test_tokenizer_round_trip_and_fingerprint(tmp_path):
    tok = small_tokenizer()
    path = tmp_path / "vocab.json"
    tok.save(path)
    loaded = WordTokenizer.load(path)
    assert loaded.words == tok.words
    assert loaded.fingerprint() == tok.fingerprint()
    other = WordTokenizer(words=("alpha",), num_reserved=4)
    assert other.fingerprint() != tok.fingerprint()
    with pytest.raises(ValueError, match="asset"):
        WordTokenizer.from_dict({"format": "nope"})


# ---------------------------------------------------------------------------
# node construction


def test_build_nodes_layout_oracle():
    batch = build_nodes(small_instance(), small_tokenizer(), max_node_len=16)
    # [summary] claim [sep] speaker [sep] | sentence [sep]
    assert batch.token_ids[0] == (1, 10, 2, 12, 2, 8, 9, 2)
    assert batch.segment_ids[0] == (0, 0, 0, 0, 0, 1, 1, 1)
    assert batch.token_ids[1] == (1, 10, 2, 12, 2, 11, 2)
    assert batch.sentence_indices == (0, 1)
    assert len(batch) == 2


def test_build_nodes_sentence_id_mode():
    batch = build_nodes(
        small_instance(), small_tokenizer(), max_node_len=16, sentence_id_mode=True
    )
    assert batch.token_ids[0] == (1, 10, 2, 12, 2, 4, 8, 9, 2)
    assert batch.token_ids[1][5] == 5  # second sentence gets the next marker
    assert batch.segment_ids[0][5] == 1  # the marker sits in the sentence segment


def test_build_nodes_trims_sentence_tail_first():
    batch = build_nodes(small_instance(), small_tokenizer(), max_node_len=8)
    assert batch.token_ids[0] == (1, 10, 2, 12, 2, 8, 9, 2)  # exactly fits
    trimmed = build_nodes(
        small_instance(), small_tokenizer(), max_node_len=8, sentence_id_mode=True
    )
    # segment A intact; segment B loses its tail separator
    assert trimmed.token_ids[0] == (1, 10, 2, 12, 2, 4, 8, 9)


def test_build_nodes_trims_claim_tail_but_keeps_summary():
    instance = dataclasses.replace(
        small_instance(), claim="alpha beta gamma alpha beta gamma alpha beta gamma"
    )
    batch = build_nodes(instance, small_tokenizer(), max_node_len=8)
    for tokens in batch.token_ids:
        assert len(tokens) == 8
        assert tokens[0] == 1  # summary token survives all trimming


def test_build_nodes_depends_only_on_own_sentence():
    instance = small_instance()
    swapped = dataclasses.replace(instance, sentences=tuple(reversed(instance.sentences)))
    a = build_nodes(instance, small_tokenizer())
    b = build_nodes(swapped, small_tokenizer())
    assert a.token_ids[0] == b.token_ids[1]
    assert a.token_ids[1] == b.token_ids[0]


def test_build_nodes_min_length_enforced():
    with pytest.raises(ConfigError, match="at least 8"):
        build_nodes(small_instance(), small_tokenizer(), max_node_len=7)


def test_node_batch_validation():
    with pytest.raises(ValueError, match="disagree"):
        NodeBatch(token_ids=((1,),), segment_ids=(), sentence_indices=(0,), max_node_len=8)
    with pytest.raises(ValueError, match="disagree"):
        NodeBatch(
            token_ids=((1, 2),), segment_ids=((0,),), sentence_indices=(0,), max_node_len=8
        )
    with pytest.raises(ValueError, match="max_node_len"):
        NodeBatch(
            token_ids=(tuple(range(9)),),
            segment_ids=((0,) * 9,),
            sentence_indices=(0,),
            max_node_len=8,
        )


# ---------------------------------------------------------------------------
# trainable backend


def test_backend_encode_shapes(tokenizer, articles):
    backend = TinyBackend(tokenizer, hidden_size=16, num_layers=1, num_heads=2)
    batch = build_nodes(articles[0], tokenizer)
    reps = backend.encode(batch)
    n = len(articles[0].sentences)
    width = max(len(t) for t in batch.token_ids)
    assert reps.vectors.shape == (n, width, 16)
    assert reps.mask.shape == (n, width)
    assert reps.hidden_size == 16
    torch.testing.assert_close(reps.summaries, reps.vectors[:, 0, :])
    for i, tokens in enumerate(batch.token_ids):
        assert reps.mask[i, : len(tokens)].all()
        assert not reps.mask[i, len(tokens) :].any()


def test_backend_seeded_init_is_bitwise_stable(tokenizer, articles):
    batch = build_nodes(articles[1], tokenizer)
    first = TinyBackend(tokenizer, seed=7).encode(batch)
    second = TinyBackend(tokenizer, seed=7).encode(batch)
    assert torch.equal(first.vectors, second.vectors)
    different = TinyBackend(tokenizer, seed=8).encode(batch)
    assert not torch.equal(first.vectors, different.vectors)


def test_backend_init_preserves_global_rng(tokenizer):
    torch.manual_seed(0)
    expected = torch.rand(4)
    torch.manual_seed(0)
    TinyBackend(tokenizer, seed=99)
    observed = torch.rand(4)
    assert torch.equal(expected, observed)


def test_backend_rejects_foreign_token_ids(tokenizer):
    backend = TinyBackend(tokenizer)
    bad = NodeBatch(
        token_ids=((1, 2), (1, 10 ** 6)),
        segment_ids=((0, 0), (0, 0)),
        sentence_indices=(0, 1),
        max_node_len=8,
    )
    with pytest.raises(VocabularyError, match="node 1, position 1"):
        backend.encode(bad)


def test_backend_rejects_empty_batch(tokenizer):
    empty = NodeBatch(token_ids=(), segment_ids=(), sentence_indices=(), max_node_len=8)
    with pytest.raises(ValueError, match="empty"):
        TinyBackend(tokenizer).encode(empty)


def test_backend_head_divisibility(tokenizer):
    with pytest.raises(ConfigError, match="divisible"):
        TinyBackend(tokenizer, hidden_size=33, num_heads=2)


def test_make_backend_dispatch(tokenizer):
    backend = make_backend("tiny-trainable", tokenizer, hidden_size=16, num_heads=2)
    assert backend.name == "tiny-trainable"
    with pytest.raises(ConfigError, match="requires a tokenizer"):
        make_backend("tiny-trainable")
    with pytest.raises(ConfigError, match="unknown backend"):
        make_backend("enormous")
