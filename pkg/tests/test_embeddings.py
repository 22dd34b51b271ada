import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragdesk.embeddings import DEFAULT_DIM, HashedBagEmbedder, RemoteEmbedder, is_empty_embedding


def cosine(a, b):
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def test_default_dim():
    assert HashedBagEmbedder().dim == DEFAULT_DIM == 256


def test_determinism_bitwise():
    e = HashedBagEmbedder()
    a = e.embed_text("the quarterly inventory report")
    b = e.embed_text("the quarterly inventory report")
    assert a.dtype == np.float32
    assert np.array_equal(a, b)


def test_repeated_token_is_parallel_after_normalization():
    e = HashedBagEmbedder()
    assert cosine(e.embed_text("alpha alpha"), e.embed_text("alpha")) == pytest.approx(1.0)


def test_related_text_scores_above_unrelated():
    # Frozen from the hashed-bag oracle computed ahead of the build:
    # cos("inventory report", "inventory report q3") = 0.816496...,
    # cos("inventory report", "zebra") = 0.0 (no shared buckets at dim 256).
    e = HashedBagEmbedder()
    q = e.embed_text("inventory report")
    related = cosine(q, e.embed_text("inventory report q3"))
    unrelated = cosine(q, e.embed_text("zebra"))
    assert related == pytest.approx(0.8164966, abs=1e-6)
    assert unrelated == pytest.approx(0.0, abs=1e-9)
    assert related > unrelated


def test_empty_text_is_flagged_zero_vector():
    e = HashedBagEmbedder()
    vec = e.embed_text("")
    assert is_empty_embedding(vec)
    assert float(np.linalg.norm(vec)) == 0.0
    assert not is_empty_embedding(e.embed_text("word"))


def test_punctuation_only_text_is_empty_too():
    assert is_empty_embedding(HashedBagEmbedder().embed_text("!!! --- ???"))


def test_batch_empty_list():
    assert HashedBagEmbedder().embed_batch([]) == []


def test_batch_matches_single_calls():
    e = HashedBagEmbedder()
    texts = ["first text", "second text", "third text"]
    batch = e.embed_batch(texts)
    for text, vec in zip(texts, batch):
        assert np.array_equal(vec, e.embed_text(text))


def test_batch_flags_empty_positions():
    e = HashedBagEmbedder()
    batch = e.embed_batch(["real words", "", "more words"])
    assert [is_empty_embedding(v) for v in batch] == [False, True, False]


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=200))
def test_properties_determinism_norm_and_batch(text):
    e = HashedBagEmbedder(dim=64)
    vec = e.embed_text(text)
    assert vec.shape == (64,)
    assert np.all(np.isfinite(vec))
    assert np.array_equal(vec, e.embed_text(text))
    assert np.array_equal(vec, e.embed_batch([text])[0])
    norm = float(np.linalg.norm(vec))
    if is_empty_embedding(vec):
        assert norm == 0.0
    else:
        assert abs(norm - 1.0) < 1e-6


def test_remote_embedder_protocol():
    import httpx

    def handler(request: httpx.Request) -> httpx.Response:
        payload = request.read().decode()
        import json

        texts = json.loads(payload)["texts"]
        return httpx.Response(200, json={"vectors": [[float(len(t))] * 4 for t in texts]})

    e = RemoteEmbedder("http://embed.test/v1", dim=4, transport=httpx.MockTransport(handler))
    out = e.embed_batch(["ab", "abc"])
    assert np.array_equal(out[0], np.array([2.0] * 4, dtype=np.float32))
    assert np.array_equal(out[1], np.array([3.0] * 4, dtype=np.float32))


def test_remote_embedder_rejects_wrong_dim():
    import httpx

    transport = httpx.MockTransport(lambda req: httpx.Response(200, json={"vectors": [[1.0, 2.0]]}))
    e = RemoteEmbedder("http://embed.test/v1", dim=4, transport=transport)
    with pytest.raises(ValueError):
        e.embed_text("x")
