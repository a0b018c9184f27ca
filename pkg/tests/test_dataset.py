"""Dataset pipeline: criteria, pair building, noise mixing, JSONL round trip."""

import json

import pytest

from structfuzz.corpus import Corpus, Seed
from structfuzz.coverage import NoveltyVerdict
from structfuzz.dataset import (
    BuildResult,
    DatasetError,
    FinetunePair,
    build_pairs,
    detect_valuable,
    export_pairs,
    import_pairs,
    load_archive,
)


def test_detect_valuable_priority():
    assert detect_valuable(2, 0, False) == ("new_path",)
    assert detect_valuable(0, 3, False) == ("hitcount_change",)
    # new edges shadow bucket changes so the two labels stay disjoint
    assert detect_valuable(2, 3, False) == ("new_path",)
    assert detect_valuable(0, 0, True) == ("crash",)
    assert detect_valuable(1, 0, True) == ("new_path", "crash")
    assert detect_valuable(0, 2, True) == ("hitcount_change", "crash")
    assert detect_valuable(0, 0, False) == ()


def small_corpus():
    corpus = Corpus()
    corpus.admit(Seed(1, b"root payload", "initial"), NoveltyVerdict(5, 0, (1,)))
    corpus.admit(
        Seed(2, b"child via llm", "llm", parent_id=1, format_tag="CHUNKFMT"),
        NoveltyVerdict(2, 0, (9,)),
    )
    corpus.admit(
        Seed(3, b"bucket child", "classic", parent_id=2, format_tag="CHUNKFMT"),
        NoveltyVerdict(0, 1),
    )
    corpus.admit(
        Seed(4, b"crashing child", "classic", parent_id=1, caused_crash=True),
        NoveltyVerdict(0, 0),
    )
    return corpus


def test_build_pairs_contents():
    result = build_pairs(small_corpus(), noise_ratio=0.0)
    assert result.real_pairs == 3
    assert result.noise_pairs == 0
    by_child = {p.mutated_hex: p for p in result.pairs}
    llm_pair = by_child[b"child via llm".hex()]
    assert llm_pair.original_hex == b"root payload".hex()
    assert llm_pair.criteria == ("new_path",)
    assert llm_pair.format_tag == "CHUNKFMT"
    assert not llm_pair.is_noise
    assert llm_pair.original_hex in llm_pair.prompt
    assert llm_pair.mutated_hex in llm_pair.prompt
    assert "CHUNKFMT" in llm_pair.prompt
    assert by_child[b"bucket child".hex()].criteria == ("hitcount_change",)
    assert by_child[b"crashing child".hex()].criteria == ("crash",)


def test_initial_seeds_make_no_pairs():
    corpus = Corpus()
    corpus.admit(Seed(1, b"alone", "initial"), NoveltyVerdict(3, 0, (1,)))
    result = build_pairs(corpus)
    assert result.pairs == [] and result.real_pairs == 0


def test_noise_ratio_bounds():
    for bad in (-0.1, 0.51, 1.0):
        with pytest.raises(DatasetError):
            build_pairs(small_corpus(), noise_ratio=bad)


def test_noise_pair_count_and_shape():
    result = build_pairs(small_corpus(), noise_ratio=0.5, rng_seed=3)
    assert result.real_pairs == 3
    assert result.noise_pairs == 2  # ceil(0.5 * 3)
    noise = [p for p in result.pairs if p.is_noise]
    assert len(noise) == 2
    parents = {p.original_hex for p in result.pairs if not p.is_noise}
    for pair in noise:
        assert pair.criteria == ()
        assert pair.original_hex in parents
        assert pair.mutated_hex  # havoc output is never empty


def test_noise_is_deterministic_per_seed():
    a = build_pairs(small_corpus(), noise_ratio=0.5, rng_seed=11)
    b = build_pairs(small_corpus(), noise_ratio=0.5, rng_seed=11)
    assert a.pairs == b.pairs


def test_gate_skips_oversized_pairs():
    corpus = Corpus()
    corpus.admit(Seed(1, b"x" * 40, "initial"), NoveltyVerdict(1, 0, (1,)))
    corpus.admit(
        Seed(2, b"y" * 40, "classic", parent_id=1), NoveltyVerdict(1, 0, (2,))
    )
    corpus.admit(Seed(3, b"z" * 2, "classic", parent_id=1), NoveltyVerdict(1, 0, (3,)))
    result = build_pairs(corpus, max_hex_len=100)
    assert result.skipped_gate == 1  # the 40+40 byte pair wants 160 hex chars
    assert result.real_pairs == 1
    assert result.pairs[0].mutated_hex == (b"z" * 2).hex()


def test_exclude_by_format_tag():
    result = build_pairs(small_corpus(), exclude=("chunkfmt",))
    assert result.excluded == 2
    assert result.real_pairs == 1  # only the untagged crasher remains
    assert result.pairs[0].criteria == ("crash",)


def test_dull_archived_seeds_are_skipped(tmp_path):
    # hand-written archive containing an admitted seed with nothing new
    corpus_dir = tmp_path / "corpus"
    corpus_dir.mkdir()
    rows = [
        {"id": 1, "origin": "initial", "parent_id": None, "found_at": 0.0,
         "format_tag": "RAW", "caused_crash": False, "new_edges": 3, "new_buckets": 0},
        {"id": 2, "origin": "classic", "parent_id": 1, "found_at": 0.1,
         "format_tag": "RAW", "caused_crash": False, "new_edges": 0, "new_buckets": 0},
    ]
    with open(corpus_dir / "index.jsonl", "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    (corpus_dir / "id_000001,src_initial,parent_none").write_bytes(b"a")
    (corpus_dir / "id_000002,src_classic,parent_1").write_bytes(b"b")
    result = build_pairs(load_archive(tmp_path))
    assert result.real_pairs == 0


def test_noise_with_empty_parent_pool():
    corpus = Corpus()
    corpus.admit(Seed(1, b"", "initial"), NoveltyVerdict(1, 0, (1,)))
    corpus.admit(Seed(2, b"kid", "classic", parent_id=1), NoveltyVerdict(1, 0, (2,)))
    result = build_pairs(corpus, noise_ratio=0.5)
    assert result.real_pairs == 1
    assert result.noise_pairs == 0  # no non-empty parent to havoc


def test_export_import_roundtrip(tmp_path):
    result = build_pairs(small_corpus(), noise_ratio=0.5, rng_seed=1)
    path = tmp_path / "pairs.jsonl"
    assert export_pairs(result.pairs, path) == len(result.pairs)
    assert import_pairs(path) == result.pairs


def test_export_field_order_is_fixed(tmp_path):
    result = build_pairs(small_corpus())
    path = tmp_path / "pairs.jsonl"
    export_pairs(result.pairs, path)
    for line in path.read_text().splitlines():
        assert list(json.loads(line)) == [
            "format_tag",
            "criteria",
            "is_noise",
            "prompt",
            "original_hex",
            "mutated_hex",
        ]


def test_import_rejects_bad_records(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"format_tag": "RAW"}\n')
    with pytest.raises(DatasetError, match=rf"{path}:1"):
        import_pairs(path)
    path.write_text("not json at all\n")
    with pytest.raises(DatasetError, match=":1"):
        import_pairs(path)


def test_import_skips_blank_lines(tmp_path):
    result = build_pairs(small_corpus())
    path = tmp_path / "pairs.jsonl"
    export_pairs(result.pairs, path)
    padded = tmp_path / "padded.jsonl"
    padded.write_text("\n" + path.read_text() + "\n\n")
    assert import_pairs(padded) == result.pairs
