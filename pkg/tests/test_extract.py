import json
import math
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from circuitdoc.errors import GeneratorError
from circuitdoc.extract import (
    Corpus,
    GeneratorExhausted,
    Query,
    RecordingGenerator,
    ScriptedGenerator,
    SubprocessGenerator,
    TranscriptGenerator,
    build_prompt,
    collect_by_priority,
    iro_run,
    iro_step,
    po_search,
    retrieve,
    score_documents,
)
from circuitdoc.layout import BlockCategory, LayoutBlock, PriorityTable


def oracle_scores(query, docs):
    """Smoothed tf-idf cosine computed from scratch (idf over distinct texts)."""
    tok = lambda s: [w for w in "".join(c if c.isalnum() or c == "_" else " " for c in s.lower()).split()]
    texts = sorted({t for _, t in docs})
    n = len(texts)
    df = Counter(w for t in texts for w in set(tok(t)))
    idf = lambda w: math.log((1 + n) / (1 + df.get(w, 0))) + 1
    def vec(s):
        return {w: c * idf(w) for w, c in Counter(tok(s)).items()}
    q = vec(query)
    out = {}
    for key, text in docs:
        d = vec(text)
        nq = math.sqrt(sum(v * v for v in q.values()))
        nd = math.sqrt(sum(v * v for v in d.values()))
        out[key] = 0.0 if nq == 0 or nd == 0 else sum(q[w] * d.get(w, 0) for w in q) / (nq * nd)
    return out


def test_retrieve_noise_figure():
    corpus = Corpus.from_pairs([("a", "gain is 17"), ("b", "noise figure 2.2")])
    assert retrieve("noise figure", corpus, 1) == ["b"]
    oracle = oracle_scores("noise figure", corpus.docs)
    assert max(oracle, key=oracle.get) == "b"


def test_retrieve_empty_corpus():
    assert retrieve("anything", Corpus(()), 3) == []


def test_identical_text_scores_one():
    docs = [("a", "ka band limiter with pin diodes"), ("b", "low noise amplifier gain"), ("c", "pin")]
    corpus = Corpus.from_pairs(docs)
    scores = score_documents(docs[1][1], corpus)
    assert scores["b"] == pytest.approx(1.0)
    assert retrieve(docs[1][1], corpus, 1) == ["b"]


def test_ties_broken_by_key():
    corpus = Corpus.from_pairs([("z", "same words"), ("a", "same words"), ("m", "other")])
    assert retrieve("same", corpus, 2) == ["a", "z"]


def test_k_validation_and_duplicate_keys():
    with pytest.raises(ValueError):
        retrieve("q", Corpus(()), 0)
    with pytest.raises(ValueError):
        Corpus.from_pairs([("a", "x"), ("a", "y")])


_words = st.sampled_from("gain noise figure limiter pin diode bias voltage amplifier band ka 17 db".split())
_docs = st.lists(st.lists(_words, min_size=1, max_size=8).map(" ".join), min_size=1, max_size=6)


@given(_docs, st.lists(_words, min_size=1, max_size=4).map(" ".join))
def test_scores_match_oracle(texts, query):
    docs = [(f"d{i}", t) for i, t in enumerate(texts)]
    got = score_documents(query, Corpus.from_pairs(docs))
    want = oracle_scores(query, docs)
    for key in want:
        assert got[key] == pytest.approx(want[key], abs=1e-12)


@given(_docs, st.lists(_words, min_size=1, max_size=4).map(" ".join), st.integers(1, 3))
def test_ranking_invariant_under_duplicating_unretrieved_doc(texts, query, k):
    docs = [(f"d{i}", t) for i, t in enumerate(texts)]
    corpus = Corpus.from_pairs(docs)
    top = retrieve(query, corpus, k)
    outside = [key for key, _ in docs if key not in top]
    if not outside:
        return
    text = dict(docs)[outside[0]]
    bigger = Corpus.from_pairs(docs + [("zz_copy", text)])
    assert retrieve(query, bigger, k) == top


# ----------------------------------------------------------------- IRO

CORPUS = Corpus.from_pairs([
    ("abs", "The LNA gain is 17 dB over 30-38 GHz."),
    ("des", "Capacitors C1=0.02 pF and C2=0.07 pF set the match."),
    ("res", "Measured noise figure 2.2 dB."),
])


def test_first_iteration_query_is_q_alone():
    gen = ScriptedGenerator(["y1"])
    y, keys, query_text, prompt = iro_step(Query("gain"), "", CORPUS, gen, k=1)
    assert query_text == "gain" and keys == ["abs"] and y == "y1"
    assert prompt == "Context:\nThe LNA gain is 17 dB over 30-38 GHz.\n\nQuestion: gain\nAnswer:"


def test_previous_output_prefixed():
    gen = ScriptedGenerator(["y"])
    _, _, query_text, _ = iro_step(Query("gain"), "17 dB", CORPUS, gen, k=1)
    assert query_text == "17 dB\ngain"


def test_k_larger_than_corpus_uses_everything():
    gen = ScriptedGenerator(["y"])
    _, keys, _, prompt = iro_step(Query("gain"), "", CORPUS, gen, k=10)
    assert sorted(keys) == ["abs", "des", "res"]
    for _, text in CORPUS.docs:
        assert text in prompt


def test_echo_generator_first_output():
    class Echo:
        def generate(self, prompt):
            return prompt.split("Context:\n", 1)[1].split("\n\nQuestion:", 1)[0]
    y, keys, _, _ = iro_step(Query("noise figure"), "", CORPUS, Echo(), k=1)
    assert keys == ["res"] and y == CORPUS.text("res")


def test_t1_single_call():
    gen = ScriptedGenerator(["only"])
    state = iro_run(Query("gain"), CORPUS, gen, T=1)
    assert gen.prompts and len(gen.prompts) == 1 and state.outputs == ["only"]


def test_t3_transcript():
    calls = []

    def counting_retriever(text, corpus, k):
        calls.append(text)
        return retrieve(text, corpus, k)

    gen = ScriptedGenerator(["s1", "s2", "s3"])
    state = iro_run(Query("gain"), CORPUS, gen, T=3, k=2, retriever=counting_retriever)
    assert state.outputs == ["s1", "s2", "s3"]
    assert calls == ["gain", "s1\ngain", "s2\ngain"] == state.queries
    assert len(gen.prompts) == 3 and state.t == 3 and not state.stopped_early


def test_early_stop_on_repeat():
    gen = ScriptedGenerator(["same", "same", "never"])
    state = iro_run(Query("gain"), CORPUS, gen, T=3)
    assert state.outputs == ["same", "same"] and state.stopped_early and len(gen.prompts) == 2


def test_generator_failure_carries_iteration():
    gen = ScriptedGenerator(["one"])
    with pytest.raises(GeneratorError) as err:
        iro_run(Query("gain"), CORPUS, gen, T=3)
    assert err.value.iteration == 2
    assert isinstance(err.value.__cause__, GeneratorExhausted)


def test_client_bug_becomes_generator_error():
    class Broken:
        def generate(self, prompt):
            raise RuntimeError("boom")
    with pytest.raises(GeneratorError, match="iteration 1"):
        iro_run(Query("gain"), CORPUS, Broken(), T=2)


def test_query_must_be_nonblank():
    with pytest.raises(ValueError):
        Query("   ")
    with pytest.raises(ValueError):
        iro_run(Query("q"), CORPUS, ScriptedGenerator([]), T=0)


def test_transcript_replay_and_prompt_check(tmp_path):
    prompt = build_prompt(["abs"], CORPUS, "gain")
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"turns": [
        {"request": {"prompt": prompt, "seed": 0}, "response": {"text": "17 dB"}},
        {"request": {}, "response": {"text": "17 dB"}},
    ]}))
    state = iro_run(Query("gain"), CORPUS, TranscriptGenerator.load(path), T=3, k=1)
    assert state.outputs == ["17 dB", "17 dB"]
    bad = TranscriptGenerator([{"request": {"prompt": "other"}, "response": {"text": "x"}}])
    with pytest.raises(GeneratorError, match="iteration 1"):
        iro_run(Query("gain"), CORPUS, bad, T=1, k=1)


def test_recording_generator_round_trips_as_transcript():
    rec = RecordingGenerator(ScriptedGenerator(["a", "b"]), seed=3)
    iro_run(Query("gain"), CORPUS, rec, T=2)
    replay = TranscriptGenerator(rec.turns)
    state = iro_run(Query("gain"), CORPUS, replay, T=2)
    assert state.outputs == ["a", "b"]


def test_subprocess_generator(tmp_path):
    script = tmp_path / "gen.py"
    script.write_text("import json,sys\nreq=json.load(sys.stdin)\nprint(json.dumps({'text': str(len(req['prompt']))}))\n")
    import sys
    gen = SubprocessGenerator([sys.executable, str(script)], seed=1)
    assert gen.generate("abcd") == "4"
    failing = SubprocessGenerator([sys.executable, "-c", "import sys; sys.exit(1)"])
    with pytest.raises(GeneratorError):
        failing.generate("x")


# ------------------------------------------------------------------ PO

def _blk(i, label, text):
    return LayoutBlock(f"b{i}", "d", 1, (0, i, 10, i + 1), BlockCategory.TEXT, text, label)


TABLE = PriorityTable((("Abstract", 1), ("Circuit Design", 2), ("Measurement Results", 3)), default_rank=9)


def test_po_prefers_abstract():
    blocks = [
        _blk(0, "Measurement Results", "NF: 2.6 dB"),
        _blk(1, "Introduction", "nothing"),
        _blk(2, "Abstract", "NF: 2.2 dB"),
    ]
    res = po_search(blocks, TABLE, "NF")
    assert res.record.value == 2.2 and res.record.source_block == "b2"
    assert res.probes == 1 and [r for _, r in res.visited] == [1]


def test_po_absent_probes_everything():
    blocks = [_blk(i, lab, "no numbers") for i, lab in enumerate(["Abstract", "Appendix", "Circuit Design"])]
    res = po_search(blocks, TABLE, "NF")
    assert res.record is None and res.probes == 3


def test_po_two_rank1_blocks_hit_in_second():
    blocks = [_blk(0, "Abstract", "text"), _blk(1, "Abstract", "R1=70 Ω"), _blk(2, "Circuit Design", "R1=71 Ω")]
    res = po_search(blocks, TABLE, "R1")
    assert res.probes == 2 and res.record.value == 70.0


_labels = st.sampled_from(["Abstract", "Circuit Design", "Measurement Results", "Introduction", "Appendix"])


@given(st.lists(st.tuples(_labels, st.booleans()), min_size=1, max_size=12))
def test_po_never_descends_early(spec):
    blocks = [_blk(i, lab, "X1=1 V" if hit else "none") for i, (lab, hit) in enumerate(spec)]
    res = po_search(blocks, TABLE, "X1")
    ranks = [r for _, r in res.visited]
    assert ranks == sorted(ranks)
    if res.record is not None:
        hit_rank = ranks[-1]
        higher = [b for b, (lab, _) in zip(blocks, spec) if TABLE and _rank(lab) < hit_rank]
        assert all(b.block_id in {v for v, _ in res.visited} for b in higher)
    else:
        assert res.probes == len(blocks)


def _rank(label):
    return dict(TABLE.entries).get(label, TABLE.default_rank)


def test_collect_prefers_higher_priority_duplicates():
    blocks = [_blk(0, "Introduction", "C1=9.9 pF"), _blk(1, "Circuit Design", "C1=0.02 pF, C2=0.07 pF")]
    recs = {r.name: r for r in collect_by_priority(blocks, TABLE)}
    assert recs["C1"].value == 2e-14 and recs["C1"].source_block == "b1"
    assert set(recs) == {"C1", "C2"}
