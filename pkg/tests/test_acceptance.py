"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines alongside the pytest verdicts.
"""

import json
import random
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from phrasebreak.annotation import (
    AnnotationSet,
    AnnotatorKind,
    parse_annotation,
    pass_rate,
    phrasing_stats,
    render_annotation,
)
from phrasebreak.annotation import BreakLabel
from phrasebreak.corpus import Utterance, split_dataset
from phrasebreak.cli import EXIT_OK, main as cli_main
from phrasebreak.metrics import exact_agreement, krippendorff_alpha, macro_f1
from phrasebreak.predictor import (
    Hyperparams,
    dataset_gradient,
    dataset_loss,
    evaluate,
    train,
)
from phrasebreak.prompting import preset_mixes

from conftest import FIXTURE_DIR, LABELS, make_set, random_labels, random_utterance
from oracles import alpha_direct
from test_metrics import random_pair_of_sets
from test_predictor import rule_corpus, subset

CORPUS = str(FIXTURE_DIR / "trilingual_100.jsonl")
REFERENCE = str(FIXTURE_DIR / "trilingual_100.reference.jsonl")


def ok(name):
    print(f"ACCEPTANCE PASS: {name}")


def test_parser_round_trip_10k():
    rng = random.Random(424242)
    start = time.monotonic()
    for i in range(10_000):
        utt = random_utterance(rng, uid=f"rt{i}")
        labels = random_labels(rng, len(utt.words))
        assert tuple(parse_annotation(utt, render_annotation(utt, labels))) == \
            tuple(labels)
    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"round trip took {elapsed:.1f}s"
    ok(f"parser round trip: 10,000 pairs, 0 failures, {elapsed:.2f}s")


def test_pass_rate_oracle_75():
    utts, outputs = [], []
    for i in range(15):
        utts.append(Utterance(id=f"ok{i}", language="en", text="all is well here."))
        outputs.append("all is # well here. /")
    crafted = [
        ("ta1", "all was well here. /"),    # TextAltered: changed word
        ("ta2", "all is well there. /"),    # TextAltered: changed word
        ("mm1", "# all is well here. /"),   # MisplacedMarker: leading marker
        ("mm2", "all is well here. # /"),   # MisplacedMarker: doubled marker
        ("mw1", "all is well"),             # missing word -> TextAltered
    ]
    for uid, out in crafted:
        utts.append(Utterance(id=uid, language="en", text="all is well here."))
        outputs.append(out)
    report = pass_rate(utts, outputs)
    assert report.pass_rate == 75.0
    kinds = dict(report.failures)
    assert kinds["ta1"] == kinds["ta2"] == kinds["mw1"] == "TextAltered"
    assert kinds["mm1"] == kinds["mm2"] == "MisplacedMarker"
    ok("pass-rate oracle: 20 outputs, 5 invalid, pass rate 75.0, kinds correct")


def test_krippendorff_alpha():
    identical_a = make_set("H-A", {"u1": ["AP", "IP", "SB", "AP"]})
    identical_b = make_set("H-T", {"u1": ["AP", "IP", "SB", "AP"]})
    assert krippendorff_alpha(identical_a, identical_b) == 1.0

    hand_a = make_set("H-A", {"u1": ["AP", "AP", "IP", "SB"]})
    hand_b = make_set("H-T", {"u1": ["AP", "IP", "IP", "SB"]})
    assert krippendorff_alpha(hand_a, hand_b) == pytest.approx(2 / 3, abs=1e-9)

    rng = random.Random(31337)
    checked = 0
    for _ in range(1000):
        a, b = random_pair_of_sets(rng, max_items=8)
        pairs = []
        for uid in sorted(set(a.entries) & set(b.entries)):
            pairs.extend(zip(a.entries[uid], b.entries[uid]))
        if len(pairs) < 2:
            continue
        alpha = krippendorff_alpha(a, b)
        assert alpha == pytest.approx(alpha_direct(pairs), abs=1e-9)
        assert -1.0 <= alpha <= 1.0 + 1e-12
        checked += 1
    assert checked > 900
    ok(f"alpha: identity 1.0, hand case 2/3, {checked} brute-force matches, in range")


def test_agreement_and_f1():
    a = make_set("H-A", {"u1": ["AP", "IP", "SB"], "u2": ["AP", "SB"]})
    b = make_set("H-T", {"u1": ["AP", "IP", "SB"], "u2": ["AP", "SB"]})
    assert exact_agreement(a, b) == 100.0
    assert macro_f1(a, b)[1] == 1.0

    rng = random.Random(90210)
    for _ in range(1000):
        x, y = random_pair_of_sets(rng, max_items=12)
        assert macro_f1(x, y)[1] == macro_f1(y, x)[1]
    ok("agreement/F1: identity 100/1.0, macro-F1 symmetric on 1000 pairs")


def test_phrasing_stats():
    stats = phrasing_stats(make_set("H-T", {"u1": ["AP", "IP", "AP", "AP", "AP", "SB"]}))
    assert stats.mean[BreakLabel.AP] == pytest.approx(66.67, abs=0.01)
    assert stats.mean[BreakLabel.IP] == pytest.approx(16.67, abs=0.01)
    assert stats.mean[BreakLabel.SB] == pytest.approx(16.67, abs=0.01)

    rng = random.Random(55)
    for _ in range(100):
        entries = {
            f"u{i}": [str(rng.choice(LABELS)) for _ in range(rng.randint(1, 15))]
            for i in range(rng.randint(1, 12))
        }
        fuzz = phrasing_stats(make_set("H-A", entries))
        assert sum(fuzz.mean.values()) == pytest.approx(100.0, abs=1e-9)
    ok("stats: single-utterance percentages exact, means sum to 100 on fuzz")


def test_split_sizes_and_determinism():
    rng = random.Random(8)
    corpus = [random_utterance(rng, uid=f"u{i}") for i in range(1000)]
    first = split_dataset(corpus, (0.85, 0.075, 0.075), seed=7)
    sizes = (len(first.train_ids), len(first.valid_ids), len(first.test_ids))
    assert sizes == (850, 75, 75)
    assert split_dataset(corpus, (0.85, 0.075, 0.075), seed=7) == first
    ok("split: 1000 at 85:7.5:7.5 -> (850, 75, 75), deterministic")


def test_end_to_end_mock_run(tmp_path, capsys):
    out = tmp_path / "gen"
    start = time.monotonic()
    assert cli_main(["generate", "--corpus", CORPUS, "--backend", "mock",
                     "--out", str(out)]) == EXIT_OK
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"generate took {elapsed:.1f}s"
    report = json.loads((out / "validation_report.json").read_text())
    assert report["pass_rate"] >= 95.0
    capsys.readouterr()
    assert cli_main(["compare", str(out / "annotations.jsonl"), REFERENCE,
                     "--corpus", CORPUS, "--json"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["agreement"] == 100.0
    ok(f"end-to-end mock run: {elapsed:.2f}s, pass rate "
       f"{report['pass_rate']:.1f}, agreement 100 vs rule reference")


def test_predictor_criterion():
    start = time.monotonic()
    corpus, labels = rule_corpus(1000, seed=99)
    split = split_dataset(corpus, (0.8, 0.1, 0.1), seed=42)
    train_args = (
        subset(labels, split.train_ids),
        subset(labels, split.valid_ids),
        corpus,
    )
    model, report = train(*train_args, Hyperparams(seed=42))
    _, test_f1 = evaluate(model, subset(labels, split.test_ids), corpus)
    elapsed = time.monotonic() - start
    assert test_f1 >= 0.95
    assert elapsed < 60.0, f"training took {elapsed:.1f}s"

    model2, _ = train(*train_args, Hyperparams(seed=42))
    assert np.array_equal(model.weights, model2.weights)

    # gradient check on random small instances
    from phrasebreak.predictor import HASH_DIM

    py_rng = random.Random(7)
    np_rng = np.random.default_rng(7)
    for _ in range(3):
        dim = 20
        samples = [
            (np.array(sorted(py_rng.sample(range(dim), py_rng.randint(1, 6)))),
             py_rng.randint(0, 2))
            for _ in range(3)
        ]
        weights = np.zeros((3, HASH_DIM))
        weights[:, :dim] = np_rng.normal(scale=0.5, size=(3, dim))
        grad = dataset_gradient(weights, samples, 1e-3)
        eps = 1e-6
        for _ in range(8):
            r, c = py_rng.randint(0, 2), py_rng.randint(0, dim - 1)
            wp, wm = weights.copy(), weights.copy()
            wp[r, c] += eps
            wm[r, c] -= eps
            numeric = (dataset_loss(wp, samples, 1e-3)
                       - dataset_loss(wm, samples, 1e-3)) / (2 * eps)
            denom = max(abs(numeric), abs(grad[r, c]), 1e-8)
            assert abs(numeric - grad[r, c]) / denom < 1e-5
    ok(f"predictor: test macro-F1 {test_f1:.3f} in {elapsed:.1f}s, "
       "gradients verified, deterministic")


def test_cache_repeat_generate(tmp_path):
    from phrasebreak import llm_client

    cache = str(tmp_path / "cache")
    outs = [tmp_path / "a", tmp_path / "b"]
    calls = {"n": 0}
    original = llm_client.MockBackend.complete

    def counting(self, request, config):
        calls["n"] += 1
        return original(self, request, config)

    llm_client.MockBackend.complete = counting
    try:
        for out in outs:
            assert cli_main(["generate", "--corpus", CORPUS, "--backend", "mock",
                             "--cache-dir", cache, "--out", str(out)]) == EXIT_OK
    finally:
        llm_client.MockBackend.complete = original
    assert calls["n"] == 100  # second run served entirely from cache
    assert (outs[0] / "annotations.jsonl").read_bytes() == \
        (outs[1] / "annotations.jsonl").read_bytes()
    assert (outs[0] / "validation_report.json").read_bytes() == \
        (outs[1] / "validation_report.json").read_bytes()
    ok("cache: warm repeat made zero backend calls, byte-identical outputs")


def test_cross_lingual_presets():
    for target in ("fr", "es"):
        mixes = preset_mixes("en", target)
        assert len(mixes) == 5
        assert all(sum(m.values()) == 16 for m in mixes)
        expected = [
            {target: 16},
            {"en": 4, target: 12},
            {"en": 8, target: 8},
            {"en": 12, target: 4},
            {"en": 16, target: 0},
        ]
        assert mixes == expected
    ok("cross-lingual presets: exactly the five mixes, each summing to 16")


def test_secondary_review_flow(tmp_path):
    from phrasebreak.review_service import ReviewStore, create_app, make_pairs

    corpus = [
        Utterance(id=f"u{i}", language="en", text=f"utterance number {i} here.")
        for i in range(4)
    ]
    labels = {u.id: ["AP", "AP", "AP", "SB"] for u in corpus}
    sets = [make_set("H-A", labels), make_set("H-T", labels),
            make_set("llm:cafe01234567", labels)]
    state = tmp_path / "state"
    pairs = make_pairs(corpus, sets)
    store = ReviewStore(state, pair_source=pairs)
    client = TestClient(create_app(store))
    sid = client.post("/api/sessions",
                      json={"evaluator_id": "eva", "seed": 3}).json()["session_id"]

    restarted = False
    for i in range(12):
        if i == 6 and not restarted:
            # mid-session restart: rebuild service state from disk
            store = ReviewStore(state, pair_source=pairs)
            client = TestClient(create_app(store))
            restarted = True
        response = client.get(f"/api/sessions/{sid}/next")
        for tag in (b"H-A", b"H-T", b"llm:"):
            assert tag not in response.content
        body = response.json()
        assert body["judged"] == i
        verdict = "acceptable" if i < 9 else "unacceptable"
        ack = client.post(
            f"/api/sessions/{sid}/judgments",
            json={"pair_id": body["pair"]["pair_id"], "verdict": verdict},
        )
        assert ack.status_code == 200

    journal = (state / "judgments.jsonl").read_text().splitlines()
    assert len(journal) == 12
    pooled = store.score_report(group="evaluator")
    assert pooled["eva"] == 75.0
    ok("review flow: 12 journal records, human score 75.0, blinded payloads, "
       "restart resumed at the correct cursor")
