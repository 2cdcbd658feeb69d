import json

import pytest
from fastapi.testclient import TestClient

from phrasebreak.annotation import AnnotationSet, AnnotatorKind, LabelSequence, BreakLabel
from phrasebreak.corpus import Utterance
from phrasebreak.review_service import ReviewStore, create_app, make_pairs

from conftest import make_set


@pytest.fixture
def corpus():
    return [
        Utterance(id=f"u{i}", language="en", text=f"sentence number {i} ends here.")
        for i in range(4)
    ]


@pytest.fixture
def annotation_sets(corpus):
    labels = {u.id: ["AP", "AP", "AP", "AP", "SB"] for u in corpus}
    return [
        make_set("H-A", labels),
        make_set("H-T", labels),
        make_set("llm:abc123def456", labels),
    ]


@pytest.fixture
def store(tmp_path, corpus, annotation_sets):
    pairs = make_pairs(corpus, annotation_sets)
    return ReviewStore(tmp_path / "state", pair_source=pairs)


@pytest.fixture
def client(store):
    return TestClient(create_app(store))


def create_session(client, evaluator="eva", seed=3):
    response = client.post(
        "/api/sessions", json={"evaluator_id": evaluator, "seed": seed}
    )
    assert response.status_code == 200
    return response.json()


class TestSessions:
    def test_pools_all_annotator_kinds(self, client):
        session = create_session(client)
        assert session["total_pairs"] == 12  # 3 sets x 4 utterances

    def test_same_seed_same_order(self, tmp_path, corpus, annotation_sets):
        orders = []
        for run in range(2):
            pairs = make_pairs(corpus, annotation_sets)
            store = ReviewStore(tmp_path / f"s{run}", pair_source=pairs)
            session = store.create_session("eva", seed=5)
            orders.append([p.pair_id for p in session.pairs])
        assert orders[0] == orders[1]

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/nope/next").status_code == 404


class TestJudgeFlow:
    def test_sequential_flow_and_scores(self, client, store):
        session = create_session(client)
        sid = session["session_id"]
        for i in range(12):
            nxt = client.get(f"/api/sessions/{sid}/next").json()
            assert nxt["done"] is False
            assert nxt["judged"] == i
            verdict = "acceptable" if i < 9 else "unacceptable"
            ack = client.post(
                f"/api/sessions/{sid}/judgments",
                json={"pair_id": nxt["pair"]["pair_id"], "verdict": verdict},
            )
            assert ack.status_code == 200
            assert ack.json()["judged"] == i + 1
        assert client.get(f"/api/sessions/{sid}/next").json()["done"] is True

        scores = client.get("/api/score").json()["scores"]
        pooled = store.score_report(group="evaluator")
        assert pooled["eva"] == 75.0
        assert set(scores) == {"H-A", "H-T", "llm:abc123def456"}

    def test_duplicate_judgment_conflict(self, client):
        session = create_session(client)
        sid = session["session_id"]
        pair = client.get(f"/api/sessions/{sid}/next").json()["pair"]
        body = {"pair_id": pair["pair_id"], "verdict": "acceptable"}
        assert client.post(f"/api/sessions/{sid}/judgments", json=body).status_code == 200
        assert client.post(f"/api/sessions/{sid}/judgments", json=body).status_code == 409

    def test_out_of_order_rejected(self, client):
        session = create_session(client)
        sid = session["session_id"]
        response = client.post(
            f"/api/sessions/{sid}/judgments",
            json={"pair_id": "not-the-cursor-pair", "verdict": "acceptable"},
        )
        assert response.status_code == 400

    def test_abstention_excluded_from_denominator(self, client, store):
        session = create_session(client)
        sid = session["session_id"]
        verdicts = ["acceptable", "abstain", "unacceptable"]
        for verdict in verdicts:
            pair = client.get(f"/api/sessions/{sid}/next").json()["pair"]
            client.post(
                f"/api/sessions/{sid}/judgments",
                json={"pair_id": pair["pair_id"], "verdict": verdict},
            )
        pooled = store.score_report(group="evaluator")
        assert pooled["eva"] == 50.0  # 1 of 2 non-abstentions


class TestBlinding:
    def test_no_annotator_tag_in_any_payload(self, client):
        session = create_session(client)
        sid = session["session_id"]
        tags = (b"H-A", b"H-T", b"llm:")
        for _ in range(12):
            response = client.get(f"/api/sessions/{sid}/next")
            for tag in tags:
                assert tag not in response.content
            pair = response.json()["pair"]
            ack = client.post(
                f"/api/sessions/{sid}/judgments",
                json={"pair_id": pair["pair_id"], "verdict": "acceptable"},
            )
            for tag in tags:
                assert tag not in ack.content

    def test_pair_ids_opaque(self, store):
        for pair in store.pair_source:
            assert "H-A" not in pair.pair_id
            assert "H-T" not in pair.pair_id
            assert "llm" not in pair.pair_id


class TestDurability:
    def test_restart_restores_cursor(self, tmp_path, corpus, annotation_sets):
        state = tmp_path / "state"
        pairs = make_pairs(corpus, annotation_sets)
        store = ReviewStore(state, pair_source=pairs)
        client = TestClient(create_app(store))
        sid = create_session(client)["session_id"]
        for _ in range(3):
            pair = client.get(f"/api/sessions/{sid}/next").json()["pair"]
            client.post(
                f"/api/sessions/{sid}/judgments",
                json={"pair_id": pair["pair_id"], "verdict": "acceptable"},
            )

        # simulate a process restart: fresh store over the same state dir
        revived = ReviewStore(state, pair_source=pairs)
        session = revived.sessions[sid]
        assert session.cursor == 3
        client2 = TestClient(create_app(revived))
        nxt = client2.get(f"/api/sessions/{sid}/next").json()
        assert nxt["judged"] == 3
        assert nxt["pair"]["pair_id"] == session.pairs[3].pair_id

    def test_journal_is_line_delimited_and_complete(self, tmp_path, corpus, annotation_sets):
        state = tmp_path / "state"
        store = ReviewStore(state, pair_source=make_pairs(corpus, annotation_sets))
        client = TestClient(create_app(store))
        sid = create_session(client)["session_id"]
        for _ in range(5):
            pair = client.get(f"/api/sessions/{sid}/next").json()["pair"]
            client.post(
                f"/api/sessions/{sid}/judgments",
                json={"pair_id": pair["pair_id"], "verdict": "unacceptable"},
            )
        lines = (state / "judgments.jsonl").read_text().splitlines()
        assert len(lines) == 5
        for line in lines:
            record = json.loads(line)
            assert {"pair_id", "evaluator_id", "verdict", "judged_at"} <= record.keys()


class TestScoreConsistency:
    def test_report_matches_raw_journal(self, tmp_path, corpus, annotation_sets):
        from phrasebreak.metrics import Judgment, human_score

        state = tmp_path / "state"
        store = ReviewStore(state, pair_source=make_pairs(corpus, annotation_sets))
        client = TestClient(create_app(store))
        sid = create_session(client)["session_id"]
        for i in range(12):
            pair = client.get(f"/api/sessions/{sid}/next").json()["pair"]
            client.post(
                f"/api/sessions/{sid}/judgments",
                json={
                    "pair_id": pair["pair_id"],
                    "verdict": "acceptable" if i % 3 else "unacceptable",
                },
            )
        raw = [
            json.loads(line)
            for line in (state / "judgments.jsonl").read_text().splitlines()
        ]
        recomputed = human_score(
            Judgment(pair_id=r["pair_id"], evaluator_id=r["evaluator_id"],
                     verdict=r["verdict"])
            for r in raw
        )
        pooled = store.score_report(group="evaluator")["eva"]
        assert pooled == recomputed
