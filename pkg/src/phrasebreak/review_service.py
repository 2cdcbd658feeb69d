"""Local HTTP service for blinded human review of text-annotation pairs.

Evaluators see the text and its break markup but never who produced it; the
annotator tag stays server-side. Judgments go to an append-only JSONL journal
that is fsync'd before the request is acknowledged, so an acknowledged
verdict survives a process restart and replay restores each session's cursor.

State directory layout:
    sessions.jsonl   one record per created session (includes blinded pairs)
    judgments.jsonl  one judgment (or abstention) per line, append-only
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotation import render_annotation
from .errors import ValidationError
from .metrics import Judgment, human_score


@dataclass
class ReviewPair:
    pair_id: str
    utterance_id: str
    language: str
    text: str
    annotated: str
    annotator: str  # server-side only; never serialized to evaluators

    def payload(self):
        return {
            "pair_id": self.pair_id,
            "text": self.text,
            "annotated": self.annotated,
            "language": self.language,
        }


@dataclass
class ReviewSession:
    session_id: str
    evaluator_id: str
    pairs: list[ReviewPair]
    created_at: float
    cursor: int = 0

    @property
    def done(self):
        return self.cursor >= len(self.pairs)


def make_pairs(corpus, annotation_sets) -> list[ReviewPair]:
    """Pool pairs across annotator kinds. Pair ids are opaque digests so the
    id itself cannot leak the annotator."""
    index = {u.id: u for u in corpus}
    pairs = []
    for aset in annotation_sets:
        tag = str(aset.annotator)
        for uid, labels in aset.entries.items():
            utt = index.get(uid)
            if utt is None:
                continue
            pair_id = hashlib.sha256(f"{tag}\x00{uid}".encode()).hexdigest()[:16]
            pairs.append(
                ReviewPair(
                    pair_id=pair_id,
                    utterance_id=uid,
                    language=utt.language,
                    text=utt.text,
                    annotated=render_annotation(utt, labels),
                    annotator=tag,
                )
            )
    return pairs


class ReviewStore:
    """Sessions plus the judgment journal, replayed from disk on startup."""

    def __init__(self, state_dir, pair_source=()):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.sessions_path = self.state_dir / "sessions.jsonl"
        self.journal_path = self.state_dir / "judgments.jsonl"
        self.pair_source = list(pair_source)
        self.sessions: dict[str, ReviewSession] = {}
        self.judgments: list[dict] = []
        self._write_lock = threading.Lock()
        self._replay()

    def _replay(self):
        if self.sessions_path.exists():
            with open(self.sessions_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    self.sessions[rec["session_id"]] = ReviewSession(
                        session_id=rec["session_id"],
                        evaluator_id=rec["evaluator_id"],
                        created_at=rec["created_at"],
                        pairs=[ReviewPair(**p) for p in rec["pairs"]],
                    )
        if self.journal_path.exists():
            with open(self.journal_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    self.judgments.append(rec)
                    session = self.sessions.get(rec.get("session_id", ""))
                    if session is not None:
                        session.cursor += 1

    def _append(self, path, record):
        with self._write_lock:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def create_session(self, evaluator_id, seed) -> ReviewSession:
        if not self.pair_source:
            raise ValidationError("no review pairs configured")
        pairs = list(self.pair_source)
        random.Random(seed).shuffle(pairs)  # interleaves annotator kinds
        session = ReviewSession(
            session_id=uuid.uuid4().hex[:12],
            evaluator_id=evaluator_id,
            pairs=pairs,
            created_at=time.time(),
        )
        self.sessions[session.session_id] = session
        self._append(
            self.sessions_path,
            {
                "session_id": session.session_id,
                "evaluator_id": session.evaluator_id,
                "created_at": session.created_at,
                "pairs": [vars(p) for p in session.pairs],
            },
        )
        return session

    def next_pair(self, session_id):
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        if session.done:
            return session, None
        return session, session.pairs[session.cursor]

    def submit(self, session_id, pair_id, verdict):
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        if verdict not in ("acceptable", "unacceptable", "abstain"):
            raise ValidationError(f"unknown verdict {verdict!r}")
        if any(
            j["pair_id"] == pair_id and j["session_id"] == session_id
            for j in self.judgments
        ):
            raise DuplicateJudgment(pair_id)
        if session.done:
            raise ValidationError("session already complete")
        current = session.pairs[session.cursor]
        if pair_id != current.pair_id:
            raise ValidationError(
                f"pair {pair_id!r} is not the session's current pair"
            )
        record = {
            "session_id": session_id,
            "pair_id": pair_id,
            "evaluator_id": session.evaluator_id,
            "verdict": verdict,
            "judged_at": time.time(),
        }
        self._append(self.journal_path, record)  # durable before the ack
        self.judgments.append(record)
        session.cursor += 1
        return record

    def _annotator_of(self, pair_id):
        for session in self.sessions.values():
            for pair in session.pairs:
                if pair.pair_id == pair_id:
                    return pair
        return None

    def score_report(self, group="annotator", annotator=None, language=None):
        """Human score per group, abstentions excluded from the denominator."""
        grouped: dict[str, list[Judgment]] = {}
        for rec in self.judgments:
            if rec["verdict"] == "abstain":
                continue
            pair = self._annotator_of(rec["pair_id"])
            if pair is None:
                continue
            if annotator and pair.annotator != annotator:
                continue
            if language and pair.language != language:
                continue
            if group == "annotator":
                key = pair.annotator
            elif group == "language":
                key = pair.language
            elif group == "evaluator":
                key = rec["evaluator_id"]
            else:
                raise ValidationError(f"unknown grouping {group!r}")
            grouped.setdefault(key, []).append(
                Judgment(
                    pair_id=rec["pair_id"],
                    evaluator_id=rec["evaluator_id"],
                    verdict=rec["verdict"],
                )
            )
        if not grouped:
            raise ValidationError("no judgments match the filter")
        return {key: human_score(js) for key, js in grouped.items()}


class DuplicateJudgment(ValidationError):
    pass


class CreateSessionBody(BaseModel):
    evaluator_id: str
    seed: int = 0


class JudgmentBody(BaseModel):
    pair_id: str
    verdict: str


def create_app(store: ReviewStore, ui_dir=None) -> FastAPI:
    app = FastAPI(title="phrasebreak review")

    @app.post("/api/sessions")
    def create_session(body: CreateSessionBody):
        try:
            session = store.create_session(body.evaluator_id, body.seed)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "session_id": session.session_id,
            "evaluator_id": session.evaluator_id,
            "total_pairs": len(session.pairs),
        }

    @app.get("/api/sessions/{session_id}/next")
    def next_pair(session_id: str):
        try:
            session, pair = store.next_pair(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        body = {
            "session_id": session_id,
            "judged": session.cursor,
            "total": len(session.pairs),
            "done": pair is None,
        }
        if pair is not None:
            body["pair"] = pair.payload()
        return body

    @app.post("/api/sessions/{session_id}/judgments")
    def submit_judgment(session_id: str, body: JudgmentBody):
        try:
            record = store.submit(session_id, body.pair_id, body.verdict)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        except DuplicateJudgment:
            raise HTTPException(status_code=409, detail="pair already judged")
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        session = store.sessions[session_id]
        return {
            "ok": True,
            "judged": session.cursor,
            "total": len(session.pairs),
            "done": session.done,
        }

    @app.get("/api/score")
    def score(group: str = "annotator", annotator: str = None, language: str = None):
        try:
            scores = store.score_report(
                group=group, annotator=annotator, language=language
            )
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"group": group, "scores": scores}

    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
