"""Corpus ingestion, tokenization, and reproducible dataset splits.

Corpus files are UTF-8 JSON lines, one utterance per line:

    {"id": "u001", "language": "en", "text": "Hello there.", "source": "news"}

Tokenization is whitespace splitting with punctuation left attached, so
rendering an annotation and parsing it back is an exact round trip.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass

from .errors import ParseError, ValidationError

RESERVED_SYMBOLS = ("#", "/")

_LANGUAGE_RE = re.compile(r"^[a-z]{2}$")


@dataclass(frozen=True)
class Utterance:
    id: str
    language: str
    text: str
    source: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValidationError("utterance id must be non-empty")
        if not _LANGUAGE_RE.match(self.language):
            raise ValidationError(
                f"utterance {self.id!r}: language must be a lowercase "
                f"two-letter code, got {self.language!r}"
            )
        if not self.text.strip():
            raise ValidationError(f"utterance {self.id!r}: text is empty")
        for tok in tokenize(self.text):
            if tok in RESERVED_SYMBOLS:
                raise ValidationError(
                    f"utterance {self.id!r}: reserved symbol {tok!r} appears "
                    "as a standalone token in text"
                )

    @property
    def words(self) -> list[str]:
        return tokenize(self.text)


def tokenize(text: str) -> list[str]:
    """Split on whitespace runs; punctuation stays attached to its word."""
    return text.split()


def load_corpus(path) -> list[Utterance]:
    """Read a JSONL corpus file. Raises on malformed lines or duplicate ids."""
    utterances = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(record, dict):
                raise ParseError("record is not an object", line=lineno)
            missing = {"id", "language", "text"} - record.keys()
            if missing:
                raise ParseError(
                    f"missing fields: {', '.join(sorted(missing))}", line=lineno
                )
            utt = Utterance(
                id=str(record["id"]),
                language=record["language"],
                text=record["text"],
                source=record.get("source", ""),
            )
            if utt.id in seen:
                raise ValidationError(f"duplicate utterance id {utt.id!r}")
            seen.add(utt.id)
            utterances.append(utt)
    return utterances


def save_corpus(utterances, path):
    with open(path, "w", encoding="utf-8") as fh:
        for utt in utterances:
            record = {"id": utt.id, "language": utt.language, "text": utt.text}
            if utt.source:
                record["source"] = utt.source
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


@dataclass
class DatasetSplit:
    train_ids: list[str]
    valid_ids: list[str]
    test_ids: list[str]
    ratios: tuple[float, float, float]
    seed: int

    def to_dict(self):
        return {
            "ratios": list(self.ratios),
            "seed": self.seed,
            "train_ids": self.train_ids,
            "valid_ids": self.valid_ids,
            "test_ids": self.test_ids,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            train_ids=list(d["train_ids"]),
            valid_ids=list(d["valid_ids"]),
            test_ids=list(d["test_ids"]),
            ratios=tuple(d["ratios"]),
            seed=int(d["seed"]),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def split_dataset(corpus, ratios, seed) -> DatasetSplit:
    """Deterministic shuffled split.

    Shuffle uses Python's Mersenne Twister (``random.Random(seed)``), then the
    shuffled list is cut contiguously at cumulative-floor boundaries:
    train ends at floor(n * r_train), validation at
    floor(n * (r_train + r_valid)), test takes the remainder. Each size is
    within one element of its exact fractional share.
    """
    if not corpus:
        raise ValidationError("cannot split an empty corpus")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValidationError("ratios must be three non-negative fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)}")

    ids = [u.id for u in corpus]
    rng = random.Random(seed)
    rng.shuffle(ids)

    n = len(ids)
    # epsilon guards the floor against float error (0.85 + 0.075 != 0.925)
    cut1 = int(n * ratios[0] + 1e-6)
    cut2 = int(n * (ratios[0] + ratios[1]) + 1e-6)
    return DatasetSplit(
        train_ids=ids[:cut1],
        valid_ids=ids[cut1:cut2],
        test_ids=ids[cut2:],
        ratios=ratios,
        seed=seed,
    )
