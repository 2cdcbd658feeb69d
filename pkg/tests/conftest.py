import random
import string
from pathlib import Path

import pytest

from phrasebreak.annotation import AnnotationSet, AnnotatorKind, BreakLabel, LabelSequence
from phrasebreak.corpus import Utterance, load_corpus

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "fixtures"

# Word material for random utterance generation, per language character set.
WORD_CHARS = {
    "en": string.ascii_lowercase,
    "fr": string.ascii_lowercase + "éèêàçùœ",
    "es": string.ascii_lowercase + "áéíóúñü",
}
LABELS = (BreakLabel.AP, BreakLabel.IP, BreakLabel.SB)


def random_word(rng, language="en"):
    chars = WORD_CHARS[language]
    word = "".join(rng.choice(chars) for _ in range(rng.randint(1, 9)))
    if rng.random() < 0.2:
        word += rng.choice(".,!?;:")
    return word


def random_utterance(rng, uid="u", language=None):
    language = language or rng.choice(list(WORD_CHARS))
    n = rng.randint(1, 14)
    text = " ".join(random_word(rng, language) for _ in range(n))
    return Utterance(id=uid, language=language, text=text)


def random_labels(rng, n):
    return LabelSequence(tuple(rng.choice(LABELS) for _ in range(n)))


def make_set(tag, entries):
    """entries: {utterance_id: [label names]}"""
    aset = AnnotationSet(AnnotatorKind(tag))
    for uid, labels in entries.items():
        aset.add(uid, LabelSequence(tuple(BreakLabel(l) for l in labels)))
    return aset


@pytest.fixture(scope="session")
def fixture_corpus():
    return load_corpus(FIXTURE_DIR / "trilingual_100.jsonl")


@pytest.fixture(scope="session")
def fixture_reference(fixture_corpus):
    from phrasebreak.annotation import load_annotation_set

    return load_annotation_set(
        FIXTURE_DIR / "trilingual_100.reference.jsonl", corpus=fixture_corpus
    )
