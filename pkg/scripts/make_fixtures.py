#!/usr/bin/env python3
"""Build the shipped trilingual fixture corpus and its reference labels.

Reference labels are derived here, independently of the runtime parser and
mock backend, by a direct per-word mapping: terminal punctuation -> SB,
comma/semicolon -> IP, utterance-final word -> SB, everything else -> AP.
Run from the repo root; output goes to fixtures/.
"""

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from phrasebreak.annotation import AnnotationSet, AnnotatorKind, LabelSequence
from phrasebreak.corpus import Utterance, save_corpus
from phrasebreak.annotation import save_annotations

CLAUSES = {
    "en": [
        "the weather turned cold last night",
        "she opened the old wooden door",
        "nobody expected such a quiet answer",
        "the train left the station early",
        "he read the letter twice",
        "a small dog followed them home",
        "the meeting lasted three long hours",
        "we walked along the river bank",
        "the lights went out suddenly",
        "they sold the house in spring",
        "music drifted from the open window",
        "the children laughed at the story",
    ],
    "fr": [
        "le vent soufflait sur la colline",
        "elle a fermé la fenêtre doucement",
        "personne ne connaissait la réponse",
        "le train est parti très tôt",
        "il a relu la lettre deux fois",
        "un petit chien les suivait partout",
        "la réunion a duré trois heures",
        "nous avons marché le long du fleuve",
        "les lumières se sont éteintes",
        "ils ont vendu la maison au printemps",
        "la musique venait de la fenêtre ouverte",
        "les enfants riaient de l'histoire",
    ],
    "es": [
        "el viento soplaba sobre la colina",
        "ella cerró la ventana despacio",
        "nadie sabía la respuesta correcta",
        "el tren salió muy temprano",
        "leyó la carta dos veces",
        "un perro pequeño los seguía",
        "la reunión duró tres horas",
        "caminamos junto al río",
        "las luces se apagaron de repente",
        "vendieron la casa en primavera",
        "la música venía de la ventana abierta",
        "los niños se reían del cuento",
    ],
}

TERMINAL = ".!?"
PAUSE = ",;"


def make_text(rng, language):
    """One utterance: 1-2 sentences, each 1-3 clauses joined by , or ;."""
    sentences = []
    for _ in range(rng.choice([1, 1, 2])):
        n_clauses = rng.choice([1, 2, 2, 3])
        clauses = rng.sample(CLAUSES[language], n_clauses)
        joiner = rng.choice([", ", ", ", "; "])
        sentence = joiner.join(clauses)
        sentence = sentence[0].upper() + sentence[1:]
        sentence += rng.choice([".", ".", ".", "!", "?"])
        sentences.append(sentence)
    return " ".join(sentences)


def reference_labels(text):
    words = text.split()
    labels = []
    for i, word in enumerate(words):
        last = word[-1]
        if last in TERMINAL:
            labels.append("SB")
        elif last in PAUSE:
            labels.append("IP")
        elif i == len(words) - 1:
            labels.append("SB")
        else:
            labels.append("AP")
    return labels


def main():
    rng = random.Random(20240817)
    out_dir = Path(__file__).resolve().parents[1] / "fixtures"
    out_dir.mkdir(exist_ok=True)

    corpus = []
    counts = {"en": 34, "fr": 33, "es": 33}
    seen = set()
    i = 0
    for language, count in counts.items():
        for _ in range(count):
            i += 1
            text = make_text(rng, language)
            while text in seen:  # texts must be unique for cache accounting
                text = make_text(rng, language)
            seen.add(text)
            corpus.append(
                Utterance(
                    id=f"fx{i:03d}",
                    language=language,
                    text=text,
                    source="fixture",
                )
            )
    save_corpus(corpus, out_dir / "trilingual_100.jsonl")

    reference = AnnotationSet(AnnotatorKind("H-T"))
    for utt in corpus:
        reference.add(utt.id, LabelSequence(tuple(reference_labels(utt.text))))
    save_annotations(
        reference, out_dir / "trilingual_100.reference.jsonl", corpus=corpus
    )
    print(f"wrote {len(corpus)} utterances and reference labels to {out_dir}")


if __name__ == "__main__":
    main()
