"""Break-label scheme, markup parsing/rendering, phrasing stats, pass rate.

The markup convention: an annotated utterance repeats the source words in
order; a standalone ``#`` token marks a phonetic pause (IP) at the junction
after the preceding word, a standalone ``/`` marks a sentence boundary (SB).
Every unmarked junction, including the utterance-final one, carries the
default accent-phrase label (AP). An utterance of n words therefore has
exactly n labeled junctions.

Markers must be whitespace-delimited tokens of their own: ``word#`` is a
placement failure, not an alteration. Validation compares word sequences,
not raw strings, so whitespace drift in generator output is harmless.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

from .corpus import Utterance, tokenize
from .errors import (
    AnnotationFailure,
    ContractViolation,
    MisplacedMarker,
    ParseError,
    TextAltered,
    UnknownSymbol,
    ValidationError,
)


class BreakLabel(str, enum.Enum):
    AP = "AP"  # accent phrase: unmarked junction
    IP = "IP"  # intonation phrase: "#"
    SB = "SB"  # sentence boundary: "/"

    def __str__(self):
        return self.value


MARKER_TO_LABEL = {"#": BreakLabel.IP, "/": BreakLabel.SB}
LABEL_TO_MARKER = {BreakLabel.IP: "#", BreakLabel.SB: "/"}
LABEL_ORDER = (BreakLabel.AP, BreakLabel.IP, BreakLabel.SB)

_MARKER_CHARS = set("#/")


@dataclass(frozen=True)
class LabelSequence:
    labels: tuple[BreakLabel, ...]

    def __post_init__(self):
        if len(self.labels) < 1:
            raise ValidationError("label sequence must be non-empty")
        object.__setattr__(self, "labels", tuple(BreakLabel(l) for l in self.labels))

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, i):
        return self.labels[i]


@dataclass(frozen=True)
class AnnotatorKind:
    """One of "H-A", "H-T", or "llm:<config-digest>"."""

    tag: str

    HUMAN_AUDIO = "H-A"
    HUMAN_TEXT = "H-T"

    def __post_init__(self):
        if self.tag in (self.HUMAN_AUDIO, self.HUMAN_TEXT):
            return
        if self.tag.startswith("llm:") and len(self.tag) > 4:
            return
        raise ValidationError(
            f"annotator tag must be 'H-A', 'H-T' or 'llm:<digest>', got {self.tag!r}"
        )

    @property
    def is_llm(self):
        return self.tag.startswith("llm:")

    @classmethod
    def llm(cls, config_digest: str):
        return cls(f"llm:{config_digest}")

    def __str__(self):
        return self.tag


@dataclass(frozen=True)
class AnnotatedUtterance:
    utterance_id: str
    labels: LabelSequence
    annotator: AnnotatorKind


@dataclass
class AnnotationSet:
    """All labeled utterances from a single annotator kind."""

    annotator: AnnotatorKind
    entries: dict[str, LabelSequence] = field(default_factory=dict)

    def add(self, utterance_id: str, labels: LabelSequence):
        if utterance_id in self.entries:
            raise ValidationError(f"duplicate annotation for {utterance_id!r}")
        self.entries[utterance_id] = labels

    def __len__(self):
        return len(self.entries)

    def __contains__(self, utterance_id):
        return utterance_id in self.entries


def parse_annotation(utterance: Utterance, annotated: str) -> LabelSequence:
    """Parse break markup back into a label sequence.

    Raises TextAltered if the word sequence (markers removed) differs from the
    source, MisplacedMarker for leading/doubled/glued markers, UnknownSymbol
    for standalone runs of reserved characters like ``##``.
    """
    words = utterance.words
    labels: list[BreakLabel | None] = [None] * len(words)
    pos = -1  # index of the last matched source word

    for tok in tokenize(annotated):
        label = MARKER_TO_LABEL.get(tok)
        if label is not None:
            if pos < 0:
                raise MisplacedMarker(
                    f"marker {tok!r} before the first word",
                    utterance_id=utterance.id,
                )
            if labels[pos] is not None:
                raise MisplacedMarker(
                    f"consecutive markers after word {words[pos]!r}",
                    utterance_id=utterance.id,
                )
            labels[pos] = label
            continue
        if _MARKER_CHARS.issuperset(tok):
            raise UnknownSymbol(
                f"unrecognized marker token {tok!r}", utterance_id=utterance.id
            )
        pos += 1
        if pos >= len(words):
            raise TextAltered(
                f"extra word {tok!r} beyond the source text",
                utterance_id=utterance.id,
            )
        if tok != words[pos]:
            stripped = tok.rstrip("#/")
            if stripped == words[pos]:
                raise MisplacedMarker(
                    f"marker glued to word: {tok!r}", utterance_id=utterance.id
                )
            raise TextAltered(
                f"word {pos + 1} is {tok!r}, expected {words[pos]!r}",
                utterance_id=utterance.id,
            )

    if pos != len(words) - 1:
        raise TextAltered(
            f"annotated text has {pos + 1} words, source has {len(words)}",
            utterance_id=utterance.id,
        )
    return LabelSequence(tuple(l if l is not None else BreakLabel.AP for l in labels))


def render_annotation(utterance: Utterance, labels: LabelSequence) -> str:
    """Inverse of parse_annotation: words with markers re-inserted."""
    words = utterance.words
    if len(labels) != len(words):
        raise ContractViolation(
            f"utterance {utterance.id!r}: {len(words)} words but "
            f"{len(labels)} labels"
        )
    parts = []
    for word, label in zip(words, labels):
        parts.append(word)
        marker = LABEL_TO_MARKER.get(label)
        if marker:
            parts.append(marker)
    return " ".join(parts)


@dataclass
class PhrasingStats:
    """Mean and population std of per-utterance label percentages."""

    mean: dict[BreakLabel, float]
    std: dict[BreakLabel, float]
    utterance_count: int

    def to_dict(self):
        return {
            "utterance_count": self.utterance_count,
            "mean": {str(k): v for k, v in self.mean.items()},
            "std": {str(k): v for k, v in self.std.items()},
        }


def phrasing_stats(annotations: AnnotationSet) -> PhrasingStats:
    """Distribution of break labels per utterance, averaged over the set."""
    if not annotations.entries:
        raise ValidationError("cannot compute stats for an empty annotation set")
    per_label = {label: [] for label in LABEL_ORDER}
    for labels in annotations.entries.values():
        n = len(labels)
        counts = {label: 0 for label in LABEL_ORDER}
        for label in labels:
            counts[label] += 1
        for label in LABEL_ORDER:
            per_label[label].append(100.0 * counts[label] / n)

    m = len(per_label[BreakLabel.AP])
    mean = {label: sum(vals) / m for label, vals in per_label.items()}
    std = {
        label: math.sqrt(sum((v - mean[label]) ** 2 for v in vals) / m)
        for label, vals in per_label.items()
    }
    return PhrasingStats(mean=mean, std=std, utterance_count=m)


@dataclass
class ValidationReport:
    total_outputs: int
    passed: int
    failures: list[tuple[str, str]]  # (utterance_id, failure kind)
    soft_warnings: int = 0  # parses missing an utterance-final "/"

    @property
    def pass_rate(self) -> float:
        return 100.0 * self.passed / self.total_outputs

    def to_dict(self):
        return {
            "total_outputs": self.total_outputs,
            "passed": self.passed,
            "pass_rate": self.pass_rate,
            "soft_warnings": self.soft_warnings,
            "failures": [
                {"utterance_id": uid, "kind": kind} for uid, kind in self.failures
            ],
        }

    def table(self) -> str:
        lines = [
            f"outputs        {self.total_outputs}",
            f"passed         {self.passed}",
            f"pass rate      {self.pass_rate:.2f}%",
            f"soft warnings  {self.soft_warnings}",
        ]
        if self.failures:
            lines.append("failures:")
            for uid, kind in self.failures:
                lines.append(f"  {uid}  {kind}")
        return "\n".join(lines)


def pass_rate(utterances, raw_outputs) -> ValidationReport:
    """Validate raw generator outputs against their source utterances.

    An output passes iff parse_annotation succeeds. A passing parse whose
    final junction is not SB is counted as a soft warning (the generator
    dropped the utterance-final boundary marker).
    """
    if len(utterances) != len(raw_outputs):
        raise ContractViolation(
            f"{len(utterances)} utterances but {len(raw_outputs)} outputs"
        )
    if not raw_outputs:
        raise ValidationError("no outputs to validate")
    passed = 0
    soft = 0
    failures = []
    for utt, raw in zip(utterances, raw_outputs):
        try:
            labels = parse_annotation(utt, raw)
        except AnnotationFailure as exc:
            failures.append((utt.id, exc.kind))
            continue
        passed += 1
        if labels[len(labels) - 1] is not BreakLabel.SB:
            soft += 1
    return ValidationReport(
        total_outputs=len(raw_outputs),
        passed=passed,
        failures=failures,
        soft_warnings=soft,
    )


# ---------------------------------------------------------------------------
# Annotation file I/O: JSONL with utterance_id, annotator, annotated, labels.
# Readers accept either "annotated" (needs the corpus) or "labels"; writers
# emit both when the corpus is available.


def load_annotations(path, corpus=None) -> list[AnnotationSet]:
    """Read an annotation JSONL file into one AnnotationSet per annotator tag.

    ``corpus``: utterance list or id->Utterance map, required only when a
    record carries markup ("annotated") but no "labels" array.
    """
    by_id = _as_index(corpus)
    sets: dict[str, AnnotationSet] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            try:
                uid = record["utterance_id"]
                tag = record["annotator"]
            except KeyError as exc:
                raise ParseError(f"missing field {exc}", line=lineno) from exc
            if "labels" in record:
                labels = LabelSequence(tuple(record["labels"]))
            elif "annotated" in record:
                if by_id is None or uid not in by_id:
                    raise ValidationError(
                        f"record for {uid!r} has markup only; a corpus with "
                        "that utterance is required to parse it"
                    )
                labels = parse_annotation(by_id[uid], record["annotated"])
            else:
                raise ParseError(
                    "record carries neither 'labels' nor 'annotated'", line=lineno
                )
            sets.setdefault(tag, AnnotationSet(AnnotatorKind(tag))).add(uid, labels)
    return list(sets.values())


def load_annotation_set(path, corpus=None) -> AnnotationSet:
    """Like load_annotations, but the file must hold exactly one annotator."""
    sets = load_annotations(path, corpus)
    if len(sets) != 1:
        tags = ", ".join(str(s.annotator) for s in sets) or "none"
        raise ValidationError(f"expected one annotator in file, found: {tags}")
    return sets[0]


def save_annotations(annotation_set: AnnotationSet, path, corpus=None):
    by_id = _as_index(corpus)
    with open(path, "w", encoding="utf-8") as fh:
        for uid, labels in annotation_set.entries.items():
            record = {
                "utterance_id": uid,
                "annotator": str(annotation_set.annotator),
                "labels": [str(l) for l in labels],
            }
            if by_id is not None and uid in by_id:
                record["annotated"] = render_annotation(by_id[uid], labels)
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _as_index(corpus):
    if corpus is None:
        return None
    if isinstance(corpus, dict):
        return corpus
    return {u.id: u for u in corpus}
