"""Junction-level phrase-break classifier.

A feature-hashing multinomial logistic regression trained by seeded SGD.
It stands in for a fine-tuned transformer at desk scale: same splits, same
epoch-selection protocol, same macro-F1 readout, fully deterministic, and
language-agnostic (hashed features, no vocabulary files).
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

import numpy as np

from .annotation import BreakLabel, LABEL_ORDER, AnnotationSet, LabelSequence
from .errors import ValidationError

HASH_DIM = 2**18
MODEL_FORMAT_VERSION = 1

_hash_memo: dict[str, int] = {}


def hash_feature(feature: str) -> int:
    """Stable hash of a feature string into [0, 2^18). blake2s, documented."""
    idx = _hash_memo.get(feature)
    if idx is None:
        digest = hashlib.blake2s(feature.encode("utf-8"), digest_size=8).digest()
        idx = int.from_bytes(digest, "big") % HASH_DIM
        _hash_memo[feature] = idx
    return idx


TERMINAL = set(".!?…。！？")
PAUSE = set(",;、，；")
_CLOSERS = "\"')»”’]}"


def _punct_class(word: str) -> str:
    bare = word.rstrip(_CLOSERS)
    last = bare[-1] if bare else ""
    if last in TERMINAL:
        return "terminal"
    if last in PAUSE:
        return "pause"
    if not last.isalnum():
        return "other"
    return "none"


def junction_features(words, junction: int) -> list[str]:
    """Feature strings for the boundary after ``words[junction]``."""
    n = len(words)
    w = words[junction]
    nxt = words[junction + 1] if junction + 1 < n else "</s>"
    feats = [
        "bias",
        f"w={w.lower()}",
        f"next={nxt.lower()}",
        f"punct={_punct_class(w)}",
        f"pos={min(3, 4 * junction // n)}",
    ]
    for ln in (1, 2, 3):
        feats.append(f"suf{ln}={w[-ln:].lower()}")
        feats.append(f"nsuf{ln}={nxt[-ln:].lower()}")
    if w[:1].isupper():
        feats.append("cap")
    if nxt[:1].isupper():
        feats.append("ncap")
    if junction == n - 1:
        feats.append("final")
    return feats


def featurize(utterance, junction: int) -> list[int]:
    """Sorted, de-duplicated hashed feature indices for one junction."""
    words = utterance.words
    if junction >= len(words):
        raise ValidationError(
            f"junction {junction} out of range for {len(words)} words"
        )
    return sorted({hash_feature(f) for f in junction_features(words, junction)})


@dataclass
class Hyperparams:
    learning_rate: float = 0.1
    epochs: int = 30
    l2: float = 1e-4
    seed: int = 42

    def to_dict(self):
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "l2": self.l2,
            "seed": self.seed,
        }


@dataclass
class Model:
    weights: np.ndarray  # (3 labels, HASH_DIM)
    hyper: Hyperparams
    annotation_source: str = ""
    split_digest: str = ""

    def save(self, path):
        header = {
            "format_version": MODEL_FORMAT_VERSION,
            "dim": HASH_DIM,
            "labels": [str(l) for l in LABEL_ORDER],
            "hyper": self.hyper.to_dict(),
            "annotation_source": self.annotation_source,
            "split_digest": self.split_digest,
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header).encode() + b"\n")
            np.save(fh, self.weights)

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode())
            if header.get("format_version") != MODEL_FORMAT_VERSION:
                raise ValidationError(
                    f"unsupported model format version {header.get('format_version')}"
                )
            if header["dim"] != HASH_DIM:
                raise ValidationError("model dimension mismatch")
            weights = np.load(fh)
        return cls(
            weights=weights,
            hyper=Hyperparams(**header["hyper"]),
            annotation_source=header.get("annotation_source", ""),
            split_digest=header.get("split_digest", ""),
        )


@dataclass
class TrainReport:
    epoch_loss: list[float] = field(default_factory=list)
    epoch_valid_macro_f1: list[float] = field(default_factory=list)
    selected_epoch: int = -1
    test_macro_f1: float | None = None
    test_per_label_f1: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "epoch_loss": self.epoch_loss,
            "epoch_valid_macro_f1": self.epoch_valid_macro_f1,
            "selected_epoch": self.selected_epoch,
            "test_macro_f1": self.test_macro_f1,
            "test_per_label_f1": {str(k): v for k, v in self.test_per_label_f1.items()},
        }


_LABEL_INDEX = {label: i for i, label in enumerate(LABEL_ORDER)}


def _softmax(scores):
    scores = scores - scores.max()
    e = np.exp(scores)
    return e / e.sum()


def _build_samples(corpus_index, annotation_set):
    samples = []
    for uid, labels in annotation_set.entries.items():
        utt = corpus_index.get(uid)
        if utt is None:
            raise ValidationError(f"annotated utterance {uid!r} missing from corpus")
        words = utt.words
        if len(labels) != len(words):
            raise ValidationError(f"label length mismatch for {uid!r}")
        for j, label in enumerate(labels):
            idx = np.array(
                sorted({hash_feature(f) for f in junction_features(words, j)}),
                dtype=np.int64,
            )
            samples.append((idx, _LABEL_INDEX[label]))
    return samples


def dataset_loss(weights, samples, l2):
    """Mean cross-entropy plus L2 penalty; used for epoch reporting and the
    finite-difference gradient check."""
    total = 0.0
    for idx, y in samples:
        scores = weights[:, idx].sum(axis=1)
        p = _softmax(scores)
        total += -np.log(max(p[y], 1e-300))
    return total / len(samples) + 0.5 * l2 * float((weights**2).sum())


def dataset_gradient(weights, samples, l2):
    """Analytic gradient of ``dataset_loss`` (full batch)."""
    grad = l2 * weights.copy()
    for idx, y in samples:
        scores = weights[:, idx].sum(axis=1)
        p = _softmax(scores)
        p[y] -= 1.0
        grad[:, idx] += p[:, None] / len(samples)
    return grad


def train(train_set, valid_set, corpus, hyper: Hyperparams = None):
    """Seeded SGD with per-sample L2 on touched weights.

    The epoch whose model scores the highest validation macro-F1 is kept
    (ties go to the earliest epoch).
    """
    hyper = hyper or Hyperparams()
    if not train_set.entries or not valid_set.entries:
        raise ValidationError("train and validation sets must be non-empty")
    index = {u.id: u for u in corpus}
    samples = _build_samples(index, train_set)

    present = {y for _, y in samples}
    if len(present) < len(LABEL_ORDER):
        missing = [str(l) for l in LABEL_ORDER if _LABEL_INDEX[l] not in present]
        import logging
        logging.getLogger(__name__).warning(
            "labels absent from training data: %s", ", ".join(missing)
        )

    weights = np.zeros((len(LABEL_ORDER), HASH_DIM))
    report = TrainReport()
    valid_utts = [index[uid] for uid in valid_set.entries]
    rng = random.Random(hyper.seed)
    order = list(range(len(samples)))
    best_f1 = -1.0
    best_weights = weights.copy()

    for epoch in range(hyper.epochs):
        rng.shuffle(order)
        for i in order:
            idx, y = samples[i]
            cols = weights[:, idx]
            p = _softmax(cols.sum(axis=1))
            p[y] -= 1.0
            weights[:, idx] = cols - hyper.learning_rate * (
                p[:, None] + hyper.l2 * cols
            )
        loss = dataset_loss(weights, samples, hyper.l2)
        if not np.isfinite(loss):
            raise ValidationError(f"training diverged at epoch {epoch}: loss={loss}")
        report.epoch_loss.append(float(loss))

        model = Model(weights=weights, hyper=hyper)
        f1 = _validation_macro_f1(model, valid_utts, valid_set)
        report.epoch_valid_macro_f1.append(f1)
        if f1 > best_f1:
            best_f1 = f1
            best_weights = weights.copy()
            report.selected_epoch = epoch

    return Model(weights=best_weights, hyper=hyper), report


def _validation_macro_f1(model, utterances, reference):
    from .metrics import macro_f1

    predicted = AnnotationSet(reference.annotator)
    for utt in utterances:
        predicted.add(utt.id, predict(model, utt))
    _, macro = macro_f1(reference, predicted)
    return macro


def predict(model: Model, utterance) -> LabelSequence:
    """Argmax label per junction; ties break toward AP < IP < SB."""
    words = utterance.words
    labels = []
    for j in range(len(words)):
        idx = featurize(utterance, j)
        scores = model.weights[:, idx].sum(axis=1)
        # np.argmax takes the first maximum, which is exactly the label order.
        labels.append(LABEL_ORDER[int(np.argmax(scores))])
    return LabelSequence(tuple(labels))


def evaluate(model: Model, test_set: AnnotationSet, corpus):
    """Macro and per-label F1 of model predictions against test labels."""
    from .metrics import macro_f1

    if not test_set.entries:
        raise ValidationError("test set is empty")
    index = {u.id: u for u in corpus}
    predicted = AnnotationSet(test_set.annotator)
    for uid in test_set.entries:
        predicted.add(uid, predict(model, index[uid]))
    per_label, macro = macro_f1(test_set, predicted)
    return per_label, macro
