"""Evaluation suite: exact agreement, Krippendorff's alpha, macro-F1,
human score, and the few-shot sweep driver.

Units: agreement is utterance-level (a hit only when the full label sequence
matches); alpha and F1 are junction-level, over the junctions shared by both
annotation sets. Utterance-level alpha is available behind a flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .annotation import (
    AnnotationSet,
    AnnotatorKind,
    BreakLabel,
    LABEL_ORDER,
    parse_annotation,
    pass_rate as compute_pass_rate,
)
from .errors import ValidationError


def _shared_ids(a: AnnotationSet, b: AnnotationSet) -> list[str]:
    shared = [uid for uid in a.entries if uid in b.entries]
    if not shared:
        raise ValidationError("annotation sets share no utterance ids")
    for uid in shared:
        if len(a.entries[uid]) != len(b.entries[uid]):
            raise ValidationError(
                f"label length mismatch on shared utterance {uid!r}: "
                f"{len(a.entries[uid])} vs {len(b.entries[uid])}"
            )
    return shared


def exact_agreement(a: AnnotationSet, b: AnnotationSet) -> float:
    """Percentage of shared utterances whose label sequences match exactly."""
    shared = _shared_ids(a, b)
    hits = sum(
        1 for uid in shared if tuple(a.entries[uid]) == tuple(b.entries[uid])
    )
    return 100.0 * hits / len(shared)


def _paired_values(a, b, unit="junction"):
    """Aligned label pairs: one pair per shared junction (or per utterance)."""
    shared = _shared_ids(a, b)
    pairs = []
    for uid in sorted(shared):
        if unit == "utterance":
            pairs.append((tuple(a.entries[uid]), tuple(b.entries[uid])))
        else:
            pairs.extend(zip(a.entries[uid], b.entries[uid]))
    return pairs


def krippendorff_alpha(a: AnnotationSet, b: AnnotationSet, unit="junction") -> float:
    """Nominal two-coder alpha via the coincidence matrix.

    alpha = 1 - D_o / D_e with n = 2m pairable values over m items,
    D_o = sum of off-diagonal coincidences / n and
    D_e = (n^2 - sum_c n_c^2) / (n (n - 1)).
    Returns 1.0 by convention when every value is identical (D_e = 0).
    """
    pairs = _paired_values(a, b, unit=unit)
    if len(pairs) < 2:
        raise ValidationError("need at least 2 pairable items for alpha")

    n = 2 * len(pairs)
    disagreements = sum(1 for va, vb in pairs if va != vb)
    marginals: dict = {}
    for va, vb in pairs:
        marginals[va] = marginals.get(va, 0) + 1
        marginals[vb] = marginals.get(vb, 0) + 1

    d_e = (n * n - sum(c * c for c in marginals.values())) / (n * (n - 1))
    if d_e == 0.0:
        return 1.0  # all values identical; flagged as perfect by convention
    d_o = 2 * disagreements / n
    return 1.0 - d_o / d_e


@dataclass
class ComparisonResult:
    agreement: float
    alpha: float
    per_label_f1: dict[BreakLabel, float]
    macro_f1: float
    compared_utterances: int
    compared_junctions: int

    def to_dict(self):
        return {
            "agreement": self.agreement,
            "alpha": self.alpha,
            "macro_f1": self.macro_f1,
            "per_label_f1": {str(k): v for k, v in self.per_label_f1.items()},
            "compared_utterances": self.compared_utterances,
            "compared_junctions": self.compared_junctions,
        }


def macro_f1(reference: AnnotationSet, prediction: AnnotationSet):
    """Junction-level multiclass F1 per label, macro-averaged.

    Labels with zero support in both sets are excluded from the average so
    short fixtures are not penalized for labels they never use. Per-label F1
    swaps FP and FN under argument exchange, so the macro average is
    symmetric.
    """
    pairs = _paired_values(reference, prediction)
    tp = {label: 0 for label in LABEL_ORDER}
    fp = {label: 0 for label in LABEL_ORDER}
    fn = {label: 0 for label in LABEL_ORDER}
    for ref, pred in pairs:
        if ref == pred:
            tp[ref] += 1
        else:
            fn[ref] += 1
            fp[pred] += 1

    per_label = {}
    for label in LABEL_ORDER:
        support = tp[label] + fp[label] + fn[label]
        if support == 0:
            continue  # label absent from both sets
        per_label[label] = 2 * tp[label] / (2 * tp[label] + fp[label] + fn[label])
    macro = sum(per_label.values()) / len(per_label)
    return per_label, macro


def compare(a: AnnotationSet, b: AnnotationSet) -> ComparisonResult:
    """All pairwise metrics in one shot, for the `compare` workflow."""
    shared = _shared_ids(a, b)
    per_label, macro = macro_f1(a, b)
    return ComparisonResult(
        agreement=exact_agreement(a, b),
        alpha=krippendorff_alpha(a, b),
        per_label_f1=per_label,
        macro_f1=macro,
        compared_utterances=len(shared),
        compared_junctions=sum(len(a.entries[uid]) for uid in shared),
    )


@dataclass(frozen=True)
class Judgment:
    pair_id: str
    evaluator_id: str
    verdict: str  # "acceptable" | "unacceptable"

    def __post_init__(self):
        if self.verdict not in ("acceptable", "unacceptable"):
            raise ValidationError(f"unknown verdict {self.verdict!r}")


def human_score(judgments) -> float:
    """Percentage of pairs judged acceptable in binary expert evaluation."""
    judgments = list(judgments)
    if not judgments:
        raise ValidationError("no judgments to score")
    seen = set()
    for j in judgments:
        key = (j.pair_id, j.evaluator_id)
        if key in seen:
            raise ValidationError(
                f"duplicate judgment for pair {j.pair_id!r} by {j.evaluator_id!r}"
            )
        seen.add(key)
    acceptable = sum(1 for j in judgments if j.verdict == "acceptable")
    return 100.0 * acceptable / len(judgments)


@dataclass
class SweepRow:
    setting: str
    k: int
    mix: dict[str, int]
    reference: str
    pass_rate: float
    agreement: float | None = None
    alpha: float | None = None
    macro_f1: float | None = None
    error: str | None = None

    def to_dict(self):
        return {
            "setting": self.setting,
            "k": self.k,
            "mix": self.mix,
            "reference": self.reference,
            "pass_rate": self.pass_rate,
            "agreement": self.agreement,
            "alpha": self.alpha,
            "macro_f1": self.macro_f1,
            "error": self.error,
        }


@dataclass
class SweepReport:
    rows: list[SweepRow] = field(default_factory=list)

    def write_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.rows:
                fh.write(json.dumps(row.to_dict(), ensure_ascii=False) + "\n")

    def table(self) -> str:
        header = "setting\tk\treference\tpass_rate\tagreement\talpha\tmacro_f1"
        lines = [header]
        for r in self.rows:
            def fmt(x):
                return "-" if x is None else f"{x:.2f}"
            lines.append(
                f"{r.setting}\t{r.k}\t{r.reference}\t{fmt(r.pass_rate)}"
                f"\t{fmt(r.agreement)}\t{fmt(r.alpha)}\t{fmt(r.macro_f1)}"
            )
        return "\n".join(lines)

    def plot_data(self):
        """(k, agreement, alpha) triples per reference set, for plotting."""
        by_ref: dict[str, list] = {}
        for r in self.rows:
            if r.agreement is None:
                continue
            by_ref.setdefault(r.reference, []).append((r.k, r.agreement, r.alpha))
        return by_ref


def run_sweep(
    corpus,
    pool,
    settings,
    client,
    references,
    parallelism=1,
    setting_labels=None,
) -> SweepReport:
    """Generate with each prompt setting and score against each reference set.

    Utterances that fail validation are excluded from agreement/alpha/F1 and
    show up only in the pass rate, mirroring how metrics can coexist with
    sub-100% pass rates. Per-setting failures are recorded in their rows and
    the sweep continues.
    """
    from .llm_client import CompletionRequest, strip_response
    from .prompting import build_prompt

    if not settings:
        raise ValidationError("no sweep settings given")
    report = SweepReport()
    for idx, config in enumerate(settings):
        label = (
            setting_labels[idx]
            if setting_labels
            else ("ZS" if config.k == 0 else f"FS,k={config.k}")
        )
        try:
            generated, validation = generate_annotations(
                corpus, config, client, pool, parallelism=parallelism
            )
        except Exception as exc:
            report.rows.append(
                SweepRow(
                    setting=label, k=config.k, mix=config.mix_map,
                    reference="-", pass_rate=float("nan"), error=str(exc),
                )
            )
            continue
        for ref in references:
            row = SweepRow(
                setting=label,
                k=config.k,
                mix=config.mix_map,
                reference=str(ref.annotator),
                pass_rate=validation.pass_rate,
            )
            try:
                result = compare(ref, generated)
                row.agreement = result.agreement
                row.alpha = result.alpha
                row.macro_f1 = result.macro_f1
            except ValidationError as exc:
                row.error = str(exc)
            report.rows.append(row)
    return report


def generate_annotations(corpus, config, client, pool=(), parallelism=1):
    """Prompt the backend for every utterance; return (AnnotationSet, report).

    The annotation set holds the parse survivors; the validation report
    covers every output, including items whose request failed outright
    (counted as "BackendError").
    """
    from .llm_client import CompletionRequest, strip_response

    bundles = [build_prompt_for(utt, config, pool) for utt in corpus]
    requests = [
        CompletionRequest(
            system_message=b.system_message,
            user_message=b.user_message,
            model_id=config.model_id,
            temperature=config.temperature,
            top_p=config.top_p,
        )
        for b in bundles
    ]
    items = client.complete_batch(requests, parallelism=parallelism)

    annotator = AnnotatorKind.llm(config.digest())
    generated = AnnotationSet(annotator)
    ok_utts, ok_outputs, backend_failures = [], [], []
    for utt, item in zip(corpus, items):
        if not item.ok:
            backend_failures.append((utt.id, "BackendError"))
            continue
        ok_utts.append(utt)
        ok_outputs.append(strip_response(item.result.text))

    if not ok_utts:
        raise ValidationError("every request in the batch failed")
    validation = compute_pass_rate(ok_utts, ok_outputs)
    validation.total_outputs += len(backend_failures)
    validation.failures.extend(backend_failures)

    for utt, raw in zip(ok_utts, ok_outputs):
        try:
            generated.add(utt.id, parse_annotation(utt, raw))
        except ValidationError:
            continue
    return generated, validation


def build_prompt_for(utterance, config, pool):
    from .prompting import build_prompt

    return build_prompt(utterance, config, pool=pool, validate_examples=False)
