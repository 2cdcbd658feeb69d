"""Phrase-break annotation toolkit.

Generate break annotations for text corpora through few-shot-prompted chat
models, validate and parse the ``#``/``/`` markup, measure annotation quality
and inter-annotator reliability, and train a lightweight junction classifier
to gauge downstream impact.
"""

__version__ = "0.1.0"

from .annotation import (
    AnnotationSet,
    AnnotatorKind,
    BreakLabel,
    LabelSequence,
    parse_annotation,
    pass_rate,
    phrasing_stats,
    render_annotation,
)
from .corpus import Utterance, load_corpus, split_dataset, tokenize
from .metrics import exact_agreement, human_score, krippendorff_alpha, macro_f1
from .prompting import PromptConfig, build_prompt, preset_mixes

__all__ = [
    "AnnotationSet",
    "AnnotatorKind",
    "BreakLabel",
    "LabelSequence",
    "PromptConfig",
    "Utterance",
    "build_prompt",
    "exact_agreement",
    "human_score",
    "krippendorff_alpha",
    "load_corpus",
    "macro_f1",
    "parse_annotation",
    "pass_rate",
    "phrasing_stats",
    "preset_mixes",
    "render_annotation",
    "split_dataset",
    "tokenize",
]
