"""Prompt construction: expert persona, few-shot examples, cross-lingual mixes.

Templates live in ``templates/`` as plain text files with ``str.format``
placeholders; pass ``template_dir`` to use customized wording without code
changes. Every function here is a pure function of its inputs, so prompts and
their digests are byte-stable across runs.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .annotation import parse_annotation
from .corpus import Utterance
from .errors import ValidationError

DEFAULT_MODEL_ID = "gpt-4o-mini-2024-07-18"
CROSS_LINGUAL_TOTAL = 16

TARGET_OPEN = "<<<TEXT>>>"
TARGET_CLOSE = "<<<END>>>"

_LANGUAGE_NAMES = {
    "en": "English",
    "fr": "French",
    "es": "Spanish",
    "de": "German",
    "it": "Italian",
    "pt": "Portuguese",
    "ja": "Japanese",
    "ko": "Korean",
    "zh": "Chinese",
}


def language_name(code: str) -> str:
    return _LANGUAGE_NAMES.get(code, code)


@dataclass(frozen=True)
class PromptConfig:
    persona: str = "monolingual"  # "monolingual" | "multilingual"
    language: str = "en"  # persona language for the monolingual case
    model_id: str = DEFAULT_MODEL_ID
    temperature: float = 0.0
    top_p: float = 1.0
    mix: tuple[tuple[str, int], ...] = ()  # ((language, example count), ...)
    seed: int = 0

    def __post_init__(self):
        if self.persona not in ("monolingual", "multilingual"):
            raise ValidationError(f"unknown persona {self.persona!r}")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValidationError("top_p must be in (0, 1]")
        if any(count < 0 for _, count in self.mix):
            raise ValidationError("example counts must be non-negative")

    @property
    def k(self) -> int:
        """Total few-shot example count; 0 means zero-shot."""
        return sum(count for _, count in self.mix)

    @property
    def mix_map(self) -> dict[str, int]:
        return dict(self.mix)

    def digest(self) -> str:
        payload = json.dumps(
            {
                "persona": self.persona,
                "language": self.language,
                "model_id": self.model_id,
                "temperature": self.temperature,
                "top_p": self.top_p,
                "mix": list(self.mix),
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    @classmethod
    def monolingual(cls, language, k=0, **kwargs):
        mix = ((language, k),) if k else ()
        return cls(persona="monolingual", language=language, mix=mix, **kwargs)

    @classmethod
    def cross_lingual(cls, source, target, source_count, target_count, **kwargs):
        mix = ((source, source_count), (target, target_count))
        return cls(persona="multilingual", language=target, mix=mix, **kwargs)


@dataclass(frozen=True)
class FewShotExample:
    language: str
    text: str
    annotated: str
    example_id: str = ""

    def validate(self):
        """Re-parse the markup; raises if the demonstration is not well formed."""
        utt = Utterance(
            id=self.example_id or "example", language=self.language, text=self.text
        )
        parse_annotation(utt, self.annotated)


@dataclass(frozen=True)
class PromptBundle:
    system_message: str
    user_message: str
    config_digest: str


class TemplateSet:
    """The three prompt templates, from package data or a custom directory."""

    FILES = ("system_monolingual.txt", "system_multilingual.txt", "task.txt")

    def __init__(self, template_dir=None):
        self.templates = {}
        for name in self.FILES:
            if template_dir is not None:
                text = Path(template_dir, name).read_text(encoding="utf-8")
            else:
                text = (
                    resources.files("phrasebreak") / "templates" / name
                ).read_text(encoding="utf-8")
            self.templates[name] = text

    def get(self, name):
        return self.templates[name]


_DEFAULT_TEMPLATES = None


def default_templates() -> TemplateSet:
    global _DEFAULT_TEMPLATES
    if _DEFAULT_TEMPLATES is None:
        _DEFAULT_TEMPLATES = TemplateSet()
    return _DEFAULT_TEMPLATES


def build_system_prompt(config: PromptConfig, templates: TemplateSet = None) -> str:
    templates = templates or default_templates()
    if config.persona == "multilingual":
        return templates.get("system_multilingual.txt").strip()
    return (
        templates.get("system_monolingual.txt")
        .format(language_name=language_name(config.language))
        .strip()
    )


def select_examples(pool, mix, seed) -> list[FewShotExample]:
    """Seeded sampling without replacement, source language ("en") first.

    ``mix`` maps language code to requested count. Output keeps English
    examples before target-language ones so cross-lingual prompts always lead
    with source-language demonstrations.
    """
    if isinstance(mix, tuple):
        mix = dict(mix)
    by_language: dict[str, list[FewShotExample]] = {}
    for ex in pool:
        by_language.setdefault(ex.language, []).append(ex)

    # English (the source language) first, then the rest in mix order.
    languages = sorted(mix, key=lambda lang: (lang != "en", ))
    selected = []
    for lang in languages:
        count = mix[lang]
        if count == 0:
            continue
        available = by_language.get(lang, [])
        if len(available) < count:
            raise ValidationError(
                f"few-shot pool for {lang!r} has {len(available)} examples, "
                f"need {count} (short by {count - len(available)})"
            )
        # String seeding is deterministic across processes (PYTHONHASHSEED-free).
        rng = random.Random(f"{seed}:{lang}")
        selected.extend(rng.sample(available, count))
    return selected


def build_task_prompt(target: Utterance, examples, templates: TemplateSet = None) -> str:
    """Render demonstrations (if any) and the sentinel-delimited target."""
    templates = templates or default_templates()
    if TARGET_OPEN in target.text or TARGET_CLOSE in target.text:
        raise ValidationError(
            f"utterance {target.id!r} contains the target delimiter sequence"
        )
    if examples:
        lines = ["", "Here are annotated examples:", ""]
        for ex in examples:
            lines.append(f"Text: {ex.text}")
            lines.append(f"Annotated: {ex.annotated}")
            lines.append("")
        examples_block = "\n".join(lines) + "\n"
    else:
        examples_block = "\n"
    return templates.get("task.txt").format(
        examples_block=examples_block, target=target.text
    )


def build_prompt(
    target: Utterance,
    config: PromptConfig,
    pool=(),
    templates: TemplateSet = None,
    validate_examples: bool = True,
) -> PromptBundle:
    """Full bundle: persona + task prompt + stable digest for caching/tagging."""
    examples = select_examples(pool, config.mix_map, config.seed) if config.k else []
    if validate_examples:
        for ex in examples:
            ex.validate()
    system = build_system_prompt(config, templates)
    user = build_task_prompt(target, examples, templates)
    digest_payload = json.dumps(
        {
            "config": config.digest(),
            "examples": [ex.example_id or ex.text for ex in examples],
            "target": target.id,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return PromptBundle(
        system_message=system,
        user_message=user,
        config_digest=hashlib.sha256(digest_payload.encode()).hexdigest()[:12],
    )


def preset_mixes(source: str, target: str) -> list[dict[str, int]]:
    """The five cross-lingual example mixes, each totalling 16."""
    if source == target:
        raise ValidationError("source and target language must differ")
    return [
        {target: 16},
        {source: 4, target: 12},
        {source: 8, target: 8},
        {source: 12, target: 4},
        {source: 16, target: 0},
    ]


def load_example_pool(corpus, annotation_set, languages=None) -> list[FewShotExample]:
    """Build a few-shot pool from an annotated corpus.

    Uses the annotation module's file format via ``load_annotation_set``;
    the corpus supplies the raw text. ``languages`` optionally filters.
    """
    from .annotation import render_annotation

    by_id = {u.id: u for u in corpus}
    pool = []
    for uid, labels in annotation_set.entries.items():
        utt = by_id.get(uid)
        if utt is None:
            continue
        if languages and utt.language not in languages:
            continue
        pool.append(
            FewShotExample(
                language=utt.language,
                text=utt.text,
                annotated=render_annotation(utt, labels),
                example_id=uid,
            )
        )
    return pool
