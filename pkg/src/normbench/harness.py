"""Prompt rendering, response parsing and the per-model evaluation run."""

from __future__ import annotations

import hashlib
import json
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError, ParseError, TransportError
from .norms import NORMS, NormSpec, Verdict, normalize
from .transport import ExchangeCache, ModelConfig, Transport, query
from .world import Story

NORM_PLACEHOLDER = "{norms}"
STORY_PLACEHOLDER = "{story}"
NORM_IDS = tuple(range(1, 11))


def _dialects() -> dict[str, dict[str, str]]:
    text = resources.files("normbench.data").joinpath("dialects.json").read_text("utf-8")
    return json.loads(text)["dialects"]


@dataclass(frozen=True)
class PromptTemplate:
    text: str
    dialect: str = "chat"
    prefix: str = ""
    suffix: str = ""

    def __post_init__(self):
        for ph in (NORM_PLACEHOLDER, STORY_PLACEHOLDER):
            n = self.text.count(ph)
            if n != 1:
                raise ConfigError(f"template must contain {ph} exactly once (found {n})")

    @classmethod
    def load(cls, path: str | Path | None = None, dialect: str = "chat") -> PromptTemplate:
        if path is None:
            text = resources.files("normbench.data").joinpath("prompt_template.txt").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        try:
            wrap = _dialects()[dialect]
        except KeyError:
            raise ConfigError(f"unknown model dialect {dialect!r}") from None
        return cls(text, dialect, wrap.get("prefix", ""), wrap.get("suffix", ""))

    @property
    def digest(self) -> str:
        blob = json.dumps([self.text, self.dialect, self.prefix, self.suffix])
        return "sha256:" + hashlib.sha256(blob.encode("utf-8")).hexdigest()


def render_norms(norms: Sequence[NormSpec]) -> str:
    return "\n".join(f"{n.id} - {n.text}" for n in norms)


def render_prompt(template: PromptTemplate, norms: Sequence[NormSpec], story: Story) -> str:
    if not norms:
        raise ConfigError("at least one norm is required")
    ids = [n.id for n in norms]
    if ids != sorted(ids):
        raise ConfigError("norms must be given in id order")
    body = template.text.replace(NORM_PLACEHOLDER, render_norms(norms))
    # story substituted last so event text can never be mistaken for a placeholder
    head, tail = body.split(STORY_PLACEHOLDER)
    return template.prefix + head + "\n".join(story.lines()) + tail + template.suffix


# --------------------------------------------------------------------------
# parsing

_HEADER = re.compile(r"^[\s>*#•\-–]*(?:\d{1,3}[.)]\s*)?[\s*_]*norm\s*#?\s*(\d{1,3})\b(.*)$",
                     re.IGNORECASE)
_VIOLATION = re.compile(r"violat\w*[\s*_]*[:\-–][\s*_\[]*([^\n]*)", re.IGNORECASE)
_REASONING = re.compile(r"reason\w*[\s*_]*:[\s*_]*(.*)", re.IGNORECASE | re.DOTALL)


def map_answer(answer: str) -> Verdict | None:
    """Map a free-text answer to a verdict, or None if it is unrecognizable."""
    a = re.sub(r"[*_`\[\]\"']", "", answer).strip().lower()
    if a.startswith(("cannot be determined", "can not be determined", "can't be determined",
                     "cannot determine", "undetermined")):
        return Verdict.CANNOT_BE_DETERMINED
    if a.startswith(("not applicable", "n/a", "na ", "na.", "na,")) or a == "na":
        return Verdict.NOT_APPLICABLE
    if a.startswith(("yes", "violated")):
        return Verdict.VIOLATED
    if re.match(r"no\b", a) or a.startswith("not violated"):
        return Verdict.NOT_VIOLATED
    return None


@dataclass
class ParsedVerdicts:
    verdicts: dict[int, tuple[Verdict, str]] = field(default_factory=dict)
    parse_warnings: list[str] = field(default_factory=list)


def parse_response(raw: str) -> ParsedVerdicts:
    """Extract one verdict per norm from a free-form model answer.

    Missing or unmappable norms degrade to ``CANNOT_BE_DETERMINED`` with a
    warning.  Raises ``ParseError`` only when no norm block is found at all.
    """
    blocks: dict[int, list[str]] = {}
    order: list[int] = []
    current: list[str] | None = None
    warnings: list[str] = []
    for line in raw.splitlines():
        m = _HEADER.match(line)
        if m and 1 <= int(m.group(1)) <= 10:
            norm_id = int(m.group(1))
            if norm_id in blocks:
                warnings.append(f"norm {norm_id}: duplicate block ignored")
                current = []
            else:
                current = blocks[norm_id] = []
                order.append(norm_id)
            current.append(m.group(2))
        elif current is not None:
            current.append(line)
    if not blocks:
        raise ParseError(f"no norm blocks found in response starting {raw[:80]!r}")

    out = ParsedVerdicts(parse_warnings=warnings)
    for norm_id in NORM_IDS:
        if norm_id not in blocks:
            out.parse_warnings.append(f"norm {norm_id}: missing")
            out.verdicts[norm_id] = (Verdict.CANNOT_BE_DETERMINED, "")
            continue
        text = "\n".join(blocks[norm_id])
        r = _REASONING.search(text)
        reasoning = r.group(1).strip() if r else ""
        head = text[: r.start()] if r else text
        v = _VIOLATION.search(head)
        verdict = map_answer(v.group(1)) if v else None
        if verdict is None:
            what = f"unmappable answer {v.group(1).strip()[:40]!r}" if v else "no violation answer"
            out.parse_warnings.append(f"norm {norm_id}: {what}")
            verdict = Verdict.CANNOT_BE_DETERMINED
        out.verdicts[norm_id] = (verdict, reasoning)
    return out


ANSWER_TEXT = {
    Verdict.VIOLATED: "Yes",
    Verdict.NOT_VIOLATED: "No",
    Verdict.CANNOT_BE_DETERMINED: "Cannot be determined",
    Verdict.NOT_APPLICABLE: "Not applicable",
}


def format_response(verdicts: Mapping[int, tuple[Verdict, str]]) -> str:
    """Render verdicts in the response layout the prompt asks for."""
    parts = []
    for norm_id in sorted(verdicts):
        verdict, reasoning = verdicts[norm_id]
        parts.append(f"- Norm {norm_id}\n- Violation: {ANSWER_TEXT[verdict]}\n"
                     f"- Reasoning: {reasoning}\n")
    return "\n".join(parts)


def simulated_response(judgements, rng: random.Random, error_rate: float = 0.2) -> str:
    """A fake model answer: oracle verdicts, each flipped yes/no with ``error_rate``."""
    verdicts = {}
    for j in judgements:
        verdict = j.verdict
        if rng.random() < error_rate:
            verdict = Verdict.NOT_VIOLATED if verdict is Verdict.VIOLATED else Verdict.VIOLATED
        verdicts[j.norm_id] = (verdict, j.rationale)
    return format_response(verdicts)


# --------------------------------------------------------------------------
# runs


@dataclass
class RunSummary:
    n_stories: int = 0
    n_records: int = 0
    failed_stories: list[str] = field(default_factory=list)
    stories_with_warnings: list[str] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def all_failed(self) -> bool:
        return self.n_stories > 0 and len(self.failed_stories) == self.n_stories

    def to_dict(self) -> dict:
        return {
            "n_stories": self.n_stories,
            "n_records": self.n_records,
            "failed_stories": self.failed_stories,
            "stories_with_warnings": self.stories_with_warnings,
            "errors": self.errors,
        }


def _records(story_id: str, model: str, parsed: ParsedVerdicts) -> list[dict]:
    per_norm: dict[int, list[str]] = {n: [] for n in NORM_IDS}
    general = []
    for w in parsed.parse_warnings:
        m = re.match(r"norm (\d+):", w)
        (per_norm[int(m.group(1))] if m else general).append(w)
    return [
        {
            "schema_version": 1,
            "story_id": story_id,
            "model": model,
            "norm_id": n,
            "verdict": parsed.verdicts[n][0].value,
            "binary": normalize(parsed.verdicts[n][0]),
            "reasoning": parsed.verdicts[n][1],
            "warnings": general + per_norm[n],
        }
        for n in NORM_IDS
    ]


def run_model(
    corpus: Sequence[Story],
    model: ModelConfig,
    template: PromptTemplate,
    cache: ExchangeCache,
    transport: Transport,
    concurrency: int = 1,
    norms: Sequence[NormSpec] = NORMS,
    sleep=None,
) -> tuple[list[dict], RunSummary]:
    """Render, query, parse and normalize every story.

    A failing story yields ten ``cannot_be_determined`` records and is listed
    in the summary; the run itself only fails on configuration errors.
    """
    transport.check_credentials(model)
    digest = template.digest
    extra = {} if sleep is None else {"sleep": sleep}

    def one(story: Story):
        prompt = render_prompt(template, norms, story)
        try:
            exchange = query(model, prompt, cache, transport, story.id, digest, **extra)
            return story.id, parse_response(exchange.raw), None
        except TransportError as exc:
            return story.id, None, f"transport error: {exc} (status {exc.status})"
        except ParseError as exc:
            return story.id, None, f"parse failure: {exc}"

    if concurrency > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            results = list(pool.map(one, corpus))
    else:
        results = [one(s) for s in corpus]

    summary = RunSummary(n_stories=len(corpus))
    records: list[dict] = []
    for story_id, parsed, error in sorted(results, key=lambda r: r[0]):
        if parsed is None:
            summary.failed_stories.append(story_id)
            summary.errors[story_id] = error
            parsed = ParsedVerdicts(
                {n: (Verdict.CANNOT_BE_DETERMINED, "") for n in NORM_IDS}, [error]
            )
        if parsed.parse_warnings and story_id not in summary.stories_with_warnings:
            summary.stories_with_warnings.append(story_id)
        records.extend(_records(story_id, model.model_name, parsed))
    summary.n_records = len(records)
    return records, summary
