"""Scoring model verdicts against ground truth, and corpus statistics.

Accuracy is macro-averaged: per-norm accuracy over stories, then plain means
of those per-norm cells for the overall, category and kind aggregates.
"""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from statistics import mean
from typing import Iterable, Mapping, Sequence

from .errors import ScoreError
from .norms import NORMS, Category, Kind
from .records import atomic_write
from .world import Story

Key = tuple[str, int]
LABELS = ("yes", "no")

CATEGORY_LABELS = {Category.ROLE_BASED: "Role-based norm", Category.GENERIC: "Generic norm"}
KIND_LABELS = {Kind.PROHIBITION: "Prohibition Norm (PN)", Kind.OBLIGATION: "Obligation Norm (ON)"}


def round_half_up(value: float, places: int) -> float:
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def fmt(value: float | None, places: int) -> str:
    if value is None:
        return "undefined"
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


# --------------------------------------------------------------------------
# ground truth


def majority_vote(annotations: Mapping[Key, Sequence[str]]) -> dict[Key, str]:
    """Label held by more than half the annotators for each key."""
    sizes = {len(v) for v in annotations.values()}
    if len(sizes) > 1:
        raise ScoreError(f"unequal annotator counts across keys: {sorted(sizes)}")
    out = {}
    for key, labels in annotations.items():
        bad = [label for label in labels if label not in LABELS]
        if bad:
            raise ScoreError(f"non-binary label {bad[0]!r} for {key}")
        counts = Counter(labels)
        winner = [label for label in LABELS if counts[label] * 2 > len(labels)]
        if not winner:
            raise ScoreError(f"tied vote for story {key[0]!r}, norm {key[1]}")
        out[key] = winner[0]
    return out


def ground_truth_from_records(records: Iterable[dict]) -> dict[Key, str]:
    """Oracle judgements, or per-annotator label records, to one binary label per key.

    Several records for the same key are treated as annotators and resolved
    by majority vote.
    """
    grouped: dict[Key, list[str]] = defaultdict(list)
    for r in records:
        grouped[(r["story_id"], int(r["norm_id"]))].append(r["binary"])
    if all(len(v) == 1 for v in grouped.values()):
        return {k: v[0] for k, v in grouped.items()}
    return majority_vote(grouped)


# --------------------------------------------------------------------------
# scoring


@dataclass
class ScoreReport:
    model_name: str
    n_stories: int
    per_norm_accuracy: dict[int, float]
    overall_average: float
    category_accuracy: dict[Category, float]
    kind_accuracy: dict[Kind, float]
    # (truth, model) -> count
    confusion: dict[tuple[str, str], int] = field(default_factory=dict)

    @property
    def confusion_percent(self) -> dict[tuple[str, str], float | None]:
        out = {}
        for t in LABELS:
            row = sum(self.confusion[(t, m)] for m in LABELS)
            for m in LABELS:
                out[(t, m)] = None if row == 0 else 100.0 * self.confusion[(t, m)] / row
        return out

    @property
    def micro_accuracy(self) -> float:
        total = sum(self.confusion.values())
        return 100.0 * (self.confusion[("yes", "yes")] + self.confusion[("no", "no")]) / total


def _binary_map(model_records: Iterable[dict]) -> dict[Key, str]:
    out = {}
    for r in model_records:
        key = (r["story_id"], int(r["norm_id"]))
        if key in out:
            raise ScoreError(f"duplicate model record for {key}")
        out[key] = r["binary"]
    return out


def score(ground_truth: Mapping[Key, str], model_records: Iterable[dict], model_name: str | None = None) -> ScoreReport:
    records = list(model_records)
    predicted = _binary_map(records)
    missing = sorted(set(ground_truth) - set(predicted))
    extra = sorted(set(predicted) - set(ground_truth))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"{len(missing)} ground-truth key(s) without model records: {missing[:10]}")
        if extra:
            parts.append(f"{len(extra)} model record(s) without ground truth: {extra[:10]}")
        raise ScoreError("; ".join(parts))
    if model_name is None:
        model_name = records[0].get("model", "model") if records else "model"

    stories = sorted({s for s, _ in ground_truth})
    norm_ids = sorted({n for _, n in ground_truth})
    confusion = {(t, m): 0 for t in LABELS for m in LABELS}
    hits: dict[int, int] = defaultdict(int)
    counts: dict[int, int] = defaultdict(int)
    for key, truth in ground_truth.items():
        guess = predicted[key]
        confusion[(truth, guess)] += 1
        counts[key[1]] += 1
        hits[key[1]] += truth == guess
    per_norm = {n: 100.0 * hits[n] / counts[n] for n in norm_ids}

    def group_mean(ids):
        cells = [per_norm[n] for n in ids if n in per_norm]
        return mean(cells) if cells else None

    by_id = {n.id: n for n in NORMS}
    return ScoreReport(
        model_name=model_name,
        n_stories=len(stories),
        per_norm_accuracy=per_norm,
        overall_average=mean(per_norm.values()),
        category_accuracy={c: group_mean([i for i in norm_ids if by_id[i].category is c])
                           for c in CATEGORY_LABELS},
        kind_accuracy={k: group_mean([i for i in norm_ids if by_id[i].kind is k])
                       for k in KIND_LABELS},
        confusion=confusion,
    )


def confusion_rates(report: ScoreReport) -> tuple[float | None, float | None]:
    """(miss rate, false-alarm rate) in percent, 1 decimal; None where a row is empty."""
    c = report.confusion
    truth_yes = c[("yes", "yes")] + c[("yes", "no")]
    truth_no = c[("no", "no")] + c[("no", "yes")]
    miss = None if truth_yes == 0 else round_half_up(100.0 * c[("yes", "no")] / truth_yes, 1)
    false_alarm = None if truth_no == 0 else round_half_up(100.0 * c[("no", "yes")] / truth_no, 1)
    return miss, false_alarm


# --------------------------------------------------------------------------
# corpus statistics


@dataclass
class CorpusStats:
    frequency: dict[str, int]
    total: int
    unique: int
    duplicated: int

    def to_dict(self) -> dict:
        return {
            "total_events": self.total,
            "unique_events": self.unique,
            "duplicated_events": self.duplicated,
            "distinct_texts": len(self.frequency),
            "frequency": self.frequency,
        }


def corpus_stats(corpus: Sequence[Story]) -> CorpusStats:
    """Event-text frequencies: unique = seen once, duplicated = seen more than once."""
    if not corpus:
        raise ScoreError("corpus is empty")
    freq = Counter(e.text for s in corpus for e in s.events)
    ordered = dict(sorted(freq.items(), key=lambda kv: (-kv[1], kv[0])))
    return CorpusStats(
        frequency=ordered,
        total=sum(freq.values()),
        unique=sum(1 for v in freq.values() if v == 1),
        duplicated=sum(1 for v in freq.values() if v > 1),
    )


# --------------------------------------------------------------------------
# report emission


def _tables(reports: Sequence[ScoreReport]):
    norm_ids = sorted({n for r in reports for n in r.per_norm_accuracy})
    t1 = [["Model", *[f"N{n}" for n in norm_ids], "Average"]]
    for r in reports:
        t1.append([r.model_name, *[fmt(r.per_norm_accuracy[n], 2) for n in norm_ids],
                   fmt(r.overall_average, 1)])

    def breakdown(title, labels, attr):
        rows = [[title, *[r.model_name for r in reports], "Average"]]
        for key, label in labels.items():
            vals = [getattr(r, attr)[key] for r in reports]
            known = [v for v in vals if v is not None]
            rows.append([label, *[fmt(v, 2) for v in vals],
                         fmt(mean(known) if known else None, 2)])
        return rows

    t2 = breakdown("Norm category", CATEGORY_LABELS, "category_accuracy")
    t3 = breakdown("Norm type", KIND_LABELS, "kind_accuracy")
    conf = [["model", "truth", "model_yes", "model_no", "model_yes_pct", "model_no_pct"]]
    for r in reports:
        pct = r.confusion_percent
        for t in LABELS:
            conf.append([r.model_name, t, str(r.confusion[(t, "yes")]), str(r.confusion[(t, "no")]),
                         fmt(pct[(t, "yes")], 1), fmt(pct[(t, "no")], 1)])
    return t1, t2, t3, conf


def _markdown(rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(rows[0]) + " |", "|" + "|".join("---" for _ in rows[0]) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows[1:]]
    return "\n".join(lines) + "\n"


def _csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def emit_report(
    reports: ScoreReport | Sequence[ScoreReport],
    out_dir: str | Path,
    format: str = "markdown",
) -> list[Path]:
    """Write accuracy tables and confusion matrices; returns the paths written."""
    if isinstance(reports, ScoreReport):
        reports = [reports]
    if format not in ("markdown", "csv"):
        raise ScoreError(f"unknown report format {format!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScoreError(f"cannot create report directory {out}: {exc}") from None
    t1, t2, t3, conf = _tables(reports)
    written = []

    def write(name, text):
        path = out / name
        try:
            atomic_write(path, text.encode("utf-8"))
        except OSError as exc:
            raise ScoreError(f"cannot write {path}: {exc}") from None
        written.append(path)

    if format == "markdown":
        sections = [
            "## Accuracy per norm (%)\n\n" + _markdown(t1),
            "## Accuracy by norm category (%)\n\n" + _markdown(t2),
            "## Accuracy by norm type (%)\n\n" + _markdown(t3),
        ]
        rates = []
        for r in reports:
            miss, fa = confusion_rates(r)
            rates.append([r.model_name, fmt(miss, 1), fmt(fa, 1)])
        sections.append("## Confusion rates (%)\n\n"
                        + _markdown([["Model", "Miss rate", "False alarm rate"], *rates]))
        write("report.md", "\n".join(sections))
    else:
        write("accuracy_per_norm.csv", _csv(t1))
        write("accuracy_by_category.csv", _csv(t2))
        write("accuracy_by_type.csv", _csv(t3))
    write("confusion.csv", _csv(conf))
    return written
