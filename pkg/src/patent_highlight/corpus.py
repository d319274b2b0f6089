"""Labeled corpus construction: samples, cleaning, dedup, balancing, CSV I/O, statistics."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BadLabel, EmptyClass, IoFailure, SchemaMismatch
from .ingest import GrantDocument, ParsedGrant, TagClass, TaggedSegment, normalize_heading
from .text import ngrams, NgramConfig, normalize, remove_stopwords, tokenize

LABELS = (0, 1, 2)
CSV_HEADER = ["doc_num", "title", "text", "label"]
DEFAULT_LABEL_MAP = {TagClass.SP: 0, TagClass.AEI: 1, TagClass.TP: 2}
_CLASS_NAMES = {TagClass.AEI: "Pos", TagClass.TP: "Neg", TagClass.SP: "Neu"}


@dataclass(frozen=True)
class CorpusConfig:
    min_word_count: int = 10
    label_map: Mapping[TagClass, int] = field(default_factory=lambda: dict(DEFAULT_LABEL_MAP))
    balance: bool = True
    seed: int = 42

    def __post_init__(self):
        lm = {TagClass(k): int(v) for k, v in dict(self.label_map).items()}
        if set(lm) != set(TagClass) or sorted(lm.values()) != list(LABELS):
            raise ValueError(f"label_map must map AEI, TP, SP one-to-one onto 0, 1, 2; got {lm}")
        object.__setattr__(self, "label_map", lm)

    def class_name(self, label: int) -> str:
        for tag, lab in self.label_map.items():
            if lab == label:
                return _CLASS_NAMES[tag]
        raise BadLabel(label)


@dataclass(frozen=True)
class Sample:
    doc_number: str
    title: str
    text: str
    label: int
    paragraph_count: int | None = None
    year: int | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise BadLabel(f"label {self.label!r} not in {LABELS}")


def class_counts(samples: Iterable[Sample]) -> dict[int, int]:
    counts = Counter(s.label for s in samples)
    return {c: counts.get(c, 0) for c in LABELS}


@dataclass
class Corpus:
    samples: list[Sample]

    @property
    def per_class_counts(self) -> dict[int, int]:
        return class_counts(self.samples)

    def __len__(self):
        return len(self.samples)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.samples]

    @property
    def labels(self) -> np.ndarray:
        return np.asarray([s.label for s in self.samples], dtype=np.int64)


# --- building and cleaning ------------------------------------------------------

def build_samples(segments: Iterable[TaggedSegment], docs: Mapping[str, GrantDocument],
                  config: CorpusConfig = CorpusConfig()) -> list[Sample]:
    out = []
    for seg in segments:
        if seg.paragraph_count == 0:
            continue
        doc = docs.get(seg.source_doc)
        out.append(Sample(
            seg.source_doc,
            doc.title if doc else "",
            " ".join(seg.paragraphs),
            config.label_map[seg.tag],
            seg.paragraph_count,
            doc.year if doc else None,
        ))
    return out


def word_count(text: str) -> int:
    return len(tokenize(normalize(text)))


def drop_reason(sample: Sample, config: CorpusConfig) -> str | None:
    """``"null"``, ``"short"`` or ``None`` when the sample survives filtering."""
    if not sample.text or not sample.text.strip():
        return "null"
    if word_count(sample.text) < config.min_word_count:
        return "short"
    return None


def filter_samples(samples: Sequence[Sample], config: CorpusConfig = CorpusConfig()) -> list[Sample]:
    return [s for s in samples if drop_reason(s, config) is None]


def deduplicate(samples: Sequence[Sample]) -> tuple[list[Sample], dict[int, int]]:
    """Keep the first sample of each normalized text; count the dropped ones per label."""
    seen: set[str] = set()
    kept, dropped = [], Counter()
    for s in samples:
        key = normalize(s.text)
        if key in seen:
            dropped[s.label] += 1
            continue
        seen.add(key)
        kept.append(s)
    return kept, {c: dropped.get(c, 0) for c in LABELS}


def balance(corpus: Corpus, config: CorpusConfig = CorpusConfig()) -> Corpus:
    """Downsample every class to the smallest one, preserving input order."""
    counts = corpus.per_class_counts
    empty = [c for c, n in counts.items() if n == 0]
    if empty:
        raise EmptyClass(f"classes {empty} have no samples")
    if not config.balance:
        return Corpus(list(corpus.samples))
    target = min(counts.values())
    rng = np.random.default_rng(config.seed)
    labels = corpus.labels
    keep = []
    for c in LABELS:
        idx = np.nonzero(labels == c)[0]
        keep.extend(rng.choice(idx, size=target, replace=False).tolist())
    return Corpus([corpus.samples[i] for i in sorted(keep)])


@dataclass
class CleaningReport:
    segments: dict[int, int]
    empty_segments: dict[int, int]
    null_text: dict[int, int]
    short: dict[int, int]
    duplicates: dict[int, int]
    cleaned: dict[int, int]
    balanced: dict[int, int]
    per_year: dict[int, dict[int, int]]
    grants: int = 0
    parse_errors: int = 0
    per_heading: dict[str, int] = field(default_factory=dict)  # normalized heading -> segments

    def to_json(self) -> dict:
        return {k: (v if not isinstance(v, dict) else {str(kk): vv for kk, vv in v.items()})
                for k, v in self.__dict__.items()} | {
            "per_year": {str(y): {str(l): n for l, n in c.items()} for y, c in sorted(self.per_year.items())}}

    def render(self, config: CorpusConfig) -> str:
        rows = [("segments", self.segments), ("removed: empty tag", self.empty_segments),
                ("removed: null text", self.null_text), ("removed: short", self.short),
                ("removed: duplicates", self.duplicates), ("after cleaning", self.cleaned),
                ("after balancing", self.balanced)]
        head = f"{'':<22}" + "".join(f"{config.class_name(c) + f' ({c})':>12}" for c in LABELS) + f"{'total':>10}"
        lines = [f"grants parsed: {self.grants}  parse errors: {self.parse_errors}", head]
        for name, counts in rows:
            lines.append(f"{name:<22}" + "".join(f"{counts[c]:>12}" for c in LABELS) + f"{sum(counts.values()):>10}")
        lines.append("")
        lines.append(f"{'year':<22}" + "".join(f"{config.class_name(c) + f' ({c})':>12}" for c in LABELS))
        for year in sorted(self.per_year, reverse=True):
            lines.append(f"{year:<22}" + "".join(f"{self.per_year[year].get(c, 0):>12}" for c in LABELS))
        if self.per_heading:
            lines.append("")
            lines.append("segments per matched heading")
            for heading, n in sorted(self.per_heading.items(), key=lambda hn: (-hn[1], hn[0])):
                lines.append(f"  {n:>10}  {heading}")
        return "\n".join(lines)


def build_corpus(grants: Iterable[ParsedGrant], config: CorpusConfig = CorpusConfig(),
                 parse_errors: int = 0) -> tuple[Corpus, CleaningReport]:
    """Segments to a cleaned, deduplicated and (optionally) balanced corpus, with removal counts."""
    segments: list[TaggedSegment] = []
    docs: dict[str, GrantDocument] = {}
    seg_counts, empty, per_year, per_heading = Counter(), Counter(), defaultdict(Counter), Counter()
    n_grants = 0
    for g in grants:
        n_grants += 1
        if g.segments:
            # body no longer needed once segments are extracted
            docs[g.doc.doc_number] = GrantDocument(g.doc.doc_number, g.doc.title, (), g.doc.year)
        for seg in g.segments:
            label = config.label_map[seg.tag]
            seg_counts[label] += 1
            per_heading[normalize_heading(seg.heading)] += 1
            if g.doc.year is not None:
                per_year[g.doc.year][label] += 1
            if seg.paragraph_count == 0:
                empty[label] += 1
            segments.append(seg)

    samples = build_samples(segments, docs, config)
    reasons = Counter()
    kept = []
    for s in samples:
        why = drop_reason(s, config)
        if why is None:
            kept.append(s)
        else:
            reasons[(why, s.label)] += 1
    kept, dups = deduplicate(kept)
    cleaned = Corpus(kept)
    final = balance(cleaned, config) if config.balance else cleaned

    def per_label(counter, key=None):
        return {c: counter.get((key, c) if key else c, 0) for c in LABELS}

    report = CleaningReport(
        segments=per_label(seg_counts), empty_segments=per_label(empty),
        null_text=per_label(reasons, "null"), short=per_label(reasons, "short"), duplicates=dups,
        cleaned=cleaned.per_class_counts, balanced=final.per_class_counts,
        per_year={y: dict(c) for y, c in per_year.items()}, grants=n_grants, parse_errors=parse_errors,
        per_heading=dict(sorted(per_heading.items())),
    )
    return final, report


# --- CSV -------------------------------------------------------------------------

def write_corpus(corpus: Corpus, path: str | Path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
            writer.writerow(CSV_HEADER)
            for s in corpus.samples:
                writer.writerow([s.doc_number, s.title, s.text, s.label])
    except csv.Error as exc:
        raise IoFailure(f"cannot encode corpus row for {path}: {exc}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot write corpus {path}: {exc}") from exc


def read_corpus(path: str | Path) -> Corpus:
    """Read a ``doc_num,title,text,label`` file; paragraph counts and years are not stored."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_HEADER:
                raise SchemaMismatch(f"{path}: header {header!r}, expected {CSV_HEADER!r}")
            samples = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 4:
                    raise SchemaMismatch(f"{path}: record {lineno} has {len(row)} fields")
                try:
                    label = int(row[3])
                except ValueError:
                    raise BadLabel(f"{path}: record {lineno} label {row[3]!r} is not an integer") from None
                if label not in LABELS:
                    raise BadLabel(f"{path}: record {lineno} label {label} not in {LABELS}")
                samples.append(Sample(row[0], row[1], row[2], label))
    except OSError as exc:
        raise IoFailure(f"cannot read corpus {path}: {exc}") from exc
    return Corpus(samples)


# --- statistics ----------------------------------------------------------------------

@dataclass
class LengthSummary:
    count: int
    mean: float
    min: float
    q25: float
    q50: float
    q75: float
    std: float
    max: float

    @classmethod
    def of(cls, lengths: Sequence[int]) -> "LengthSummary":
        a = np.asarray(lengths, dtype=float)
        if len(a) == 0:
            nan = math.nan
            return cls(0, nan, nan, nan, nan, nan, nan, nan)
        q25, q50, q75 = np.percentile(a, [25, 50, 75])
        std = float(a.std(ddof=1)) if len(a) > 1 else 0.0
        return cls(len(a), float(a.mean()), float(a.min()), float(q25), float(q50), float(q75), std, float(a.max()))


@dataclass
class CorpusStats:
    lengths: dict[int, LengthSummary]
    paragraph_histogram: dict[int, dict[int, int]]
    top_trigrams: dict[int, list[tuple[str, int]]]
    per_year: dict[int, dict[int, int]]

    def to_json(self) -> dict:
        return {
            "lengths": {str(c): s.__dict__ for c, s in self.lengths.items()},
            "paragraph_histogram": {str(c): {str(k): v for k, v in sorted(h.items())}
                                    for c, h in self.paragraph_histogram.items()},
            "top_trigrams": {str(c): [{"trigram": g, "count": n} for g, n in t] for c, t in self.top_trigrams.items()},
            "per_year": {str(y): {str(c): n for c, n in sorted(v.items())} for y, v in sorted(self.per_year.items())},
        }

    def render(self, config: CorpusConfig = CorpusConfig()) -> str:
        labels = sorted(self.lengths)
        names = [f"{config.class_name(c)} ({c})" for c in labels]
        lines = ["token length" + "".join(f"{n:>14}" for n in names)]
        for key, title in (("mean", "mean"), ("min", "min"), ("q25", "25%"), ("q50", "50%"),
                           ("q75", "75%"), ("std", "std"), ("max", "max")):
            lines.append(f"{title:<12}" + "".join(f"{getattr(self.lengths[c], key):>14.2f}" for c in labels))
        lines.append("")
        lines.append("top tri-grams")
        for c, name in zip(labels, names):
            for gram, n in self.top_trigrams.get(c, []):
                lines.append(f"  {name:<10} {gram!r:<45} {n:>8}")
        if self.per_year:
            lines.append("")
            lines.append("year" + "".join(f"{n:>14}" for n in names))
            for y in sorted(self.per_year, reverse=True):
                lines.append(f"{y:<4}" + "".join(f"{self.per_year[y].get(c, 0):>14}" for c in labels))
        return "\n".join(lines)


_TRIGRAM = NgramConfig(3, 3)


def compute_stats(corpus: Corpus, stoplist: Iterable[str] = frozenset(), top_k: int = 10) -> CorpusStats:
    """Per-class token-length summaries (stopwords removed), paragraph-count
    histogram, top tri-grams and per-year label counts.

    Paragraph counts and years are only known for freshly built samples;
    samples read back from CSV contribute nothing to those two tables.
    """
    if len(corpus) == 0:
        raise EmptyClass("cannot compute statistics of an empty corpus")
    stop = frozenset(stoplist)
    lengths = defaultdict(list)
    trigrams = defaultdict(Counter)
    hist = defaultdict(Counter)
    per_year = defaultdict(Counter)
    for s in corpus.samples:
        toks = remove_stopwords(tokenize(normalize(s.text)), stop)
        lengths[s.label].append(len(toks))
        trigrams[s.label].update(ngrams(toks, _TRIGRAM))
        if s.paragraph_count is not None:
            hist[s.label][s.paragraph_count] += 1
        if s.year is not None:
            per_year[s.year][s.label] += 1
    labels = sorted(lengths)
    return CorpusStats(
        {c: LengthSummary.of(lengths[c]) for c in labels},
        {c: dict(hist[c]) for c in labels if hist[c]},
        {c: sorted(trigrams[c].items(), key=lambda gn: (-gn[1], gn[0]))[:top_k] for c in labels},
        {y: dict(v) for y, v in per_year.items()},
    )


def stats_json(stats: CorpusStats) -> str:
    return json.dumps(stats.to_json(), indent=2, sort_keys=True)
