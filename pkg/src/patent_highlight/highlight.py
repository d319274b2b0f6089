"""Paragraph segmentation, per-paragraph classification and JSON/HTML rendering."""

from __future__ import annotations

import html
import json
import re
from dataclasses import dataclass
from typing import Sequence
from xml.etree import ElementTree as ET

import numpy as np

from .config import HighlightConfig
from .corpus import CorpusConfig
from .errors import EmptyInput, MalformedXml
from .ingest import TagClass, _make_parser, _prose
from .models import text_scores

_BLANK_LINE = re.compile(r"\n\s*\n")
_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


@dataclass
class AnnotatedParagraph:
    text: str
    label: int
    scores: list[float]
    confidence: float


def softmax(scores: np.ndarray) -> np.ndarray:
    z = np.exp(scores - np.max(scores))
    return z / z.sum()


def split_paragraphs(content: str) -> list[str]:
    """XML input yields its ``<p>`` elements; plain text splits on blank lines."""
    stripped = content.lstrip()
    if stripped.startswith("<"):
        parser = _make_parser()
        try:
            parser.feed(stripped.encode("utf-8"))
            root = parser.close()
        except ET.ParseError as exc:
            raise MalformedXml(f"cannot parse highlight input: {exc}") from exc
        paras = []

        def walk(e):
            for child in e:
                if child.tag == "p":
                    paras.append(_prose(child))
                else:
                    walk(child)

        if root.tag == "p":
            paras.append(_prose(root))
        else:
            walk(root)
    else:
        paras = [" ".join(p.split()) for p in _BLANK_LINE.split(content)]
    return [p for p in paras if p]


def split_sentences(paragraph: str) -> list[str]:
    return [s for s in _SENTENCE_END.split(paragraph) if s.strip()]


def annotate(model, units: Sequence[str]) -> list[AnnotatedParagraph]:
    if not units:
        raise EmptyInput("no paragraphs to classify")
    scores = text_scores(model, list(units))
    out = []
    for text, row in zip(units, scores):
        k = int(np.argmax(row))
        out.append(AnnotatedParagraph(text, int(model.classes[k]), [float(s) for s in row], float(softmax(row)[k])))
    return out


def highlight_text(model, content: str, sentences: bool = False) -> list[AnnotatedParagraph]:
    paras = split_paragraphs(content)
    if sentences:
        paras = [s for p in paras for s in split_sentences(p)]
    return annotate(model, paras)


def render_json(records: Sequence[AnnotatedParagraph], model_kind: str) -> str:
    payload = {
        "model": model_kind,
        "confidence": "softmax over decision scores (uncalibrated)",
        "paragraphs": [
            {"index": i, "label": r.label, "confidence": r.confidence, "scores": r.scores, "text": r.text}
            for i, r in enumerate(records)
        ],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def label_colors(corpus: CorpusConfig, colors: HighlightConfig) -> dict[int, tuple[str, str]]:
    """label -> (css color, heading name)"""
    names = {TagClass.AEI: "advantageous effect", TagClass.TP: "technical problem", TagClass.SP: "solution / neutral"}
    return {label: (getattr(colors, f"color_{tag.value}"), names[tag]) for tag, label in corpus.label_map.items()}


def render_html(records: Sequence[AnnotatedParagraph], corpus: CorpusConfig = CorpusConfig(),
                colors: HighlightConfig = HighlightConfig()) -> str:
    """Self-contained page with exactly one ``<span>`` per classified unit."""
    scheme = label_colors(corpus, colors)
    legend = "".join(
        f'<div style="display:inline-block;margin-right:1em;padding:0 .4em;background:{c}">{l}: {html.escape(n)}</div>'
        for l, (c, n) in sorted(scheme.items()))
    body = "".join(
        f'<p><span class="label-{r.label}" style="background:{scheme[r.label][0]}" '
        f'title="label {r.label}, confidence (uncalibrated) {r.confidence:.3f}">{html.escape(r.text)}</span></p>'
        for r in records)
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"/><title>highlighted patent text</title></head>"
        "<body style=\"font-family:sans-serif;max-width:50em\">"
        f"<div>{legend}</div>{body}</body></html>\n"
    )
