"""Every tunable default in one place, plus the INI loader used by the CLI.

The config file is INI-style with one section per record; keys are the
dataclass field names::

    [corpus]
    min_word_count = 10
    label_map = AEI:1, TP:2, SP:0
    balance = true
    seed = 42

    [ngram]
    min_n = 1
    max_n = 2

    [train]
    epochs = 20
    nbsvm_beta = 0.25

    [split]
    test_fraction = 0.2

    [explain]
    n_samples = 1000

    [highlight]
    color_AEI = #b6e3b6

    [paths]
    stopwords = /path/to/stopwords.txt
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .corpus import CorpusConfig
from .evaluation import SplitSpec
from .ingest import TagClass
from .models import TrainConfig
from .text import NgramConfig


@dataclass(frozen=True)
class ExplainConfig:
    k: int = 10
    n_samples: int = 1000
    kernel_width: float = 25.0
    ridge_alpha: float | None = None  # 1.0 when sampling, 0 when enumerating
    seed: int = 0


@dataclass(frozen=True)
class HighlightConfig:
    color_AEI: str = "#b6e3b6"
    color_TP: str = "#f4b6b6"
    color_SP: str = "#dddddd"


@dataclass(frozen=True)
class AppConfig:
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    ngram: NgramConfig = field(default_factory=NgramConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    explain: ExplainConfig = field(default_factory=ExplainConfig)
    highlight: HighlightConfig = field(default_factory=HighlightConfig)
    stopwords: str | None = None

    def with_seed(self, seed: int) -> "AppConfig":
        return replace(
            self,
            corpus=replace(self.corpus, seed=seed),
            train=replace(self.train, seed=seed),
            split=replace(self.split, seed=seed),
            explain=replace(self.explain, seed=seed),
        )


def _coerce(raw: str, ftype, name: str):
    t = ftype if isinstance(ftype, str) else getattr(ftype, "__name__", str(ftype))
    raw = raw.strip()
    if name == "label_map":
        out = {}
        for part in raw.split(","):
            tag, _, label = part.partition(":")
            out[TagClass(tag.strip().upper())] = int(label)
        return out
    if t == "bool":
        return raw.lower() in ("1", "true", "yes", "on")
    if t == "int":
        return int(raw)
    if t == "float":
        return float(raw)
    if t in ("int | None", "float | None"):
        if raw.lower() in ("", "none"):
            return None
        return int(raw) if t.startswith("int") else float(raw)
    return raw


def _apply(obj, section: configparser.SectionProxy):
    known = {f.name: f for f in fields(obj)}
    updates = {}
    for key, raw in section.items():
        if key not in known:
            raise ValueError(f"unknown key {key!r} in [{section.name}]")
        updates[key] = _coerce(raw, known[key].type, key)
    return replace(obj, **updates) if updates else obj


def load_config(path: str | Path | None) -> AppConfig:
    cfg = AppConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case (color_AEI)
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    for name in parser.sections():
        if name == "paths":
            cfg = replace(cfg, stopwords=parser[name].get("stopwords"))
            continue
        if name not in {f.name for f in dataclasses.fields(AppConfig)}:
            raise ValueError(f"unknown config section [{name}]")
        cfg = replace(cfg, **{name: _apply(getattr(cfg, name), parser[name])})
    return cfg
