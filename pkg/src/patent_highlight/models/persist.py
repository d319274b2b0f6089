"""Model file container.

Layout (all integers big-endian)::

    b"PHLT"             magic
    uint32              format version
    uint64              payload length in bytes
    payload             a NumPy ``.npz`` archive

The archive holds ``meta`` (UTF-8 JSON as a uint8 array: kind, classes,
feature mode, vectorizer settings, vocabulary terms, training metadata) and
the numeric arrays: ``doc_frequency``, ``idf`` (tf-idf models), ``weights``,
``intercepts``, ``ratios`` (NBSVM) or per-tree ``tree{i}_*`` arrays (forest).
"""

from __future__ import annotations

import io
import json
import struct
import zipfile
from pathlib import Path

import numpy as np

from ..errors import CorruptFile, IoFailure, VersionMismatch
from ..features import Vectorizer
from ..text import NgramConfig, Vocabulary
from .forest import ForestModel, Tree
from .linear import LinearModel

MAGIC = b"PHLT"
FORMAT_VERSION = 1
_HEADER = struct.Struct(">4sIQ")
_TREE_FIELDS = ("feature", "threshold", "left", "right", "value")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _dump_vectorizer(vec: Vectorizer | None, meta: dict, arrays: dict):
    if vec is None:
        meta["vectorizer"] = None
        return
    meta["vectorizer"] = {
        "mode": vec.mode,
        "ngram": {"min_n": vec.ngram.min_n, "max_n": vec.ngram.max_n,
                  "min_df": vec.ngram.min_df, "max_vocab": vec.ngram.max_vocab},
        "stopwords": sorted(vec.stopwords),
        "terms": vec.vocabulary.terms,
        "n_docs": vec.vocabulary.n_docs,
    }
    arrays["doc_frequency"] = np.asarray(vec.vocabulary.doc_frequency, dtype=np.int64)
    if vec.idf is not None:
        arrays["idf"] = np.asarray(vec.idf, dtype=float)


def _load_vectorizer(meta: dict, arrays) -> Vectorizer | None:
    v = meta.get("vectorizer")
    if v is None:
        return None
    vocab = Vocabulary.from_terms(v["terms"], arrays["doc_frequency"].tolist(), v["n_docs"])
    idf = arrays["idf"] if "idf" in arrays else None
    return Vectorizer(vocab, NgramConfig(**v["ngram"]), frozenset(v["stopwords"]), v["mode"], idf)


def dumps_model(model) -> bytes:
    meta: dict = {"kind": model.kind, "classes": list(model.classes), "feature_mode": model.feature_mode}
    arrays: dict[str, np.ndarray] = {}
    _dump_vectorizer(model.vectorizer, meta, arrays)
    if isinstance(model, ForestModel):
        meta.update(n_trees=model.n_trees, max_depth=model.max_depth, seed=model.seed, dimension=model.dimension)
        for i, tree in enumerate(model.trees):
            for name in _TREE_FIELDS:
                arrays[f"tree{i}_{name}"] = getattr(tree, name)
    else:
        meta["train"] = _jsonable(model.meta)
        arrays["weights"] = model.weights
        arrays["intercepts"] = model.intercepts
        if model.ratios is not None:
            arrays["ratios"] = model.ratios
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)

    buf = io.BytesIO()
    # fixed member timestamps keep the archive byte-identical across runs
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(arrays):
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            member = io.BytesIO()
            np.lib.format.write_array(member, np.ascontiguousarray(arrays[name]), allow_pickle=False)
            zf.writestr(info, member.getvalue())
    payload = buf.getvalue()
    return _HEADER.pack(MAGIC, FORMAT_VERSION, len(payload)) + payload


def loads_model(blob: bytes):
    if len(blob) < _HEADER.size:
        raise CorruptFile("model file shorter than its header")
    magic, version, length = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CorruptFile(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version}, this build reads version {FORMAT_VERSION}")
    payload = blob[_HEADER.size :]
    if len(payload) != length:
        raise CorruptFile(f"payload is {len(payload)} bytes, header promises {length}")
    try:
        with np.load(io.BytesIO(payload), allow_pickle=False) as npz:
            arrays = {k: npz[k] for k in npz.files}
        meta = json.loads(arrays.pop("meta").tobytes().decode("utf-8"))
    except (ValueError, OSError, KeyError, zipfile.BadZipFile, json.JSONDecodeError) as exc:
        raise CorruptFile(f"unreadable model payload: {exc}") from exc

    vec = _load_vectorizer(meta, arrays)
    if meta["kind"] == "forest":
        trees = [Tree(*(arrays[f"tree{i}_{name}"] for name in _TREE_FIELDS)) for i in range(meta["n_trees"])]
        return ForestModel(meta["classes"], trees, meta["n_trees"], meta["max_depth"], meta["seed"],
                           meta["dimension"], meta["feature_mode"], vec)
    return LinearModel(meta["classes"], arrays["weights"], arrays["intercepts"], meta["kind"],
                       meta["feature_mode"], vec, arrays.get("ratios"), meta.get("train", {}))


def save_model(model, path) -> None:
    try:
        Path(path).write_bytes(dumps_model(model))
    except OSError as exc:
        raise IoFailure(f"cannot write model to {path}: {exc}") from exc


def load_model(path):
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read model {path}: {exc}") from exc
    return loads_model(blob)
