import json
import shutil
from html.parser import HTMLParser

import pytest

from patent_highlight.cli import main
from patent_highlight.ingest import split_bulk_file
from patent_highlight.models import load_model, predict, predict_texts

from conftest import BULK_FIXTURE, FIXTURES

SIGNATURE_DOC = (
    "According to the present invention, the efficiency is improved.\n\n"
    "An object of the present invention is to remove the drawback.\n\n"
    "In one aspect of the present invention, the housing comprises a member.\n"
)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class SpanCounter(HTMLParser):
    def __init__(self):
        super().__init__()
        self.spans = []

    def handle_starttag(self, tag, attrs):
        if tag == "span":
            self.spans.append(dict(attrs))


@pytest.fixture(scope="module")
def svm_model(tmp_path_factory, synth_csv):
    path = tmp_path_factory.mktemp("m") / "svm.phlt"
    assert main(["train", str(synth_csv), "--kind", "svm", "--model", str(path)]) == 0
    return path


# --- build-corpus -------------------------------------------------------------------------------

def test_build_corpus_fixture_matches_golden(tmp_path, capsys):
    src = tmp_path / "in"
    src.mkdir()
    shutil.copy(BULK_FIXTURE, src / BULK_FIXTURE.name)
    out, stats, segs = tmp_path / "c.csv", tmp_path / "s.json", tmp_path / "seg.ndjson"
    code, stdout, _ = run(capsys, "build-corpus", src, "-o", out, "--stats", stats, "--segments", segs)
    assert code == 0
    assert out.read_bytes() == (FIXTURES / "golden_corpus.csv").read_bytes()
    assert "removed: duplicates" in stdout and "2018" in stdout
    payload = json.loads(stats.read_text())
    assert payload["cleaning"]["short"] == {"0": 0, "1": 1, "2": 0}
    lines = [json.loads(l) for l in segs.read_text().splitlines()]
    golden = json.loads((FIXTURES / "golden_segments.json").read_text())
    assert [{k: r[k] for k in ("doc_number", "tag", "paragraphs")} for r in lines] == golden


def test_build_corpus_empty_dir(tmp_path, capsys):
    code, _, err = run(capsys, "build-corpus", tmp_path, "-o", tmp_path / "c.csv")
    assert code == 1 and "no bulk files found" in err


def test_build_corpus_zipped_input(tmp_path, capsys):
    import zipfile
    src = tmp_path / "in"
    src.mkdir()
    with zipfile.ZipFile(src / "ipg200107.zip", "w") as zf:
        zf.write(BULK_FIXTURE, "ipg200107.xml")
    code, _, _ = run(capsys, "build-corpus", src, "-o", tmp_path / "c.csv")
    assert code == 0
    assert (tmp_path / "c.csv").read_bytes() == (FIXTURES / "golden_corpus.csv").read_bytes()


# --- stats -------------------------------------------------------------------------------------

def test_stats(capsys, synth_csv):
    code, out, _ = run(capsys, "stats", synth_csv, "--format", "json", "--top-k", "3")
    assert code == 0
    data = json.loads(out)
    assert set(data["lengths"]) == {"0", "1", "2"}
    code, out, _ = run(capsys, "stats", synth_csv)
    assert code == 0 and "top tri-grams" in out


# --- train / eval -----------------------------------------------------------------------------

def test_train_is_byte_deterministic(tmp_path, capsys, synth_csv):
    outputs = []
    for i in range(2):
        model = tmp_path / f"m{i}.phlt"
        code, out, _ = run(capsys, "train", synth_csv, "--kind", "nbsvm", "--model", model, "--seed", 3,
                           "--format", "json")
        assert code == 0
        outputs.append((model.read_bytes(), out.replace(str(model), "")))
    assert outputs[0] == outputs[1]
    report = json.loads(outputs[0][1])
    assert report["test_size"] == 60 and report["train_size"] == 240
    assert report["report"]["macro"]["f1"] >= 0.95


def test_train_unknown_kind_is_usage_error(tmp_path, synth_csv):
    with pytest.raises(SystemExit) as info:
        main(["train", str(synth_csv), "--kind", "knn", "--model", str(tmp_path / "m")])
    assert info.value.code == 2


def test_eval(capsys, synth_csv):
    code, out, _ = run(capsys, "eval", synth_csv, "--kind", "mnb", "--folds", 3, "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert len(data["report"]["fold_accuracies"]) == 3
    assert data["report"]["macro"]["f1"] >= 0.95
    code, out, _ = run(capsys, "eval", synth_csv, "--kind", "mnb", "--folds", 3, "--global-features")
    assert code == 0 and "3-fold" in out


@pytest.mark.parametrize("k", ["1", "0", "x"])
def test_eval_bad_folds_is_usage_error(synth_csv, k):
    with pytest.raises(SystemExit) as info:
        main(["eval", str(synth_csv), "--kind", "svm", "--folds", k])
    assert info.value.code == 2


def test_missing_corpus_is_runtime_error(tmp_path, capsys):
    code, _, err = run(capsys, "train", tmp_path / "nope.csv", "--kind", "svm", "--model", tmp_path / "m")
    assert code == 1 and err.startswith("error:")


# --- highlight ----------------------------------------------------------------------------------

def test_highlight_signature_paragraphs(tmp_path, capsys, svm_model):
    doc = tmp_path / "doc.txt"
    doc.write_text(SIGNATURE_DOC, encoding="utf-8")
    code, out, _ = run(capsys, "highlight", doc, "--model", svm_model)
    assert code == 0
    records = json.loads(out)["paragraphs"]
    labels = [r["label"] for r in records]
    assert labels == [1, 2, 0]
    model = load_model(svm_model)
    for r in records:
        assert r["label"] == int(predict_texts(model, [r["text"]])[0])
        assert r["label"] == predict(model, model.vectorizer.transform([r["text"]]))[0]
        assert 0 < r["confidence"] <= 1 and len(r["scores"]) == 3


def test_highlight_html_has_one_span_per_paragraph(tmp_path, capsys, svm_model):
    doc = tmp_path / "doc.txt"
    doc.write_text(SIGNATURE_DOC, encoding="utf-8")
    code, html_out, _ = run(capsys, "highlight", doc, "--model", svm_model, "--format", "html")
    assert code == 0
    parser = SpanCounter()
    parser.feed(html_out)
    parser.close()
    assert len(parser.spans) == 3
    assert "confidence (uncalibrated)" in parser.spans[0]["title"]
    assert "<script" not in html_out and "http" not in html_out


def test_highlight_xml_input_and_sentences(capsys, svm_model):
    first_grant = split_bulk_file(BULK_FIXTURE.read_bytes())[0].decode("utf-8")
    code, out, _ = run(capsys, "highlight", first_grant, "--model", svm_model)
    assert code == 0
    assert len(json.loads(out)["paragraphs"]) == 6
    code, out, _ = run(capsys, "highlight", "First sentence here. Second one!", "--model", svm_model, "--sentences")
    assert [r["text"] for r in json.loads(out)["paragraphs"]] == ["First sentence here.", "Second one!"]


def test_highlight_is_byte_deterministic(tmp_path, capsys, svm_model):
    doc = tmp_path / "doc.txt"
    doc.write_text(SIGNATURE_DOC, encoding="utf-8")
    outs = []
    for i in range(2):
        target = tmp_path / f"h{i}.html"
        assert run(capsys, "highlight", doc, "--model", svm_model, "--format", "html", "-o", target)[0] == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


def test_highlight_empty_input(tmp_path, capsys, svm_model):
    empty = tmp_path / "empty.txt"
    empty.write_text("  \n\n ", encoding="utf-8")
    code, _, err = run(capsys, "highlight", empty, "--model", svm_model)
    assert code == 1 and "empty" in err


# --- explain -------------------------------------------------------------------------------------

def test_explain_linear(capsys, svm_model):
    text = "An object of the present invention is to reduce leakage and damage."
    code, out, _ = run(capsys, "explain", text, "--model", svm_model, "--k", 3)
    assert code == 0
    data = json.loads(out)
    assert data["method"] == "linear" and data["label"] == 2 and len(data["tokens"]) == 3
    assert run(capsys, "explain", text, "--model", svm_model, "--k", 3)[1] == out


def test_explain_k_zero_and_surrogate(capsys, svm_model):
    code, out, _ = run(capsys, "explain", "the pump is improved", "--model", svm_model, "--k", 0)
    assert code == 0 and json.loads(out)["tokens"] == []
    code, out, _ = run(capsys, "explain", "the pump is improved", "--model", svm_model, "--surrogate", "--label", 1)
    data = json.loads(out)
    assert data["method"] == "surrogate" and data["label"] == 1
    assert data["tokens"][0]["token"] == "improved"


def test_explain_forest_falls_back_to_surrogate(tmp_path, capsys, synth_csv):
    model = tmp_path / "forest.phlt"
    assert main(["train", str(synth_csv), "--kind", "forest", "--model", str(model)]) == 0
    capsys.readouterr()
    code, out, _ = run(capsys, "explain", "an object of the present invention", "--model", model, "--format", "html")
    assert code == 0 and "surrogate attribution" in out


def test_explain_negative_k_is_usage_error(svm_model):
    with pytest.raises(SystemExit) as info:
        main(["explain", "x", "--model", str(svm_model), "--k", "-1"])
    assert info.value.code == 2
