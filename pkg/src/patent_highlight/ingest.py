"""USPTO full-text grant files: splitting, parsing, special-heading extraction.

A weekly ``ipgYYMMDD`` file is a plain concatenation of standalone XML
documents, one ``<us-patent-grant>`` each, optionally wrapped in a zip.
"""

from __future__ import annotations

import enum
import html.entities
import io
import json
import re
import string
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Mapping
from xml.etree import ElementTree as ET

from .errors import MalformedConcatenation, MalformedXml, MissingDocNumber, NotAnArchive

XML_DECL = b"<?xml"
_ZIP_MAGIC = b"PK\x03\x04"
_BULK_NAME = re.compile(r"ipg(\d{2})(\d{2})(\d{2})")
# subtrees whose text never counts as paragraph prose
_NON_TEXT = frozenset({"tables", "table", "maths", "math", "chemistry", "img", "figure", "chem"})


class TagClass(str, enum.Enum):
    AEI = "AEI"  # advantageous effects of invention
    TP = "TP"  # technical problem
    SP = "SP"  # solution to problem


@dataclass(frozen=True)
class Heading:
    text: str


@dataclass(frozen=True)
class Paragraph:
    id: str
    num: int
    text: str


@dataclass(frozen=True)
class GrantDocument:
    doc_number: str
    title: str
    body: tuple
    year: int | None = None


@dataclass(frozen=True)
class TaggedSegment:
    tag: TagClass
    paragraphs: tuple[str, ...]
    source_doc: str
    paragraph_count: int = field(default=-1)
    heading: str = field(default="", compare=False)  # matched heading as written

    def __post_init__(self):
        if self.paragraph_count == -1:
            object.__setattr__(self, "paragraph_count", len(self.paragraphs))
        if self.paragraph_count != len(self.paragraphs):
            raise ValueError("paragraph_count must equal the number of paragraphs")


# --- splitting ---------------------------------------------------------------

def open_bulk(path: str | Path) -> BinaryIO:
    """Binary stream over the XML inside ``path`` (zip member or plain file)."""
    path = Path(path)
    fh = path.open("rb")
    if fh.read(4) != _ZIP_MAGIC:
        fh.seek(0)
        return fh
    fh.close()
    try:
        zf = zipfile.ZipFile(path)
        members = [n for n in zf.namelist() if n.lower().endswith(".xml")] or zf.namelist()
        if not members:
            raise NotAnArchive(f"{path}: zip archive holds no members")
        return zf.open(members[0])
    except zipfile.BadZipFile as exc:
        raise NotAnArchive(f"{path}: {exc}") from exc


def _decompress(content: bytes, source_name: str = "<bytes>") -> bytes:
    if not content.startswith(_ZIP_MAGIC):
        return content
    try:
        with zipfile.ZipFile(io.BytesIO(content)) as zf:
            members = [n for n in zf.namelist() if n.lower().endswith(".xml")] or zf.namelist()
            if not members:
                raise NotAnArchive(f"{source_name}: zip archive holds no members")
            return zf.read(members[0])
    except (zipfile.BadZipFile, EOFError, zipfile.LargeZipFile) as exc:
        raise NotAnArchive(f"{source_name}: {exc}") from exc


def iter_chunks(stream: BinaryIO, source_name: str = "<stream>", block_size: int = 1 << 20) -> Iterator[bytes]:
    """Yield one standalone XML document per ``<?xml`` declaration, streaming.

    Joining the yielded chunks gives back the stream contents exactly.
    """
    buf = b""
    started = False
    scan = 1
    while True:
        block = stream.read(block_size)
        if not block:
            break
        buf += block
        if not started:
            if len(buf.lstrip()) == 0:
                continue
            if not buf.startswith(XML_DECL[: len(buf)]):
                raise MalformedConcatenation(f"{source_name}: content does not start with an XML declaration")
            if len(buf) < len(XML_DECL):
                continue
            started = True
        while True:
            nxt = buf.find(XML_DECL, scan)
            if nxt < 0:
                # a declaration may straddle the block boundary
                scan = max(1, len(buf) - len(XML_DECL) + 1)
                break
            yield buf[:nxt]
            buf = buf[nxt:]
            scan = 1
    if not buf:
        return
    if not started:
        if buf.strip():
            raise MalformedConcatenation(f"{source_name}: no XML declaration found")
        return
    yield buf


def split_bulk_file(content: bytes, source_name: str = "<bytes>") -> list[bytes]:
    """Split an in-memory bulk file (plain or zipped) into per-grant chunks."""
    data = _decompress(content, source_name)
    return list(iter_chunks(io.BytesIO(data), source_name))


# --- parsing -------------------------------------------------------------------

def year_from_filename(name: str | Path) -> int | None:
    m = _BULK_NAME.search(Path(name).name)
    return 2000 + int(m.group(1)) if m else None


def _make_parser() -> ET.XMLParser:
    parser = ET.XMLParser()
    # USPTO text uses HTML-style named entities declared only in the external DTD
    parser.entity.update({k: chr(v) for k, v in html.entities.name2codepoint.items()})
    return parser


def _collapse(text: str) -> str:
    return " ".join(text.split())


def _prose(elem: ET.Element) -> str:
    parts: list[str] = []

    def walk(e):
        if e.text:
            parts.append(e.text)
        for child in e:
            if child.tag not in _NON_TEXT:
                walk(child)
            if child.tail:
                parts.append(child.tail)

    walk(elem)
    return _collapse("".join(parts))


def _body(description: ET.Element | None) -> list:
    body: list = []
    if description is None:
        return body

    def walk(e):
        for child in e:
            if child.tag == "heading":
                body.append(Heading(_collapse("".join(child.itertext()))))
            elif child.tag == "p":
                num = child.get("num", "")
                try:
                    n = int(num)
                except ValueError:
                    n = sum(isinstance(b, Paragraph) for b in body)
                body.append(Paragraph(child.get("id", ""), max(n, 0), _prose(child)))
            else:
                walk(child)

    walk(description)
    return body


def parse_grant(xml_text: str | bytes, fallback_year: int | None = None, source: str | None = None,
                offset: int | None = None) -> GrantDocument:
    """Parse one grant document.

    ``doc_number`` is ``country + number + kind`` from the publication
    reference (e.g. ``US10842211B2``). The year comes from the publication
    date, else ``fallback_year``.
    """
    if isinstance(xml_text, str):
        xml_text = xml_text.encode("utf-8")
    try:
        parser = _make_parser()
        parser.feed(xml_text)
        root = parser.close()
    except ET.ParseError as exc:
        line, col = getattr(exc, "position", (None, None))
        raise MalformedXml(f"XML parse failure at line {line}, column {col}: {exc}", offset, source) from exc

    pub = root.find(".//publication-reference/document-id")
    if pub is None:
        pub = root.find(".//document-id")
    number = pub.findtext("doc-number", "").strip() if pub is not None else ""
    if not number:
        raise MissingDocNumber(f"no publication doc-number{f' in {source}' if source else ''}")
    country = pub.findtext("country", "").strip()
    kind = pub.findtext("kind", "").strip()
    date = pub.findtext("date", "").strip()
    year = int(date[:4]) if len(date) >= 4 and date[:4].isdigit() else fallback_year
    title = _collapse("".join(root.find(".//invention-title").itertext())) if root.find(".//invention-title") is not None else ""
    return GrantDocument(f"{country}{number}{kind}", title, tuple(_body(root.find(".//description"))), year)


# --- heading matching ------------------------------------------------------------

DEFAULT_HEADING_PATTERNS: Mapping[TagClass, frozenset[str]] = {
    TagClass.AEI: frozenset({"advantageous effects of invention", "advantageous effects"}),
    TagClass.TP: frozenset({"technical problem", "technical problems"}),
    TagClass.SP: frozenset({"solution to problem", "solutions to problem", "solution to the problem"}),
}

_PUNCT = str.maketrans({c: " " for c in string.punctuation})


def normalize_heading(text: str) -> str:
    return " ".join(text.translate(_PUNCT).lower().split())


def match_heading(heading_text: str, patterns: Mapping[TagClass, Iterable[str]] | None = None) -> TagClass | None:
    key = normalize_heading(heading_text)
    for tag, pats in (patterns or DEFAULT_HEADING_PATTERNS).items():
        if key in {normalize_heading(p) for p in pats}:
            return TagClass(tag)
    return None


def extract_tagged_segments(doc: GrantDocument, patterns=None) -> list[TaggedSegment]:
    """One segment per matched heading: the paragraphs up to the next heading of any kind."""
    segments: list[TaggedSegment] = []
    tag: TagClass | None = None
    heading = ""
    paras: list[str] = []

    def close():
        if tag is not None:
            segments.append(TaggedSegment(tag, tuple(paras), doc.doc_number, heading=heading))

    for elem in doc.body:
        if isinstance(elem, Heading):
            close()
            tag = match_heading(elem.text, patterns)
            heading = elem.text
            paras = []
        elif tag is not None:
            paras.append(elem.text)
    close()
    return segments


# --- bulk driver ------------------------------------------------------------------

@dataclass
class ParsedGrant:
    doc: GrantDocument
    segments: list[TaggedSegment]


def iter_bulk_grants(path: str | Path, patterns=None, errors: list | None = None) -> Iterator[ParsedGrant]:
    """Stream every grant in a bulk file with its segments.

    Chunks that fail to parse are skipped; their errors are appended to
    ``errors`` when given, otherwise raised.
    """
    path = Path(path)
    fallback = year_from_filename(path)
    offset = 0
    with open_bulk(path) as stream:
        for chunk in iter_chunks(stream, str(path)):
            try:
                doc = parse_grant(chunk, fallback, str(path), offset)
            except (MalformedXml, MissingDocNumber) as exc:
                if errors is None:
                    raise
                errors.append(exc)
            else:
                yield ParsedGrant(doc, extract_tagged_segments(doc, patterns))
            offset += len(chunk)


def dump_segments(grants: Iterable[ParsedGrant], fh) -> int:
    """Write one JSON object per segment; returns the number written."""
    n = 0
    for g in grants:
        for seg in g.segments:
            rec = {"doc_number": g.doc.doc_number, "title": g.doc.title, "tag": seg.tag.value,
                   "paragraphs": list(seg.paragraphs), "year": g.doc.year}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    return n


def bulk_files(directory: str | Path) -> list[Path]:
    return sorted(p for p in Path(directory).iterdir()
                  if p.is_file() and p.name.startswith("ipg") and p.suffix.lower() in (".xml", ".zip"))
