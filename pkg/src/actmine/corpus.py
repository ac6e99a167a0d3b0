"""Tagged-token interchange format: streaming reader, writer, sentence grouping.

The on-disk format is TSV, one token per line:

    doc_id <TAB> sent_id <TAB> token_idx <TAB> surface <TAB> lemma <TAB> pos

UTF-8, LF line endings, lines beginning with ``#`` are comments.  A corpus is
a single file or a directory of files processed in lexicographic filename
order.  Tokens arrive grouped by document; ``token_idx`` is the window
coordinate used by every distance computation downstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)


class PosTag(Enum):
    """Closed universal part-of-speech tag set.

    Tags outside this set are mapped to X by the reader, never rejected.
    """

    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    ADP = "ADP"
    DET = "DET"
    PRON = "PRON"
    PART = "PART"
    NUM = "NUM"
    CONJ = "CONJ"
    PRT = "PRT"
    X = "X"
    PUNCT = "PUNCT"


_TAG_BY_NAME = {t.value: t for t in PosTag}

POS_TAG_NAMES = frozenset(_TAG_BY_NAME)


def parse_tag(name: str) -> PosTag | None:
    """Exact-name tag lookup; returns None for names outside the closed set."""
    return _TAG_BY_NAME.get(name)


@dataclass(frozen=True, slots=True)
class TaggedToken:
    doc_id: str
    sent_id: int
    token_idx: int
    surface: str
    lemma: str
    pos: PosTag


@dataclass
class CorpusStats:
    total_tokens: int = 0
    total_docs: int = 0
    unknown_tags: int = 0
    files: int = 0


class CorpusError(Exception):
    """Base class for corpus access and format problems."""


class CorpusFormatError(CorpusError):
    """A malformed line, with the file and line number that caused it."""

    def __init__(self, message: str, source: str, line_no: int):
        super().__init__(f"{source}:{line_no}: {message}")
        self.source = source
        self.line_no = line_no


class EmptyCorpusError(CorpusError):
    """The corpus contained no tokens at all."""


def corpus_files(path: str | Path) -> list[Path]:
    """Resolve a corpus path to an ordered list of token files."""
    p = Path(path)
    if p.is_file():
        return [p]
    if p.is_dir():
        return sorted(child for child in p.iterdir() if child.is_file())
    raise CorpusError(f"no such corpus: {p}")


class CorpusReader:
    """Single-pass-at-a-time token stream over one file or a directory.

    Each iteration opens the files afresh and resets ``stats``; the stats are
    complete once the iterator is exhausted.  Memory use is bounded by one
    line of input regardless of corpus size.
    """

    def __init__(self, files: list[Path]):
        self.files = files
        self.stats = CorpusStats()

    def __iter__(self) -> Iterator[TaggedToken]:
        self.stats = CorpusStats(files=len(self.files))
        return self._tokens()

    def _tokens(self) -> Iterator[TaggedToken]:
        stats = self.stats
        tag_for = _TAG_BY_NAME.get
        x_tag = PosTag.X
        cur_doc: str | None = None
        finished_docs: set[str] = set()
        prev_sent = -1
        prev_idx = -1
        for f in self.files:
            source = str(f)
            with open(f, encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    line = line.rstrip("\n")
                    if not line or line.startswith("#"):
                        continue
                    fields = line.split("\t")
                    if len(fields) != 6:
                        raise CorpusFormatError(
                            f"expected 6 tab-separated fields, got {len(fields)}",
                            source, line_no)
                    doc_id, sent_s, idx_s, surface, lemma, pos_s = fields
                    try:
                        sent_id = int(sent_s)
                        token_idx = int(idx_s)
                    except ValueError:
                        raise CorpusFormatError(
                            f"non-integer sent_id/token_idx: {sent_s!r}/{idx_s!r}",
                            source, line_no) from None
                    if sent_id < 0 or token_idx < 0:
                        raise CorpusFormatError(
                            "negative sent_id or token_idx", source, line_no)
                    if not doc_id or not surface or not lemma:
                        raise CorpusFormatError(
                            "empty doc_id, surface or lemma field", source, line_no)
                    if lemma.lower() != lemma:
                        raise CorpusFormatError(
                            f"lemma must be lowercase: {lemma!r}", source, line_no)
                    pos = tag_for(pos_s)
                    if pos is None:
                        pos = x_tag
                        stats.unknown_tags += 1
                    if doc_id != cur_doc:
                        if doc_id in finished_docs:
                            raise CorpusFormatError(
                                f"document {doc_id!r} reappears after other documents",
                                source, line_no)
                        if cur_doc is not None:
                            finished_docs.add(cur_doc)
                        cur_doc = doc_id
                        stats.total_docs += 1
                        prev_sent = -1
                        prev_idx = -1
                    if token_idx <= prev_idx:
                        raise CorpusFormatError(
                            f"token_idx not strictly increasing within {doc_id!r}",
                            source, line_no)
                    if sent_id < prev_sent:
                        raise CorpusFormatError(
                            f"sent_id decreases within {doc_id!r}", source, line_no)
                    prev_idx = token_idx
                    prev_sent = sent_id
                    stats.total_tokens += 1
                    yield TaggedToken(doc_id, sent_id, token_idx, surface, lemma, pos)
        if stats.unknown_tags:
            log.warning("mapped %d unknown POS tags to X", stats.unknown_tags)
        if stats.total_tokens == 0:
            raise EmptyCorpusError("empty corpus: no tokens found")


def read_corpus(path: str | Path) -> CorpusReader:
    """Open a token stream over one interchange file or a directory of them."""
    return CorpusReader(corpus_files(path))


def sentences(tokens: Iterable[TaggedToken]) -> Iterator[list[TaggedToken]]:
    """Group a document-ordered token stream into per-sentence token lists."""
    cur: list[TaggedToken] = []
    cur_key: tuple[str, int] | None = None
    for tok in tokens:
        key = (tok.doc_id, tok.sent_id)
        if key != cur_key:
            if cur:
                yield cur
            cur = []
            cur_key = key
        cur.append(tok)
    if cur:
        yield cur


_FIELD_BANNED = ("\t", "\n", "\r")


def write_corpus(tokens: Iterable[TaggedToken], path: str | Path,
                 header: str | None = None) -> int:
    """Serialize tokens to one TSV file; returns the token count written."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for tok in tokens:
            for text in (tok.doc_id, tok.surface, tok.lemma):
                for ch in _FIELD_BANNED:
                    if ch in text:
                        raise CorpusError(
                            f"field contains tab or newline: {text!r}")
            fh.write(f"{tok.doc_id}\t{tok.sent_id}\t{tok.token_idx}"
                     f"\t{tok.surface}\t{tok.lemma}\t{tok.pos.value}\n")
            n += 1
    return n
