"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

from pathlib import Path

import pytest

from actmine.corpus import TaggedToken, parse_tag, write_corpus


def toks(spec: str, doc: str = "d", sent: int = 0,
         start: int = 0) -> list[TaggedToken]:
    """Build a sentence from "lemma/POS lemma/POS ..." shorthand."""
    out = []
    for i, part in enumerate(spec.split()):
        lemma, pos = part.rsplit("/", 1)
        tag = parse_tag(pos)
        assert tag is not None, f"bad tag in fixture: {part}"
        out.append(TaggedToken(doc, sent, start + i, lemma, lemma, tag))
    return out


def doc_tokens(sentences: list[str], doc: str = "d") -> list[TaggedToken]:
    """Several sentence specs as one document with contiguous token_idx."""
    out: list[TaggedToken] = []
    idx = 0
    for si, spec in enumerate(sentences):
        sent = toks(spec, doc=doc, sent=si, start=idx)
        idx += len(sent)
        out.extend(sent)
    return out


def write_docs(path: Path, docs: dict[str, list[str]]) -> Path:
    """Write {doc_id: [sentence specs]} to one interchange TSV file."""
    tokens: list[TaggedToken] = []
    for doc_id, sents in docs.items():
        tokens.extend(doc_tokens(sents, doc=doc_id))
    write_corpus(tokens, path)
    return path


@pytest.fixture
def tmp_corpus(tmp_path):
    def make(docs: dict[str, list[str]], name: str = "corpus.tsv") -> Path:
        return write_docs(tmp_path / name, docs)
    return make


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    rows = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"),
                          ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                rows.append((nodeid.split("::")[-1], label,
                             getattr(rep, "duration", 0.0)))
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, label, duration in sorted(rows):
            terminalreporter.write_line(f"{label}  {name}  ({duration:.2f}s)")
