"""Knowledge bases: canonical mining scripts, the miner, the container format.

Mining runs three pipelines over one corpus pass:

* object-activity: windowed co-occurrence of noun phrases with pronoun-led
  verb phrases;
* object-affordance: subject/object nouns paired with their verb inside
  svo-shaped matches;
* activity-activity: ordered skip-grams of activities, feeding prediction.

All three share one window span and one smoothing constant.  The saved
container is deterministic: the same corpus and config always produce
byte-identical files, regardless of shard count.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import reduce
from pathlib import Path

from .aggregate import (FreqTable, MiTable, PairTable, _co_occur_doc,
                        _skip_gram_doc, merge, mi, prune_pairs)
from .corpus import (CorpusReader, EmptyCorpusError, corpus_files, sentences)
from .tclang import (CheckedProgram, CoOccur, Freq, Mi, RuleRef, SkipGram,
                     TcProgram, check_program, parse_program)
from .tcruntime import (CompiledProgram, ContractError, compile_program,
                        emit_pairs, scan_corpus_sentences, scan_sentence)
from .vsm import VectorModel, build_model

log = logging.getLogger(__name__)

# The three mining scripts.  The activity rule drops the subject pronoun and
# any determiner from its label; noun-phrase labels keep their determiner at
# match time and normalize_object_label strips it before counting.
ACTIVITY_OBJECT_SCRIPT = """\
human_pronoun = "he" | "she" | "i" | "we" | "they"
np = [DET]? ([ADJ]- [NOUN])+
obj = [DET]- ([ADJ]- [NOUN])+
activity = human_pronoun- ([VERB] [ADP]?)+ obj?
MI(freq(co-occur(np, activity, 50)))
"""

OBJECT_AFFORDANCE_SCRIPT = """\
np = [DET]? ([ADJ]- [NOUN])+
vp = ([VERB] [ADP]?)+
svo = np vp np?
MI(freq(svo))
"""

ACTIVITY_ACTIVITY_SCRIPT = """\
human_pronoun = "he" | "she" | "i" | "we" | "they"
obj = [DET]- ([ADJ]- [NOUN])+
activity = human_pronoun- ([VERB] [ADP]?)+ obj?
MI(freq(skip-gram(activity, 2, 50)))
"""

# Lemmas commonly tagged DET; object labels never start with one of these.
_DET_LEMMAS = frozenset({
    "the", "a", "an", "this", "that", "these", "those", "some", "any",
    "no", "every", "each", "another", "either", "neither", "both", "all",
    "my", "your", "his", "her", "its", "our", "their",
})


def normalize_object_label(label: str) -> str:
    """Lowercase an object label and strip leading determiner lemmas."""
    words = label.lower().split()
    start = 0
    while start < len(words) - 1 and words[start] in _DET_LEMMAS:
        start += 1
    return " ".join(words[start:])

CANONICAL_SCRIPTS = {
    "activity_object": ACTIVITY_OBJECT_SCRIPT,
    "object_affordance": OBJECT_AFFORDANCE_SCRIPT,
    "activity_activity": ACTIVITY_ACTIVITY_SCRIPT,
}

KIND_DETECT = "object-activity"
KIND_AFFORDANCE = "object-affordance"
KIND_PREDICT = "activity-prediction"

FORMAT_NAME = "actmine-kb"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class MineConfig:
    span: int = 50
    k: float = 10.0
    min_count: int = 2
    shards: int = 1
    workers: int = 1
    built_at: str = ""  # injectable so identical runs stay byte-identical


@dataclass
class KbMeta:
    corpus_size: int
    total_docs: int
    span: int
    k: float
    min_count: int
    script_hashes: dict[str, str]
    built_at: str = ""


@dataclass
class KnowledgeBase:
    activity_object: MiTable
    object_affordance: MiTable
    activity_activity: MiTable
    activity_freq: FreqTable
    object_freq: FreqTable
    meta: KbMeta

    def models(self) -> dict[str, VectorModel]:
        cached = getattr(self, "_models", None)
        if cached is None:
            cached = {
                KIND_DETECT: build_model(self.activity_object, KIND_DETECT),
                KIND_AFFORDANCE: build_model(self.object_affordance,
                                             KIND_AFFORDANCE),
                KIND_PREDICT: build_model(self.activity_activity, KIND_PREDICT),
            }
            self._models = cached
        return cached


class KbError(Exception):
    """Base class for knowledge base container problems."""


class KbFormatError(KbError):
    pass


class KbVersionError(KbError):
    pass


class KbChecksumError(KbError):
    pass


def _respan(agg, span: int):
    if isinstance(agg, Mi):
        return replace(agg, inner=_respan(agg.inner, span))
    if isinstance(agg, Freq):
        return replace(agg, source=_respan(agg.source, span))
    if isinstance(agg, CoOccur):
        return replace(agg, span=span)
    if isinstance(agg, SkipGram):
        return replace(agg, span=span)
    return agg


def canonical_program(name: str, span: int = 50) -> CheckedProgram:
    """Parse and check one canonical script, rewriting its window span."""
    prog = parse_program(CANONICAL_SCRIPTS[name])
    if span != 50:
        prog = TcProgram(prog.rules, _respan(prog.pipeline, span))
    return check_program(prog)


_SCAN_RULES = ("np", "activity", "svo")


def _combined_compiled(span: int) -> CompiledProgram:
    """One compiled rule set covering all three canonical pipelines."""
    checked = [canonical_program(name, span) for name in CANONICAL_SCRIPTS]
    rules = {}
    order: list[str] = []
    for ch in checked:
        for name in ch.rule_order:
            if name in rules:
                if rules[name] != ch.rules[name]:
                    raise ContractError(
                        f"canonical scripts disagree on rule {name!r}")
            else:
                rules[name] = ch.rules[name]
                order.append(name)
    combo = CheckedProgram(rules=rules, rule_order=tuple(order),
                           pipeline=checked[0].pipeline,
                           scan_rules=_SCAN_RULES,
                           pair_shape=checked[1].pair_shape)
    return compile_program(combo)


@dataclass
class _ShardCounts:
    tokens: int = 0
    docs: int = 0
    np_freq: dict = field(default_factory=dict)
    act_freq: dict = field(default_factory=dict)
    svo_a: dict = field(default_factory=dict)
    svo_b: dict = field(default_factory=dict)
    pairs_ao: dict = field(default_factory=dict)
    pairs_aff: dict = field(default_factory=dict)
    pairs_aa: dict = field(default_factory=dict)


def _mine_shard(args: tuple[tuple[str, ...], int]) -> _ShardCounts:
    """Count one shard of corpus files.  Top level so worker processes can run it."""
    files, span = args
    compiled = _combined_compiled(span)
    shape = compiled.pair_shape
    reader = CorpusReader([Path(f) for f in files])
    c = _ShardCounts()
    np_freq, act_freq = c.np_freq, c.act_freq
    svo_a, svo_b = c.svo_a, c.svo_b
    pairs_ao, pairs_aff, pairs_aa = c.pairs_ao, c.pairs_aff, c.pairs_aa
    a_rule = shape.a_rule
    norm = normalize_object_label
    try:
        for _, found in scan_corpus_sentences(compiled, sentences(reader),
                                              _SCAN_RULES):
            nps = [replace(m, label=norm(m.label)) for m in found["np"]
                   if m.label]
            acts = found["activity"]
            for m in nps:
                np_freq[m.label] = np_freq.get(m.label, 0) + 1
            for m in acts:
                lbl = m.label
                if lbl:
                    act_freq[lbl] = act_freq.get(lbl, 0) + 1
            for m in found["svo"]:
                for rname, lbl in m.sublabels:
                    if not lbl:
                        continue
                    if rname == a_rule:
                        lbl = norm(lbl)
                        svo_a[lbl] = svo_a.get(lbl, 0) + 1
                    else:
                        svo_b[lbl] = svo_b.get(lbl, 0) + 1
                for a, b in emit_pairs(m, shape):
                    pair = (norm(a), b)
                    pairs_aff[pair] = pairs_aff.get(pair, 0) + 1
            if nps and acts:
                for pair in _co_occur_doc(nps, acts, span):
                    pairs_ao[pair] = pairs_ao.get(pair, 0) + 1
            if len(acts) > 1:
                for pair in _skip_gram_doc(acts, span):
                    pairs_aa[pair] = pairs_aa.get(pair, 0) + 1
    except EmptyCorpusError:
        pass  # an empty shard is fine; mine() checks the merged total
    c.tokens = reader.stats.total_tokens
    c.docs = reader.stats.total_docs
    return c


def _trim(table: MiTable) -> MiTable:
    """Restrict marginals to the labels that actually appear in pairs."""
    la = {a for a, _ in table.values}
    lb = {b for _, b in table.values}
    return MiTable(values=table.values,
                   marginals_a={l: c for l, c in table.marginals_a.items()
                                if l in la},
                   marginals_b={l: c for l, c in table.marginals_b.items()
                                if l in lb},
                   span=table.span, ordered=table.ordered,
                   corpus_size=table.corpus_size, k=table.k)


def _freq_table(counts: dict[str, int], min_count: int) -> FreqTable:
    kept = {l: c for l, c in counts.items() if c >= min_count}
    return FreqTable(counts=kept, total=sum(kept.values()))


def mine(corpus: str | Path, config: MineConfig | None = None) -> KnowledgeBase:
    """Run the three canonical pipelines over a corpus."""
    cfg = config or MineConfig()
    files = corpus_files(corpus)
    shards = max(1, cfg.shards)
    parts = [tuple(str(f) for f in files[i::shards]) for i in range(shards)]
    work = [(p, cfg.span) for p in parts if p]
    if cfg.workers > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(work))) as ex:
            counts = list(ex.map(_mine_shard, work))
    else:
        counts = [_mine_shard(w) for w in work]

    ao = reduce(merge, [PairTable(c.pairs_ao, dict(c.np_freq), dict(c.act_freq),
                                  cfg.span, False, c.tokens) for c in counts])
    aff = reduce(merge, [PairTable(c.pairs_aff, dict(c.svo_a), dict(c.svo_b),
                                   cfg.span, True, c.tokens) for c in counts])
    aa = reduce(merge, [PairTable(c.pairs_aa, dict(c.act_freq), dict(c.act_freq),
                                  cfg.span, True, c.tokens) for c in counts])
    if ao.corpus_size == 0:
        raise EmptyCorpusError("empty corpus: no tokens found")
    if not (ao.pair_counts or aff.pair_counts or aa.pair_counts):
        log.warning("corpus produced no pattern matches; knowledge base "
                    "will be empty")

    meta = KbMeta(
        corpus_size=ao.corpus_size,
        total_docs=sum(c.docs for c in counts),
        span=cfg.span, k=cfg.k, min_count=cfg.min_count,
        script_hashes={name: hashlib.sha256(src.encode()).hexdigest()
                       for name, src in CANONICAL_SCRIPTS.items()},
        built_at=cfg.built_at,
    )
    return KnowledgeBase(
        activity_object=_trim(mi(prune_pairs(ao, cfg.min_count), cfg.k)),
        object_affordance=_trim(mi(prune_pairs(aff, cfg.min_count), cfg.k)),
        activity_activity=_trim(mi(prune_pairs(aa, cfg.min_count), cfg.k)),
        activity_freq=_freq_table(ao.marginals_b, cfg.min_count),
        object_freq=_freq_table(ao.marginals_a, cfg.min_count),
        meta=meta,
    )


# ---------------------------------------------------------------------------
# Container format (documented in docs/kb-format.md)

def _table_to_obj(t: MiTable) -> dict:
    dims = sorted({a for a, _ in t.values})
    didx = {d: i for i, d in enumerate(dims)}
    by_row: dict[str, list[list]] = {}
    for (a, b), v in t.values.items():
        by_row.setdefault(b, []).append([didx[a], v])
    rows = [[label, t.marginals_b.get(label, 0), sorted(by_row[label])]
            for label in sorted(by_row)]
    return {
        "span": t.span, "ordered": t.ordered, "corpus_size": t.corpus_size,
        "k": t.k, "dims": dims,
        "dim_freqs": [t.marginals_a.get(d, 0) for d in dims],
        "rows": rows,
    }


def _table_from_obj(obj: dict) -> MiTable:
    dims = obj["dims"]
    values: dict[tuple[str, str], float] = {}
    marginals_b: dict[str, int] = {}
    for label, freq_b, entries in obj["rows"]:
        marginals_b[label] = freq_b
        for di, v in entries:
            values[(dims[di], label)] = v
    return MiTable(values=values,
                   marginals_a=dict(zip(dims, obj["dim_freqs"])),
                   marginals_b=marginals_b,
                   span=obj["span"], ordered=obj["ordered"],
                   corpus_size=obj["corpus_size"], k=obj["k"])


def _freq_to_obj(t: FreqTable) -> dict:
    return {"total": t.total, "counts": dict(sorted(t.counts.items()))}


def save(kb: KnowledgeBase, path: str | Path) -> None:
    """Write a deterministic, checksummed container file."""
    body = {
        "meta": {
            "corpus_size": kb.meta.corpus_size,
            "total_docs": kb.meta.total_docs,
            "span": kb.meta.span,
            "k": kb.meta.k,
            "min_count": kb.meta.min_count,
            "script_hashes": kb.meta.script_hashes,
            "built_at": kb.meta.built_at,
        },
        "tables": {
            "activity_object": _table_to_obj(kb.activity_object),
            "object_affordance": _table_to_obj(kb.object_affordance),
            "activity_activity": _table_to_obj(kb.activity_activity),
        },
        "activity_freq": _freq_to_obj(kb.activity_freq),
        "object_freq": _freq_to_obj(kb.object_freq),
    }
    payload = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    payload += b"\n"
    header = json.dumps(
        {"format": FORMAT_NAME, "version": FORMAT_VERSION,
         "sha256": hashlib.sha256(payload).hexdigest()},
        sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(header + b"\n" + payload)


def load(path: str | Path) -> KnowledgeBase:
    """Read a container file, verifying version and checksum."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise KbError(f"cannot read knowledge base: {e}") from e
    nl = data.find(b"\n")
    if nl < 0:
        raise KbFormatError("not a knowledge base file: missing header line")
    try:
        header = json.loads(data[:nl])
    except ValueError:
        raise KbFormatError("not a knowledge base file: bad header") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
        raise KbFormatError("not a knowledge base file")
    if header.get("version") != FORMAT_VERSION:
        raise KbVersionError(
            f"unsupported container version {header.get('version')!r}, "
            f"expected {FORMAT_VERSION}")
    payload = data[nl + 1:]
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header.get("sha256"):
        raise KbChecksumError("checksum mismatch: file corrupt or truncated")
    body = json.loads(payload)
    meta = KbMeta(**body["meta"])
    tables = body["tables"]
    return KnowledgeBase(
        activity_object=_table_from_obj(tables["activity_object"]),
        object_affordance=_table_from_obj(tables["object_affordance"]),
        activity_activity=_table_from_obj(tables["activity_activity"]),
        activity_freq=FreqTable(**body["activity_freq"]),
        object_freq=FreqTable(**body["object_freq"]),
        meta=meta,
    )
