"""Synthetic tagged corpora with planted activity structure.

Each template plants three kinds of documents:

* object docs: the template's objects, then a pronoun-led activity
  sentence, all inside one co-occurrence window;
* sequence docs: the activity followed by its successor activity;
* affordance docs: each object as the subject of a characteristic verb.

Noise documents use a disjoint, digit-suffixed vocabulary at a configurable
token ratio, so planted signal stays recoverable but not trivially so.
Generation is deterministic for a given spec.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import TaggedToken, parse_tag, write_corpus

PARTICLES = frozenset({
    "up", "down", "on", "off", "in", "out", "over", "back",
    "along", "around", "away",
})
PRONOUNS = ("he", "she", "i", "we", "they")

_PERIOD = (".", ".", "PUNCT")


class SynthSpecError(Exception):
    pass


@dataclass(frozen=True)
class Template:
    objects: tuple[str, ...]
    activity: str
    next_activity: str | None = None
    affordance_verb: str | None = None
    count: int = 100


@dataclass(frozen=True)
class SynthSpec:
    templates: tuple[Template, ...]
    noise_ratio: float = 10.0
    seed: int = 20210
    files: int = 16
    span: int = 50


@dataclass
class SynthStats:
    docs: int = 0
    tokens: int = 0
    planted_tokens: int = 0
    noise_tokens: int = 0
    files: int = 0
    templates: int = 0


_DEFAULT_TEMPLATES = (
    Template(("stove", "pot", "spoon"), "cook", "taste", "burn"),
    Template(("bed", "alarm", "blanket"), "wake up", "make coffee", "sleep"),
    Template(("plate", "steak", "broccoli"), "eat food", "wash dish", "hold"),
    Template(("shampoo", "towel", "mirror"), "take shower", "brush hair", "hang"),
    Template(("car", "key", "engine"), "drive", "park", "start"),
    Template(("desk", "laptop", "keyboard"), "type", "send email", "open"),
    Template(("couch", "remote", "screen"), "watch movie", "fall asleep", "sit"),
    Template(("leash", "collar", "bone"), "walk dog", "feed dog", "pull"),
    Template(("oven", "flour", "sugar"), "bake bread", "frost donut", "heat"),
    Template(("guitar", "pick", "amp"), "play music", "sing along", "strum"),
    Template(("book", "lamp", "pillow"), "read", "turn page", "shine"),
    Template(("razor", "soap", "sink"), "shave", "rinse face", "drain"),
    Template(("pan", "egg", "bacon"), "fry breakfast", "drink juice", "sizzle"),
    Template(("phone", "charger", "case"), "answer call", "hang up", "ring"),
    Template(("wallet", "ticket", "gate"), "board train", "find seat", "swipe"),
    Template(("racket", "ball", "net"), "play tennis", "score point", "bounce"),
    Template(("kettle", "mug", "tea"), "boil water", "pour drink", "steam"),
    Template(("broom", "bucket", "mop"), "sweep floor", "dump trash", "scrub"),
    Template(("candle", "match", "cake"), "celebrate", "cut slice", "flicker"),
    Template(("grocery store", "cart", "list"), "buy milk", "carry bag", "push"),
)


def default_spec(instances: int = 72, noise_ratio: float = 10.0,
                 seed: int = 20210, files: int = 16,
                 span: int = 50) -> SynthSpec:
    templates = tuple(Template(t.objects, t.activity, t.next_activity,
                               t.affordance_verb, instances)
                      for t in _DEFAULT_TEMPLATES)
    return SynthSpec(templates, noise_ratio=noise_ratio, seed=seed,
                     files=files, span=span)


def _render_object(name: str) -> list[tuple[str, str, str]]:
    toks = [("the", "the", "DET")]
    for w in name.split():
        toks.append((w, w, "NOUN"))
    return toks


def _render_activity(label: str) -> list[tuple[str, str, str]]:
    """Tokens whose activity-pattern match carries exactly this label."""
    words = label.split()
    if not words:
        raise SynthSpecError("empty activity label")
    toks = [(words[0], words[0], "VERB")]
    in_object = False
    for w in words[1:]:
        if w in PARTICLES:
            if in_object:
                raise SynthSpecError(
                    f"activity {label!r}: particle after object noun")
            toks.append((w, w, "ADP"))
        else:
            if not in_object:
                toks.append(("the", "the", "DET"))
                in_object = True
            toks.append((w, w, "NOUN"))
    return toks


def _activity_sentence(label: str,
                       rng: random.Random) -> list[tuple[str, str, str]]:
    p = rng.choice(PRONOUNS)
    return [(p, p, "PRON")] + _render_activity(label) + [_PERIOD]


def _object_doc(t: Template, rng: random.Random) -> list[list]:
    sents = [_render_object(o) + [_PERIOD] for o in t.objects]
    sents.append(_activity_sentence(t.activity, rng))
    return sents


def _sequence_doc(t: Template, rng: random.Random) -> list[list]:
    return [_activity_sentence(t.activity, rng),
            _activity_sentence(t.next_activity, rng)]


def _affordance_doc(t: Template) -> list[list]:
    # only the first object carries the affordance verb: a verb paired with
    # the full object set would tie the planted activity under detect queries
    verb = t.affordance_verb
    return [_render_object(t.objects[0]) + [(verb, verb, "VERB"), _PERIOD]]


def _check_feasible(t: Template, span: int) -> None:
    if not t.objects:
        raise SynthSpecError(f"template {t.activity!r} has no objects")
    if t.count < 1:
        raise SynthSpecError(f"template {t.activity!r} has count < 1")
    lead = sum(len(_render_object(o)) + 1 for o in t.objects)
    if lead > span:
        raise SynthSpecError(
            f"template {t.activity!r}: objects span {lead} tokens, "
            f"more than the window of {span}")
    if t.next_activity is not None:
        first = len(_activity_sentence(t.activity, random.Random(0)))
        if first > span:
            raise SynthSpecError(
                f"template {t.activity!r}: activity sentence longer "
                f"than the window of {span}")


def _verify_planted(t: Template, span: int) -> None:
    """Scan one rendered instance of each doc kind with the real patterns."""
    from .aggregate import _co_occur_doc, _skip_gram_doc
    from .kb import _combined_compiled, normalize_object_label
    from .tcruntime import emit_pairs, scan_sentence

    compiled = _combined_compiled(span)
    rng = random.Random(0)

    def materialize(sents: list[list]) -> list[list[TaggedToken]]:
        out, idx = [], 0
        for si, sent in enumerate(sents):
            toks = []
            for surface, lemma, pos in sent:
                toks.append(TaggedToken("check", si, idx, surface, lemma,
                                        parse_tag(pos)))
                idx += 1
            out.append(toks)
        return out

    def matches(rule: str, sents) -> list:
        out = []
        for s in sents:
            out.extend(scan_sentence(compiled.rules[rule], s))
        return out

    sents = materialize(_object_doc(t, rng))
    nps = matches("np", sents)
    acts = matches("activity", sents)
    if [m.label for m in acts] != [t.activity]:
        raise SynthSpecError(
            f"template {t.activity!r}: activity sentence matched as "
            f"{[m.label for m in acts]!r}")
    got = {(normalize_object_label(a), b)
           for a, b in _co_occur_doc(nps, acts, span)}
    want = {(o, t.activity) for o in t.objects}
    if not want <= got:
        raise SynthSpecError(
            f"template {t.activity!r}: planted pairs {sorted(want - got)!r} "
            f"not recovered")

    if t.next_activity is not None:
        sents = materialize(_sequence_doc(t, rng))
        acts = matches("activity", sents)
        if [m.label for m in acts] != [t.activity, t.next_activity]:
            raise SynthSpecError(
                f"template {t.activity!r}: sequence doc matched as "
                f"{[m.label for m in acts]!r}")
        if (t.activity, t.next_activity) not in set(_skip_gram_doc(acts, span)):
            raise SynthSpecError(
                f"template {t.activity!r}: successor pair not recovered")

    if t.affordance_verb is not None:
        sents = materialize(_affordance_doc(t))
        got = set()
        for m in matches("svo", sents):
            got.update((normalize_object_label(a), b)
                       for a, b in emit_pairs(m, compiled.pair_shape))
        if (t.objects[0], t.affordance_verb) not in got:
            raise SynthSpecError(
                f"template {t.activity!r}: affordance pair "
                f"{(t.objects[0], t.affordance_verb)!r} not recovered")


class _NoiseSource:
    """Disjoint vocabulary: every noise word carries a digit suffix."""

    def __init__(self, rng: random.Random) -> None:
        self.rng = rng
        self.nouns = [f"widget{i}" for i in range(150)]
        self.verbs = [f"fiddle{i}" for i in range(60)]
        self.adjs = [f"murky{i}" for i in range(40)]
        self.advs = [f"oddly{i}" for i in range(30)]
        self.adps = sorted(PARTICLES)

    def _noun(self):
        w = self.rng.choice(self.nouns)
        return (w, w, "NOUN")

    def _verb(self):
        w = self.rng.choice(self.verbs)
        return (w, w, "VERB")

    def _adj(self):
        w = self.rng.choice(self.adjs)
        return (w, w, "ADJ")

    def _adv(self):
        w = self.rng.choice(self.advs)
        return (w, w, "ADV")

    def _adp(self):
        w = self.rng.choice(self.adps)
        return (w, w, "ADP")

    def _pron(self):
        w = self.rng.choice(PRONOUNS)
        return (w, w, "PRON")

    def _det(self):
        w = self.rng.choice(("the", "a"))
        return (w, w, "DET")

    def _num(self):
        w = str(self.rng.randint(2, 99))
        return (w, w, "NUM")

    def sentence(self) -> list[tuple[str, str, str]]:
        shape = self.rng.randrange(6)
        if shape == 0:
            toks = [self._pron(), self._verb(), self._det(), self._noun()]
        elif shape == 1:
            toks = [self._det(), self._adj(), self._noun(), self._verb(),
                    self._adp(), self._det(), self._noun()]
        elif shape == 2:
            toks = [self._det(), self._noun(), self._verb()]
        elif shape == 3:
            toks = [self._noun(), self._verb(), self._det(), self._noun()]
        elif shape == 4:
            toks = [self._adv(), self._pron(), self._verb(), self._adp()]
        else:
            toks = [self._num(), self._noun(), ("and", "and", "CONJ"),
                    self._noun()]
        return toks + [_PERIOD]

    def doc(self) -> list[list]:
        return [self.sentence() for _ in range(self.rng.randint(1, 3))]


def generate_corpus(spec: SynthSpec, out_dir: str | Path) -> SynthStats:
    """Write a synthetic corpus into out_dir as TSV shards."""
    if not spec.templates:
        raise SynthSpecError("spec has no templates")
    if spec.noise_ratio < 0:
        raise SynthSpecError("noise_ratio must be non-negative")
    if spec.files < 1:
        raise SynthSpecError("files must be positive")
    for t in spec.templates:
        _check_feasible(t, spec.span)
        _verify_planted(t, spec.span)

    rng = random.Random(spec.seed)
    docs: list[list[list]] = []
    planted = 0
    for t in spec.templates:
        for _ in range(t.count):
            batch = [_object_doc(t, rng)]
            if t.next_activity is not None:
                batch.append(_sequence_doc(t, rng))
            if t.affordance_verb is not None:
                batch.append(_affordance_doc(t))
            for d in batch:
                planted += sum(len(s) for s in d)
                docs.append(d)

    noise = _NoiseSource(rng)
    target = int(planted * spec.noise_ratio)
    noise_tokens = 0
    while noise_tokens < target:
        d = noise.doc()
        noise_tokens += sum(len(s) for s in d)
        docs.append(d)

    rng.shuffle(docs)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nfiles = min(spec.files, len(docs))
    buckets: list[list[TaggedToken]] = [[] for _ in range(nfiles)]
    for i, doc in enumerate(docs):
        doc_id = f"d{i:06d}"
        idx = 0
        bucket = buckets[i % nfiles]
        for si, sent in enumerate(doc):
            for surface, lemma, pos in sent:
                bucket.append(TaggedToken(doc_id, si, idx, surface, lemma,
                                          parse_tag(pos)))
                idx += 1
    for i, bucket in enumerate(buckets):
        write_corpus(bucket, out / f"synth-{i:03d}.tsv",
                     header=f"synthetic corpus shard {i}")

    return SynthStats(docs=len(docs), tokens=planted + noise_tokens,
                      planted_tokens=planted, noise_tokens=noise_tokens,
                      files=nfiles, templates=len(spec.templates))
