"""Synthetic corpus generator: planted structure, noise, determinism."""

import filecmp

import pytest

from actmine.corpus import read_corpus
from actmine.kb import MineConfig, mine
from actmine.synth import (PRONOUNS, SynthSpec, SynthSpecError, SynthStats,
                           Template, default_spec, generate_corpus)
from reference import ref_mi_value

COOK = Template(("stove", "pot", "spoon"), "cook", "taste", "burn", count=40)


@pytest.fixture(scope="module")
def cook_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("cook")
    stats = generate_corpus(SynthSpec((COOK,), files=4), out)
    return out, stats


# ---------------------------------------------------------------------------
# spec validation

def test_rejects_empty_spec(tmp_path):
    with pytest.raises(SynthSpecError, match="no templates"):
        generate_corpus(SynthSpec(()), tmp_path)


def test_rejects_negative_noise(tmp_path):
    with pytest.raises(SynthSpecError, match="noise_ratio"):
        generate_corpus(SynthSpec((COOK,), noise_ratio=-1.0), tmp_path)


def test_rejects_zero_files(tmp_path):
    with pytest.raises(SynthSpecError, match="files"):
        generate_corpus(SynthSpec((COOK,), files=0), tmp_path)


def test_rejects_template_without_objects(tmp_path):
    spec = SynthSpec((Template((), "go"),))
    with pytest.raises(SynthSpecError, match="no objects"):
        generate_corpus(spec, tmp_path)


def test_rejects_zero_count(tmp_path):
    spec = SynthSpec((Template(("pan",), "fry", count=0),))
    with pytest.raises(SynthSpecError, match="count"):
        generate_corpus(spec, tmp_path)


def test_rejects_objects_wider_than_the_window(tmp_path):
    spec = SynthSpec((Template(("a", "b", "c"), "go"),), span=5)
    with pytest.raises(SynthSpecError, match="more than the window"):
        generate_corpus(spec, tmp_path)


def test_rejects_particle_after_object_noun(tmp_path):
    spec = SynthSpec((Template(("pan",), "flip egg over"),))
    with pytest.raises(SynthSpecError, match="particle after object noun"):
        generate_corpus(spec, tmp_path)


# ---------------------------------------------------------------------------
# the default template set

def test_default_spec_shape():
    spec = default_spec(instances=5)
    assert len(spec.templates) == 20
    assert all(t.count == 5 for t in spec.templates)
    assert all(len(t.objects) == 3 for t in spec.templates)
    activities = [t.activity for t in spec.templates]
    successors = [t.next_activity for t in spec.templates]
    assert len(set(activities)) == 20
    assert len(set(successors)) == 20
    assert not set(activities) & set(successors)


def test_default_templates_survive_their_own_verification(tmp_path):
    stats = generate_corpus(default_spec(instances=1, noise_ratio=0.0,
                                         files=2), tmp_path)
    assert stats.templates == 20
    assert stats.docs == 60  # object + sequence + affordance per template
    assert stats.noise_tokens == 0


# ---------------------------------------------------------------------------
# planted signal is exactly recoverable

def test_generated_corpus_revalidates(cook_corpus):
    out, stats = cook_corpus
    reader = read_corpus(out)
    for _ in reader:
        pass
    read_stats = reader.stats
    assert read_stats.total_tokens == stats.tokens
    assert read_stats.total_docs == stats.docs
    assert read_stats.unknown_tags == 0
    assert read_stats.files == stats.files == 4


def test_noise_meets_the_requested_ratio(cook_corpus):
    _, stats = cook_corpus
    assert stats.tokens == stats.planted_tokens + stats.noise_tokens
    assert stats.noise_tokens >= 10 * stats.planted_tokens


def test_planted_counts_come_back_exact(cook_corpus):
    out, stats = cook_corpus
    kb = mine(out, MineConfig(min_count=2))
    n = stats.tokens
    assert kb.meta.corpus_size == n

    # 40 object docs and 40 affordance docs mention the stove
    assert kb.object_freq.counts["stove"] == 80
    assert kb.object_freq.counts["pot"] == 40
    assert kb.object_freq.counts["spoon"] == 40
    # cooking happens in the object docs and again in the sequence docs
    assert kb.activity_freq.counts["cook"] == 80
    assert kb.activity_freq.counts["taste"] == 40
    assert kb.activity_freq.counts["burn"] == 40

    assert kb.activity_object.values[("stove", "cook")] == pytest.approx(
        ref_mi_value(40, 80, 80, n, 50, 10.0), abs=1e-9)
    assert kb.activity_object.values[("pot", "cook")] == pytest.approx(
        ref_mi_value(40, 40, 80, n, 50, 10.0), abs=1e-9)
    assert kb.activity_activity.values[("cook", "taste")] == pytest.approx(
        ref_mi_value(40, 80, 40, n, 50, 10.0), abs=1e-9)
    assert kb.object_affordance.values[("stove", "burn")] == pytest.approx(
        ref_mi_value(40, 40, 40, n, 50, 10.0), abs=1e-9)
    # the succession is ordered: tasting never precedes cooking
    assert ("taste", "cook") not in kb.activity_activity.values


def test_planted_labels_stay_clean(cook_corpus):
    out, _ = cook_corpus
    kb = mine(out, MineConfig(min_count=2))
    for label in kb.activity_freq.counts:
        assert label.split()[0] not in PRONOUNS
    for label in kb.object_freq.counts:
        assert not label.startswith("the ")


def test_noise_vocabulary_is_disjoint(cook_corpus):
    out, _ = cook_corpus
    kb = mine(out, MineConfig(min_count=2))
    planted = {"stove", "pot", "spoon"}
    noise_objects = set(kb.object_freq.counts) - planted
    assert noise_objects  # plenty of noise survives min_count=2
    assert all(any(c.isdigit() for c in label) for label in noise_objects)


# ---------------------------------------------------------------------------
# determinism

def test_same_spec_writes_identical_bytes(tmp_path):
    spec = SynthSpec((COOK,), files=3, seed=99)
    d1, d2 = tmp_path / "one", tmp_path / "two"
    s1 = generate_corpus(spec, d1)
    s2 = generate_corpus(spec, d2)
    assert s1 == s2
    assert isinstance(s1, SynthStats)
    names = sorted(p.name for p in d1.iterdir())
    assert names == sorted(p.name for p in d2.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(d1, d2, names, shallow=False)
    assert match == names and not mismatch and not errors


def test_different_seeds_differ(tmp_path):
    d1, d2 = tmp_path / "one", tmp_path / "two"
    generate_corpus(SynthSpec((COOK,), files=1, seed=1), d1)
    generate_corpus(SynthSpec((COOK,), files=1, seed=2), d2)
    assert (d1 / "synth-000.tsv").read_bytes() != \
        (d2 / "synth-000.tsv").read_bytes()
