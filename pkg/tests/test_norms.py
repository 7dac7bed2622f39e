import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from naive_oracle import check as naive_check
from normbench.errors import ConfigError
from normbench.norms import (
    NORMS,
    Category,
    Kind,
    Verdict,
    closest_to_phone,
    evaluate_all,
    evaluate_norm,
    normalize,
)
from normbench.world import Event, EventKind, Story, replay

from conftest import FIXTURES

HAND = json.loads((FIXTURES / "hand_judgements.json").read_text())["cases"]


def test_norm_table():
    assert [n.id for n in NORMS] == list(range(1, 11))
    assert {n.id for n in NORMS if n.category is Category.GENERIC} == set(range(1, 7))
    assert {n.id for n in NORMS if n.kind is Kind.PROHIBITION} == {1, 6, 7, 8, 10}
    assert {n.id for n in NORMS if n.kind is Kind.OBLIGATION} == {2, 3, 4, 5, 9}
    assert NORMS[0].text == "You should not enter an occupied bathroom."


@pytest.mark.parametrize("verdict,binary", [
    (Verdict.VIOLATED, "yes"),
    (Verdict.NOT_VIOLATED, "no"),
    (Verdict.CANNOT_BE_DETERMINED, "no"),
    (Verdict.NOT_APPLICABLE, "no"),
])
def test_normalize(verdict, binary):
    assert normalize(verdict) == binary == verdict.binary


@pytest.mark.parametrize("case", HAND, ids=[c["story_id"] for c in HAND])
def test_hand_derived(case, vocab, plan):
    story = Story.from_lines(case["story_id"], case["lines"], vocab)
    for norm_id, (verdict, evidence) in case["expected"].items():
        j = evaluate_norm(story, int(norm_id), vocab, plan)
        assert (j.verdict.value, list(j.evidence)) == (verdict, evidence), norm_id


def test_sample_key_verdicts(sample, vocab, plan):
    by_id = {j.norm_id: j for j in evaluate_all(sample, vocab, plan)}
    assert by_id[10].verdict is Verdict.NOT_VIOLATED
    assert by_id[2].verdict is Verdict.VIOLATED
    assert "Emily moved the tomato to the white crate." in [sample.events[i].text for i in by_id[2].evidence]
    assert by_id[6].verdict is Verdict.VIOLATED


def test_empty_story_all_not_applicable(vocab, plan):
    judgements = evaluate_all(Story("empty", 0, 0, ()), vocab, plan)
    assert [j.verdict for j in judgements] == [Verdict.NOT_APPLICABLE] * 10


def test_unknown_norm(sample, vocab, plan):
    with pytest.raises(ConfigError):
        evaluate_norm(sample, 11, vocab, plan)


def test_judgement_invariants(corpus, vocab, plan):
    for story in corpus:
        for j in evaluate_all(story, vocab, plan):
            if j.verdict is Verdict.VIOLATED:
                assert j.evidence
            if j.verdict is Verdict.NOT_APPLICABLE:
                assert not j.evidence
            assert j.rationale


def test_closest_to_phone(sample, vocab, plan):
    trace = replay(sample, vocab, floor_plan=plan)
    assert closest_to_phone(trace[10], plan) == ["Ann"]
    assert closest_to_phone(trace[0], plan) == ["Alexander", "Ann", "Emily", "Peter"]


def test_tied_ring_still_violated(story_of, vocab, plan):
    j = evaluate_norm(story_of("Phone rang."), 5, vocab, plan)
    assert j.verdict is Verdict.VIOLATED
    assert "tied" in j.rationale


def test_oracle_matches_naive_checker(corpus, vocab, plan):
    for story in corpus:
        ref = naive_check(story.to_record())
        for j in evaluate_all(story, vocab, plan):
            assert (j.verdict.value, list(j.evidence)) == ref[j.norm_id], (story.id, j.norm_id)


def test_evaluate_all_equals_per_norm(corpus, vocab, plan):
    for story in corpus[::5]:
        assert evaluate_all(story, vocab, plan) == [evaluate_norm(story, n, vocab, plan) for n in NORMS]


def test_closed_world_bathroom_deletion(world):
    vocab, plan = world
    from normbench.storygen import GenConfig, generate_corpus
    hits = 0
    for story in generate_corpus(GenConfig(seed=3), vocab, plan):
        if evaluate_norm(story, 1, vocab, plan).verdict is Verdict.NOT_APPLICABLE:
            continue
        hits += 1
        kept = [e for e in story.events if "bathroom" not in e.rooms_mentioned(vocab)]
        pruned = Story.build(story.id, kept, vocab)
        assert evaluate_norm(pruned, 1, vocab, plan).verdict is Verdict.NOT_APPLICABLE
    assert hits > 0


@settings(max_examples=150, deadline=None)
@given(data=st.data())
def test_appending_never_makes_violation_inapplicable(data, corpus, vocab, plan):
    a = data.draw(st.sampled_from(corpus))
    b = data.draw(st.sampled_from(corpus))
    cut = data.draw(st.integers(0, len(b.events)))
    longer = Story.build("x", [*a.events, *b.events[:cut]], vocab)
    for before, after in zip(evaluate_all(a, vocab, plan), evaluate_all(longer, vocab, plan)):
        if before.verdict is Verdict.VIOLATED:
            assert after.verdict is not Verdict.NOT_APPLICABLE


@settings(max_examples=150, deadline=None)
@given(data=st.data())
def test_evidence_points_at_trigger_events(data, corpus, vocab, plan):
    story = data.draw(st.sampled_from(corpus))
    trace = replay(story, vocab, floor_plan=plan)
    for j in evaluate_all(story, vocab, plan):
        for k in j.evidence:
            e = story.events[k]
            if j.norm_id in (1, 3, 7, 8, 10):
                assert e.kind is EventKind.ENTER
            elif j.norm_id in (2, 4, 6):
                assert e.item is not None
            elif j.norm_id == 5:
                assert e.text == "Phone rang."
            elif j.norm_id == 9:
                room = "workshop"
                inside = {a for a, r in trace[k + 1].agent_room.items() if r == room}
                assert inside and all(vocab.agent(a).is_child for a in inside)


def test_pure_function(corpus, vocab, plan):
    story = corpus[17]
    twin = Story.build("twin", [Event(e.kind, e.agent, e.room, e.item, e.container, e.noise)
                                for e in story.events], vocab)
    assert evaluate_all(story, vocab, plan) == evaluate_all(twin, vocab, plan)
