import itertools
import random

import pytest

from normbench.errors import ConfigError
from normbench.records import dumps
from normbench.storygen import (
    GenConfig,
    TaskScript,
    agent_chain,
    check_chain,
    compose_story,
    generate_corpus,
    generate_story,
    generate_task,
    inject_noise,
    interleave,
)
from normbench.world import (
    AgentSpec,
    Event,
    EventKind,
    NoiseKind,
    Role,
    Room,
    Vocabulary,
    replay,
)


def linear_extensions(chains):
    """Brute force: every permutation of all events that keeps each chain in order."""
    events = [e for c in chains for e in c]
    out = set()
    for perm in itertools.permutations(events):
        if all([e for e in perm if e in c] == list(c) for c in chains):
            out.add(perm)
    return out


def tokens(n_chains, length):
    return [tuple(f"{'ab'[i]}{j}" for j in range(1, length + 1)) for i in range(n_chains)]


def test_brute_force_count_two_by_two():
    assert len(linear_extensions(tokens(2, 2))) == 6


def test_minimal_vocabulary_task():
    tiny = Vocabulary([AgentSpec("Solo", Role.MOTHER)], [Room("den", "den")])
    task = generate_task(random.Random(0), tiny)
    assert task.per_agent_chains == {"Solo": (Event.enter("Solo", "den"), Event.exit("Solo", "den"))}
    assert task.observations == ()


def test_task_rejects_empty_vocabulary():
    with pytest.raises(ConfigError):
        generate_task(random.Random(0), Vocabulary([AgentSpec("A", Role.MOTHER)], []))


def test_default_task_shape(vocab):
    task = generate_task(random.Random(3), vocab)
    assert 1 <= len(task.per_agent_chains) <= 2
    for chain in task.per_agent_chains.values():
        assert 2 <= len(chain) <= 6
        assert chain[0].kind is EventKind.ENTER and chain[-1].kind is EventKind.EXIT
    assert len(task.observations) <= 2
    # find a seed giving the two-agent opening shape: mover enters and moves, other enters and exits
    for seed in range(50):
        t = generate_task(random.Random(seed), vocab)
        chains = list(t.per_agent_chains.values())
        if len(chains) == 2 and chains[0][1].kind is EventKind.MOVE:
            assert chains[1][0].room == chains[0][0].room
            assert chains[1][1].kind is EventKind.EXIT
            break
    else:
        pytest.fail("no two-agent mover/wanderer task in 50 seeds")


def test_ten_thousand_tasks_are_consistent(vocab):
    rng = random.Random(11)
    for _ in range(10_000):
        task = generate_task(rng, vocab)
        for chain in task.per_agent_chains.values():
            assert check_chain(chain, vocab)
            assert 2 <= len(chain) <= 6
        assert len(task.observations) <= 2


def test_interleave_single_chain_identity(vocab):
    chain = (Event.enter("Emily", "study"), Event.move("Emily", "fork", "white_crate"),
             Event.exit("Emily", "study"))
    task = TaskScript(0, {"Emily": chain})
    assert interleave([task], random.Random(1)) == list(chain)


def test_interleave_covers_all_two_by_two_extensions():
    a = (Event.enter("Emily", "study"), Event.exit("Emily", "study"))
    b = (Event.enter("Peter", "sunroom"), Event.exit("Peter", "sunroom"))
    expected = linear_extensions([a, b])
    rng = random.Random(5)
    seen = {tuple(interleave([TaskScript(0, {"Emily": a, "Peter": b})], rng)) for _ in range(10_000)}
    assert seen == expected


def test_sample_projection_onto_peter(sample):
    peter = [e.text for e in sample.events if e.agent == "Peter"]
    assert peter == [
        "Peter entered the sunroom.", "Peter exited the sunroom.", "Peter entered the study.",
        "Peter exited the study.", "Peter entered the basement.", "Peter moved the hat to the red carpet.",
        "Peter exited the basement.",
    ]


def test_noise_rate_zero_is_identity(vocab):
    events = [Event.enter("Ann", "study"), Event.exit("Ann", "study")]
    assert inject_noise(events, random.Random(0), GenConfig(noise_rate=0.0)) == events


def test_noise_rate_one_fills_every_slot():
    events = [Event.enter("Ann", "study"), Event.exit("Ann", "study"), Event.enter("Ann", "sunroom")]
    cfg = GenConfig(noise_rate=1.0, noise_kinds=frozenset({NoiseKind.PHONE_RANG}))
    out = inject_noise(events, random.Random(0), cfg)
    assert len(out) == 7
    assert [e.kind for e in out[::2]] == [EventKind.NOISE] * 4
    assert out[1::2] == events


def test_noise_respects_cap():
    events = [Event.enter("Ann", "study")] * 29
    cfg = GenConfig(noise_rate=1.0)
    assert len(inject_noise(events, random.Random(0), cfg)) == 30


def test_sample_has_two_separated_rings(sample):
    rings = [e.index for e in sample.events if e.text == "Phone rang."]
    assert len(rings) == 2 and rings[1] - rings[0] > 1


def test_config_validation():
    with pytest.raises(ConfigError):
        GenConfig(tasks_per_story=5)
    with pytest.raises(ConfigError):
        GenConfig(noise_rate=1.5)


def test_corpus_sizes(world):
    corpus = generate_corpus(GenConfig(seed=1, stories_per_task_count=1), *world)
    assert [s.task_count for s in corpus] == [1, 2, 3, 4]
    assert len({s.id for s in corpus}) == 4


def test_corpus_deterministic(world):
    a = generate_corpus(GenConfig(seed=42, stories_per_task_count=5), *world)
    b = generate_corpus(GenConfig(seed=42, stories_per_task_count=5), *world)
    c = generate_corpus(GenConfig(seed=43, stories_per_task_count=5), *world)
    assert [dumps(s.to_record()) for s in a] == [dumps(s.to_record()) for s in b]
    assert a != c


def test_recorded_seed_regenerates_story(world, corpus):
    for story in corpus[::7]:
        again, _ = compose_story(story.id, story.seed, story.task_count, GenConfig(), *world)
        assert again == story


@pytest.mark.parametrize("extension", [False, True])
def test_generated_story_properties(world, extension):
    vocab, plan = world
    cfg = GenConfig(seed=9, enable_extension_events=extension)
    for tc in (1, 2, 3, 4):
        for i in range(40):
            story, tasks = generate_story(9, tc, i, cfg, vocab, plan)
            assert 6 <= len(story.events) <= 30
            assert not replay(story, vocab, floor_plan=plan)[-1].inconsistency_flags
            for agent in {a for t in tasks for a in t.per_agent_chains}:
                projected = [e for e in story.events
                             if e.agent == agent and e.kind in (EventKind.ENTER, EventKind.EXIT, EventKind.MOVE)]
                assert projected == agent_chain(tasks, agent)
            if not extension:
                assert not any(e.kind in (EventKind.KNOCK, EventKind.PICKUP) for e in story.events)
            else:
                for k, e in enumerate(story.events):
                    if e.kind is EventKind.PICKUP:
                        assert story.events[k - 1].noise is NoiseKind.PHONE_RANG


def test_removing_noise_gives_valid_interleaving(world, corpus):
    vocab, plan = world
    for story in corpus:
        _, tasks = generate_story(7, story.task_count, int(story.id.split("-")[1]), GenConfig(), vocab, plan)
        plain = [e for e in story.events if e.kind is not EventKind.NOISE]
        observations = [o for t in tasks for o in t.observations]
        assert len(plain) == sum(len(c) for t in tasks for c in t.per_agent_chains.values()) + len(observations)
        for agent in vocab.agents:
            assert [e for e in plain if e.agent == agent.name] == agent_chain(tasks, agent.name)
