"""Ground-truth norm monitor.

Each of the ten household norms is a small incremental monitor that sees
every event together with the world state just before and just after it.
Under the closed-world premise (anything not in the story did not happen),
a monitor ends in one of three verdicts: violated, not violated, or not
applicable when nothing in the story triggers the norm.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Sequence

from .errors import ConfigError
from .world import (
    EventKind,
    FloorPlan,
    NoiseKind,
    Role,
    Story,
    Vocabulary,
    WorldState,
    apply_event,
    initial_state,
    occupants,
)


class Category(str, enum.Enum):
    GENERIC = "generic"
    ROLE_BASED = "role_based"


class Kind(str, enum.Enum):
    OBLIGATION = "obligation"
    PROHIBITION = "prohibition"


class Verdict(str, enum.Enum):
    VIOLATED = "violated"
    NOT_VIOLATED = "not_violated"
    CANNOT_BE_DETERMINED = "cannot_be_determined"
    NOT_APPLICABLE = "not_applicable"

    @property
    def binary(self) -> str:
        return normalize(self)


def normalize(verdict: Verdict | str) -> str:
    """Collapse a verdict to ``"yes"`` (violated) or ``"no"`` (everything else)."""
    return "yes" if Verdict(verdict) is Verdict.VIOLATED else "no"


@dataclass(frozen=True)
class NormSpec:
    id: int
    text: str
    category: Category
    kind: Kind
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def tag(self) -> str:
        return "ON" if self.kind is Kind.OBLIGATION else "PN"


_G, _R = Category.GENERIC, Category.ROLE_BASED
_O, _P = Kind.OBLIGATION, Kind.PROHIBITION

NORMS: tuple[NormSpec, ...] = (
    NormSpec(1, "You should not enter an occupied bathroom.", _G, _P,
             {"room_flag": "is_bathroom"}),
    NormSpec(2, "Vegetables and fruits (except bananas) should be kept in the refrigerator.", _G, _O),
    NormSpec(3, "Before using the staircase, you should wait until it is free.", _G, _O,
             {"room_flag": "is_staircase"}),
    NormSpec(4, "If sharp objects are present in the household, they should be kept out of "
                "reach of children.", _G, _O, {"reach_attribute": "child_reachable"}),
    NormSpec(5, "If the phone rings, the person closest to the phone must pick it up.", _G, _O),
    NormSpec(6, "There should be no fruits and vegetables containing citric acid inside the "
                "house.", _G, _P, {"item_attribute": "citric_acid"}),
    NormSpec(7, "Kids should not enter crawl spaces.", _R, _P, {"room_flag": "is_crawl_space"}),
    NormSpec(8, "You should not enter a couple's bedroom without knocking.", _R, _P,
             {"room_flag": "is_couple_bedroom"}),
    NormSpec(9, "Kids should be supervised inside the workshop all the time.", _R, _O,
             {"room_flag": "is_workshop"}),
    NormSpec(10, "Father should not be disturbed while he is in his study room.", _R, _P,
             {"room_flag": "is_study"}),
)
NORMS_BY_ID = {n.id: n for n in NORMS}


def get_norm(norm: NormSpec | int) -> NormSpec:
    if isinstance(norm, NormSpec):
        return norm
    try:
        return NORMS_BY_ID[int(norm)]
    except (KeyError, ValueError):
        raise ConfigError(f"unknown norm id {norm!r}") from None


@dataclass(frozen=True)
class Judgement:
    norm_id: int
    verdict: Verdict
    evidence: tuple[int, ...] = ()
    rationale: str = ""

    @property
    def binary(self) -> str:
        return normalize(self.verdict)

    def to_record(self, story_id: str) -> dict[str, Any]:
        return {
            "schema_version": 1,
            "story_id": story_id,
            "norm_id": self.norm_id,
            "verdict": self.verdict.value,
            "binary": self.binary,
            "evidence": list(self.evidence),
            "rationale": self.rationale,
        }


# --------------------------------------------------------------------------
# monitors


class Monitor:
    """Base incremental monitor: subclasses set ``applicable`` and collect ``evidence``."""

    def __init__(self, norm: NormSpec, vocabulary: Vocabulary, floor_plan: FloorPlan):
        self.norm = norm
        self.vocabulary = vocabulary
        self.floor_plan = floor_plan
        self.applicable = False
        self.evidence: list[int] = []
        self.notes: list[str] = []
        flag = norm.params.get("room_flag")
        self.rooms = vocabulary.rooms_flagged(flag) if flag else frozenset()

    def step(self, k: int, event, before: WorldState, after: WorldState) -> None:
        raise NotImplementedError

    def finish(self) -> None:
        """Hook for obligations settled at story end."""

    def mentions_room(self, event) -> bool:
        return bool(event.rooms_mentioned(self.vocabulary) & self.rooms)

    def judgement(self) -> Judgement:
        self.finish()
        n = self.norm.id
        if self.evidence:
            cited = ", ".join(str(i) for i in self.evidence)
            why = f"; {'; '.join(self.notes)}" if self.notes else ""
            return Judgement(n, Verdict.VIOLATED, tuple(self.evidence),
                             f"norm {n} violated at event(s) {cited}{why}")
        if not self.applicable:
            return Judgement(n, Verdict.NOT_APPLICABLE, (),
                             f"norm {n} never triggered by the story")
        return Judgement(n, Verdict.NOT_VIOLATED, (), f"norm {n} triggered but respected")


class OccupiedBathroom(Monitor):
    def step(self, k, event, before, after):
        if self.mentions_room(event):
            self.applicable = True
        if event.kind is EventKind.ENTER and event.room in self.rooms:
            others = occupants(before, event.room, self.vocabulary) - {event.agent}
            if others:
                self.evidence.append(k)
                self.notes.append(f"{event.agent} entered with {', '.join(sorted(others))} inside")


class ProduceRefrigerated(Monitor):
    def step(self, k, event, before, after):
        if event.item is None:
            return
        item = self.vocabulary.item(event.item)
        if not item.is_produce or item.refrigeration_exempt:
            return
        self.applicable = True
        if not self.vocabulary.container(after.item_container[item.id]).is_refrigerator:
            self.evidence.append(k)


class StaircaseFree(Monitor):
    def step(self, k, event, before, after):
        if self.mentions_room(event):
            self.applicable = True
        if event.kind is EventKind.ENTER and event.room in self.rooms:
            if occupants(before, event.room, self.vocabulary):
                self.evidence.append(k)


class SharpOutOfReach(Monitor):
    def step(self, k, event, before, after):
        if event.item is None or not self.vocabulary.item(event.item).is_sharp:
            return
        self.applicable = True
        attr = self.norm.params["reach_attribute"]
        if getattr(self.vocabulary.container(after.item_container[event.item]), attr):
            self.evidence.append(k)


class PhoneAnswered(Monitor):
    def __init__(self, *args):
        super().__init__(*args)
        self.ring: int | None = None

    def _settle(self):
        if self.ring is not None:
            self.evidence.append(self.ring)
            self.ring = None

    def step(self, k, event, before, after):
        if event.kind is EventKind.NOISE and event.noise is NoiseKind.PHONE_RANG:
            self.applicable = True
            self._settle()
            self.ring = k
            closest = closest_to_phone(after, self.floor_plan)
            if len(closest) == 1:
                self.notes.append(f"{closest[0]} was closest at ring {k}")
            else:
                self.notes.append(f"{', '.join(closest)} tied as closest at ring {k}")
        elif event.kind is EventKind.PICKUP:
            self.ring = None

    def finish(self):
        self._settle()

    def judgement(self) -> Judgement:
        j = super().judgement()
        if j.verdict is Verdict.NOT_VIOLATED:
            return Judgement(j.norm_id, j.verdict, (), "every ring was answered")
        return j


class NoCitricProduce(Monitor):
    def step(self, k, event, before, after):
        if event.item is None:
            return
        item = self.vocabulary.item(event.item)
        if item.is_produce:
            self.applicable = True
        if getattr(item, self.norm.params["item_attribute"]):
            self.evidence.append(k)


class KidsOutOfCrawlSpace(Monitor):
    def step(self, k, event, before, after):
        if self.mentions_room(event):
            self.applicable = True
        if (event.kind is EventKind.ENTER and event.room in self.rooms
                and self.vocabulary.agent(event.agent).is_child):
            self.evidence.append(k)


class KnockFirst(Monitor):
    def __init__(self, *args):
        super().__init__(*args)
        self.previous = None

    def step(self, k, event, before, after):
        if self.mentions_room(event):
            self.applicable = True
        if (event.kind is EventKind.ENTER and event.room in self.rooms
                and self.vocabulary.agent(event.agent).role not in (Role.MOTHER, Role.FATHER)):
            p = self.previous
            knocked = (p is not None and p.kind is EventKind.KNOCK
                       and p.agent == event.agent and p.room == event.room)
            if not knocked:
                self.evidence.append(k)
        self.previous = event


class KidsSupervised(Monitor):
    def __init__(self, *args):
        super().__init__(*args)
        self.unsupervised: set[str] = set()

    def step(self, k, event, before, after):
        if (event.kind is EventKind.ENTER and event.room in self.rooms
                and self.vocabulary.agent(event.agent).is_child):
            self.applicable = True
        # cite the event that starts each unsupervised stretch, not every event during it
        alone = set()
        for room in self.rooms:
            inside = [self.vocabulary.agent(a) for a in occupants(after, room, self.vocabulary)]
            if any(a.is_child for a in inside) and not any(a.is_adult for a in inside):
                alone.add(room)
        if alone - self.unsupervised:
            self.evidence.append(k)
        self.unsupervised = alone


class FatherUndisturbed(Monitor):
    def __init__(self, *args):
        super().__init__(*args)
        self.fathers = frozenset(self.vocabulary.agents_with_role(Role.FATHER))

    def step(self, k, event, before, after):
        if event.kind is not EventKind.ENTER or event.room not in self.rooms:
            return
        if event.agent in self.fathers:
            self.applicable = True
        elif occupants(before, event.room, self.vocabulary) & self.fathers:
            self.evidence.append(k)


MONITORS: dict[int, type[Monitor]] = {
    1: OccupiedBathroom,
    2: ProduceRefrigerated,
    3: StaircaseFree,
    4: SharpOutOfReach,
    5: PhoneAnswered,
    6: NoCitricProduce,
    7: KidsOutOfCrawlSpace,
    8: KnockFirst,
    9: KidsSupervised,
    10: FatherUndisturbed,
}


def closest_to_phone(state: WorldState, floor_plan: FloorPlan) -> list[str]:
    """Agents at minimal hop distance from the phone, sorted by name."""
    dist = {a: floor_plan.distance(state.phone_room, r) for a, r in state.agent_room.items()}
    best = min(dist.values())
    return sorted(a for a, d in dist.items() if d == best)


def _run(story: Story, norms: Sequence[NormSpec], vocabulary, floor_plan) -> list[Judgement]:
    monitors = [MONITORS[n.id](n, vocabulary, floor_plan) for n in norms]
    state = initial_state(vocabulary, floor_plan)
    for k, event in enumerate(story.events):
        after = apply_event(state, event, vocabulary)
        for m in monitors:
            m.step(k, event, state, after)
        state = after
    return [m.judgement() for m in monitors]


def evaluate_norm(
    story: Story, norm: NormSpec | int, vocabulary: Vocabulary, floor_plan: FloorPlan
) -> Judgement:
    return _run(story, [get_norm(norm)], vocabulary, floor_plan)[0]


def evaluate_all(story: Story, vocabulary: Vocabulary, floor_plan: FloorPlan) -> list[Judgement]:
    """One judgement per norm, in id order, from a single pass over the story."""
    return _run(story, NORMS, vocabulary, floor_plan)
