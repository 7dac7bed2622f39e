"""Household vocabulary, events, stories and replayable world state.

Everything downstream (generation, the norm monitor, prompt rendering) works
from the types defined here.  Values are treated as immutable: ``apply_event``
returns a fresh :class:`WorldState` rather than mutating its input.
"""

from __future__ import annotations

import enum
import json
import re
from collections import deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import ConfigError, VocabularyError

SCHEMA_VERSION = 1

#: Location of an agent who has exited a room and not yet entered another.
CORRIDOR = "<corridor>"


class Role(str, enum.Enum):
    MOTHER = "mother"
    FATHER = "father"
    CHILD = "child"


class EventKind(str, enum.Enum):
    ENTER = "enter"
    EXIT = "exit"
    MOVE = "move"
    NOISE = "noise"
    OBSERVE = "observe"
    KNOCK = "knock"
    PICKUP = "pickup_phone"


class NoiseKind(str, enum.Enum):
    PHONE_RANG = "phone_rang"
    KETTLE_WHISTLED = "kettle_whistled"
    CAT_MEOWED = "cat_meowed"


NOISE_TEXT = {
    NoiseKind.PHONE_RANG: "Phone rang.",
    NoiseKind.KETTLE_WHISTLED: "Kettle whistled.",
    NoiseKind.CAT_MEOWED: "Cat meowed.",
}

ROOM_FLAGS = (
    "is_bathroom",
    "is_staircase",
    "is_crawl_space",
    "is_workshop",
    "is_study",
    "is_couple_bedroom",
    "is_living_room",
)
ITEM_CATEGORIES = ("fruit", "vegetable", "sharp", "other")


# --------------------------------------------------------------------------
# vocabulary


@dataclass(frozen=True)
class AgentSpec:
    name: str
    role: Role
    age_years: int | None = None

    @property
    def is_child(self) -> bool:
        return self.role is Role.CHILD

    @property
    def is_adult(self) -> bool:
        return self.role is not Role.CHILD


@dataclass(frozen=True)
class Room:
    id: str
    label: str
    is_bathroom: bool = False
    is_staircase: bool = False
    is_crawl_space: bool = False
    is_workshop: bool = False
    is_study: bool = False
    is_couple_bedroom: bool = False
    is_living_room: bool = False


@dataclass(frozen=True)
class Item:
    id: str
    label: str
    category: str = "other"
    citric_acid: bool = False
    refrigeration_exempt: bool = False

    @property
    def is_produce(self) -> bool:
        return self.category in ("fruit", "vegetable")

    @property
    def is_sharp(self) -> bool:
        return self.category == "sharp"


@dataclass(frozen=True)
class Container:
    id: str
    label: str
    room: str
    is_refrigerator: bool = False
    child_reachable: bool = True


class Vocabulary:
    """Agents, rooms, items and containers of one household.

    Identifiers are unique per kind; lookups raise :class:`VocabularyError`.
    """

    def __init__(
        self,
        agents: Sequence[AgentSpec],
        rooms: Sequence[Room],
        items: Sequence[Item] = (),
        containers: Sequence[Container] = (),
    ):
        self.agents = tuple(agents)
        self.rooms = tuple(rooms)
        self.items = tuple(items)
        self.containers = tuple(containers)
        self._agents = _index(self.agents, "name", "agent")
        self._rooms = _index(self.rooms, "id", "room")
        self._items = _index(self.items, "id", "item")
        self._containers = _index(self.containers, "id", "container")
        for a in self.agents:
            if a.is_child and a.age_years is None:
                raise ConfigError(f"child agent {a.name!r} has no age_years")
        for c in self.containers:
            if c.room not in self._rooms:
                raise ConfigError(f"container {c.id!r} is in unknown room {c.room!r}")
        for it in self.items:
            if it.category not in ITEM_CATEGORIES:
                raise ConfigError(f"item {it.id!r} has unknown category {it.category!r}")
        if CORRIDOR in self._rooms:
            raise ConfigError(f"{CORRIDOR!r} is reserved")
        self._by_label = {
            "room": {r.label: r.id for r in self.rooms},
            "item": {i.label: i.id for i in self.items},
            "container": {c.label: c.id for c in self.containers},
        }

    def agent(self, name: str) -> AgentSpec:
        return _lookup(self._agents, name, "agent")

    def room(self, room_id: str) -> Room:
        return _lookup(self._rooms, room_id, "room")

    def item(self, item_id: str) -> Item:
        return _lookup(self._items, item_id, "item")

    def container(self, container_id: str) -> Container:
        return _lookup(self._containers, container_id, "container")

    def has_room(self, room_id: str) -> bool:
        return room_id in self._rooms

    def agents_with_role(self, role: Role) -> tuple[str, ...]:
        return tuple(a.name for a in self.agents if a.role is role)

    def rooms_flagged(self, flag: str) -> frozenset[str]:
        return frozenset(r.id for r in self.rooms if getattr(r, flag))

    def containers_in(self, room_id: str) -> tuple[Container, ...]:
        return tuple(c for c in self.containers if c.room == room_id)

    @property
    def living_room(self) -> str:
        flagged = [r.id for r in self.rooms if r.is_living_room]
        if flagged:
            return flagged[0]
        if not self.rooms:
            raise ConfigError("vocabulary has no rooms")
        return self.rooms[0].id

    def id_for_label(self, kind: str, label: str) -> str:
        try:
            return self._by_label[kind][label]
        except KeyError:
            raise VocabularyError(f"unknown {kind} {label!r}") from None

    def check_event(self, event: Event) -> None:
        where = f" at event {event.index}" if event.index >= 0 else ""
        try:
            if event.agent is not None:
                self.agent(event.agent)
            if event.room is not None:
                self.room(event.room)
            if event.item is not None:
                self.item(event.item)
            if event.container is not None:
                self.container(event.container)
        except VocabularyError as exc:
            raise VocabularyError(f"{exc}{where}") from None


def _index(values, attr, kind):
    out = {}
    for v in values:
        key = getattr(v, attr)
        if key in out:
            raise ConfigError(f"duplicate {kind} identifier {key!r}")
        out[key] = v
    return out


def _lookup(table, key, kind):
    try:
        return table[key]
    except KeyError:
        raise VocabularyError(f"unknown {kind} {key!r}") from None


@dataclass(frozen=True)
class FloorPlan:
    adjacency: dict[str, frozenset[str]]
    phone_initial_room: str

    def validate(self, vocabulary: Vocabulary) -> None:
        for room, neighbours in self.adjacency.items():
            vocabulary.room(room)
            for n in neighbours:
                vocabulary.room(n)
                if room not in self.adjacency.get(n, ()):
                    raise ConfigError(f"adjacency not symmetric: {room} -> {n}")
        vocabulary.room(self.phone_initial_room)
        reachable = self.distances_from(vocabulary.living_room)
        missing = [r.id for r in vocabulary.rooms if r.id not in reachable]
        if missing:
            raise ConfigError(f"rooms unreachable from the living room: {missing}")

    def distances_from(self, room: str) -> dict[str, int]:
        """Hop distances from ``room`` by breadth-first search."""
        dist = {room: 0}
        queue = deque([room])
        while queue:
            here = queue.popleft()
            for n in sorted(self.adjacency.get(here, ())):
                if n not in dist:
                    dist[n] = dist[here] + 1
                    queue.append(n)
        return dist

    def distance(self, source: str, location: str) -> float:
        """Hops from ``source`` to an agent location.

        An agent in the corridor is one hop beyond the nearest room.
        """
        dist = self.distances_from(source)
        if location == CORRIDOR:
            return min(dist.values()) + 1
        return dist.get(location, float("inf"))


def world_from_dict(data: dict[str, Any]) -> tuple[Vocabulary, FloorPlan]:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    try:
        agents = [
            AgentSpec(a["name"], Role(a["role"]), a.get("age_years"))
            for a in data["agents"]
        ]
        rooms = [
            Room(r["id"], r.get("label", r["id"].replace("_", " ")),
                 **{f: bool(r.get(f, False)) for f in ROOM_FLAGS})
            for r in data["rooms"]
        ]
        items = [
            Item(
                i["id"],
                i.get("label", i["id"].replace("_", " ")),
                i.get("category", "other"),
                bool(i.get("citric_acid", False)),
                bool(i.get("refrigeration_exempt", False)),
            )
            for i in data.get("items", [])
        ]
        containers = [
            Container(
                c["id"],
                c.get("label", c["id"].replace("_", " ")),
                c["room"],
                bool(c.get("is_refrigerator", False)),
                bool(c.get("child_reachable", True)),
            )
            for c in data.get("containers", [])
        ]
        plan = data.get("floor_plan", {})
        adjacency = {k: frozenset(v) for k, v in plan.get("adjacency", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed world config: {exc!r}") from None
    vocabulary = Vocabulary(agents, rooms, items, containers)
    for r in vocabulary.rooms:
        adjacency.setdefault(r.id, frozenset())
    floor_plan = FloorPlan(adjacency, plan.get("phone_initial_room", vocabulary.living_room))
    floor_plan.validate(vocabulary)
    return vocabulary, floor_plan


def load_world(path: str | Path | None = None) -> tuple[Vocabulary, FloorPlan]:
    """Load a vocabulary and floor plan from a JSON config (default household if None)."""
    if path is None:
        return default_world()
    with open(path, encoding="utf-8") as fh:
        return world_from_dict(json.load(fh))


@lru_cache(maxsize=1)
def default_world() -> tuple[Vocabulary, FloorPlan]:
    text = resources.files("normbench.data").joinpath("household.json").read_text("utf-8")
    return world_from_dict(json.loads(text))


# --------------------------------------------------------------------------
# events and stories


@dataclass(frozen=True)
class Event:
    """One perceivable happening.  ``index`` and ``text`` are set by :class:`Story`."""

    kind: EventKind
    agent: str | None = None
    room: str | None = None
    item: str | None = None
    container: str | None = None
    noise: NoiseKind | None = None
    index: int = field(default=-1, compare=False)
    text: str = field(default="", compare=False)

    @classmethod
    def enter(cls, agent: str, room: str) -> Event:
        return cls(EventKind.ENTER, agent=agent, room=room)

    @classmethod
    def exit(cls, agent: str, room: str) -> Event:
        return cls(EventKind.EXIT, agent=agent, room=room)

    @classmethod
    def move(cls, agent: str, item: str, container: str) -> Event:
        return cls(EventKind.MOVE, agent=agent, item=item, container=container)

    @classmethod
    def observe(cls, item: str, container: str) -> Event:
        return cls(EventKind.OBSERVE, item=item, container=container)

    @classmethod
    def make_noise(cls, kind: NoiseKind | str) -> Event:
        return cls(EventKind.NOISE, noise=NoiseKind(kind))

    @classmethod
    def knock(cls, agent: str, room: str) -> Event:
        return cls(EventKind.KNOCK, agent=agent, room=room)

    @classmethod
    def pickup(cls, agent: str) -> Event:
        return cls(EventKind.PICKUP, agent=agent)

    @property
    def args(self) -> dict[str, str]:
        out = {}
        for name in ("agent", "room", "item", "container"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.noise is not None:
            out["noise"] = self.noise.value
        return out

    def at(self, index: int, text: str) -> Event:
        return replace(self, index=index, text=text)

    def rooms_mentioned(self, vocabulary: Vocabulary) -> frozenset[str]:
        """Rooms named by this event, directly or through a container."""
        rooms = set()
        if self.room is not None:
            rooms.add(self.room)
        if self.container is not None:
            rooms.add(vocabulary.container(self.container).room)
        return frozenset(rooms)


def render_event(event: Event, vocabulary: Vocabulary) -> str:
    """English surface form of an event, as shown to models."""
    k = event.kind
    if k is EventKind.ENTER:
        return f"{event.agent} entered the {vocabulary.room(event.room).label}."
    if k is EventKind.EXIT:
        return f"{event.agent} exited the {vocabulary.room(event.room).label}."
    if k is EventKind.MOVE:
        item = vocabulary.item(event.item).label
        return f"{event.agent} moved the {item} to the {vocabulary.container(event.container).label}."
    if k is EventKind.OBSERVE:
        item = vocabulary.item(event.item).label
        return f"The {item} is in the {vocabulary.container(event.container).label}."
    if k is EventKind.NOISE:
        return NOISE_TEXT[event.noise]
    if k is EventKind.KNOCK:
        return f"{event.agent} knocked on the door of the {vocabulary.room(event.room).label}."
    if k is EventKind.PICKUP:
        return f"{event.agent} picked up the phone."
    raise ValueError(f"unknown event kind {k!r}")


_PATTERNS = [
    (EventKind.ENTER, re.compile(r"^(?P<agent>\w+) entered the (?P<room>.+)\.$")),
    (EventKind.EXIT, re.compile(r"^(?P<agent>\w+) exited the (?P<room>.+)\.$")),
    (EventKind.MOVE, re.compile(r"^(?P<agent>\w+) moved the (?P<item>.+?) to the (?P<container>.+)\.$")),
    (EventKind.OBSERVE, re.compile(r"^The (?P<item>.+?) is in the (?P<container>.+)\.$")),
    (EventKind.KNOCK, re.compile(r"^(?P<agent>\w+) knocked on the door of the (?P<room>.+)\.$")),
    (EventKind.PICKUP, re.compile(r"^(?P<agent>\w+) picked up the phone\.$")),
]
_NOISE_BY_TEXT = {text: kind for kind, text in NOISE_TEXT.items()}


def parse_event(text: str, vocabulary: Vocabulary) -> Event:
    """Inverse of :func:`render_event` for the fixed surface templates."""
    text = text.strip()
    if text in _NOISE_BY_TEXT:
        return Event.make_noise(_NOISE_BY_TEXT[text])
    for kind, pattern in _PATTERNS:
        m = pattern.match(text)
        if not m:
            continue
        g = m.groupdict()
        fields = {}
        if "agent" in g:
            fields["agent"] = vocabulary.agent(g["agent"]).name
        if "room" in g:
            fields["room"] = vocabulary.id_for_label("room", g["room"])
        if "item" in g:
            fields["item"] = vocabulary.id_for_label("item", g["item"])
        if "container" in g:
            fields["container"] = vocabulary.id_for_label("container", g["container"])
        return Event(kind, **fields)
    raise VocabularyError(f"unrecognized event sentence {text!r}")


@dataclass(frozen=True)
class Story:
    id: str
    task_count: int
    seed: int
    events: tuple[Event, ...]

    @classmethod
    def build(
        cls,
        story_id: str,
        events: Iterable[Event],
        vocabulary: Vocabulary,
        task_count: int = 0,
        seed: int = 0,
    ) -> Story:
        """Assign indices and surface text, validating against the vocabulary."""
        indexed = []
        for k, e in enumerate(events):
            e = e.at(k, "")
            vocabulary.check_event(e)
            indexed.append(e.at(k, render_event(e, vocabulary)))
        return cls(story_id, task_count, seed, tuple(indexed))

    @classmethod
    def from_lines(cls, story_id: str, lines: Iterable[str], vocabulary: Vocabulary, **kw) -> Story:
        events = [parse_event(line, vocabulary) for line in lines if line.strip()]
        return cls.build(story_id, events, vocabulary, **kw)

    def lines(self) -> list[str]:
        return [e.text for e in self.events]

    def to_record(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "task_count": self.task_count,
            "seed": self.seed,
            "events": [
                {"kind": e.kind.value, "args": e.args, "text": e.text} for e in self.events
            ],
        }

    @classmethod
    def from_record(cls, record: dict[str, Any], vocabulary: Vocabulary | None = None) -> Story:
        if record.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported story schema_version {record.get('schema_version')!r}")
        events = []
        for k, raw in enumerate(record["events"]):
            args = dict(raw.get("args", {}))
            if "noise" in args:
                args["noise"] = NoiseKind(args["noise"])
            e = Event(EventKind(raw["kind"]), **args).at(k, raw.get("text", ""))
            if vocabulary is not None:
                vocabulary.check_event(e)
            events.append(e)
        return cls(record["id"], int(record["task_count"]), int(record["seed"]), tuple(events))


# --------------------------------------------------------------------------
# world state


@dataclass(frozen=True)
class WorldState:
    agent_room: dict[str, str]
    item_container: dict[str, str]
    phone_room: str
    inconsistency_flags: tuple[tuple[int, str], ...] = ()


def initial_state(vocabulary: Vocabulary, floor_plan: FloorPlan) -> WorldState:
    """Whole family in the living room, phone in its initial room, no item locations known."""
    living = vocabulary.living_room
    return WorldState({a.name: living for a in vocabulary.agents}, {}, floor_plan.phone_initial_room)


def apply_event(state: WorldState, event: Event, vocabulary: Vocabulary) -> WorldState:
    """Return the state after ``event``.  Unknown identifiers raise ``VocabularyError``."""
    vocabulary.check_event(event)
    agent_room = state.agent_room
    item_container = state.item_container
    flags = list(state.inconsistency_flags)
    k = event.kind

    if k is EventKind.ENTER:
        agent_room = {**agent_room, event.agent: event.room}
    elif k is EventKind.EXIT:
        if agent_room.get(event.agent) != event.room:
            flags.append((event.index, f"{event.agent} exited {event.room} while in "
                                       f"{agent_room.get(event.agent)}"))
        agent_room = {**agent_room, event.agent: CORRIDOR}
    elif k is EventKind.MOVE:
        room = vocabulary.container(event.container).room
        if agent_room.get(event.agent) != room:
            flags.append((event.index, f"{event.agent} moved {event.item} into {room} while in "
                                       f"{agent_room.get(event.agent)}"))
            agent_room = {**agent_room, event.agent: room}
        item_container = {**item_container, event.item: event.container}
    elif k is EventKind.OBSERVE:
        known = item_container.get(event.item)
        if known is not None and known != event.container:
            flags.append((event.index, f"{event.item} observed in {event.container} but "
                                       f"tracked in {known}"))
        item_container = {**item_container, event.item: event.container}
    # noise, knock and pickup leave locations unchanged

    if flags == list(state.inconsistency_flags):
        flags_t = state.inconsistency_flags
    else:
        flags_t = tuple(flags)
    return WorldState(agent_room, item_container, state.phone_room, flags_t)


def replay(
    story: Story | Sequence[Event],
    vocabulary: Vocabulary,
    initial: WorldState | None = None,
    floor_plan: FloorPlan | None = None,
) -> list[WorldState]:
    """States before and after every event; ``len == len(events) + 1``."""
    events = story.events if isinstance(story, Story) else story
    if initial is None:
        if floor_plan is None:
            floor_plan = default_world()[1]
        initial = initial_state(vocabulary, floor_plan)
    trace = [initial]
    for e in events:
        trace.append(apply_event(trace[-1], e, vocabulary))
    return trace


def occupants(state: WorldState, room: str, vocabulary: Vocabulary) -> frozenset[str]:
    vocabulary.room(room)
    return frozenset(a for a, r in state.agent_room.items() if r == room)
