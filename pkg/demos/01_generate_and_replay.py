"""Generate one story, print it, and walk through the replayed world state.

    python demos/01_generate_and_replay.py
"""

from normbench.storygen import GenConfig, generate_story
from normbench.world import default_world, replay

vocabulary, floor_plan = default_world()
story, tasks = generate_story(7, 2, 0, GenConfig(), vocabulary, floor_plan)

print(f"story {story.id}: {len(tasks)} tasks, {len(story.events)} events\n")
trace = replay(story, vocabulary, floor_plan=floor_plan)
for event, state in zip(story.events, trace[1:]):
    where = ", ".join(f"{a}@{r}" for a, r in sorted(state.agent_room.items()))
    print(f"{event.index:>2}  {event.text:<48} {where}")

final = trace[-1]
print("\nitems at the end:", dict(sorted(final.item_container.items())))
print("inconsistencies:", final.inconsistency_flags or "none")
