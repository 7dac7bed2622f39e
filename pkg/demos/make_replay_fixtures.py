"""Regenerate the canned model responses under ``fixtures/responses``.

The responses come from a simulated model: the symbolic monitor's verdicts
with each one flipped between yes and no 20% of the time.  They exist so the
``pipeline`` and ``run`` commands can be exercised offline with the replay
transport.

    python demos/make_replay_fixtures.py
"""

import random
from pathlib import Path

from normbench.harness import simulated_response
from normbench.norms import evaluate_all
from normbench.storygen import REFERENCE_SEED, GenConfig, generate_corpus
from normbench.world import default_world

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "responses"

vocabulary, floor_plan = default_world()
corpus = generate_corpus(GenConfig(seed=REFERENCE_SEED), vocabulary, floor_plan)
rng = random.Random(2024)
OUT.mkdir(parents=True, exist_ok=True)
for story in corpus:
    judgements = evaluate_all(story, vocabulary, floor_plan)
    (OUT / f"{story.id}.txt").write_text(simulated_response(judgements, rng), encoding="utf-8")
print(f"wrote {len(corpus)} responses to {OUT}")
