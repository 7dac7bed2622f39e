"""Judge a hand-written story against all ten norms and show the evidence.

    python demos/02_norm_oracle.py
"""

from normbench.norms import evaluate_all, get_norm
from normbench.world import Story, default_world

vocabulary, floor_plan = default_world()
story = Story.from_lines("demo", [
    "Ann entered the workshop.",
    "Peter entered the staircase.",
    "Emily entered the staircase.",
    "Alexander entered the couple's bedroom.",
    "Phone rang.",
    "Peter exited the staircase.",
    "Emily moved the knife to the black suitcase.",
], vocabulary)

for j in evaluate_all(story, vocabulary, floor_plan):
    norm = get_norm(j.norm_id)
    cited = "; ".join(story.events[k].text for k in j.evidence)
    print(f"N{j.norm_id:<2} [{norm.tag}] {j.verdict.value:<22} {norm.text}")
    if cited:
        print(f"      evidence: {cited}")
