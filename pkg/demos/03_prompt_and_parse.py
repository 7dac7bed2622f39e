"""Render the prompt for a story, then parse a messy model answer.

    python demos/03_prompt_and_parse.py
"""

from normbench.harness import PromptTemplate, parse_response, render_prompt
from normbench.norms import NORMS
from normbench.world import Story, default_world

vocabulary, _ = default_world()
story = Story.from_lines("demo", ["Ann entered the crawl space.", "Ann exited the crawl space."], vocabulary)

prompt = render_prompt(PromptTemplate.load(dialect="llama2"), NORMS, story)
print(prompt[:400], "...\n")

answer = """Sure! Here is my evaluation.

**Norm 7**
**Violation:** Yes
**Reasoning:** Ann is a child and entered the crawl space.

- Norm 1
- Violation: not applicable
- Reasoning: nobody went near the bathroom.

Norm 3 - Violation: maybe
"""
parsed = parse_response(answer)
for norm_id, (verdict, reasoning) in sorted(parsed.verdicts.items()):
    print(f"N{norm_id:<2} {verdict.value:<22} {reasoning}")
print("\nwarnings:")
for w in parsed.parse_warnings:
    print(" ", w)
