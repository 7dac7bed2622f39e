"""Run the offline pipeline over the shipped canned responses and show the report.

The canned answers come from a simulated model, so the accuracies say
nothing about any real model; the point is the plumbing.

    python demos/04_scoring.py
"""

import tempfile
from pathlib import Path

from normbench.cli import main

responses = Path(__file__).resolve().parent.parent / "fixtures" / "responses"
with tempfile.TemporaryDirectory() as tmp:
    status = main(["pipeline", "--seed", "7", "--responses", str(responses), "--out", tmp])
    print(f"\nexit status {status}\n")
    print((Path(tmp) / "report" / "report.md").read_text())
