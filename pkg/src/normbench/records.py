"""Line-delimited JSON records, content digests and run manifests."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path
from typing import Any, Iterable, Iterator

from . import __version__
from .world import Story, Vocabulary


def dumps(record: Any) -> str:
    """Canonical one-line JSON (sorted keys) so identical records give identical bytes."""
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    text = "".join(dumps(r) + "\n" for r in records)
    atomic_write(path, text.encode("utf-8"))


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None


def atomic_write(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def digest_bytes(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def digest_file(path: str | Path) -> str:
    return digest_bytes(Path(path).read_bytes())


def write_corpus(path: str | Path, stories: Iterable[Story]) -> None:
    write_jsonl(path, (s.to_record() for s in stories))


def read_corpus(path: str | Path, vocabulary: Vocabulary | None = None) -> list[Story]:
    return [Story.from_record(r, vocabulary) for r in read_jsonl(path)]


class Manifest:
    """Reproducibility record: config echo plus digests of every input and output."""

    def __init__(self, subcommand: str, config: dict[str, Any]):
        self.subcommand = subcommand
        self.config = config
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.extra: dict[str, Any] = {}
        self._start = time.monotonic()

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = digest_file(path)

    def add_output(self, path: str | Path) -> None:
        self.outputs[str(path)] = digest_file(path)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": 1,
            "tool_version": __version__,
            "subcommand": self.subcommand,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            **self.extra,
            "duration_seconds": round(time.monotonic() - self._start, 3),
        }

    def write(self, path: str | Path) -> None:
        atomic_write(path, (json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n").encode())
