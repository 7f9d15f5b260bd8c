"""Text generator clients.

Every client speaks the same wire contract: a request ``{"prompt": str,
"seed": int | null}`` answered by ``{"text": str}``.  Transcript files hold a
list of such exchanges::

    {"turns": [{"request": {"prompt": "...", "seed": 0}, "response": {"text": "..."}}]}

A request may omit ``prompt``, in which case replay does not check it.
"""

from __future__ import annotations

import json
import subprocess
from pathlib import Path
from typing import Protocol, runtime_checkable

from ..errors import GeneratorError


@runtime_checkable
class GeneratorClient(Protocol):
    def generate(self, prompt: str) -> str: ...


class GeneratorExhausted(GeneratorError):
    pass


class ScriptedGenerator:
    """Returns canned responses in order and records every prompt it sees."""

    def __init__(self, responses, seed: int | None = None):
        self.responses = list(responses)
        self.seed = seed
        self.prompts: list[str] = []

    def generate(self, prompt: str) -> str:
        if len(self.prompts) >= len(self.responses):
            raise GeneratorExhausted(f"script exhausted after {len(self.responses)} responses")
        self.prompts.append(prompt)
        return self.responses[len(self.prompts) - 1]


class TranscriptGenerator:
    """Replays a transcript file; prompts recorded in the file must match exactly."""

    def __init__(self, turns: list[dict], seed: int | None = None):
        self.turns = turns
        self.seed = seed
        self.position = 0

    @classmethod
    def load(cls, path: str | Path) -> "TranscriptGenerator":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise GeneratorError(f"cannot read transcript {path}: {exc}") from exc
        turns = data.get("turns") if isinstance(data, dict) else data
        if not isinstance(turns, list):
            raise GeneratorError(f"transcript {path} has no 'turns' list")
        normalized = []
        for turn in turns:
            if isinstance(turn, str):
                turn = {"request": {}, "response": {"text": turn}}
            if not isinstance(turn, dict) or "text" not in turn.get("response", {}):
                raise GeneratorError(f"transcript {path}: malformed turn {turn!r}")
            normalized.append(turn)
        seed = data.get("seed") if isinstance(data, dict) else None
        return cls(normalized, seed=seed)

    def generate(self, prompt: str) -> str:
        if self.position >= len(self.turns):
            raise GeneratorExhausted(f"transcript exhausted after {len(self.turns)} turns")
        turn = self.turns[self.position]
        expected = turn.get("request", {}).get("prompt")
        if expected is not None and expected != prompt:
            raise GeneratorError(f"prompt mismatch at transcript turn {self.position + 1}")
        self.position += 1
        return turn["response"]["text"]


class SubprocessGenerator:
    """Runs ``command`` once per request, writing the request JSON to stdin."""

    def __init__(self, command: list[str], seed: int | None = None, timeout: float = 120.0):
        self.command = command
        self.seed = seed
        self.timeout = timeout

    def generate(self, prompt: str) -> str:
        request = json.dumps({"prompt": prompt, "seed": self.seed})
        try:
            proc = subprocess.run(
                self.command, input=request, capture_output=True, text=True, timeout=self.timeout
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise GeneratorError(f"generator command failed: {exc}") from exc
        if proc.returncode != 0:
            raise GeneratorError(f"generator exited {proc.returncode}: {proc.stderr.strip()[:200]}")
        try:
            return json.loads(proc.stdout)["text"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise GeneratorError(f"bad generator response: {exc}") from exc


class RecordingGenerator:
    """Wraps another client and keeps the exchanges in transcript form."""

    def __init__(self, inner: GeneratorClient, seed: int | None = None):
        self.inner = inner
        self.seed = seed
        self.turns: list[dict] = []

    def generate(self, prompt: str) -> str:
        text = self.inner.generate(prompt)
        self.turns.append({"request": {"prompt": prompt, "seed": self.seed}, "response": {"text": text}})
        return text

    def dumps(self) -> str:
        return json.dumps({"seed": self.seed, "turns": self.turns}, ensure_ascii=False, indent=2)
