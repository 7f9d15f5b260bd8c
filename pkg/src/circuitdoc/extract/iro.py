"""Iterative retrieval/generation loop.

Iteration t retrieves with ``y_{t-1} + "\\n" + q`` (just ``q`` when t = 1),
prompts the generator with the retrieved texts and the original query, and
stops after T rounds or as soon as the output repeats verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..errors import GeneratorError
from .generators import GeneratorClient
from .retrieval import Corpus, retrieve

PROMPT_TEMPLATE = "Context:\n{docs}\n\nQuestion: {q}\nAnswer:"
DEFAULT_T = 3
DEFAULT_K = 4

Retriever = Callable[[str, Corpus, int], list]


@dataclass(frozen=True)
class Query:
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("query must be non-empty")


@dataclass
class IroState:
    T: int
    t: int = 0
    outputs: list[str] = field(default_factory=list)
    retrieved: list[list[str]] = field(default_factory=list)
    queries: list[str] = field(default_factory=list)
    prompts: list[str] = field(default_factory=list)
    stopped_early: bool = False

    @property
    def answer(self) -> str:
        return self.outputs[-1] if self.outputs else ""

    def transcript(self) -> list[dict]:
        return [
            {"t": i + 1, "query": q, "retrieved": r, "output": y}
            for i, (q, r, y) in enumerate(zip(self.queries, self.retrieved, self.outputs))
        ]


def retrieval_query(q: str, y_prev: str) -> str:
    return f"{y_prev}\n{q}" if y_prev else q


def build_prompt(keys: list[str], corpus: Corpus, q: str) -> str:
    docs = "\n\n".join(corpus.text(k) for k in keys)
    return PROMPT_TEMPLATE.format(docs=docs, q=q)


def iro_step(
    q: Query,
    y_prev: str,
    corpus: Corpus,
    gen: GeneratorClient,
    k: int = DEFAULT_K,
    *,
    iteration: int = 1,
    retriever: Retriever = retrieve,
) -> tuple[str, list[str], str, str]:
    """One retrieve-then-generate round; returns (y_t, keys, retrieval query, prompt)."""
    query_text = retrieval_query(q.text, y_prev)
    keys = list(retriever(query_text, corpus, k))
    prompt = build_prompt(keys, corpus, q.text)
    try:
        y = gen.generate(prompt)
    except GeneratorError as exc:
        raise GeneratorError(str(exc), iteration=iteration) from exc
    except Exception as exc:  # client bugs surface as generator failures
        raise GeneratorError(f"{type(exc).__name__}: {exc}", iteration=iteration) from exc
    return y, keys, query_text, prompt


def iro_run(
    q: Query,
    corpus: Corpus,
    gen: GeneratorClient,
    T: int = DEFAULT_T,
    k: int = DEFAULT_K,
    *,
    retriever: Retriever = retrieve,
) -> IroState:
    if T < 1:
        raise ValueError("T must be >= 1")
    state = IroState(T=T)
    y_prev = ""
    for t in range(1, T + 1):
        y, keys, query_text, prompt = iro_step(
            q, y_prev, corpus, gen, k, iteration=t, retriever=retriever
        )
        state.t = t
        state.outputs.append(y)
        state.retrieved.append(keys)
        state.queries.append(query_text)
        state.prompts.append(prompt)
        if t > 1 and y == y_prev:
            state.stopped_early = t < T
            break
        y_prev = y
    return state
