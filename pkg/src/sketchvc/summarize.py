"""Narrative summaries of a repository's evolution.

The deterministic path renders a fixed template over the commit
chronicle: every branch opens with "The concept began", every commit
message appears verbatim exactly once in chronological order, each
divergence produces exactly one "diverged from" sentence, and each branch
closes with its stroke-count trajectory.

The LLM path POSTs the structured chronicle (never free text) to a
configurable endpoint ({"system": ..., "chronicle": [...]} with bearer
auth from an environment variable; response {"text": ...}).  Any failure
after the configured retries falls back to the deterministic text.  The
returned summary always carries its provenance ("deterministic", "llm",
or "fallback").

A rendering client stub with the same config shape stands in for an
external image-generation service and returns a placeholder reference.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field

import httpx

from .errors import EmptyInput, InvalidSpec
from .repo import Repository, format_commit_timestamp

logger = logging.getLogger(__name__)

SYSTEM_PROMPT = (
    "You are given the commit chronicle of a product concept sketching "
    "session: branches, commit messages spoken or typed by the designer, "
    "timestamps, stroke-count deltas, and divergence points. Write a "
    "faithful narrative of how the concept evolved. Refer to commits in "
    "chronological order, name every pivot where a branch diverged, and "
    "do not invent events that are not in the chronicle."
)


@dataclass(frozen=True)
class ChronicleEntry:
    commit_id: str
    message: str
    timestamp: str
    stroke_count: int
    stroke_delta: int
    tallies: dict | None = None

    def to_obj(self) -> dict:
        obj = {
            "commit_id": self.commit_id,
            "message": self.message,
            "timestamp": self.timestamp,
            "stroke_count": self.stroke_count,
            "stroke_delta": self.stroke_delta,
        }
        if self.tallies is not None:
            obj["stroke_type_tallies"] = dict(self.tallies)
        return obj


@dataclass(frozen=True)
class BranchChronicle:
    branch: str
    diverged_from: str | None
    entries: tuple[ChronicleEntry, ...]

    def to_obj(self) -> dict:
        return {
            "branch": self.branch,
            "diverged_from": self.diverged_from,
            "commits": [e.to_obj() for e in self.entries],
        }


@dataclass(frozen=True)
class NarrativeInput:
    branches: tuple[BranchChronicle, ...]

    def to_obj(self) -> list[dict]:
        return [b.to_obj() for b in self.branches]

    @property
    def commit_count(self) -> int:
        return sum(len(b.entries) for b in self.branches)


@dataclass(frozen=True)
class SummaryResult:
    text: str
    provenance: str  # deterministic | llm | fallback

    def to_dict(self) -> dict:
        return {"text": self.text, "provenance": self.provenance}


@dataclass(frozen=True)
class LlmClientConfig:
    endpoint: str
    auth_env: str = "SKETCHVC_LLM_TOKEN"
    model: str = "default"
    timeout_s: float = 10.0
    max_retries: int = 2
    retry_backoff_s: float = 0.5

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise InvalidSpec("timeout must be positive", field="timeout_s")
        if self.max_retries < 0:
            raise InvalidSpec("max_retries must be >= 0", field="max_retries")


def chronicle_from_repo(repo: Repository, tallies_fn=None) -> NarrativeInput:
    """Build the per-branch chronicle.  Commits shared by several branches
    (before a divergence) are attributed to the branch created first, so
    each commit appears exactly once."""
    ordered = repo.log()
    if not ordered:
        raise EmptyInput("repository has no commits to narrate")
    by_id = {n.id: n for n in ordered}
    position = {n.id: i for i, n in enumerate(ordered)}
    chains = {name: [n.id for n in repo.slideshow(tip)]
              for name, tip in repo.branches().items() if tip}

    # each commit belongs to the branch it was created on (its hint);
    # commits with dangling hints (renamed branches) fall back to the
    # earliest-created chain that contains them
    assigned: dict[str, str] = {}
    for name, chain in chains.items():
        for cid in chain:
            if by_id[cid].branch_hint == name:
                assigned[cid] = name
    for name in sorted(chains, key=lambda nm: (min(position[c] for c in chains[nm]), nm)):
        for cid in chains[name]:
            assigned.setdefault(cid, name)

    own_by_branch = {
        name: [cid for cid in chain if assigned[cid] == name] for name, chain in chains.items()
    }
    creation_order = sorted(
        (name for name, own in own_by_branch.items() if own),
        key=lambda name: position[own_by_branch[name][0]],
    )
    out = []
    for name in creation_order:
        own = own_by_branch[name]
        first = by_id[own[0]]
        entries = []
        for cid in own:
            node = by_id[cid]
            parent_count = len(by_id[node.parent].stroke_ids) if node.parent and node.parent in by_id else 0
            entries.append(
                ChronicleEntry(
                    commit_id=cid,
                    message=node.message,
                    timestamp=format_commit_timestamp(node.timestamp),
                    stroke_count=len(node.stroke_ids),
                    stroke_delta=len(node.stroke_ids) - parent_count,
                    tallies=tallies_fn(node) if tallies_fn else None,
                )
            )
        out.append(
            BranchChronicle(
                branch=name,
                diverged_from=first.parent,
                entries=tuple(entries),
            )
        )
    return NarrativeInput(branches=tuple(out))


def summarize_deterministic(narrative: NarrativeInput) -> SummaryResult:
    if narrative.commit_count == 0:
        raise EmptyInput("nothing to summarize")
    paragraphs = []
    for chronicle in narrative.branches:
        sentences = []
        first = chronicle.entries[0]
        if chronicle.diverged_from:
            sentences.append(
                f'On branch {chronicle.branch} the designer diverged from '
                f'commit {chronicle.diverged_from[:12]} and began with "{first.message}" '
                f'({first.stroke_count} strokes).'
            )
        else:
            sentences.append(
                f'The concept began on branch {chronicle.branch} with '
                f'"{first.message}" ({first.stroke_count} strokes).'
            )
        for entry in chronicle.entries[1:]:
            direction = "adding" if entry.stroke_delta >= 0 else "removing"
            sentences.append(
                f'It then moved to "{entry.message}", {direction} '
                f"{abs(entry.stroke_delta)} strokes."
            )
        trajectory = " -> ".join(str(e.stroke_count) for e in chronicle.entries)
        sentences.append(
            f"Across {len(chronicle.entries)} snapshots the stroke count ran {trajectory}."
        )
        paragraphs.append(" ".join(sentences))
    return SummaryResult(text="\n\n".join(paragraphs), provenance="deterministic")


def summarize_llm(narrative: NarrativeInput, config: LlmClientConfig, client: httpx.Client | None = None) -> SummaryResult:
    """POST the chronicle to the configured endpoint; fall back to the
    deterministic summary (tagged "fallback") on any failure."""
    if narrative.commit_count == 0:
        raise EmptyInput("nothing to summarize")
    payload = {"system": SYSTEM_PROMPT, "model": config.model, "chronicle": narrative.to_obj()}
    headers = {}
    token = os.environ.get(config.auth_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"

    owns_client = client is None
    if owns_client:
        client = httpx.Client(timeout=config.timeout_s)
    try:
        for attempt in range(config.max_retries + 1):
            try:
                response = client.post(config.endpoint, json=payload, headers=headers)
                if response.status_code in (401, 403):
                    logger.warning("summary endpoint refused auth (%s)", response.status_code)
                elif response.status_code == 200:
                    body = response.json()
                    if isinstance(body, dict) and isinstance(body.get("text"), str):
                        return SummaryResult(text=body["text"], provenance="llm")
                    logger.warning("summary endpoint returned an unexpected body")
                else:
                    logger.warning("summary endpoint returned %s", response.status_code)
            except (httpx.HTTPError, ValueError) as exc:
                logger.warning("summary request failed (attempt %d): %s", attempt + 1, exc)
            if attempt < config.max_retries and config.retry_backoff_s > 0:
                time.sleep(config.retry_backoff_s)
    finally:
        if owns_client:
            client.close()
    deterministic = summarize_deterministic(narrative)
    return SummaryResult(text=deterministic.text, provenance="fallback")


@dataclass(frozen=True)
class RenderClientConfig:
    endpoint: str = ""
    auth_env: str = "SKETCHVC_RENDER_TOKEN"
    model: str = "stub"
    timeout_s: float = 30.0
    max_retries: int = 0


@dataclass
class RenderClient:
    """Placeholder for an external sketch-to-image service.  The stub never
    performs network io; it returns a reference the UI can display."""

    config: RenderClientConfig = field(default_factory=RenderClientConfig)

    def render(self, commit_id: str, style_prompt: str) -> dict:
        return {
            "image_ref": f"placeholder://render/{commit_id[:12]}",
            "style_prompt": style_prompt,
            "provenance": "stub",
        }
