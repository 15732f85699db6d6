"""Content-addressed, stroke-level version control.

On-disk layout (all JSON in the canonical form defined by the stroke
module, so identical histories are byte-identical):

    <root>/config.json              author name/id, branch counter
    <root>/objects/<2hex>/<62hex>   canonical stroke content bytes
    <root>/commits/<id>.json        commit nodes
    <root>/refs/heads/<branch>      branch tip commit id
    <root>/HEAD                     "ref: refs/heads/<branch>" or a commit id
    <root>/stash.json               single auto-recovery slot
    <root>/lock                     advisory writer lock

Commit ids are the SHA-256 of a canonical payload (parent id, sorted
stroke ids, author id, message, millisecond RFC-3339 timestamp).  Commits
have at most one parent; committing from any base that is not a branch
tip implicitly creates a new branch ("branch-N").  Repository state is
defined by the refs: object/commit files not reachable from a ref are
inert garbage, which is what makes interrupted writes safe: all object
and commit writes happen before the ref moves, and every ref/HEAD update
is write-temp-then-rename.

One writer at a time per repository (flock on <root>/lock); readers never
take the lock.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    AlreadyExists,
    CorruptDataRoot,
    EmptyInput,
    InvalidSpec,
    IoFailure,
    SchemaViolation,
    StashEmpty,
    UnknownBaseCommit,
    UnknownCommit,
)
from .sessions import CommitMarker, ConceptSwitch, SessionLog, StrokeAdded
from .strokes import (
    StrokeRecord,
    canonical_json,
    parse_timestamp,
    record_from_content_bytes,
    record_to_obj,
    stroke_content_bytes,
    stroke_content_id,
    record_from_obj,
)

logger = logging.getLogger(__name__)

TRANSCRIPT_SOURCES = ("typed", "speech")


def _utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(tzinfo=None)


def format_commit_timestamp(ts: datetime) -> str:
    """RFC 3339, millisecond precision, UTC."""
    return ts.isoformat(timespec="milliseconds") + "Z"


def commit_payload(parent, stroke_ids, author_id, message, timestamp) -> bytes:
    return canonical_json(
        {
            "parent": parent,
            "stroke_ids": sorted(stroke_ids),
            "author": author_id,
            "message": message,
            "timestamp": format_commit_timestamp(timestamp),
        }
    )


@dataclass(frozen=True)
class CommitNode:
    id: str
    parent: str | None
    stroke_ids: tuple[str, ...]
    message: str
    transcript_source: str
    author: str
    timestamp: datetime
    branch_hint: str

    def to_obj(self) -> dict:
        return {
            "id": self.id,
            "parent": self.parent,
            "stroke_ids": list(self.stroke_ids),
            "message": self.message,
            "transcript_source": self.transcript_source,
            "author": self.author,
            "timestamp": format_commit_timestamp(self.timestamp),
            "branch_hint": self.branch_hint,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "CommitNode":
        return cls(
            id=obj["id"],
            parent=obj["parent"],
            stroke_ids=tuple(obj["stroke_ids"]),
            message=obj["message"],
            transcript_source=obj["transcript_source"],
            author=obj["author"],
            timestamp=parse_timestamp(obj["timestamp"].rstrip("Z")),
            branch_hint=obj["branch_hint"],
        )


@dataclass
class WorkingCanvas:
    """Live strokes not yet committed, on top of an optional base commit."""

    base: str | None = None
    strokes: list[StrokeRecord] = field(default_factory=list)

    def stroke_ids(self) -> list[str]:
        return [stroke_content_id(s) for s in self.strokes]


@dataclass(frozen=True)
class DiffReport:
    added: tuple[str, ...]
    removed: tuple[str, ...]
    stroke_count_delta: int
    added_by_category: dict
    removed_by_category: dict

    def to_dict(self) -> dict:
        return {
            "added": list(self.added),
            "removed": list(self.removed),
            "stroke_count_delta": self.stroke_count_delta,
            "added_by_category": dict(self.added_by_category),
            "removed_by_category": dict(self.removed_by_category),
        }


class Repository:
    """Handle over one on-disk repository plus its in-memory live canvas."""

    def __init__(self, root, clock=None):
        self.root = Path(root)
        self.clock = clock or _utcnow
        if not (self.root / "config.json").is_file():
            raise IoFailure(f"not a repository: {self.root}")
        try:
            self.config = json.loads((self.root / "config.json").read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise CorruptDataRoot(f"config.json unreadable: {exc}") from None
        if not (self.root / "HEAD").is_file():
            raise CorruptDataRoot("HEAD missing")
        # parsed strokes keyed by content id; sound because records are
        # immutable and the store is content-addressed
        self._stroke_cache: dict[str, StrokeRecord] = {}
        head_kind, head_value = self.head()
        base = self.branches().get(head_value) if head_kind == "branch" else head_value
        strokes = []
        if base is not None:
            strokes = [self._load_stroke(cid) for cid in self.read_commit(base).stroke_ids]
        self.canvas = WorkingCanvas(base=base, strokes=strokes)
        # test hook: runs after object/commit writes, before the ref moves
        self._before_ref_update = None

    # ---- construction ----------------------------------------------------

    @classmethod
    def init(cls, root, author_name: str, author_id: str | None = None, clock=None) -> "Repository":
        root = Path(root)
        if root.exists() and any(root.iterdir()):
            raise AlreadyExists(f"{root} exists and is not empty")
        try:
            (root / "objects").mkdir(parents=True)
            (root / "commits").mkdir()
            (root / "refs" / "heads").mkdir(parents=True)
            (root / "lock").touch()
            config = {
                "author_name": author_name,
                "author_id": author_id or author_name,
                "branch_counter": 1,
            }
            _write_atomic(root / "config.json", canonical_json(config))
            _write_atomic(root / "HEAD", b"ref: refs/heads/main\n")
        except OSError as exc:
            raise IoFailure(f"cannot initialise repository: {exc}") from None
        return cls(root, clock=clock)

    @classmethod
    def open(cls, root, clock=None) -> "Repository":
        return cls(root, clock=clock)

    # ---- primitives -------------------------------------------------------

    @contextmanager
    def _writer_lock(self):
        with open(self.root / "lock", "r+b") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def _object_path(self, content_id: str) -> Path:
        return self.root / "objects" / content_id[:2] / content_id[2:]

    def _store_stroke(self, record: StrokeRecord) -> str:
        data = stroke_content_bytes(record)
        cid = hashlib.sha256(data).hexdigest()
        path = self._object_path(cid)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            _write_atomic(path, data)
        return cid

    def _load_stroke(self, content_id: str) -> StrokeRecord:
        cached = self._stroke_cache.get(content_id)
        if cached is not None:
            return cached
        path = self._object_path(content_id)
        if not path.is_file():
            raise CorruptDataRoot(f"stroke object {content_id} missing")
        record = record_from_content_bytes(content_id, path.read_bytes())
        self._stroke_cache[content_id] = record
        return record

    def read_commit(self, commit_id: str) -> CommitNode:
        path = self.root / "commits" / f"{commit_id}.json"
        if not path.is_file():
            raise UnknownCommit(f"no commit {commit_id}")
        return CommitNode.from_obj(json.loads(path.read_text("utf-8")))

    def branches(self) -> dict[str, str | None]:
        """Branch name -> tip commit id (None while a branch has no commits)."""
        out: dict[str, str | None] = {}
        heads = self.root / "refs" / "heads"
        for path in sorted(heads.iterdir()) if heads.is_dir() else []:
            out[path.name] = path.read_text("utf-8").strip() or None
        kind, value = self.head()
        if kind == "branch" and value not in out:
            out[value] = None
        return out

    def head(self) -> tuple[str, str]:
        text = (self.root / "HEAD").read_text("utf-8").strip()
        if text.startswith("ref: refs/heads/"):
            return "branch", text[len("ref: refs/heads/"):]
        return "detached", text

    def _set_head_branch(self, branch: str) -> None:
        _write_atomic(self.root / "HEAD", f"ref: refs/heads/{branch}\n".encode())

    def _set_head_detached(self, commit_id: str) -> None:
        _write_atomic(self.root / "HEAD", f"{commit_id}\n".encode())

    def _bump_branch_counter(self) -> int:
        n = self.config["branch_counter"]
        self.config["branch_counter"] = n + 1
        _write_atomic(self.root / "config.json", canonical_json(self.config))
        return n

    # ---- operations -------------------------------------------------------

    def add_stroke(self, record: StrokeRecord) -> int:
        record.validate()
        self.canvas.strokes.append(record)
        return len(self.canvas.strokes)

    def canvas_is_dirty(self, canvas: WorkingCanvas | None = None) -> bool:
        canvas = canvas if canvas is not None else self.canvas
        if canvas.base is None:
            return bool(canvas.strokes)
        return canvas.stroke_ids() != list(self.read_commit(canvas.base).stroke_ids)

    def commit(
        self,
        message: str,
        canvas: WorkingCanvas | None = None,
        transcript_source: str = "typed",
        timestamp: datetime | None = None,
    ) -> str:
        """Snapshot the canvas.  Committing from a branch tip advances that
        branch; any other base implicitly creates branch-N and moves HEAD."""
        if transcript_source not in TRANSCRIPT_SOURCES:
            raise SchemaViolation(f"transcript_source must be one of {TRANSCRIPT_SOURCES}", field="transcript_source")
        canvas = canvas if canvas is not None else self.canvas
        if canvas.base is not None:
            try:
                self.read_commit(canvas.base)
            except UnknownCommit:
                raise UnknownBaseCommit(f"canvas base {canvas.base} does not exist") from None
        if not message:
            logger.warning("empty commit message on %s", self.root)
        when = timestamp or self.clock()

        with self._writer_lock():
            stroke_ids = [self._store_stroke(record) for record in canvas.strokes]
            branches = self.branches()
            head_kind, head_value = self.head()
            target: str | None = None
            if head_kind == "branch" and branches.get(head_value) == canvas.base:
                target = head_value
            else:
                matching = [name for name, tip in sorted(branches.items()) if tip == canvas.base]
                if matching:
                    target = matching[0]
            created = target is None
            if created:
                target = f"branch-{self._bump_branch_counter()}"

            payload = commit_payload(canvas.base, stroke_ids, self.config["author_id"], message, when)
            commit_id = hashlib.sha256(payload).hexdigest()
            node = CommitNode(
                id=commit_id,
                parent=canvas.base,
                stroke_ids=tuple(stroke_ids),
                message=message,
                transcript_source=transcript_source,
                author=self.config["author_id"],
                timestamp=when,
                branch_hint=target,
            )
            _write_atomic(self.root / "commits" / f"{commit_id}.json", canonical_json(node.to_obj()))

            if self._before_ref_update is not None:
                self._before_ref_update()

            _write_atomic(self.root / "refs" / "heads" / target, f"{commit_id}\n".encode())
            self._set_head_branch(target)

        self._drop_stash_if_matches(canvas)
        self.canvas = WorkingCanvas(base=commit_id, strokes=list(canvas.strokes))
        return commit_id

    def _stash_matches(self, canvas: WorkingCanvas) -> bool:
        path = self.root / "stash.json"
        if not path.is_file():
            return False
        try:
            stashed = self._read_stash()
        except CorruptDataRoot:
            return False
        return stashed.base == canvas.base and stashed.stroke_ids() == canvas.stroke_ids()

    def _drop_stash_if_matches(self, canvas: WorkingCanvas) -> None:
        if self._stash_matches(canvas):
            (self.root / "stash.json").unlink()

    def checkout(self, commit_id: str) -> WorkingCanvas:
        """Restore a commit's strokes.  Dirty live strokes auto-stash first.
        HEAD attaches when the commit is a branch tip, else detaches."""
        node = self.read_commit(commit_id)
        if self.canvas.strokes and self.canvas_is_dirty():
            self.stash_save()
        strokes = [self._load_stroke(cid) for cid in node.stroke_ids]
        with self._writer_lock():
            tips = [name for name, tip in sorted(self.branches().items()) if tip == commit_id]
            if tips:
                self._set_head_branch(tips[0])
            else:
                self._set_head_detached(commit_id)
        self.canvas = WorkingCanvas(base=commit_id, strokes=strokes)
        return self.canvas

    def stash_save(self, canvas: WorkingCanvas | None = None) -> None:
        canvas = canvas if canvas is not None else self.canvas
        if not canvas.strokes:
            raise EmptyInput("refusing to stash an empty canvas")
        path = self.root / "stash.json"
        if path.is_file():
            logger.warning("overwriting existing stash in %s", self.root)
        obj = {"base": canvas.base, "strokes": [record_to_obj(s) for s in canvas.strokes]}
        with self._writer_lock():
            _write_atomic(path, canonical_json(obj))

    def _read_stash(self) -> WorkingCanvas:
        path = self.root / "stash.json"
        try:
            obj = json.loads(path.read_text("utf-8"))
            return WorkingCanvas(base=obj["base"], strokes=[record_from_obj(o) for o in obj["strokes"]])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorruptDataRoot(f"stash unreadable: {exc}") from None

    def stash_restore(self) -> WorkingCanvas:
        path = self.root / "stash.json"
        if not path.is_file():
            raise StashEmpty("stash slot is empty")
        canvas = self._read_stash()
        with self._writer_lock():
            path.unlink()
        self.canvas = canvas
        return canvas

    def stash_peek(self) -> WorkingCanvas | None:
        return self._read_stash() if (self.root / "stash.json").is_file() else None

    def diff(self, a: str, b: str) -> DiffReport:
        node_a = self.read_commit(a)
        node_b = self.read_commit(b)
        set_a, set_b = set(node_a.stroke_ids), set(node_b.stroke_ids)
        added = tuple(sorted(set_b - set_a))
        removed = tuple(sorted(set_a - set_b))

        def category_counts(ids):
            counts: dict[str, int] = {}
            for cid in ids:
                cat = self._load_stroke(cid).category.value
                counts[cat] = counts.get(cat, 0) + 1
            return counts

        return DiffReport(
            added=added,
            removed=removed,
            stroke_count_delta=len(node_b.stroke_ids) - len(node_a.stroke_ids),
            added_by_category=category_counts(added),
            removed_by_category=category_counts(removed),
        )

    def _reachable_commits(self) -> dict[str, CommitNode]:
        """Commits reachable from branch tips or a detached HEAD."""
        pending = [tip for tip in self.branches().values() if tip]
        kind, value = self.head()
        if kind == "detached":
            pending.append(value)
        seen: dict[str, CommitNode] = {}
        while pending:
            cid = pending.pop()
            if cid in seen:
                continue
            node = self.read_commit(cid)
            seen[cid] = node
            if node.parent:
                pending.append(node.parent)
        return seen

    def log(self) -> list[CommitNode]:
        """All reachable commits, parents before children, ties broken by
        (timestamp, id)."""
        import heapq

        nodes = self._reachable_commits()
        children: dict[str, list[str]] = {}
        ready = []
        for cid, node in nodes.items():
            if node.parent is None or node.parent not in nodes:
                heapq.heappush(ready, (node.timestamp, cid))
            else:
                children.setdefault(node.parent, []).append(cid)
        out = []
        while ready:
            _, cid = heapq.heappop(ready)
            out.append(nodes[cid])
            for child in children.get(cid, []):
                heapq.heappush(ready, (nodes[child].timestamp, child))
        return out

    def slideshow(self, tip: str) -> list[CommitNode]:
        """The unique parent chain from the root to ``tip``, in play order."""
        chain = []
        node = self.read_commit(tip)
        seen = set()
        while True:
            if node.id in seen:
                raise CorruptDataRoot("commit graph contains a cycle")
            seen.add(node.id)
            chain.append(node)
            if node.parent is None:
                break
            node = self.read_commit(node.parent)
        return list(reversed(chain))

    def version_tree(self) -> dict:
        """Node/edge list with branch labels, serializable for a UI."""
        ordered = self.log()
        branches = self.branches()
        kind, value = self.head()
        return {
            "nodes": [
                {
                    "id": n.id,
                    "parent": n.parent,
                    "message": n.message,
                    "timestamp": format_commit_timestamp(n.timestamp),
                    "branch_hint": n.branch_hint,
                    "stroke_count": len(n.stroke_ids),
                }
                for n in ordered
            ],
            "edges": [{"from": n.id, "to": n.parent} for n in ordered if n.parent],
            "branches": branches,
            "head": {"kind": kind, "value": value},
        }

    def rename_branch(self, old: str, new: str) -> None:
        if not new or "/" in new or new.startswith("."):
            raise InvalidSpec(f"bad branch name {new!r}", field="branch")
        heads = self.root / "refs" / "heads"
        if not (heads / old).is_file():
            raise UnknownCommit(f"no branch {old}")
        if (heads / new).exists():
            raise AlreadyExists(f"branch {new} exists")
        with self._writer_lock():
            os.replace(heads / old, heads / new)
            kind, value = self.head()
            if kind == "branch" and value == old:
                self._set_head_branch(new)

    def reset_canvas(self) -> WorkingCanvas:
        """Fresh empty canvas with no base; dirty strokes auto-stash first."""
        if self.canvas.strokes and self.canvas_is_dirty():
            self.stash_save()
        self.canvas = WorkingCanvas()
        return self.canvas

    def fsck(self) -> list[str]:
        """Integrity scan; returns human-readable problems (empty == healthy)."""
        problems = []
        try:
            nodes = self._reachable_commits()
        except (UnknownCommit, CorruptDataRoot) as exc:
            return [str(exc)]
        for cid, node in nodes.items():
            payload = commit_payload(node.parent, list(node.stroke_ids), node.author, node.message, node.timestamp)
            if hashlib.sha256(payload).hexdigest() != cid:
                problems.append(f"commit {cid} does not match its payload hash")
            for sid in node.stroke_ids:
                path = self._object_path(sid)
                if not path.is_file():
                    problems.append(f"commit {cid} references missing stroke {sid}")
                elif hashlib.sha256(path.read_bytes()).hexdigest() != sid:
                    problems.append(f"stroke object {sid} content does not hash to its id")
        # acyclicity: every parent chain must terminate
        for cid in nodes:
            seen = set()
            cursor = cid
            while cursor is not None:
                if cursor in seen:
                    problems.append(f"cycle through commit {cid}")
                    break
                seen.add(cursor)
                cursor = nodes[cursor].parent if cursor in nodes else None
        kind, value = self.head()
        if kind == "branch":
            if value not in self.branches():
                problems.append(f"HEAD points at unknown branch {value}")
        elif value not in nodes:
            problems.append(f"HEAD detached at unknown commit {value}")
        return problems


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def replay_session(repo: Repository, log: SessionLog) -> dict[int, str]:
    """Replay a session log; returns concept id -> branch name."""
    concept_branch: dict[int, str] = {}
    current_concept: int | None = None
    for event in log.events:
        if isinstance(event, ConceptSwitch):
            current_concept = event.concept_id
            if event.concept_id in concept_branch:
                tip = repo.branches()[concept_branch[event.concept_id]]
                repo.checkout(tip)
            else:
                repo.reset_canvas()
        elif isinstance(event, StrokeAdded):
            if current_concept is None:
                current_concept = event.concept_id
            repo.add_stroke(event.record)
        elif isinstance(event, CommitMarker):
            repo.commit(event.message, transcript_source="typed", timestamp=event.timestamp)
            kind, value = repo.head()
            if current_concept is not None and kind == "branch":
                concept_branch[current_concept] = value
    return concept_branch
