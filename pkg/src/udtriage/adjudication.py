"""Three-tier review state machine with a persistent project store.

Disagreement records go through: Pending -> PartiallyReviewed (first
annotator label) -> ResolvedByAgreement (labels equal) or NeedsAdjudication
(labels differ) -> ResolvedByAdjudicator. The store is backed by an
append-only JSON-lines event log, which is the source of truth: replaying
it reconstructs the exact state, snapshots only speed loading up.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable

from .agreement import (
    RATE_FEATURES,
    CorrectionEvent,
    FeatureKind,
    compare_token,
)
from .alignment import (
    MANY_TO_MANY,
    ONE_TO_ONE,
    AlignmentMap,
    align_sentences,
    head_correspondence,
    pair_sentences,
)
from .conllu import (
    Corpus,
    Sentence,
    Token,
    parse_conllu_file,
    validate_tree,
    write_conllu_file,
)


class Status(Enum):
    PENDING = "Pending"
    PARTIALLY_REVIEWED = "PartiallyReviewed"
    RESOLVED_BY_AGREEMENT = "ResolvedByAgreement"
    NEEDS_ADJUDICATION = "NeedsAdjudication"
    RESOLVED_BY_ADJUDICATOR = "ResolvedByAdjudicator"


RESOLVED_STATUSES = (Status.RESOLVED_BY_AGREEMENT, Status.RESOLVED_BY_ADJUDICATOR)

ANNOTATOR_1 = "annotator1"
ANNOTATOR_2 = "annotator2"
ADJUDICATOR = "adjudicator"
OBSERVER = "observer"
ROLES = (ANNOTATOR_1, ANNOTATOR_2, ADJUDICATOR, OBSERVER)


class ItemNotFoundError(KeyError):
    def __init__(self, item_id: str):
        super().__init__(item_id)
        self.item_id = item_id


class RoleError(ValueError):
    pass


class DuplicateSubmissionError(ValueError):
    pass


class StateTransitionError(ValueError):
    pass


class TokenizationUnresolvedError(StateTransitionError):
    """HEAD labels use gold token ids, which are undefined until every
    tokenization disagreement in the sentence is resolved."""


class LabelError(ValueError):
    pass


class ExportBlockedError(ValueError):
    def __init__(self, pending_ids: list[str]):
        preview = ", ".join(pending_ids[:5])
        more = "" if len(pending_ids) <= 5 else f" (+{len(pending_ids) - 5} more)"
        super().__init__(f"{len(pending_ids)} unresolved items block export: {preview}{more}")
        self.pending_ids = pending_ids


@dataclass(frozen=True, slots=True)
class DisagreementRecord:
    """One aligned token (or tokenization block) needing human review."""

    record_id: str
    sentence_key: str
    feature: FeatureKind
    value_a: str
    value_b: str
    left_token_id: int | None
    right_token_id: int | None
    block_index: int
    context_text: str

    def to_payload(self) -> dict:
        return {
            "record_id": self.record_id,
            "sentence_key": self.sentence_key,
            "feature": self.feature.value,
            "value_a": self.value_a,
            "value_b": self.value_b,
            "left_token_id": self.left_token_id,
            "right_token_id": self.right_token_id,
            "block_index": self.block_index,
            "context_text": self.context_text,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "DisagreementRecord":
        data = dict(payload)
        data["feature"] = FeatureKind(data["feature"])
        return cls(**data)


@dataclass(slots=True)
class HistoryEvent:
    actor: str
    timestamp: str
    action: str
    value: str | None

    def as_list(self) -> list:
        return [self.actor, self.timestamp, self.action, self.value]


@dataclass(slots=True)
class AdjudicationItem:
    record: DisagreementRecord
    annotator1_label: str | None = None
    annotator2_label: str | None = None
    adjudicator_label: str | None = None
    status: Status = Status.PENDING
    history: list[HistoryEvent] = field(default_factory=list)

    @property
    def final_label(self) -> str | None:
        if self.status is Status.RESOLVED_BY_AGREEMENT:
            return self.annotator1_label
        if self.status is Status.RESOLVED_BY_ADJUDICATOR:
            return self.adjudicator_label
        return None

    def state_dict(self) -> dict:
        return {
            "record": self.record.to_payload(),
            "annotator1_label": self.annotator1_label,
            "annotator2_label": self.annotator2_label,
            "adjudicator_label": self.adjudicator_label,
            "status": self.status.value,
            "history": [h.as_list() for h in self.history],
        }

    @classmethod
    def from_state(cls, state: dict) -> "AdjudicationItem":
        return cls(
            record=DisagreementRecord.from_payload(state["record"]),
            annotator1_label=state["annotator1_label"],
            annotator2_label=state["annotator2_label"],
            adjudicator_label=state["adjudicator_label"],
            status=Status(state["status"]),
            history=[HistoryEvent(*entry) for entry in state["history"]],
        )

    def view(self, role: str) -> dict:
        """Item payload as visible to a role.

        Annotators never see the other annotator's label (or its history
        entries) before submitting their own; the adjudicator and observer
        see everything.
        """
        payload = self.state_dict()
        payload["final_label"] = self.final_label
        hide_actor = None
        if role == ANNOTATOR_1 and self.annotator1_label is None:
            hide_actor = ANNOTATOR_2
        elif role == ANNOTATOR_2 and self.annotator2_label is None:
            hide_actor = ANNOTATOR_1
        if hide_actor is not None:
            payload.pop(f"{hide_actor}_label")
            payload["history"] = [h for h in payload["history"] if h[0] != hide_actor]
        return payload


def _feature_record_id(sentence_key: str, left_token_id: int, feature: FeatureKind) -> str:
    return f"{sentence_key}:t{left_token_id:04d}:{feature.value}"


def _block_record_id(sentence_key: str, block_index: int) -> str:
    return f"{sentence_key}:b{block_index:04d}:TOKENIZATION"


def build_queue(a: Corpus, b: Corpus, base_deprel_only: bool = False) -> list[DisagreementRecord]:
    """One record per (aligned token, disagreeing feature), plus one
    TOKENIZATION record per many-to-many block. Agreed features produce
    nothing; fully agreeing corpora produce an empty queue."""
    records: list[DisagreementRecord] = []
    for key, sent_a, sent_b in pair_sentences(a, b):
        amap = align_sentences(sent_a, sent_b, key)
        context = sent_a.text if sent_a.text is not None else " ".join(t.form for t in sent_a.tokens)
        for block_index, block in enumerate(amap.blocks):
            if block.kind == MANY_TO_MANY:
                records.append(
                    DisagreementRecord(
                        record_id=_block_record_id(key, block_index),
                        sentence_key=key,
                        feature=FeatureKind.TOKENIZATION,
                        value_a=" ".join(sent_a.tokens[i - 1].form for i in block.left_ids()),
                        value_b=" ".join(sent_b.tokens[j - 1].form for j in block.right_ids()),
                        left_token_id=block.left_span[0],
                        right_token_id=block.right_span[0],
                        block_index=block_index,
                        context_text=context,
                    )
                )
                continue
            left_id, right_id = block.left_span[0], block.right_span[0]
            tok_a = sent_a.tokens[left_id - 1]
            tok_b = sent_b.tokens[right_id - 1]
            flags = compare_token(
                tok_a,
                tok_b,
                head_correspondence(amap, sent_a, sent_b, (left_id, right_id)),
                base_deprel_only=base_deprel_only,
            )
            values = {
                FeatureKind.LEMMA: (tok_a.lemma, tok_b.lemma),
                FeatureKind.XPOS: (tok_a.xpos, tok_b.xpos),
                FeatureKind.HEAD: (str(tok_a.head), str(tok_b.head)),
                FeatureKind.DEPREL: (tok_a.deprel, tok_b.deprel),
            }
            for feature in RATE_FEATURES:
                if flags[feature]:
                    continue
                value_a, value_b = values[feature]
                records.append(
                    DisagreementRecord(
                        record_id=_feature_record_id(key, left_id, feature),
                        sentence_key=key,
                        feature=feature,
                        value_a=value_a,
                        value_b=value_b,
                        left_token_id=left_id,
                        right_token_id=right_id,
                        block_index=block_index,
                        context_text=context,
                    )
                )
    return records


@dataclass(slots=True)
class AdjudicationStats:
    """Adjudicator-tier correction counts (items resolved from NeedsAdjudication)."""

    per_feature: dict[FeatureKind, int]
    distinct_tokens: int

    def to_rows(self, total_tokens: int) -> list[dict]:
        from .agreement import rate_percent

        rows = []
        for feature in RATE_FEATURES:
            fixed = self.per_feature[feature]
            rate = rate_percent(fixed, total_tokens)
            rows.append(
                {
                    "feature": feature.value,
                    "fixed": fixed,
                    "total": total_tokens,
                    "rate": "n/a" if rate is None else f"{rate}",
                }
            )
        return rows


def _default_clock() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class ProjectStore:
    """Adjudication state for one project, persisted as an event log.

    All mutations are serialized through a single lock; validation happens
    before the event is written, and the write is flushed to disk before
    the in-memory state changes, so an acknowledged submission is never lost
    and replaying the log always reproduces the live state.
    """

    META_FILE = "project.json"
    CORPUS_A_FILE = "corpus_a.conllu"
    CORPUS_B_FILE = "corpus_b.conllu"
    EVENTS_FILE = "events.ndjson"
    SNAPSHOT_FILE = "snapshot.json"
    SNAPSHOT_EVERY = 500

    def __init__(
        self,
        root: Path,
        project_id: str,
        corpus_a: Corpus,
        corpus_b: Corpus,
        clock: Callable[[], str] | None = None,
    ):
        self.root = Path(root)
        self.project_id = project_id
        self.corpus_a = corpus_a
        self.corpus_b = corpus_b
        self._clock = clock or _default_clock
        self._lock = threading.RLock()
        self._seq = 0
        self._events_since_snapshot = 0
        self._log_handle = None
        self.items: dict[str, AdjudicationItem] = {}
        self._idempotency: dict[str, dict] = {}
        self._aligned: list[tuple[str, Sentence, Sentence, AlignmentMap]] = [
            (key, sa, sb, align_sentences(sa, sb, key))
            for key, sa, sb in pair_sentences(corpus_a, corpus_b)
        ]
        self._by_key = {key: (sa, sb, amap) for key, sa, sb, amap in self._aligned}

    # ------------------------------------------------------------------ setup

    @classmethod
    def create(
        cls,
        root: str | Path,
        project_id: str,
        corpus_a: Corpus,
        corpus_b: Corpus,
        clock: Callable[[], str] | None = None,
    ) -> "ProjectStore":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        if (root / cls.META_FILE).exists():
            raise FileExistsError(f"{root} already contains a project")
        write_conllu_file(corpus_a, root / cls.CORPUS_A_FILE)
        write_conllu_file(corpus_b, root / cls.CORPUS_B_FILE)
        store = cls(root, project_id, corpus_a, corpus_b, clock)
        (root / cls.META_FILE).write_text(
            json.dumps({"project_id": project_id, "created": store._clock()}, ensure_ascii=False)
            + "\n",
            encoding="utf-8",
        )
        store._open_log()
        store._log_and_apply("system", "init", None, {"project_id": project_id})
        for record in build_queue(corpus_a, corpus_b):
            store._log_and_apply("system", "enqueue", record.record_id, record.to_payload())
        return store

    @classmethod
    def open(cls, root: str | Path, clock: Callable[[], str] | None = None) -> "ProjectStore":
        root = Path(root)
        meta = json.loads((root / cls.META_FILE).read_text(encoding="utf-8"))
        corpus_a = parse_conllu_file(root / cls.CORPUS_A_FILE, "parser_a")
        corpus_b = parse_conllu_file(root / cls.CORPUS_B_FILE, "parser_b")
        store = cls(root, meta["project_id"], corpus_a, corpus_b, clock)
        snapshot_path = root / cls.SNAPSHOT_FILE
        if snapshot_path.exists():
            snapshot = json.loads(snapshot_path.read_text(encoding="utf-8"))
            store._seq = snapshot["last_seq"]
            store.items = {
                item_id: AdjudicationItem.from_state(state)
                for item_id, state in snapshot["items"].items()
            }
            store._idempotency = dict(snapshot["idempotency"])
        events_path = root / cls.EVENTS_FILE
        if events_path.exists():
            with events_path.open(encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["seq"] <= store._seq:
                        continue
                    store._apply_event(event)
                    store._seq = event["seq"]
        store._open_log()
        return store

    def _open_log(self) -> None:
        self._log_handle = (self.root / self.EVENTS_FILE).open("a", encoding="utf-8")

    # ------------------------------------------------------------- event core

    def _log_and_apply(self, actor: str, action: str, item_id: str | None, value) -> dict:
        self._seq += 1
        event = {
            "seq": self._seq,
            "actor": actor,
            "action": action,
            "item_id": item_id,
            "value": value,
            "timestamp": self._clock(),
        }
        line = json.dumps(event, ensure_ascii=False, separators=(",", ":"))
        self._log_handle.write(line + "\n")
        self._log_handle.flush()
        os.fsync(self._log_handle.fileno())
        self._apply_event(event)
        self._events_since_snapshot += 1
        if self._events_since_snapshot >= self.SNAPSHOT_EVERY:
            self.snapshot()
        return event

    def _apply_event(self, event: dict) -> None:
        action = event["action"]
        if action == "init":
            return
        if action == "enqueue":
            record = DisagreementRecord.from_payload(event["value"])
            self.items[record.record_id] = AdjudicationItem(
                record=record,
                history=[HistoryEvent(event["actor"], event["timestamp"], "enqueue", None)],
            )
            return
        item = self.items[event["item_id"]]
        label = event["value"]["label"]
        if action == "annotate":
            actor = event["actor"]
            if actor == ANNOTATOR_1:
                item.annotator1_label = label
            else:
                item.annotator2_label = label
            if item.annotator1_label is not None and item.annotator2_label is not None:
                if item.annotator1_label == item.annotator2_label:
                    item.status = Status.RESOLVED_BY_AGREEMENT
                else:
                    item.status = Status.NEEDS_ADJUDICATION
            else:
                item.status = Status.PARTIALLY_REVIEWED
            item.history.append(HistoryEvent(actor, event["timestamp"], "annotate", label))
            role = actor
        elif action == "adjudicate":
            item.adjudicator_label = label
            item.status = Status.RESOLVED_BY_ADJUDICATOR
            item.history.append(
                HistoryEvent(event["actor"], event["timestamp"], "adjudicate", label)
            )
            role = ADJUDICATOR
        else:
            raise ValueError(f"unknown event action {action!r}")
        key = event["value"].get("idempotency_key")
        if key is not None:
            self._idempotency[key] = item.view(role)

    # ------------------------------------------------------------ submissions

    def submit_annotation(
        self, item_id: str, actor: str, label: str, idempotency_key: str | None = None
    ) -> dict:
        with self._lock:
            if idempotency_key is not None and idempotency_key in self._idempotency:
                return self._idempotency[idempotency_key]
            if actor not in (ANNOTATOR_1, ANNOTATOR_2):
                raise RoleError(f"annotation submissions need annotator1 or annotator2, got {actor!r}")
            item = self._get_item(item_id)
            if item.status in RESOLVED_STATUSES or item.status is Status.NEEDS_ADJUDICATION:
                raise StateTransitionError(
                    f"item {item_id} is {item.status.value}; annotator labels are closed"
                )
            own = item.annotator1_label if actor == ANNOTATOR_1 else item.annotator2_label
            if own is not None:
                raise DuplicateSubmissionError(f"{actor} already labeled item {item_id}")
            label = self._validate_label(item, label)
            self._log_and_apply(actor, "annotate", item_id, {"label": label, "idempotency_key": idempotency_key})
            if idempotency_key is not None:
                return self._idempotency[idempotency_key]
            return item.view(actor)

    def submit_adjudication(
        self, item_id: str, label: str, idempotency_key: str | None = None
    ) -> dict:
        with self._lock:
            if idempotency_key is not None and idempotency_key in self._idempotency:
                return self._idempotency[idempotency_key]
            item = self._get_item(item_id)
            if item.status is not Status.NEEDS_ADJUDICATION:
                raise StateTransitionError(
                    f"item {item_id} is {item.status.value}, adjudication needs NeedsAdjudication"
                )
            label = self._validate_label(item, label)
            self._log_and_apply(
                ADJUDICATOR, "adjudicate", item_id, {"label": label, "idempotency_key": idempotency_key}
            )
            if idempotency_key is not None:
                return self._idempotency[idempotency_key]
            return item.view(ADJUDICATOR)

    def _get_item(self, item_id: str) -> AdjudicationItem:
        try:
            return self.items[item_id]
        except KeyError:
            raise ItemNotFoundError(item_id) from None

    def _validate_label(self, item: AdjudicationItem, label: str) -> str:
        """Check a label against its record's feature; returns the label in
        canonical form (tokenization side choices are uppercased)."""
        if not isinstance(label, str) or label == "":
            raise LabelError("label must be a non-empty string")
        feature = item.record.feature
        if feature is FeatureKind.TOKENIZATION:
            if label.upper() not in ("A", "B"):
                raise LabelError("tokenization labels choose a side: 'A' or 'B'")
            return label.upper()
        if feature is FeatureKind.HEAD:
            key = item.record.sentence_key
            if self._unresolved_tokenization_ids(key):
                raise TokenizationUnresolvedError(
                    f"resolve tokenization items in sentence {key} before HEAD labels"
                )
            try:
                head = int(label)
            except ValueError:
                raise LabelError(f"HEAD labels are gold token ids, got {label!r}") from None
            a_map, _, n_gold, _ = self._gold_maps(key)
            if head < 0 or head > n_gold:
                raise LabelError(f"HEAD {head} outside gold token range 0..{n_gold}")
            own_gold_id = a_map[item.record.left_token_id]
            if head == own_gold_id:
                raise LabelError(f"HEAD {head} would attach token {own_gold_id} to itself")
        return label

    def _unresolved_tokenization_ids(self, sentence_key: str) -> list[str]:
        _, _, amap = self._by_key[sentence_key]
        unresolved = []
        for block_index, block in enumerate(amap.blocks):
            if block.kind != MANY_TO_MANY:
                continue
            item = self.items[_block_record_id(sentence_key, block_index)]
            if item.final_label is None:
                unresolved.append(item.record.record_id)
        return unresolved

    # ------------------------------------------------------------------ views

    def item_view(self, item_id: str, role: str = OBSERVER) -> dict:
        with self._lock:
            return self._get_item(item_id).view(role)

    def queue_page(
        self,
        role: str = OBSERVER,
        status: Status | None = None,
        feature: FeatureKind | None = None,
        page: int = 1,
        page_size: int = 50,
    ) -> tuple[list[dict], int]:
        if page < 1 or page_size < 1:
            raise ValueError("page and page_size must be >= 1")
        with self._lock:
            selected = [
                item
                for item in self.items.values()
                if (status is None or item.status is status)
                and (feature is None or item.record.feature is feature)
            ]
            selected.sort(key=lambda item: item.record.record_id)
            start = (page - 1) * page_size
            return [item.view(role) for item in selected[start:start + page_size]], len(selected)

    def burndown(self) -> dict:
        with self._lock:
            by_status = {status.value: 0 for status in Status}
            for item in self.items.values():
                by_status[item.status.value] += 1
            remaining = (
                by_status[Status.PENDING.value]
                + by_status[Status.PARTIALLY_REVIEWED.value]
                + by_status[Status.NEEDS_ADJUDICATION.value]
            )
            return {"total": len(self.items), "remaining": remaining, **by_status}

    def records_for(self, feature: FeatureKind) -> list[DisagreementRecord]:
        with self._lock:
            return [item.record for item in self.items.values() if item.record.feature is feature]

    def sentence_tokens(self, sentence_key: str) -> dict:
        """Side-by-side token rows for display contexts."""
        sent_a, sent_b, _ = self._by_key[sentence_key]

        def rows(sentence: Sentence) -> list[dict]:
            return [
                {
                    "id": t.id,
                    "form": t.form,
                    "lemma": t.lemma,
                    "xpos": t.xpos,
                    "head": t.head,
                    "deprel": t.deprel,
                }
                for t in sentence.tokens
            ]

        return {"tokens_a": rows(sent_a), "tokens_b": rows(sent_b)}

    def aligned_token_total(self) -> int:
        """Number of one-to-one aligned tokens: the denominator for
        correction rates over this project."""
        return sum(
            1 for _, _, _, amap in self._aligned for blk in amap.blocks if blk.kind == ONE_TO_ONE
        )

    def gold_token_maps(self, sentence_key: str) -> tuple[dict[int, int], dict[int, int], int]:
        """(parser A id -> gold id, parser B id -> gold id, gold token count)
        under the current tokenization resolutions."""
        with self._lock:
            a_map, b_map, n_gold, _ = self._gold_maps(sentence_key)
            return a_map, b_map, n_gold

    # ------------------------------------------------------------------- gold

    def _gold_maps(self, sentence_key: str):
        """Per-side token id -> gold id maps under current tokenization choices.

        For a many-to-many block the chosen side's tokens get their own gold
        ids; ids on the discarded side all map to the block's first gold
        token, mirroring block-identity head comparison.
        """
        sent_a, sent_b, amap = self._by_key[sentence_key]
        a_map: dict[int, int] = {}
        b_map: dict[int, int] = {}
        choices: dict[int, tuple[str, bool]] = {}
        next_gold = 1
        for block_index, block in enumerate(amap.blocks):
            if block.kind == ONE_TO_ONE:
                a_map[block.left_span[0]] = next_gold
                b_map[block.right_span[0]] = next_gold
                next_gold += 1
                continue
            item = self.items[_block_record_id(sentence_key, block_index)]
            resolved = item.final_label is not None
            side = item.final_label.upper() if resolved else "A"
            choices[block_index] = (side, resolved)
            anchor = next_gold
            if side == "A":
                for offset, left_id in enumerate(block.left_ids()):
                    a_map[left_id] = next_gold + offset
                for right_id in block.right_ids():
                    b_map[right_id] = anchor
                next_gold += block.left_size
            else:
                for offset, right_id in enumerate(block.right_ids()):
                    b_map[right_id] = next_gold + offset
                for left_id in block.left_ids():
                    a_map[left_id] = anchor
                next_gold += block.right_size
        return a_map, b_map, next_gold - 1, choices

    def export_gold(self, partial: bool = False) -> tuple[Corpus, list[str]]:
        """Merge parser-agreed values and review resolutions into one corpus.

        Without the partial flag every item must be resolved. In partial
        mode unresolved fields keep parser A's value and the affected tokens
        carry an Unresolved marker in MISC. Tree violations in the result
        are reported, not raised.
        """
        with self._lock:
            pending = sorted(
                item_id for item_id, item in self.items.items() if item.final_label is None
            )
            if pending and not partial:
                raise ExportBlockedError(pending)
            violations: list[str] = []
            sentences: list[Sentence] = []
            for key, sent_a, sent_b, amap in self._aligned:
                a_map, b_map, _, choices = self._gold_maps(key)
                tokens: list[Token] = []
                for block_index, block in enumerate(amap.blocks):
                    if block.kind == ONE_TO_ONE:
                        tokens.append(
                            self._gold_one_to_one(
                                key, block, sent_a, sent_b, a_map, violations
                            )
                        )
                        continue
                    side, resolved = choices[block_index]
                    src_sent = sent_a if side == "A" else sent_b
                    src_map = a_map if side == "A" else b_map
                    src_ids = block.left_ids() if side == "A" else block.right_ids()
                    for src_id in src_ids:
                        src = src_sent.tokens[src_id - 1]
                        gold_id = src_map[src_id]
                        head = 0 if src.head == 0 else src_map.get(src.head, src.head)
                        misc = src.misc
                        if not resolved:
                            misc = _merge_unresolved(misc, ["TOKENIZATION"])
                        head, note = _guard_self_head(head, gold_id, src.head)
                        if note:
                            violations.append(f"{key}: {note}")
                        tokens.append(
                            Token(
                                id=gold_id,
                                form=src.form,
                                lemma=src.lemma,
                                upos=src.upos,
                                xpos=src.xpos,
                                feats=src.feats,
                                head=head,
                                deprel=src.deprel,
                                deps=src.deps,
                                misc=misc,
                            )
                        )
                sentence = Sentence(list(sent_a.comments), tokens)
                report = validate_tree(sentence)
                if not report.ok:
                    violations.extend(f"{key}: {v}" for v in report.violations())
                sentences.append(sentence)
            return Corpus(sentences, source_label=f"{self.project_id}-gold"), violations

    def _gold_one_to_one(self, key, block, sent_a, sent_b, a_map, violations) -> Token:
        left_id = block.left_span[0]
        tok_a = sent_a.tokens[left_id - 1]
        gold_id = a_map[left_id]
        lemma, xpos, deprel = tok_a.lemma, tok_a.xpos, tok_a.deprel
        head: int | None = None
        unresolved: list[str] = []
        for feature in RATE_FEATURES:
            item = self.items.get(_feature_record_id(key, left_id, feature))
            if item is None:
                continue
            label = item.final_label
            if label is None:
                unresolved.append(feature.value)
                continue
            if feature is FeatureKind.LEMMA:
                lemma = label
            elif feature is FeatureKind.XPOS:
                xpos = label
            elif feature is FeatureKind.DEPREL:
                deprel = label
            else:
                head = int(label)
        if head is None:
            head = 0 if tok_a.head == 0 else a_map.get(tok_a.head, tok_a.head)
            head, note = _guard_self_head(head, gold_id, tok_a.head)
            if note:
                violations.append(f"{key}: {note}")
        misc = _merge_unresolved(tok_a.misc, unresolved) if unresolved else tok_a.misc
        return Token(
            id=gold_id,
            form=tok_a.form,
            lemma=lemma,
            upos=tok_a.upos,
            xpos=xpos,
            feats=tok_a.feats,
            head=head,
            deprel=deprel,
            deps=tok_a.deps,
            misc=misc,
        )

    # ------------------------------------------------------------- statistics

    def adjudication_stats(self) -> AdjudicationStats:
        with self._lock:
            per_feature = {f: 0 for f in RATE_FEATURES}
            tokens: set[tuple[str, int]] = set()
            for item in self.items.values():
                if item.status is not Status.RESOLVED_BY_ADJUDICATOR:
                    continue
                if item.record.feature in per_feature:
                    per_feature[item.record.feature] += 1
                    tokens.add((item.record.sentence_key, item.record.left_token_id))
            return AdjudicationStats(per_feature=per_feature, distinct_tokens=len(tokens))

    def correction_events(self, tier: str = "human") -> list[CorrectionEvent]:
        """Resolved review decisions as correction events.

        tier="human" covers everything resolved by review (both tiers);
        tier="adjudicated" restricts to third-annotator resolutions.
        """
        if tier not in ("human", "adjudicated"):
            raise ValueError(f"tier must be 'human' or 'adjudicated', got {tier!r}")
        with self._lock:
            events = []
            for item in self.items.values():
                if item.final_label is None or item.record.feature is FeatureKind.TOKENIZATION:
                    continue
                if tier == "adjudicated" and item.status is not Status.RESOLVED_BY_ADJUDICATOR:
                    continue
                events.append(
                    CorrectionEvent(
                        sentence_key=item.record.sentence_key,
                        token_id=item.record.left_token_id,
                        feature=item.record.feature,
                        value_a=item.record.value_a,
                        value_b=item.record.value_b,
                        gold_value=item.final_label,
                    )
                )
            return events

    # ---------------------------------------------------------- persistence

    def state_dict(self) -> dict:
        with self._lock:
            return {
                "last_seq": self._seq,
                "items": {item_id: item.state_dict() for item_id, item in self.items.items()},
                "idempotency": dict(self._idempotency),
            }

    def snapshot(self) -> None:
        """Write a point-in-time snapshot so reopening can skip old events."""
        with self._lock:
            payload = json.dumps(self.state_dict(), ensure_ascii=False)
            tmp = self.root / (self.SNAPSHOT_FILE + ".tmp")
            tmp.write_text(payload, encoding="utf-8")
            tmp.replace(self.root / self.SNAPSHOT_FILE)
            self._events_since_snapshot = 0

    def close(self) -> None:
        if self._log_handle is not None:
            self._log_handle.close()
            self._log_handle = None


def _merge_unresolved(misc: str, features: list[str]) -> str:
    marker = "Unresolved=" + "+".join(sorted(features))
    if misc in ("", "_"):
        return marker
    return f"{misc}|{marker}"


def _guard_self_head(head: int, gold_id: int, original: int) -> tuple[int, str | None]:
    # An out-of-range head in the source can collide with the token's own
    # gold id after renumbering; reroot it and report rather than crash.
    if head == gold_id:
        return 0, f"token {gold_id}: unmappable head {original} replaced by 0"
    return head, None
