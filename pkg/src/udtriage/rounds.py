"""Incremental annotation rounds: sample a batch, triage it, export gold,
hand off to an external retrain command, and record per-round evaluation.

Retraining itself is out of scope; the orchestrator only contracts on the
command's exit status. A round stays open until its review queue drains, so
callers drive resolution through the adjudication store (or a resolver
callable) and then close the round.
"""

from __future__ import annotations

import json
import random
import shlex
import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .adjudication import ANNOTATOR_1, ANNOTATOR_2, ProjectStore, Status
from .agreement import FeatureKind
from .conllu import Corpus, parse_conllu_file, serialize_conllu
from .evaluation import EvalScores, evaluate


class ConfigError(ValueError):
    pass


class PoolExhaustedError(ValueError):
    def __init__(self, remaining: int, needed: int):
        super().__init__(f"pool has {remaining} unconsumed sentences, batch needs {needed}")
        self.remaining = remaining


class RoundStateError(ValueError):
    pass


class RoundOpenError(RoundStateError):
    """The round's review queue is not drained yet."""


class RoundFailedError(RuntimeError):
    pass


@dataclass(slots=True)
class RoundConfig:
    pool_path: str
    models: list[str]
    retrain_command: str
    parser_output_template: str
    test_gold_path: str
    test_output_template: str
    workdir: str
    batch_size: int = 100
    num_rounds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.num_rounds < 1:
            raise ConfigError("num_rounds must be >= 1")
        if len(self.models) != 2:
            raise ConfigError(f"exactly two models are required, got {self.models}")

    @classmethod
    def from_file(cls, path: str | Path) -> "RoundConfig":
        """Load a key = value config file ('#' comments, models comma-separated)."""
        values: dict[str, str] = {}
        for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {line_no}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
        required = (
            "pool_path",
            "models",
            "retrain_command",
            "parser_output_template",
            "test_gold_path",
            "test_output_template",
            "workdir",
        )
        missing = [key for key in required if key not in values]
        if missing:
            raise ConfigError(f"missing config keys: {', '.join(missing)}")
        return cls(
            pool_path=values["pool_path"],
            models=[m.strip() for m in values["models"].split(",") if m.strip()],
            retrain_command=values["retrain_command"],
            parser_output_template=values["parser_output_template"],
            test_gold_path=values["test_gold_path"],
            test_output_template=values["test_output_template"],
            workdir=values["workdir"],
            batch_size=int(values.get("batch_size", "100")),
            num_rounds=int(values.get("num_rounds", "5")),
            seed=int(values.get("seed", "0")),
        )


def sample_batch(pool: Corpus, config: RoundConfig, round_index: int) -> list[int]:
    """Sentence indices for one round's batch.

    The pool order is shuffled once from the seed and partitioned into
    consecutive batch-size slices, so batches are deterministic, disjoint,
    and exhaustive while sentences remain.
    """
    if round_index < 1:
        raise ValueError("round_index starts at 1")
    order = list(range(len(pool.sentences)))
    random.Random(config.seed).shuffle(order)
    start = (round_index - 1) * config.batch_size
    end = start + config.batch_size
    if end > len(order):
        raise PoolExhaustedError(remaining=max(len(order) - start, 0), needed=config.batch_size)
    return order[start:end]


@dataclass(slots=True)
class RoundLog:
    round: int
    sentence_keys: list[str]
    queue_size: int
    resolved_by_agreement: int
    adjudicated: int
    scores: dict[str, EvalScores]
    opened_at: str
    closed_at: str

    def to_payload(self) -> dict:
        return {
            "round": self.round,
            "sentence_keys": self.sentence_keys,
            "queue_size": self.queue_size,
            "resolved_by_agreement": self.resolved_by_agreement,
            "adjudicated": self.adjudicated,
            "scores": {model: scores.as_dict() for model, scores in self.scores.items()},
            "opened_at": self.opened_at,
            "closed_at": self.closed_at,
        }


Resolver = Callable[[ProjectStore], None]


def side_resolver(side: str) -> Resolver:
    """Resolver that makes both annotators adopt one parser's values.

    Useful for scripted smoke runs: every item resolves by agreement, with
    HEAD labels remapped into gold token ids.
    """
    side = side.upper()
    if side not in ("A", "B"):
        raise ValueError("side must be 'A' or 'B'")

    def resolve(store: ProjectStore) -> None:
        pending = [i for i in store.items.values() if i.final_label is None]
        # tokenization first: HEAD labels need settled gold ids
        pending.sort(
            key=lambda i: (i.record.feature is not FeatureKind.TOKENIZATION, i.record.record_id)
        )
        for item in pending:
            record = item.record
            if record.feature is FeatureKind.TOKENIZATION:
                label = side
            elif record.feature is FeatureKind.HEAD:
                a_map, b_map, _ = store.gold_token_maps(record.sentence_key)
                source = int(record.value_a if side == "A" else record.value_b)
                side_map = a_map if side == "A" else b_map
                label = "0" if source == 0 else str(side_map.get(source, source))
            else:
                label = record.value_a if side == "A" else record.value_b
            for actor in (ANNOTATOR_1, ANNOTATOR_2):
                store.submit_annotation(record.record_id, actor, label)

    return resolve


class RoundOrchestrator:
    """Drives the round loop over a shared workdir.

    Persisted state: ``state.json`` (completed/open rounds), per-round
    directories under ``rounds/``, the cumulative training export, and
    ``round_logs.ndjson``. A failed retrain rolls all of these back to their
    pre-round contents; the round's staging directory is moved aside into
    ``attic/`` so resolved annotations are not destroyed.
    """

    STATE_FILE = "state.json"
    LOGS_FILE = "round_logs.ndjson"
    CUMULATIVE_FILE = "cumulative_train.conllu"

    def __init__(self, config: RoundConfig, clock: Callable[[], str] | None = None):
        self.config = config
        self.workdir = Path(config.workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        (self.workdir / "rounds").mkdir(exist_ok=True)
        self._clock = clock or _default_clock
        self.pool = parse_conllu_file(config.pool_path, "pool")
        self._pool_keys = [
            s.sent_id if s.sent_id is not None else f"{i + 1:06d}"
            for i, s in enumerate(self.pool.sentences)
        ]

    # ----------------------------------------------------------------- state

    def _state_path(self) -> Path:
        return self.workdir / self.STATE_FILE

    def _load_state(self) -> dict:
        path = self._state_path()
        if not path.exists():
            return {"completed_rounds": [], "open_round": None, "opened_at": None}
        return json.loads(path.read_text(encoding="utf-8"))

    def _save_state(self, state: dict) -> None:
        tmp = self._state_path().with_suffix(".tmp")
        tmp.write_text(json.dumps(state, ensure_ascii=False) + "\n", encoding="utf-8")
        tmp.replace(self._state_path())

    def round_dir(self, round_index: int) -> Path:
        return self.workdir / "rounds" / f"round_{round_index:03d}"

    def status(self) -> dict:
        state = self._load_state()
        info = dict(state)
        if state["open_round"] is not None:
            store = self.open_store(state["open_round"])
            info["burndown"] = store.burndown()
            store.close()
        return info

    def open_store(self, round_index: int) -> ProjectStore:
        return ProjectStore.open(self.round_dir(round_index) / "store", clock=self._clock)

    # ----------------------------------------------------------------- steps

    def open_round(self, round_index: int) -> dict:
        """Sample the batch, ingest the two parser outputs, build the queue."""
        state = self._load_state()
        if state["open_round"] is not None:
            raise RoundStateError(f"round {state['open_round']} is still open")
        if round_index in state["completed_rounds"]:
            raise RoundStateError(f"round {round_index} already completed")
        expected = len(state["completed_rounds"]) + 1
        if round_index != expected:
            raise RoundStateError(f"next round is {expected}, not {round_index}")

        batch_indices = sample_batch(self.pool, self.config, round_index)
        batch_keys = [self._pool_keys[i] for i in batch_indices]
        batch = Corpus([self.pool.sentences[i] for i in batch_indices], "batch")

        round_dir = self.round_dir(round_index)
        round_dir.mkdir(parents=True, exist_ok=True)
        (round_dir / "batch.conllu").write_bytes(serialize_conllu(batch).encode("utf-8"))

        corpus_a = self._read_parser_output(self.config.models[0], round_index)
        corpus_b = self._read_parser_output(self.config.models[1], round_index)
        self._check_batch_coverage(batch, corpus_a, self.config.models[0])
        self._check_batch_coverage(batch, corpus_b, self.config.models[1])

        store = ProjectStore.create(
            round_dir / "store",
            project_id=f"round-{round_index:03d}",
            corpus_a=corpus_a,
            corpus_b=corpus_b,
            clock=self._clock,
        )
        burndown = store.burndown()
        store.close()
        state["open_round"] = round_index
        state["opened_at"] = self._clock()
        state["batch_keys"] = batch_keys
        self._save_state(state)
        return {"round": round_index, "batch_keys": batch_keys, "burndown": burndown}

    def _read_parser_output(self, model: str, round_index: int) -> Corpus:
        path = self.config.parser_output_template.format(model=model, round=round_index)
        return parse_conllu_file(path, model)

    def _check_batch_coverage(self, batch: Corpus, output: Corpus, model: str) -> None:
        if len(output.sentences) != len(batch.sentences):
            raise RoundStateError(
                f"{model} output has {len(output.sentences)} sentences, batch has "
                f"{len(batch.sentences)}"
            )
        batch_ids = [s.sent_id for s in batch.sentences]
        output_ids = [s.sent_id for s in output.sentences]
        if all(i is not None for i in batch_ids) and all(i is not None for i in output_ids):
            if set(batch_ids) != set(output_ids):
                raise RoundStateError(f"{model} output covers different sentences than the batch")

    def close_round(self, round_index: int, resolver: Resolver | None = None) -> RoundLog:
        """Export gold, append to the cumulative training set, retrain, evaluate.

        A nonzero retrain exit rolls every persisted artifact back to its
        pre-round state and raises RoundFailedError.
        """
        state = self._load_state()
        if state["open_round"] != round_index:
            raise RoundStateError(f"round {round_index} is not open")
        store = self.open_store(round_index)
        try:
            if resolver is not None:
                resolver(store)
            burndown = store.burndown()
            if burndown["remaining"] > 0:
                raise RoundOpenError(
                    f"round {round_index} still has {burndown['remaining']} unresolved items"
                )
            gold, violations = store.export_gold()
            resolved = burndown[Status.RESOLVED_BY_AGREEMENT.value]
            adjudicated = burndown[Status.RESOLVED_BY_ADJUDICATOR.value]
            queue_size = burndown["total"]
        finally:
            store.close()

        round_dir = self.round_dir(round_index)
        gold_bytes = serialize_conllu(gold).encode("utf-8")
        (round_dir / "gold.conllu").write_bytes(gold_bytes)
        if violations:
            (round_dir / "gold_violations.txt").write_text(
                "\n".join(violations) + "\n", encoding="utf-8"
            )

        cumulative = self.workdir / self.CUMULATIVE_FILE
        previous = cumulative.read_bytes() if cumulative.exists() else b""
        candidate = round_dir / "cumulative_candidate.conllu"
        candidate.write_bytes(previous + gold_bytes)

        try:
            for model in self.config.models:
                command = self.config.retrain_command.format(
                    model=model, train_file=str(candidate), round=round_index
                )
                result = subprocess.run(shlex.split(command), capture_output=True, text=True)
                if result.returncode != 0:
                    raise RoundFailedError(
                        f"retrain for {model} exited {result.returncode}: "
                        f"{result.stderr.strip() or result.stdout.strip()}"
                    )
        except RoundFailedError:
            self._rollback_round(round_index, state)
            raise

        scores = self._evaluate_round(round_index)
        closed_at = self._clock()
        log = RoundLog(
            round=round_index,
            sentence_keys=state.get("batch_keys", []),
            queue_size=queue_size,
            resolved_by_agreement=resolved,
            adjudicated=adjudicated,
            scores=scores,
            opened_at=state.get("opened_at") or closed_at,
            closed_at=closed_at,
        )

        # commit: cumulative file, round log, state
        cumulative.write_bytes(previous + gold_bytes)
        candidate.unlink()
        with (self.workdir / self.LOGS_FILE).open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(log.to_payload(), ensure_ascii=False) + "\n")
        state["completed_rounds"] = state["completed_rounds"] + [round_index]
        state["open_round"] = None
        state["opened_at"] = None
        state.pop("batch_keys", None)
        self._save_state(state)
        return log

    def _rollback_round(self, round_index: int, pre_open_hint: dict) -> None:
        attic = self.workdir / "attic"
        attic.mkdir(exist_ok=True)
        round_dir = self.round_dir(round_index)
        if round_dir.exists():
            target = attic / f"round_{round_index:03d}_failed_{self._clock().replace(':', '-')}"
            shutil.move(str(round_dir), str(target))
        state = {
            "completed_rounds": pre_open_hint["completed_rounds"],
            "open_round": None,
            "opened_at": None,
        }
        self._save_state(state)

    def _evaluate_round(self, round_index: int) -> dict[str, EvalScores]:
        gold = parse_conllu_file(self.config.test_gold_path, "test-gold")
        scores = {}
        for model in self.config.models:
            path = self.config.test_output_template.format(model=model, round=round_index)
            system = parse_conllu_file(path, model)
            scores[model] = evaluate(system, gold)
        return scores

    def run_round(self, round_index: int, resolver: Resolver | None = None) -> RoundLog:
        """open_round + close_round in one call, for scripted runs."""
        self.open_round(round_index)
        return self.close_round(round_index, resolver=resolver)

    def read_logs(self) -> list[dict]:
        path = self.workdir / self.LOGS_FILE
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


def _default_clock() -> str:
    from datetime import datetime, timezone

    return datetime.now(timezone.utc).isoformat(timespec="microseconds")
