"""Scoring a system corpus against gold: LEMMA F1, XPOS F1, UAS, LAS.

Tokens are matched by character span (via the alignment module), so the
metrics stay defined when the two sides tokenize differently: unaligned
tokens count against both precision and recall, F1 = 2*correct /
(gold_total + system_total). With identical tokenization this reduces to
plain accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .agreement import TWO_PLACES
from .alignment import align_sentences, aligned_token_pairs, head_correspondence, pair_sentences
from .conllu import Corpus

METRICS = ("lemma_f1", "xpos_f1", "uas", "las")


class ScoreSeriesError(ValueError):
    pass


def f1_percent(correct: int, gold_total: int, system_total: int) -> Decimal:
    denominator = gold_total + system_total
    if denominator == 0:
        # nothing to get wrong on either side
        return Decimal("100.00")
    value = Decimal(200 * correct) / Decimal(denominator)
    return value.quantize(TWO_PLACES, rounding=ROUND_HALF_UP)


@dataclass(slots=True)
class EvalScores:
    lemma_f1: Decimal
    xpos_f1: Decimal
    uas: Decimal
    las: Decimal
    gold_tokens: int
    system_tokens: int
    aligned_tokens: int

    def as_dict(self) -> dict:
        return {
            "lemma_f1": str(self.lemma_f1),
            "xpos_f1": str(self.xpos_f1),
            "uas": str(self.uas),
            "las": str(self.las),
            "gold_tokens": self.gold_tokens,
            "system_tokens": self.system_tokens,
            "aligned_tokens": self.aligned_tokens,
        }

    def metric(self, name: str) -> Decimal:
        if name not in METRICS:
            raise KeyError(name)
        return getattr(self, name)

    def format_table(self) -> str:
        lines = [f"{'Metric':<10}{'Score':>8}"]
        for name, label in (("lemma_f1", "LEMMA"), ("xpos_f1", "XPOS"), ("uas", "UAS"), ("las", "LAS")):
            lines.append(f"{label:<10}{str(getattr(self, name)):>8}")
        lines.append(
            f"(gold {self.gold_tokens} / system {self.system_tokens} / aligned {self.aligned_tokens} tokens)"
        )
        return "\n".join(lines)


def evaluate(system: Corpus, gold: Corpus, base_deprel_only: bool = False) -> EvalScores:
    """Span-matched F1 scores of a system parse against gold."""
    gold_total = system_total = aligned_total = 0
    lemma_correct = xpos_correct = uas_correct = las_correct = 0
    for key, sent_sys, sent_gold in pair_sentences(system, gold):
        amap = align_sentences(sent_sys, sent_gold, key)
        system_total += len(sent_sys.tokens)
        gold_total += len(sent_gold.tokens)
        for sys_id, gold_id in aligned_token_pairs(amap):
            aligned_total += 1
            tok_sys = sent_sys.tokens[sys_id - 1]
            tok_gold = sent_gold.tokens[gold_id - 1]
            if tok_sys.lemma == tok_gold.lemma:
                lemma_correct += 1
            if tok_sys.xpos == tok_gold.xpos:
                xpos_correct += 1
            head_match = head_correspondence(amap, sent_sys, sent_gold, (sys_id, gold_id))
            if head_match:
                uas_correct += 1
                if base_deprel_only:
                    deprel_match = tok_sys.base_deprel == tok_gold.base_deprel
                else:
                    deprel_match = tok_sys.deprel == tok_gold.deprel
                if deprel_match:
                    las_correct += 1
    return EvalScores(
        lemma_f1=f1_percent(lemma_correct, gold_total, system_total),
        xpos_f1=f1_percent(xpos_correct, gold_total, system_total),
        uas=f1_percent(uas_correct, gold_total, system_total),
        las=f1_percent(las_correct, gold_total, system_total),
        gold_tokens=gold_total,
        system_tokens=system_total,
        aligned_tokens=aligned_total,
    )


@dataclass(frozen=True, slots=True)
class ScoreRow:
    round: int
    metric: str
    model: str
    value: Decimal


def score_series(entries: list[tuple[int, str, EvalScores]]) -> list[ScoreRow]:
    """Flatten per-round scores into plot-ready (round, metric, model, value)
    rows. Round indices must be strictly increasing per model."""
    last_round: dict[str, int] = {}
    rows: list[ScoreRow] = []
    for round_index, model, scores in entries:
        previous = last_round.get(model)
        if previous is not None:
            if round_index == previous:
                raise ScoreSeriesError(f"duplicate round {round_index} for model {model}")
            if round_index < previous:
                raise ScoreSeriesError(
                    f"round indices must increase: {round_index} after {previous} for model {model}"
                )
        last_round[model] = round_index
        for metric in METRICS:
            rows.append(ScoreRow(round_index, metric, model, scores.metric(metric)))
    return rows


def below_threshold(rows: list[ScoreRow], threshold: Decimal | float | str) -> list[ScoreRow]:
    """Rows under a stability threshold; empty means the series held up."""
    limit = Decimal(str(threshold))
    return [row for row in rows if row.value < limit]
