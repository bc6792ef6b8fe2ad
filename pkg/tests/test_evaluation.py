import random
from decimal import Decimal

import pytest

from udtriage.conllu import Corpus, Sentence, Token
from udtriage.evaluation import (
    EvalScores,
    ScoreSeriesError,
    below_threshold,
    evaluate,
    f1_percent,
    score_series,
)

from genutil import (
    perturb_sentence,
    random_corpus,
    random_tokenization_pair,
    sentence_from_forms,
)
from oracles import boundary_blocks


def tok(i, head, form="가", lemma="가", xpos="NNG", deprel="dep"):
    return Token(i, form, lemma, "NOUN", xpos, "_", head, deprel, "_", "_")


def scores_with(value):
    v = Decimal(value)
    return EvalScores(v, v, v, v, 10, 10, 10)


class TestEvaluate:
    def test_identity_is_perfect(self):
        rng = random.Random(1)
        for _ in range(20):
            corpus = random_corpus(rng, rng.randint(1, 5))
            scores = evaluate(corpus, corpus)
            assert scores.lemma_f1 == Decimal("100.00")
            assert scores.xpos_f1 == Decimal("100.00")
            assert scores.uas == Decimal("100.00")
            assert scores.las == Decimal("100.00")

    def test_hand_enumerated_half_wrong_heads(self):
        gold = Corpus(
            [Sentence([], [tok(1, 2, "가"), tok(2, 0, "나"), tok(3, 2, "다"), tok(4, 3, "라")])]
        )
        system = Corpus(
            [Sentence([], [tok(1, 2, "가"), tok(2, 0, "나"), tok(3, 4, "다"), tok(4, 2, "라")])]
        )
        scores = evaluate(system, gold)
        assert scores.uas == Decimal("50.00")
        assert scores.las == Decimal("50.00")  # deprels all equal, heads gate LAS

    def test_split_token_precision_recall_asymmetry(self):
        # system merges two gold tokens: 2 system tokens vs 3 gold tokens,
        # 1 aligned pair; by the span-match oracle, F1 denominators differ
        gold = Corpus([sentence_from_forms(random.Random(2), ["가", "나", "다"])])
        system = Corpus([sentence_from_forms(random.Random(3), ["가나", "다"])])
        scores = evaluate(system, gold)
        assert scores.gold_tokens == 3
        assert scores.system_tokens == 2
        assert scores.aligned_tokens == 1
        blocks = boundary_blocks(["가나", "다"], ["가", "나", "다"])
        aligned_by_oracle = sum(1 for ia, ib in blocks if len(ia) == 1 and len(ib) == 1)
        assert scores.aligned_tokens == aligned_by_oracle
        # lemma matches on the aligned token (forms are lemmas here)
        assert scores.lemma_f1 == f1_percent(1, 3, 2)

    def test_las_never_exceeds_uas(self):
        rng = random.Random(4)
        for _ in range(200):
            base = random_corpus(rng, rng.randint(1, 4))
            system = Corpus(
                [
                    perturb_sentence(rng, s, head_rate=0.4, deprel_rate=0.4, lemma_rate=0.2)
                    for s in base.sentences
                ],
                "sys",
            )
            scores = evaluate(system, base)
            assert scores.las <= scores.uas

    def test_reorder_invariance_with_sent_ids(self):
        rng = random.Random(5)
        gold = random_corpus(rng, 10)
        system = Corpus(
            [perturb_sentence(rng, s, head_rate=0.3) for s in gold.sentences], "sys"
        )
        forward = evaluate(system, gold)
        shuffled = list(system.sentences)
        rng.shuffle(shuffled)
        assert evaluate(Corpus(shuffled, "sys"), gold) == forward

    def test_empty_corpora(self):
        scores = evaluate(Corpus([]), Corpus([]))
        assert scores.uas == Decimal("100.00")


class TestScoreSeries:
    def test_five_rounds_two_models_forty_rows(self):
        entries = [
            (round_index, model, scores_with("90.00"))
            for round_index in range(1, 6)
            for model in ("stanza", "trankit")
        ]
        rows = score_series(entries)
        assert len(rows) == 40

    def test_single_round(self):
        rows = score_series([(1, "m1", scores_with("85.00")), (1, "m2", scores_with("86.00"))])
        assert len(rows) == 8

    def test_duplicate_round_rejected(self):
        entries = [(1, "m", scores_with("90.00")), (1, "m", scores_with("91.00"))]
        with pytest.raises(ScoreSeriesError, match="duplicate"):
            score_series(entries)

    def test_decreasing_round_rejected(self):
        entries = [(2, "m", scores_with("90.00")), (1, "m", scores_with("91.00"))]
        with pytest.raises(ScoreSeriesError, match="increase"):
            score_series(entries)

    def test_stability_threshold(self):
        rows = score_series(
            [(r, "m", scores_with("85.00" if r != 3 else "84.99")) for r in range(1, 6)]
        )
        offenders = below_threshold(rows, "85.00")
        assert {row.round for row in offenders} == {3}
        healthy = score_series([(r, "m", scores_with("92.00")) for r in range(1, 6)])
        assert below_threshold(healthy, "85.00") == []
