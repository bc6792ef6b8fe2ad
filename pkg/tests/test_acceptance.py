"""Acceptance suite: one test per release criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines alongside pytest's own verdicts.
"""

import itertools
import random
import time
from decimal import Decimal

from udtriage.adjudication import (
    ANNOTATOR_1,
    ANNOTATOR_2,
    DuplicateSubmissionError,
    LabelError,
    ProjectStore,
    StateTransitionError,
    Status,
)
from udtriage.agreement import (
    FeatureKind,
    RATE_FEATURES,
    agreement_report,
    macro_average,
    rate_percent,
    upos_punct,
)
from udtriage.alignment import align_sentences, aligned_token_pairs, head_correspondence
from udtriage.conllu import Corpus, Sentence, Token, parse_conllu, serialize_conllu, write_conllu_file
from udtriage.evaluation import evaluate
from udtriage.rounds import RoundConfig, RoundOrchestrator, sample_batch
from udtriage.taxonomy import DeprelMismatchCategory, TaxonomyTable, classify_deprel_pair

from genutil import (
    DEPRELS,
    perturb_sentence,
    random_corpus,
    random_tokenization_pair,
)
from oracles import boundary_blocks, head_match_oracle, recount_agreement


def announce(number: int, name: str) -> None:
    print(f"ACCEPTANCE {number} {name}: PASS")


def test_criterion_1_rate_arithmetic():
    start = time.perf_counter()
    assert rate_percent(4485, 25814) == Decimal("17.37")
    assert rate_percent(1713, 25814) == Decimal("6.64")
    assert rate_percent(1125, 25814) == Decimal("4.36")
    assert rate_percent(581, 25814) == Decimal("2.25")
    assert macro_average(["78.09", "84.83", "78.62", "88.78"]) == Decimal("82.58")
    assert macro_average(["96.97", "91.97", "90.22", "92.55"]) == Decimal("92.93")
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    announce(1, "rate arithmetic reproduces published tables")


def test_criterion_2_round_trip_thousand_sentences():
    start = time.perf_counter()
    rng = random.Random(2024)
    sentences = []
    while len(sentences) < 1000:
        sentences.extend(random_corpus(rng, 50).sentences)
    corpus = Corpus(sentences[:1000], "roundtrip")
    text = serialize_conllu(corpus)
    reparsed = parse_conllu(text.encode("utf-8"), "roundtrip")
    assert reparsed == corpus
    assert serialize_conllu(reparsed).encode("utf-8") == text.encode("utf-8")
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    announce(2, f"1000-sentence byte round-trip in {elapsed:.2f}s")


def test_criterion_3_agreement_matches_recount_oracle():
    start = time.perf_counter()
    rng = random.Random(3)
    sentences_a, sentences_b = [], []
    for index in range(200):
        key = f"s{index + 1}"
        if index % 4 == 0:
            sent_a, sent_b = random_tokenization_pair(rng, key=key)
        else:
            sent_a = random_corpus(rng, 1, punct_rate=0.2).sentences[0]
            sent_a.comments.insert(0, f"# sent_id = {key}")
            sent_b = perturb_sentence(
                rng, sent_a, lemma_rate=0.22, xpos_rate=0.15, head_rate=0.21, deprel_rate=0.11
            )
        sentences_a.append(sent_a)
        sentences_b.append(sent_b)
    corpus_a = Corpus(sentences_a, "a")
    corpus_b = Corpus(sentences_b, "b")
    report = agreement_report(corpus_a, corpus_b)
    recount = recount_agreement(corpus_a, corpus_b, upos_punct)
    for feature in RATE_FEATURES:
        expected = recount["features"][feature.value]
        assert report.features[feature].compared == expected["compared"]
        assert report.features[feature].agreed == expected["agreed"]
    assert report.excluded_punct == recount["excluded_punct"]
    assert report.excluded_tokenization == recount["excluded_tokenization"]
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    announce(3, f"agreement counts equal brute-force recount on 200 pairs ({elapsed:.2f}s)")


def test_criterion_4_alignment_blocks_and_heads():
    rng = random.Random(4)
    for _ in range(500):
        sent_a, sent_b = random_tokenization_pair(rng)
        amap = align_sentences(sent_a, sent_b)
        covered_left = [i for block in amap.blocks for i in block.left_ids()]
        covered_right = [j for block in amap.blocks for j in block.right_ids()]
        assert covered_left == list(range(1, len(sent_a.tokens) + 1))
        assert covered_right == list(range(1, len(sent_b.tokens) + 1))
        for block in amap.blocks:
            left = "".join(sent_a.tokens[i - 1].form for i in block.left_ids())
            right = "".join(sent_b.tokens[j - 1].form for j in block.right_ids())
            assert left == right
        blocks = boundary_blocks(
            [t.form for t in sent_a.tokens], [t.form for t in sent_b.tokens]
        )
        for pair in aligned_token_pairs(amap):
            assert head_correspondence(amap, sent_a, sent_b, pair) == head_match_oracle(
                blocks, sent_a, sent_b, *pair
            )
    announce(4, "500 merge/split alignments cover, match forms, and agree with head oracle")


def test_criterion_5_taxonomy_categories_and_symmetry():
    table = TaxonomyTable.default()
    expected = {
        DeprelMismatchCategory.GRAMMATICAL_RELATION: [
            ("nsubj", "obj"), ("nsubj", "obl"), ("obj", "obl"),
        ],
        DeprelMismatchCategory.CLAUSE_BOUNDARY: [
            ("acl", "advcl"), ("advcl", "ccomp"), ("advcl", "root"),
        ],
        DeprelMismatchCategory.DISCOURSE_STRUCTURE: [
            ("dislocated", "nsubj"), ("root", "conj"), ("conj", "advcl"),
        ],
        DeprelMismatchCategory.MODIFIER_ATTACHMENT: [("amod", "acl"), ("nmod", "obl")],
    }
    assert sum(len(pairs) for pairs in expected.values()) == 11
    for category, pairs in expected.items():
        for rel_a, rel_b in pairs:
            assert classify_deprel_pair(rel_a, rel_b, table) is category

    rng = random.Random(5)
    labels = DEPRELS + ["root", "punct", "case", "mark", "xcomp", "appos"]
    for _ in range(10000):
        rel_a, rel_b = rng.choice(labels), rng.choice(labels)
        assert classify_deprel_pair(rel_a, rel_b, table) is classify_deprel_pair(rel_b, rel_a, table)
    announce(5, "11 documented pairs classify correctly; symmetry holds on 10k random pairs")


def test_criterion_6_state_machine_replay_and_gold_diff(tmp_path):
    rng = random.Random(6)
    base = random_corpus(rng, 120, punct_rate=0.1)
    other = Corpus(
        [
            perturb_sentence(rng, s, lemma_rate=0.25, xpos_rate=0.2, head_rate=0.2, deprel_rate=0.15)
            for s in base.sentences
        ],
        "b",
    )
    counter = itertools.count(1)
    store = ProjectStore.create(
        tmp_path / "acc6", "acc6", base, other, clock=lambda: f"t{next(counter):08d}"
    )
    item_ids = list(store.items)
    assert item_ids, "perturbation must produce a queue"
    legal = set(Status)
    sentence_sizes = {
        key: len(sent.tokens) for key, sent in ((s.sent_id, s) for s in base.sentences)
    }

    def random_label(item):
        feature = item.record.feature
        if feature is FeatureKind.HEAD:
            n = sentence_sizes[item.record.sentence_key]
            return str(rng.choice([h for h in range(0, n + 1) if h != item.record.left_token_id]))
        return rng.choice(["고", "나", "다", item.record.value_a, item.record.value_b])

    applied = 0
    for _ in range(10000):
        item = store.items[rng.choice(item_ids)]
        try:
            roll = rng.random()
            if roll < 0.45:
                store.submit_annotation(item.record.record_id, ANNOTATOR_1, random_label(item))
            elif roll < 0.9:
                store.submit_annotation(item.record.record_id, ANNOTATOR_2, random_label(item))
            else:
                store.submit_adjudication(item.record.record_id, random_label(item))
            applied += 1
        except (DuplicateSubmissionError, StateTransitionError, LabelError):
            pass
        assert item.status in legal
        if item.status is Status.RESOLVED_BY_AGREEMENT:
            assert item.annotator1_label == item.annotator2_label
        if item.status is Status.RESOLVED_BY_ADJUDICATOR:
            assert item.adjudicator_label is not None

    # drain what the random walk left open, then diff the export against parser A
    for item_id in item_ids:
        item = store.items[item_id]
        while item.final_label is None:
            try:
                if item.status in (Status.PENDING, Status.PARTIALLY_REVIEWED):
                    actor = ANNOTATOR_1 if item.annotator1_label is None else ANNOTATOR_2
                    store.submit_annotation(item_id, actor, random_label(item))
                else:
                    store.submit_adjudication(item_id, random_label(item))
            except LabelError:
                continue

    live_state = store.state_dict()
    store.close()
    reopened = ProjectStore.open(tmp_path / "acc6")
    assert reopened.state_dict() == live_state

    gold, _ = reopened.export_gold()
    resolved = {
        (item.record.sentence_key, item.record.left_token_id, item.record.feature): item.final_label
        for item in reopened.items.values()
    }
    reopened.close()
    for sent_gold, sent_a in zip(gold.sentences, base.sentences):
        key = sent_a.sent_id
        assert sent_gold.comments == sent_a.comments
        for tok_gold, tok_a in zip(sent_gold.tokens, sent_a.tokens):
            for field in ("id", "form", "upos", "feats", "deps", "misc"):
                assert getattr(tok_gold, field) == getattr(tok_a, field)
            for feature, attr in (
                (FeatureKind.LEMMA, "lemma"),
                (FeatureKind.XPOS, "xpos"),
                (FeatureKind.DEPREL, "deprel"),
            ):
                label = resolved.get((key, tok_a.id, feature))
                expected = label if label is not None else getattr(tok_a, attr)
                assert getattr(tok_gold, attr) == expected
            head_label = resolved.get((key, tok_a.id, FeatureKind.HEAD))
            expected_head = int(head_label) if head_label is not None else tok_a.head
            assert tok_gold.head == expected_head
    announce(6, f"10k-step state machine stayed legal ({applied} applied); replay + gold diff exact")


def test_criterion_7_evaluation_properties():
    rng = random.Random(7)
    for _ in range(100):
        corpus = random_corpus(rng, rng.randint(1, 4))
        scores = evaluate(corpus, corpus)
        assert (
            scores.lemma_f1 == scores.xpos_f1 == scores.uas == scores.las == Decimal("100.00")
        )

    for _ in range(1000):
        gold = random_corpus(rng, rng.randint(1, 3))
        system = Corpus(
            [
                perturb_sentence(rng, s, head_rate=0.4, deprel_rate=0.4, xpos_rate=0.2)
                for s in gold.sentences
            ],
            "sys",
        )
        scores = evaluate(system, gold)
        assert scores.las <= scores.uas

    def tok(i, head, form, deprel="dep"):
        return Token(i, form, form, "NOUN", "NNG", "_", head, deprel, "_", "_")

    gold = Corpus([Sentence([], [tok(1, 2, "가"), tok(2, 0, "나"), tok(3, 2, "다"), tok(4, 3, "라")])])
    system = Corpus([Sentence([], [tok(1, 2, "가"), tok(2, 0, "나"), tok(3, 4, "다"), tok(4, 2, "라")])])
    assert evaluate(system, gold).uas == Decimal("50.00")
    announce(7, "evaluate(x,x)=100 on 100 corpora; LAS<=UAS on 1000 pairs; 4-token UAS 50.00")


def test_criterion_8_five_round_orchestration(tmp_path):
    start = time.perf_counter()
    data = tmp_path / "data"
    data.mkdir()
    pool = random_corpus(random.Random(88), 500, punct_rate=0.0)
    write_conllu_file(pool, data / "pool.conllu")
    test_gold = random_corpus(random.Random(89), 10, punct_rate=0.0)
    write_conllu_file(test_gold, data / "test_gold.conllu")
    config = RoundConfig(
        pool_path=str(data / "pool.conllu"),
        models=["m1", "m2"],
        retrain_command="true {model} {train_file} {round}",
        parser_output_template=str(data / "out_{model}_r{round}.conllu"),
        test_gold_path=str(data / "test_gold.conllu"),
        test_output_template=str(data / "test_{model}_r{round}.conllu"),
        workdir=str(tmp_path / "work"),
        batch_size=100,
        num_rounds=5,
        seed=2024,
    )
    for round_index in range(1, 6):
        indices = sample_batch(pool, config, round_index)
        batch = Corpus([pool.sentences[i] for i in indices], "batch")
        for model in config.models:
            write_conllu_file(
                batch, config.parser_output_template.format(model=model, round=round_index)
            )
            write_conllu_file(
                test_gold, config.test_output_template.format(model=model, round=round_index)
            )

    orchestrator = RoundOrchestrator(config)
    all_keys: list[str] = []
    gold_bytes = b""
    for round_index in range(1, 6):
        log = orchestrator.run_round(round_index)
        assert log.queue_size == 0
        all_keys.extend(log.sentence_keys)
        gold_bytes += (orchestrator.round_dir(round_index) / "gold.conllu").read_bytes()

    pool_keys = [s.sent_id for s in pool.sentences]
    assert sorted(all_keys) == sorted(pool_keys)
    assert len(set(all_keys)) == 500
    cumulative = (orchestrator.workdir / orchestrator.CUMULATIVE_FILE).read_bytes()
    assert cumulative == gold_bytes
    assert len(orchestrator.read_logs()) == 5
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    announce(8, f"5-round run partitions the pool and concatenates gold exactly ({elapsed:.1f}s)")
