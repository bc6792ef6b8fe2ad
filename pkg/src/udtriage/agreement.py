"""Agreement and correction statistics over aligned parser/annotator output.

Four feature layers are compared: LEMMA, XPOS, HEAD, DEPREL. Tokenization
disagreements are tracked separately and never enter the rate denominators;
punctuation is excluded the same way. Counts stay exact integers, rounding
to two decimals (half-up) happens only at presentation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Callable, Iterable

from .alignment import (
    MANY_TO_MANY,
    align_sentences,
    aligned_token_pairs,
    head_correspondence,
    pair_sentences,
)
from .conllu import Corpus, Token, split_xpos


class FeatureKind(Enum):
    LEMMA = "LEMMA"
    XPOS = "XPOS"
    HEAD = "HEAD"
    DEPREL = "DEPREL"
    TOKENIZATION = "TOKENIZATION"


#: The layers that enter rate tables; TOKENIZATION is queue-only.
RATE_FEATURES = (FeatureKind.LEMMA, FeatureKind.XPOS, FeatureKind.HEAD, FeatureKind.DEPREL)

TWO_PLACES = Decimal("0.01")

#: Symbol-class morpheme tags used by the Korean tagging scheme.
KOREAN_SYMBOL_TAGS = frozenset({"SF", "SP", "SS", "SE", "SO", "SW"})

PunctPredicate = Callable[[Token], bool]


def rate_percent(agreed: int, compared: int) -> Decimal | None:
    """100*agreed/compared rounded half-up to 2 decimals; None when undefined."""
    if compared == 0:
        return None
    return (Decimal(100 * agreed) / Decimal(compared)).quantize(TWO_PLACES, rounding=ROUND_HALF_UP)


def macro_average(rates: Iterable[Decimal | float | str | None]) -> Decimal | None:
    """Arithmetic mean of the defined rates, rounded half-up to 2 decimals."""
    defined = [Decimal(str(r)) for r in rates if r is not None]
    if not defined:
        return None
    return (sum(defined) / Decimal(len(defined))).quantize(TWO_PLACES, rounding=ROUND_HALF_UP)


def upos_punct(token: Token) -> bool:
    """Default punctuation predicate: universal POS tag is PUNCT."""
    return token.upos == "PUNCT"


def xpos_symbol_punct(tags: frozenset[str] = KOREAN_SYMBOL_TAGS) -> PunctPredicate:
    """Punctuation predicate keyed on the first XPOS morpheme tag."""

    def predicate(token: Token) -> bool:
        try:
            return split_xpos(token.xpos)[0] in tags
        except ValueError:
            return False

    return predicate


def compare_token(
    a: Token, b: Token, head_match: bool, base_deprel_only: bool = False
) -> dict[FeatureKind, bool]:
    """Per-feature match flags for one aligned token pair.

    LEMMA/XPOS/DEPREL compare by exact string equality (DEPREL optionally on
    base relations only); HEAD uses the alignment-level verdict passed in.
    Any False flag marks the token as review-required.
    """
    if base_deprel_only:
        deprel_match = a.base_deprel == b.base_deprel
    else:
        deprel_match = a.deprel == b.deprel
    return {
        FeatureKind.LEMMA: a.lemma == b.lemma,
        FeatureKind.XPOS: a.xpos == b.xpos,
        FeatureKind.HEAD: head_match,
        FeatureKind.DEPREL: deprel_match,
    }


@dataclass(slots=True)
class FeatureCount:
    compared: int = 0
    agreed: int = 0

    @property
    def rate(self) -> Decimal | None:
        return rate_percent(self.agreed, self.compared)


@dataclass(slots=True)
class AgreementReport:
    features: dict[FeatureKind, FeatureCount]
    excluded_punct: int = 0
    excluded_tokenization: int = 0

    @property
    def macro_average(self) -> Decimal | None:
        return macro_average(self.features[f].rate for f in RATE_FEATURES)

    def to_rows(self) -> list[dict]:
        rows = [
            {
                "feature": f.value,
                "compared": self.features[f].compared,
                "agreed": self.features[f].agreed,
                "rate": _rate_str(self.features[f].rate),
            }
            for f in RATE_FEATURES
        ]
        rows.append(
            {"feature": "Average", "compared": None, "agreed": None, "rate": _rate_str(self.macro_average)}
        )
        return rows

    def format_table(self) -> str:
        lines = [f"{'Feature':<10}{'Compared':>10}{'Agreed':>10}{'Rate':>8}"]
        for f in RATE_FEATURES:
            c = self.features[f]
            lines.append(f"{f.value:<10}{c.compared:>10}{c.agreed:>10}{_rate_str(c.rate):>8}")
        lines.append(f"{'Average':<10}{'':>10}{'':>10}{_rate_str(self.macro_average):>8}")
        lines.append(
            f"(excluded: {self.excluded_punct} punctuation tokens, "
            f"{self.excluded_tokenization} tokenization-mismatch blocks)"
        )
        return "\n".join(lines)


def _rate_str(rate: Decimal | None) -> str:
    return "n/a" if rate is None else f"{rate}"


def agreement_report(
    a: Corpus,
    b: Corpus,
    punct_predicate: PunctPredicate = upos_punct,
    base_deprel_only: bool = False,
) -> AgreementReport:
    """Token-level agreement between two parses of the same text.

    Denominators exclude tokens that are punctuation on either side and all
    tokens inside many-to-many (tokenization-mismatch) blocks.
    """
    counts = {f: FeatureCount() for f in RATE_FEATURES}
    excluded_punct = 0
    excluded_tokenization = 0
    for key, sent_a, sent_b in pair_sentences(a, b):
        amap = align_sentences(sent_a, sent_b, key)
        excluded_tokenization += sum(1 for blk in amap.blocks if blk.kind == MANY_TO_MANY)
        for left_id, right_id in aligned_token_pairs(amap):
            tok_a = sent_a.tokens[left_id - 1]
            tok_b = sent_b.tokens[right_id - 1]
            if punct_predicate(tok_a) or punct_predicate(tok_b):
                excluded_punct += 1
                continue
            flags = compare_token(
                tok_a,
                tok_b,
                head_correspondence(amap, sent_a, sent_b, (left_id, right_id)),
                base_deprel_only=base_deprel_only,
            )
            for feature in RATE_FEATURES:
                counts[feature].compared += 1
                if flags[feature]:
                    counts[feature].agreed += 1
    return AgreementReport(
        features=counts,
        excluded_punct=excluded_punct,
        excluded_tokenization=excluded_tokenization,
    )


@dataclass(slots=True)
class ConditionalFeatureCount:
    parser_agreed: int = 0
    human_agreed_within: int = 0

    @property
    def conditional_rate(self) -> Decimal | None:
        return rate_percent(self.human_agreed_within, self.parser_agreed)


@dataclass(slots=True)
class ConditionalAgreementReport:
    features: dict[FeatureKind, ConditionalFeatureCount]

    @property
    def macro_average(self) -> Decimal | None:
        return macro_average(self.features[f].conditional_rate for f in RATE_FEATURES)

    def to_rows(self) -> list[dict]:
        return [
            {
                "feature": f.value,
                "parser_agreed": self.features[f].parser_agreed,
                "human_agreed_within": self.features[f].human_agreed_within,
                "rate": _rate_str(self.features[f].conditional_rate),
            }
            for f in RATE_FEATURES
        ]


def conditional_human_agreement(
    parsers: tuple[Corpus, Corpus],
    annotators: tuple[Corpus, Corpus],
    punct_predicate: PunctPredicate = upos_punct,
    base_deprel_only: bool = False,
) -> ConditionalAgreementReport:
    """Human agreement restricted to tokens on which the parsers agree.

    All four corpora must cover the same sentences with identical surface
    text. Only tokens whose character span is a token in all four versions
    are counted (everything else is a tokenization mismatch); a token is
    excluded if the punctuation predicate fires on any of its four versions.
    """
    parser_a, parser_b = parsers
    human_1, human_2 = annotators
    counts = {f: ConditionalFeatureCount() for f in RATE_FEATURES}

    pairs_parsers = pair_sentences(parser_a, parser_b)
    pairs_humans = pair_sentences(human_1, human_2)
    if len(pairs_parsers) != len(pairs_humans):
        raise PairingMismatch(len(pairs_parsers), len(pairs_humans))
    human_by_key = {key: (s1, s2) for key, s1, s2 in pairs_humans}

    for key, sent_pa, sent_pb in pairs_parsers:
        if key not in human_by_key:
            raise PairingMismatch(key, None)
        sent_h1, sent_h2 = human_by_key[key]
        pmap = align_sentences(sent_pa, sent_pb, key)
        hmap = align_sentences(sent_h1, sent_h2, key)
        if sent_pa.surface != sent_h1.surface:
            raise AlignmentMismatch(key)

        spans_pa = _token_spans(sent_pa)
        spans_pb = _token_spans(sent_pb)
        spans_h1 = _token_spans(sent_h1)
        spans_h2 = _token_spans(sent_h2)

        for span, pa_id in spans_pa.items():
            pb_id = spans_pb.get(span)
            h1_id = spans_h1.get(span)
            h2_id = spans_h2.get(span)
            if pb_id is None or h1_id is None or h2_id is None:
                continue
            toks = (
                sent_pa.tokens[pa_id - 1],
                sent_pb.tokens[pb_id - 1],
                sent_h1.tokens[h1_id - 1],
                sent_h2.tokens[h2_id - 1],
            )
            if any(punct_predicate(t) for t in toks):
                continue
            parser_flags = compare_token(
                toks[0],
                toks[1],
                head_correspondence(pmap, sent_pa, sent_pb, (pa_id, pb_id)),
                base_deprel_only=base_deprel_only,
            )
            human_flags = compare_token(
                toks[2],
                toks[3],
                head_correspondence(hmap, sent_h1, sent_h2, (h1_id, h2_id)),
                base_deprel_only=base_deprel_only,
            )
            for feature in RATE_FEATURES:
                if parser_flags[feature]:
                    counts[feature].parser_agreed += 1
                    if human_flags[feature]:
                        counts[feature].human_agreed_within += 1
    return ConditionalAgreementReport(features=counts)


class PairingMismatch(ValueError):
    def __init__(self, left, right):
        super().__init__(f"parser and annotator corpora pair differently: {left} vs {right}")


class AlignmentMismatch(ValueError):
    def __init__(self, key):
        super().__init__(f"surface text differs across corpora in sentence {key}")


def _token_spans(sentence) -> dict[tuple[int, int], int]:
    spans: dict[tuple[int, int], int] = {}
    offset = 0
    for token in sentence.tokens:
        end = offset + len(token.form)
        spans[(offset, end)] = token.id
        offset = end
    return spans


@dataclass(frozen=True, slots=True)
class CorrectionEvent:
    """One resolved review decision, ready for correction-rate accounting."""

    sentence_key: str
    token_id: int
    feature: FeatureKind
    value_a: str
    value_b: str
    gold_value: str


@dataclass(slots=True)
class CorrectionReport:
    corrected: dict[FeatureKind, int]
    total_tokens: int
    any_feature_corrected: int

    def rate(self, feature: FeatureKind) -> Decimal | None:
        return rate_percent(self.corrected[feature], self.total_tokens)

    @property
    def any_feature_rate(self) -> Decimal | None:
        return rate_percent(self.any_feature_corrected, self.total_tokens)

    def to_rows(self) -> list[dict]:
        rows = [
            {
                "feature": f.value,
                "corrected": self.corrected[f],
                "total": self.total_tokens,
                "rate": _rate_str(self.rate(f)),
            }
            for f in RATE_FEATURES
        ]
        rows.append(
            {
                "feature": "Any",
                "corrected": self.any_feature_corrected,
                "total": self.total_tokens,
                "rate": _rate_str(self.any_feature_rate),
            }
        )
        return rows


def correction_report(events: Iterable[CorrectionEvent], total_tokens: int) -> CorrectionReport:
    """Count tokens corrected per feature.

    A token counts as corrected on a feature when it carried a review flag
    there and the final gold value differs from at least one model's value.
    Per-feature counts are not mutually exclusive; the union statistic
    counts distinct tokens corrected on any feature.
    """
    corrected_tokens: dict[FeatureKind, set[tuple[str, int]]] = {f: set() for f in RATE_FEATURES}
    any_corrected: set[tuple[str, int]] = set()
    for event in events:
        if event.feature not in corrected_tokens:
            continue
        if event.gold_value != event.value_a or event.gold_value != event.value_b:
            token_key = (event.sentence_key, event.token_id)
            corrected_tokens[event.feature].add(token_key)
            any_corrected.add(token_key)
    return CorrectionReport(
        corrected={f: len(s) for f, s in corrected_tokens.items()},
        total_tokens=total_tokens,
        any_feature_corrected=len(any_corrected),
    )
