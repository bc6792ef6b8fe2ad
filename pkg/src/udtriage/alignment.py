"""Alignment of two tokenizations of the same sentence.

Both sides must spell out the same character sequence once inter-token
boundaries are dropped. Block boundaries are cut greedily wherever the
running character totals of the two sides coincide, which yields the unique
minimal decomposition into matching-surface blocks: single-token blocks on
both sides align one-to-one, anything else is a tokenization disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .conllu import Corpus, Sentence

ONE_TO_ONE = "one_to_one"
MANY_TO_MANY = "many_to_many"


class AlignmentError(ValueError):
    """Surface texts differ, so no token alignment exists."""

    def __init__(self, left_text: str, right_text: str):
        super().__init__(
            f"surface texts differ: {left_text!r} (left) vs {right_text!r} (right)"
        )
        self.left_text = left_text
        self.right_text = right_text


class PairingError(ValueError):
    """The two corpora cannot be paired sentence-by-sentence."""


@dataclass(frozen=True, slots=True)
class AlignmentBlock:
    """Aligned token-id ranges (inclusive) with identical concatenated forms."""

    left_span: tuple[int, int]
    right_span: tuple[int, int]
    kind: str

    @property
    def left_size(self) -> int:
        return self.left_span[1] - self.left_span[0] + 1

    @property
    def right_size(self) -> int:
        return self.right_span[1] - self.right_span[0] + 1

    def left_ids(self) -> range:
        return range(self.left_span[0], self.left_span[1] + 1)

    def right_ids(self) -> range:
        return range(self.right_span[0], self.right_span[1] + 1)


@dataclass(slots=True)
class AlignmentMap:
    sentence_key: str
    blocks: list[AlignmentBlock]
    left_total: int
    right_total: int
    _left_block: list[int] = field(init=False, repr=False)
    _right_block: list[int] = field(init=False, repr=False)

    def __post_init__(self):
        # token id -> block index lookup, index 0 unused
        self._left_block = [-1] * (self.left_total + 1)
        self._right_block = [-1] * (self.right_total + 1)
        for idx, block in enumerate(self.blocks):
            for i in block.left_ids():
                self._left_block[i] = idx
            for j in block.right_ids():
                self._right_block[j] = idx

    def left_block_of(self, token_id: int) -> int | None:
        if 1 <= token_id <= self.left_total:
            return self._left_block[token_id]
        return None

    def right_block_of(self, token_id: int) -> int | None:
        if 1 <= token_id <= self.right_total:
            return self._right_block[token_id]
        return None


def align_sentences(a: Sentence, b: Sentence, sentence_key: str = "") -> AlignmentMap:
    """Segment two tokenizations of one sentence into matching blocks."""
    left_forms = [t.form for t in a.tokens]
    right_forms = [t.form for t in b.tokens]
    if "".join(left_forms) != "".join(right_forms):
        raise AlignmentError("".join(left_forms), "".join(right_forms))

    blocks: list[AlignmentBlock] = []
    i = j = 0  # tokens consumed on each side
    ca = cb = 0  # characters consumed on each side
    block_i, block_j = 0, 0  # token offsets where the current block started
    while i < len(left_forms) or j < len(right_forms):
        if ca <= cb and i < len(left_forms):
            ca += len(left_forms[i])
            i += 1
        else:
            cb += len(right_forms[j])
            j += 1
        if ca == cb and i > block_i and j > block_j:
            kind = ONE_TO_ONE if (i - block_i == 1 and j - block_j == 1) else MANY_TO_MANY
            blocks.append(
                AlignmentBlock(
                    left_span=(block_i + 1, i),
                    right_span=(block_j + 1, j),
                    kind=kind,
                )
            )
            block_i, block_j = i, j
    return AlignmentMap(
        sentence_key=sentence_key,
        blocks=blocks,
        left_total=len(left_forms),
        right_total=len(right_forms),
    )


def aligned_token_pairs(amap: AlignmentMap) -> list[tuple[int, int]]:
    """(left id, right id) for every one-to-one block, in sentence order.

    Many-to-many blocks are tokenization disagreements: they are excluded
    from per-feature comparison and surface separately in the review queue.
    """
    return [
        (block.left_span[0], block.right_span[0])
        for block in amap.blocks
        if block.kind == ONE_TO_ONE
    ]


def head_correspondence(
    amap: AlignmentMap, a: Sentence, b: Sentence, pair: tuple[int, int]
) -> bool:
    """True when both heads of an aligned pair point at aligned material.

    Heads match when both are the root (0) or both land in the same
    alignment block; a head inside a many-to-many block compares by block
    identity rather than token identity.
    """
    left_id, right_id = pair
    head_a = a.tokens[left_id - 1].head
    head_b = b.tokens[right_id - 1].head
    if head_a == 0 or head_b == 0:
        return head_a == 0 and head_b == 0
    block_a = amap.left_block_of(head_a)
    block_b = amap.right_block_of(head_b)
    if block_a is None or block_b is None:
        return False
    return block_a == block_b


def pair_sentences(a: Corpus, b: Corpus) -> list[tuple[str, Sentence, Sentence]]:
    """Pair sentences across two corpora.

    Pairs by sent_id when every sentence on both sides carries one,
    otherwise by position. Any mismatch is a hard error: silent mispairing
    would corrupt every downstream statistic.
    """
    ids_a = [s.sent_id for s in a.sentences]
    ids_b = [s.sent_id for s in b.sentences]
    if ids_a and ids_b and all(i is not None for i in ids_a) and all(i is not None for i in ids_b):
        if len(set(ids_a)) != len(ids_a) or len(set(ids_b)) != len(ids_b):
            raise PairingError("duplicate sent_id values prevent pairing by id")
        if set(ids_a) != set(ids_b):
            missing = sorted(set(ids_a) ^ set(ids_b))
            raise PairingError(f"sent_id sets differ between corpora: {missing}")
        by_id = {s.sent_id: s for s in b.sentences}
        return [(s.sent_id, s, by_id[s.sent_id]) for s in a.sentences]
    if len(a.sentences) != len(b.sentences):
        raise PairingError(
            f"sentence counts differ ({len(a.sentences)} vs {len(b.sentences)}) "
            "and sent_id pairing is unavailable"
        )
    return [
        (sa.sent_id if sa.sent_id is not None else f"{idx + 1:06d}", sa, sb)
        for idx, (sa, sb) in enumerate(zip(a.sentences, b.sentences))
    ]
