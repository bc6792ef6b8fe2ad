"""Linguistic classification of DEPREL disagreements and XPOS mismatch mining.

The relation-pair taxonomy ships as an editable data file; pairs outside the
table are never guessed into a category, they land in the unclassified
bucket. XPOS mismatch patterns keep their left/right direction (parser A vs
parser B), relation pairs do not.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable


class DeprelMismatchCategory(Enum):
    GRAMMATICAL_RELATION = "grammatical_relation"
    CLAUSE_BOUNDARY = "clause_boundary"
    DISCOURSE_STRUCTURE = "discourse_structure"
    MODIFIER_ATTACHMENT = "modifier_attachment"
    UNCLASSIFIED = "unclassified"


#: Marker for a side that produced no analysis for a token (0 morphemes).
ABSENT_ANALYSIS = "--"


class TaxonomyTableError(ValueError):
    pass


def base_relation(label: str) -> str:
    return label.split(":", 1)[0]


class TaxonomyTable:
    """Symmetric lookup from unordered base-relation pairs to categories."""

    def __init__(self, entries: Iterable[tuple[str, str, DeprelMismatchCategory]] = ()):
        self._table: dict[frozenset[str], DeprelMismatchCategory] = {}
        for rel_a, rel_b, category in entries:
            self.add(rel_a, rel_b, category)

    def add(self, rel_a: str, rel_b: str, category: DeprelMismatchCategory) -> None:
        if rel_a == rel_b:
            raise TaxonomyTableError(f"a pair needs two distinct relations, got {rel_a!r} twice")
        self._table[frozenset((rel_a, rel_b))] = category

    def lookup(self, rel_a: str, rel_b: str) -> DeprelMismatchCategory:
        return self._table.get(frozenset((rel_a, rel_b)), DeprelMismatchCategory.UNCLASSIFIED)

    def __len__(self) -> int:
        return len(self._table)

    @classmethod
    def from_text(cls, text: str) -> "TaxonomyTable":
        table = cls()
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise TaxonomyTableError(
                    f"line {line_no}: expected 'relA relB category', got {raw!r}"
                )
            rel_a, rel_b, cat_name = parts
            try:
                category = DeprelMismatchCategory(cat_name)
            except ValueError:
                raise TaxonomyTableError(f"line {line_no}: unknown category {cat_name!r}") from None
            if category is DeprelMismatchCategory.UNCLASSIFIED:
                raise TaxonomyTableError(
                    f"line {line_no}: 'unclassified' is the implicit miss bucket, not a table entry"
                )
            table.add(rel_a, rel_b, category)
        return table

    @classmethod
    def from_file(cls, path: str | Path) -> "TaxonomyTable":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "TaxonomyTable":
        text = resources.files("udtriage").joinpath("data/deprel_taxonomy.txt").read_text("utf-8")
        return cls.from_text(text)


def classify_deprel_pair(a: str, b: str, table: TaxonomyTable) -> DeprelMismatchCategory:
    """Category of a relation-label disagreement.

    Subtypes are stripped before lookup; labels equal after stripping are
    not a taxonomy-relevant mismatch and return UNCLASSIFIED.
    """
    base_a, base_b = base_relation(a), base_relation(b)
    if base_a == base_b:
        return DeprelMismatchCategory.UNCLASSIFIED
    return table.lookup(base_a, base_b)


def deprel_category_histogram(records, table: TaxonomyTable) -> dict[DeprelMismatchCategory, int]:
    """Category counts over DEPREL disagreement records (all buckets present)."""
    histogram = {category: 0 for category in DeprelMismatchCategory}
    for record in records:
        histogram[classify_deprel_pair(record.value_a, record.value_b, table)] += 1
    return histogram


def morpheme_count(pattern: str) -> int:
    if pattern in ("", ABSENT_ANALYSIS):
        return 0
    return len(pattern.split("+"))


@dataclass(frozen=True, slots=True)
class XposMismatchPattern:
    """One directional XPOS disagreement pattern with its frequency.

    differing_positions is None when the two sides have different morpheme
    counts; the common prefix/suffix then localize where the analyses part.
    """

    left_pattern: str
    right_pattern: str
    count: int
    differing_positions: frozenset[int] | None
    common_prefix: tuple[str, ...]
    common_suffix: tuple[str, ...]

    @property
    def length_mismatch(self) -> bool:
        return self.differing_positions is None


def _pattern_diff(left: str, right: str):
    left_tags = left.split("+") if morpheme_count(left) else []
    right_tags = right.split("+") if morpheme_count(right) else []
    shorter = min(len(left_tags), len(right_tags))
    prefix_len = 0
    while prefix_len < shorter and left_tags[prefix_len] == right_tags[prefix_len]:
        prefix_len += 1
    suffix_len = 0
    while (
        suffix_len < shorter - prefix_len
        and left_tags[-1 - suffix_len] == right_tags[-1 - suffix_len]
    ):
        suffix_len += 1
    prefix = tuple(left_tags[:prefix_len])
    suffix = tuple(left_tags[len(left_tags) - suffix_len:])
    if len(left_tags) == len(right_tags):
        positions = frozenset(
            i for i, (lt, rt) in enumerate(zip(left_tags, right_tags)) if lt != rt
        )
        return positions, prefix, suffix
    return None, prefix, suffix


def xpos_mismatch_ranking(records, k: int) -> list[XposMismatchPattern]:
    """Top-k XPOS disagreement patterns by frequency.

    Patterns are ordered (left, right) pairs; ties break lexicographically
    so the ranking is deterministic across runs.
    """
    counter: Counter[tuple[str, str]] = Counter()
    for record in records:
        counter[(record.value_a, record.value_b)] += 1
    ranked = sorted(counter.items(), key=lambda item: (-item[1], item[0]))
    result = []
    for (left, right), count in ranked[:k]:
        positions, prefix, suffix = _pattern_diff(left, right)
        result.append(
            XposMismatchPattern(
                left_pattern=left,
                right_pattern=right,
                count=count,
                differing_positions=positions,
                common_prefix=prefix,
                common_suffix=suffix,
            )
        )
    return result


def segmentation_flags(pattern: XposMismatchPattern) -> bool:
    """True when the two analyses segment into different morpheme counts."""
    return morpheme_count(pattern.left_pattern) != morpheme_count(pattern.right_pattern)
