"""CoNLL-U data model and bit-exact reader/writer.

Tokens are word-level rows whose XPOS is a '+'-joined sequence of morpheme
tags (e.g. "NNG+JKS"). All ten columns are kept verbatim, so a parsed file
serializes back to identical bytes. Multiword-token ranges ("1-2") and empty
nodes ("1.1") are rejected: the data this toolkit handles tokenizes at the
word level with morphology inside XPOS, and silently mishandling those
constructs would corrupt every downstream comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class ParseError(ValueError):
    """Malformed CoNLL-U input; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnsupportedLineError(ParseError):
    """Valid CoNLL-U construct that this toolkit deliberately rejects."""


FIELD_NAMES = ("id", "form", "lemma", "upos", "xpos", "feats", "head", "deprel", "deps", "misc")


@dataclass(slots=True)
class Token:
    """One 10-column CoNLL-U row. String fields are stored verbatim ("_" included)."""

    id: int
    form: str
    lemma: str
    upos: str
    xpos: str
    feats: str
    head: int
    deprel: str
    deps: str
    misc: str

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"token id must be >= 1, got {self.id}")
        if self.head < 0:
            raise ValueError(f"head must be >= 0, got {self.head}")
        if self.head == self.id:
            raise ValueError(f"token {self.id} cannot be its own head")

    @property
    def base_deprel(self) -> str:
        """Relation label with any ':'-subtype stripped."""
        return self.deprel.split(":", 1)[0]

    def to_line(self) -> str:
        return "\t".join(
            (
                str(self.id),
                self.form,
                self.lemma,
                self.upos,
                self.xpos,
                self.feats,
                str(self.head),
                self.deprel,
                self.deps,
                self.misc,
            )
        )


@dataclass(slots=True)
class Sentence:
    """Comment lines (verbatim, '#'-prefixed) followed by tokens with ids 1..n."""

    comments: list[str] = field(default_factory=list)
    tokens: list[Token] = field(default_factory=list)

    def __post_init__(self):
        for i, tok in enumerate(self.tokens, start=1):
            if tok.id != i:
                raise ValueError(f"token ids must be contiguous from 1; position {i} has id {tok.id}")

    def _comment_value(self, key: str) -> str | None:
        prefix = f"# {key} = "
        for line in self.comments:
            if line.startswith(prefix):
                return line[len(prefix):]
            # tolerate missing spaces around '='
            if line.startswith(f"# {key}="):
                return line.split("=", 1)[1].strip()
        return None

    @property
    def sent_id(self) -> str | None:
        return self._comment_value("sent_id")

    @property
    def text(self) -> str | None:
        return self._comment_value("text")

    @property
    def surface(self) -> str:
        """Concatenated token forms with inter-token boundaries elided."""
        return "".join(t.form for t in self.tokens)


@dataclass(slots=True)
class Corpus:
    sentences: list[Sentence] = field(default_factory=list)
    source_label: str = ""

    def __len__(self) -> int:
        return len(self.sentences)


def _parse_token_line(line: str, line_no: int, expected_id: int) -> Token:
    columns = line.split("\t")
    if len(columns) != 10:
        raise ParseError(line_no, f"expected 10 tab-separated columns, got {len(columns)}")
    for name, value in zip(FIELD_NAMES, columns):
        if value == "":
            raise ParseError(line_no, f"empty {name.upper()} field (use '_' for unset)")

    raw_id = columns[0]
    if "-" in raw_id:
        raise UnsupportedLineError(line_no, f"multiword-token range id {raw_id!r} is not supported")
    if "." in raw_id:
        raise UnsupportedLineError(line_no, f"empty-node id {raw_id!r} is not supported")
    try:
        token_id = int(raw_id)
    except ValueError:
        raise ParseError(line_no, f"non-integer token id {raw_id!r}") from None
    if token_id != expected_id:
        raise ParseError(line_no, f"token id {token_id} out of sequence (expected {expected_id})")

    try:
        head = int(columns[6])
    except ValueError:
        raise ParseError(line_no, f"non-integer head {columns[6]!r}") from None

    try:
        return Token(
            id=token_id,
            form=columns[1],
            lemma=columns[2],
            upos=columns[3],
            xpos=columns[4],
            feats=columns[5],
            head=head,
            deprel=columns[7],
            deps=columns[8],
            misc=columns[9],
        )
    except ValueError as exc:
        raise ParseError(line_no, str(exc)) from None


def parse_conllu(data: bytes | str, source_label: str = "") -> Corpus:
    """Parse CoNLL-U text into a Corpus.

    The accepted shape is strict so that serialization is an exact inverse:
    each sentence is zero or more comment lines followed by token lines, and
    is terminated by exactly one blank line; the file ends with a newline.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if text == "":
        return Corpus([], source_label)
    if not text.endswith("\n"):
        raise ParseError(text.count("\n") + 1, "file does not end with a newline")

    sentences: list[Sentence] = []
    comments: list[str] = []
    tokens: list[Token] = []
    last_line_no = 0
    for line_no, line in enumerate(text.split("\n")[:-1], start=1):
        last_line_no = line_no
        if line == "":
            if not tokens:
                msg = "comment-only sentence block" if comments else "stray blank line"
                raise ParseError(line_no, msg)
            sentences.append(Sentence(comments, tokens))
            comments, tokens = [], []
        elif line.startswith("#"):
            if tokens:
                raise ParseError(line_no, "comment line inside a token block")
            comments.append(line)
        else:
            tokens.append(_parse_token_line(line, line_no, expected_id=len(tokens) + 1))
    if comments or tokens:
        raise ParseError(last_line_no, "unterminated sentence (missing final blank line)")
    return Corpus(sentences, source_label)


def parse_conllu_file(path: str | Path, source_label: str | None = None) -> Corpus:
    path = Path(path)
    label = path.stem if source_label is None else source_label
    return parse_conllu(path.read_bytes(), label)


def serialize_conllu(corpus: Corpus) -> str:
    """Render a Corpus back to CoNLL-U text (inverse of parse_conllu, byte-exact)."""
    parts: list[str] = []
    for sentence in corpus.sentences:
        for comment in sentence.comments:
            parts.append(comment)
            parts.append("\n")
        for token in sentence.tokens:
            parts.append(token.to_line())
            parts.append("\n")
        parts.append("\n")
    return "".join(parts)


def write_conllu_file(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_bytes(serialize_conllu(corpus).encode("utf-8"))


def split_xpos(xpos: str) -> list[str]:
    """Split a '+'-joined XPOS string into its morpheme tags."""
    if xpos in ("", "_"):
        raise ValueError("empty XPOS has no morpheme decomposition")
    tags = xpos.split("+")
    if any(tag == "" for tag in tags):
        raise ValueError(f"XPOS {xpos!r} contains an empty morpheme tag")
    return tags


def xpos_morphemes(token: Token) -> list[str]:
    """Morpheme tags of a token's XPOS, in order."""
    return split_xpos(token.xpos)


@dataclass(slots=True)
class TreeReport:
    """Head-structure check result. Violations are data, not exceptions."""

    root_ids: list[int]
    out_of_range: list[int]
    cycle_ids: list[int]

    @property
    def ok(self) -> bool:
        return len(self.root_ids) == 1 and not self.out_of_range and not self.cycle_ids

    def violations(self) -> list[str]:
        found: list[str] = []
        if not self.root_ids:
            found.append("no root (no token with head 0)")
        elif len(self.root_ids) > 1:
            found.append(f"multiple roots: tokens {self.root_ids}")
        if self.out_of_range:
            found.append(f"heads out of range on tokens {self.out_of_range}")
        if self.cycle_ids:
            found.append(f"head cycle through tokens {sorted(self.cycle_ids)}")
        return found


def validate_tree(sentence: Sentence) -> TreeReport:
    """Check that heads form a single-rooted acyclic tree over the sentence."""
    n = len(sentence.tokens)
    heads = {t.id: t.head for t in sentence.tokens}
    root_ids = [t.id for t in sentence.tokens if t.head == 0]
    out_of_range = [t.id for t in sentence.tokens if t.head > n]

    # Walk each token's ancestor chain once; nodes revisited while still on
    # the active path lie on a cycle.
    state = {i: 0 for i in heads}  # 0 unvisited, 1 on current path, 2 done
    cycle_ids: set[int] = set()
    for start in heads:
        if state[start]:
            continue
        path: list[int] = []
        node = start
        while node != 0 and node in heads:
            if state[node] == 1:
                cycle_ids.update(path[path.index(node):])
                break
            if state[node] == 2:
                break
            state[node] = 1
            path.append(node)
            node = heads[node]
        for visited in path:
            state[visited] = 2
    return TreeReport(root_ids=root_ids, out_of_range=out_of_range, cycle_ids=sorted(cycle_ids))
