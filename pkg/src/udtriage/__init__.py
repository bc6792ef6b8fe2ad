"""udtriage: parser-disagreement triage for CoNLL-U annotation workflows.

Compares two parsers' CoNLL-U output token by token, routes disagreements
through a two-annotator review queue with third-annotator adjudication, and
tracks agreement, correction, and evaluation metrics across incremental
annotation rounds.
"""

from .conllu import (
    Corpus,
    ParseError,
    Sentence,
    Token,
    parse_conllu,
    parse_conllu_file,
    serialize_conllu,
    validate_tree,
    xpos_morphemes,
)
from .agreement import FeatureKind, agreement_report, conditional_human_agreement, correction_report
from .alignment import align_sentences, aligned_token_pairs, head_correspondence
from .adjudication import ProjectStore, Status, build_queue
from .evaluation import EvalScores, evaluate, score_series
from .taxonomy import DeprelMismatchCategory, TaxonomyTable, classify_deprel_pair

__version__ = "0.1.0"
