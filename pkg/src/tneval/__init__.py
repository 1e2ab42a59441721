"""Rubric-based quality evaluation for behavioral-therapy SOAP notes."""

from .corpus import (Sentence, SoapNote, Transcript, parse_note,
                     parse_transcript, segment_sentences)
from .rubric import (Importance, Rubric, RubricItem, Section,
                     consolidate_rubric, default_rubric, load_rubric)
from .scoring import (AlignmentScore, Channel, CompletenessJudgment,
                      ConcisenessJudgment, EvalDimension,
                      FaithfulnessCategory, FaithfulnessJudgment,
                      LikertJudgment, ScoreReport, completeness_scores,
                      conciseness_scores, corpus_summary,
                      faithfulness_scores_human, likert_scores)

__version__ = "0.1.0"

__all__ = [
    "AlignmentScore", "Channel", "CompletenessJudgment",
    "ConcisenessJudgment", "EvalDimension", "FaithfulnessCategory",
    "FaithfulnessJudgment", "Importance", "LikertJudgment", "Rubric",
    "RubricItem", "ScoreReport", "Section", "Sentence", "SoapNote",
    "Transcript", "completeness_scores", "conciseness_scores",
    "consolidate_rubric", "corpus_summary", "default_rubric",
    "faithfulness_scores_human", "likert_scores", "load_rubric",
    "parse_note", "parse_transcript", "segment_sentences",
]
