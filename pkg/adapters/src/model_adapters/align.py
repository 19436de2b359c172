"""Subword-to-word alignment for manipulated-token labels.

Detection models label their own subword units; the wire protocol wants
flags on whitespace tokens of the original caption. A whitespace token
is flagged iff any flagged subword overlaps it (character half-open
intervals).
"""

from __future__ import annotations

import re


def token_spans(text: str) -> list[tuple[int, int, str]]:
    """Whitespace tokens with their character offsets."""
    return [(m.start(), m.end(), m.group()) for m in re.finditer(r"\S+", text)]


def align_subword_flags(
    text: str,
    subword_spans: list[tuple[int, int]],
    subword_flags: list[int],
) -> tuple[list[str], list[int]]:
    """Project subword-level flags onto whitespace tokens.

    Returns (tokens, labels) where labels[i] is 1 iff some flagged subword
    span overlaps token i. Spans are (start, end) character offsets into
    ``text``, end exclusive.
    """
    if len(subword_spans) != len(subword_flags):
        raise ValueError(f"{len(subword_spans)} spans vs {len(subword_flags)} flags")
    flagged = [(s, e) for (s, e), flag in zip(subword_spans, subword_flags) if flag]
    tokens: list[str] = []
    labels: list[int] = []
    for start, end, token in token_spans(text):
        hit = any(fs < end and start < fe for fs, fe in flagged)
        tokens.append(token)
        labels.append(1 if hit else 0)
    return tokens, labels
