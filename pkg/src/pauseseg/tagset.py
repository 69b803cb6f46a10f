"""The BMES label alphabet and its transition structure.

B/M/E mark the beginning, middle and end of a multi-character word; S marks
a single-character word. The legality tables below are constants of the tag
scheme, not trainable state.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import IllegalTagSequence, LengthMismatch
from .segments import SegmentedSentence


class Label(IntEnum):
    B = 0
    M = 1
    E = 2
    S = 3


N_LABELS = 4
LABEL_CHARS = "BMES"

_LEGAL_BIGRAMS = frozenset(
    {
        (Label.B, Label.M),
        (Label.B, Label.E),
        (Label.M, Label.M),
        (Label.M, Label.E),
        (Label.E, Label.B),
        (Label.E, Label.S),
        (Label.S, Label.B),
        (Label.S, Label.S),
    }
)

# Bigrams that put a word boundary between their two positions.
_BOUNDARY_BIGRAMS = frozenset(
    {(Label.S, Label.S), (Label.S, Label.B), (Label.E, Label.S), (Label.E, Label.B)}
)


@dataclass(frozen=True)
class TransitionTable:
    """Boolean legality of label bigrams and of sequence-initial/final labels."""

    legal: np.ndarray
    legal_start: np.ndarray
    legal_end: np.ndarray


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


_TABLE = TransitionTable(
    legal=_frozen(
        np.array(
            [[(p, q) in _LEGAL_BIGRAMS for q in Label] for p in Label], dtype=bool
        )
    ),
    legal_start=_frozen(np.array([True, False, False, True])),  # B, S
    legal_end=_frozen(np.array([False, False, True, True])),  # E, S
)


def legal_transitions() -> TransitionTable:
    """The constant BMES legality table."""
    return _TABLE


def boundary_bigrams() -> frozenset[tuple[Label, Label]]:
    """Legal label bigrams that assert a word boundary at their junction."""
    return _BOUNDARY_BIGRAMS


def non_boundary_bigrams() -> frozenset[tuple[Label, Label]]:
    """Legal label bigrams whose junction is word-internal."""
    return frozenset(_LEGAL_BIGRAMS - _BOUNDARY_BIGRAMS)


def parse_tags(tags: str | Sequence[int]) -> tuple[int, ...]:
    """Normalize a tag sequence ("BME...", Label list, or int list) to int tuple."""
    if isinstance(tags, str):
        try:
            return tuple(LABEL_CHARS.index(c) for c in tags)
        except ValueError:
            raise IllegalTagSequence(f"unknown label character in {tags!r}") from None
    out = tuple(int(t) for t in tags)
    if any(t < 0 or t >= N_LABELS for t in out):
        raise IllegalTagSequence(f"label id out of range in {out!r}")
    return out


def tags_to_str(tags: Sequence[int]) -> str:
    return "".join(LABEL_CHARS[t] for t in tags)


def is_legal(tags: str | Sequence[int]) -> bool:
    """A sequence is legal iff start, end and every adjacent bigram are legal."""
    t = parse_tags(tags)
    if not t:
        return False
    if not _TABLE.legal_start[t[0]] or not _TABLE.legal_end[t[-1]]:
        return False
    return all(_TABLE.legal[a, b] for a, b in zip(t, t[1:]))


def words_to_labels(seg: SegmentedSentence) -> str:
    """Encode a segmentation as a BMES string."""
    parts = []
    for start, end in seg.spans:
        n = end - start
        parts.append("S" if n == 1 else "B" + "M" * (n - 2) + "E")
    return "".join(parts)


def labels_to_words(tags: str | Sequence[int], sentence: str) -> SegmentedSentence:
    """Decode a legal BMES sequence into word spans over ``sentence``."""
    t = parse_tags(tags)
    if len(t) != len(sentence):
        raise LengthMismatch(f"{len(t)} tags for {len(sentence)} characters")
    if not is_legal(t):
        raise IllegalTagSequence(f"illegal tag sequence {tags_to_str(t)!r}")
    spans = []
    start = 0
    for i, tag in enumerate(t):
        if tag in (Label.E, Label.S):
            spans.append((start, i + 1))
            start = i + 1
    return SegmentedSentence(sentence, tuple(spans))
