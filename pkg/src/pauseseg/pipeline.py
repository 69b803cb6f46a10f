"""End-to-end training pipelines: baseline, complete-then-train, rivals.

The central recipe is complete-then-train: train a baseline segmenter on
the source domain, use it under pause-derived constraints to complete the
target-domain sentences into full segmentations, then retrain from scratch
on the union of source gold and completed target data.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass, field

from . import crf, mining, tagset
from .errors import EmptyDataset, NoLegalPath
from .mining import PartialSentence
from .segments import SegmentedSentence, read_gold_corpus, write_gold_corpus

log = logging.getLogger(__name__)

# Halfwidth/fullwidth symbols that commonly punctuate Chinese text but are
# not in Unicode "P" categories (they are "S" symbols). This list is the
# entire special-case set; everything else goes by category.
_EXTRA_PUNCT = set("～￥＄＋＝＾｜＜＞·")


def is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P") or ch in _EXTRA_PUNCT


def strip_punctuation(sentences: list[SegmentedSentence]) -> list[SegmentedSentence]:
    """Remove punctuation-only characters from gold data.

    Punctuation characters are dropped from their words; words and then
    sentences left empty disappear. Idempotent.
    """
    out = []
    for s in sentences:
        words = []
        for w in s.words:
            kept = "".join(ch for ch in w if not is_punctuation(ch))
            if kept:
                words.append(kept)
        if words:
            out.append(SegmentedSentence.from_words(words))
    return out


def strip_punctuation_partial(partials: list[PartialSentence]) -> list[PartialSentence]:
    """Same cleanup for partial annotations.

    A junction is kept when both its neighbours survive; it then separates
    the surviving characters that surrounded it.
    """
    out = []
    for p in partials:
        keep = [not is_punctuation(ch) for ch in p.chars]
        new_index = []
        k = 0
        for kept in keep:
            new_index.append(k if kept else None)
            k += kept
        chars = "".join(ch for ch, kept in zip(p.chars, keep) if kept)
        if not chars:
            continue
        bounds = []
        for b in p.boundaries:
            if keep[b] and keep[b + 1]:
                bounds.append(new_index[b])
        bounds = [b for b in bounds if 0 <= b < len(chars) - 1]
        out.append(PartialSentence(chars, tuple(bounds)))
    return out


# ---------------------------------------------------------------------------
# Training recipes


def gold_examples(sentences: list[SegmentedSentence]) -> list[crf.FullExample]:
    return [crf.FullExample(s.chars, tagset.words_to_labels(s)) for s in sentences]


def train_baseline(
    source: list[SegmentedSentence],
    config: crf.TrainConfig,
    dev: list[SegmentedSentence] | None = None,
) -> crf.CrfModel:
    """Train a segmenter on fully annotated source-domain data."""
    return crf.train(gold_examples(source), config, dev=dev)


def self_train_label(model: crf.CrfModel, sentence: str) -> SegmentedSentence:
    """Segment one raw sentence with the model's unconstrained decode."""
    return tagset.labels_to_words(crf.viterbi(sentence, model), sentence)


def segment_corpus(model: crf.CrfModel, sentences: list[str]) -> list[SegmentedSentence]:
    return [self_train_label(model, s) for s in sentences]


def complete_annotation(
    model: crf.CrfModel, partial: PartialSentence
) -> SegmentedSentence:
    """Fill in a partial annotation by decoding under its constraint mask."""
    mask = mining.partial_to_mask(partial)
    tags = crf.viterbi(partial.chars, model, mask=mask)
    return tagset.labels_to_words(tags, partial.chars)


@dataclass
class CttResult:
    model: crf.CrfModel
    baseline: crf.CrfModel
    completed: list[SegmentedSentence]
    used: int
    skipped: int


def run_ctt(
    source: list[SegmentedSentence],
    target: list[PartialSentence],
    config: crf.TrainConfig,
    dev: list[SegmentedSentence] | None = None,
    baseline: crf.CrfModel | None = None,
) -> CttResult:
    """Complete-then-train (or self-training, per ``config.mode``).

    Steps: train a baseline on ``source`` (unless one is passed in), decode
    each target sentence under its boundary constraints to complete the
    annotation, then train a fresh model on source plus completions. In
    ``self_training`` mode the constraints are ignored and every target
    sentence is decoded freely. Target sentences without boundaries carry
    no constraint signal and are skipped in ctt mode.
    """
    if baseline is None:
        baseline = train_baseline(source, config, dev=dev)
    self_training = config.mode == "self_training"
    completed: list[SegmentedSentence] = []
    skipped = 0
    for p in target:
        if not self_training and not p.boundaries:
            skipped += 1
            continue
        try:
            if self_training:
                completed.append(self_train_label(baseline, p.chars))
            else:
                completed.append(complete_annotation(baseline, p))
        except NoLegalPath:
            skipped += 1
    if skipped:
        log.info("skipped %d target sentences without usable constraints", skipped)
    if not completed:
        raise EmptyDataset("no target sentences could be completed")
    merged = gold_examples(source) + gold_examples(completed)
    model = crf.train(merged, config, dev=dev)
    return CttResult(model, baseline, completed, used=len(completed), skipped=skipped)


def run_partial_crf(
    source: list[SegmentedSentence],
    target: list[PartialSentence],
    config: crf.TrainConfig,
    dev: list[SegmentedSentence] | None = None,
) -> crf.CrfModel:
    """Train one model on source gold plus the marginalized partial loss.

    The partial examples contribute log Z - log Z_constrained. Junctions
    the constraints leave open carry no supervision, which in practice
    drags predictions toward single-character words.
    """
    examples: list[crf.FullExample | crf.PartialExample] = list(gold_examples(source))
    skipped = 0
    for p in target:
        try:
            examples.append(crf.PartialExample(p.chars, mining.partial_to_mask(p)))
        except NoLegalPath:
            skipped += 1
    if skipped:
        log.info("skipped %d target sentences with unusable constraints", skipped)
    return crf.train(examples, config, dev=dev)


# ---------------------------------------------------------------------------
# Pause mining across a corpus of alignments


def mine_partials(
    model: crf.CrfModel,
    alignments,
    threshold: float = 0.5,
    min_pause_ms: float = 10.0,
) -> tuple[list[PartialSentence], list[list]]:
    """Detect, score and filter pauses; return partial sentences and scores.

    Returns one PartialSentence per alignment (possibly with no boundaries)
    plus the parallel scored-pause lists for reporting.
    """
    from .alignment import detect_pauses

    partials = []
    scored_lists = []
    for a in alignments:
        sentence = a.sentence
        if len(sentence) < 2:
            partials.append(PartialSentence(sentence, ()))
            scored_lists.append([])
            continue
        scored = mining.score_pauses(model, sentence, detect_pauses(a, min_pause_ms))
        kept = mining.filter_pauses(scored, threshold)
        partials.append(mining.pauses_to_partial(sentence, kept))
        scored_lists.append(scored)
    return partials, scored_lists
