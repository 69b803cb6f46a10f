"""Exact linear-chain CRF inference and training over the BMES tag space.

All dynamic programming runs in log space on float64 arrays. Hard
constraints are uniform: illegal transitions, illegal start/end labels and
constraint-mask exclusions are -inf score entries, so a single forward /
backward pair serves the partition function, marginals, both losses and
(constrained) Viterbi.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np

from . import features as feat
from . import tagset
from .errors import (
    EmptyDataset,
    IllegalTagSequence,
    IndexOutOfRange,
    LengthMismatch,
    NoLegalPath,
    ParseError,
    SentenceTooShort,
)
from .segments import SegmentedSentence

NEG_INF = float("-inf")
N = tagset.N_LABELS

_TABLE = tagset.legal_transitions()
TRANS_LEGAL = _TABLE.legal
START_LEGAL = _TABLE.legal_start
END_LEGAL = _TABLE.legal_end

_BOUNDARY_PAIRS = sorted((int(a), int(b)) for a, b in tagset.boundary_bigrams())


def logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Log-sum-exp that returns -inf (not NaN) when all inputs are -inf."""
    m = np.max(a, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(m), m, 0.0)
    s = np.exp(a - shift).sum(axis=axis)
    with np.errstate(divide="ignore"):
        return np.log(s) + np.squeeze(shift, axis=axis)


# ---------------------------------------------------------------------------
# Model


class CrfModel:
    """Emission feature weights plus transition/start/end weights.

    Illegal transition, start and end entries are exactly -inf and are never
    updated; all other weights are finite floats.
    """

    def __init__(
        self,
        vocab: feat.FeatureVocabulary,
        emit_w: np.ndarray | None = None,
        trans: np.ndarray | None = None,
        start: np.ndarray | None = None,
        end: np.ndarray | None = None,
    ):
        self.vocab = vocab
        self.templates = vocab.templates
        self.emit_w = np.zeros((vocab.size, N)) if emit_w is None else emit_w
        self.trans = np.where(TRANS_LEGAL, 0.0, NEG_INF) if trans is None else trans
        self.start = np.where(START_LEGAL, 0.0, NEG_INF) if start is None else start
        self.end = np.where(END_LEGAL, 0.0, NEG_INF) if end is None else end

    def emissions(self, sentence: str) -> np.ndarray:
        return feat.emission_scores(sentence, self)

    def copy(self) -> "CrfModel":
        return CrfModel(
            self.vocab,
            self.emit_w.copy(),
            self.trans.copy(),
            self.start.copy(),
            self.end.copy(),
        )

    # -- persistence --------------------------------------------------------
    # A line-based text format: header, templates, vocabulary, then every
    # finite weight as a 17-significant-digit decimal (which round-trips
    # float64 bitwise). Illegal entries are omitted and rebuilt as -inf.

    FORMAT_HEADER = "pauseseg model format 1"

    def dumps(self) -> str:
        for arr in (self.emit_w, self.trans, self.start, self.end):
            if np.isnan(arr).any():
                raise ValueError("model contains NaN weights")
        lines = [self.FORMAT_HEADER]
        for name, offsets in self.templates:
            lines.append("template " + name + " " + " ".join(str(o) for o in offsets))
        lines.append(f"vocab_size {self.vocab.size}")
        for feature, fid in self.vocab.items():
            lines.append(f"feature {fid} " + json.dumps(feature, ensure_ascii=False))
        for fid in range(self.vocab.size):
            ws = " ".join(f"{w:.17g}" for w in self.emit_w[fid])
            lines.append(f"emit {fid} {ws}")
        for p in range(N):
            for q in range(N):
                if TRANS_LEGAL[p, q]:
                    lines.append(
                        f"trans {tagset.LABEL_CHARS[p]} {tagset.LABEL_CHARS[q]} "
                        f"{self.trans[p, q]:.17g}"
                    )
        for l in range(N):
            if START_LEGAL[l]:
                lines.append(f"start {tagset.LABEL_CHARS[l]} {self.start[l]:.17g}")
        for l in range(N):
            if END_LEGAL[l]:
                lines.append(f"end {tagset.LABEL_CHARS[l]} {self.end[l]:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "CrfModel":
        lines = text.splitlines()
        if not lines or lines[0] != cls.FORMAT_HEADER:
            raise ParseError("not a pauseseg model file (bad header)", line=1)
        templates: list[tuple[str, tuple[int, ...]]] = []
        items: list[tuple[str, int]] = []
        vocab_size = None
        emit_rows: dict[int, list[float]] = {}
        trans = np.where(TRANS_LEGAL, np.nan, NEG_INF)
        start = np.where(START_LEGAL, np.nan, NEG_INF)
        end = np.where(END_LEGAL, np.nan, NEG_INF)
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            kind, _, rest = line.partition(" ")
            try:
                if kind == "template":
                    parts = rest.split()
                    templates.append((parts[0], tuple(int(x) for x in parts[1:])))
                elif kind == "vocab_size":
                    vocab_size = int(rest)
                elif kind == "feature":
                    fid_str, _, payload = rest.partition(" ")
                    items.append((json.loads(payload), int(fid_str)))
                elif kind == "emit":
                    parts = rest.split()
                    emit_rows[int(parts[0])] = [float(x) for x in parts[1:]]
                elif kind == "trans":
                    p, q, w = rest.split()
                    trans[tagset.LABEL_CHARS.index(p), tagset.LABEL_CHARS.index(q)] = float(w)
                elif kind == "start":
                    l, w = rest.split()
                    start[tagset.LABEL_CHARS.index(l)] = float(w)
                elif kind == "end":
                    l, w = rest.split()
                    end[tagset.LABEL_CHARS.index(l)] = float(w)
                else:
                    raise ValueError(f"unknown record {kind!r}")
            except (ValueError, IndexError, json.JSONDecodeError) as exc:
                raise ParseError(f"bad model line: {exc}", line=lineno) from exc
        if vocab_size is None:
            raise ParseError("missing vocab_size record")
        vocab = feat.FeatureVocabulary.restore(tuple(templates), items, vocab_size)
        emit_w = np.zeros((vocab_size, N))
        for fid, row in emit_rows.items():
            if not 0 <= fid < vocab_size or len(row) != N:
                raise ParseError(f"bad emission row for feature {fid}")
            emit_w[fid] = row
        if len(emit_rows) != vocab_size:
            raise ParseError(
                f"expected {vocab_size} emission rows, found {len(emit_rows)}"
            )
        for arr in (trans, start, end):
            if np.isnan(arr).any():
                raise ParseError("missing transition/start/end weights")
        return cls(vocab, emit_w, trans, start, end)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "CrfModel":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


# ---------------------------------------------------------------------------
# Constraint masks


class ConstraintMask:
    """Per-position allowed-label sets encoding a partial annotation.

    Construction verifies that at least one legal tag sequence survives the
    mask; everything downstream may then assume a path exists.
    """

    def __init__(self, allowed: np.ndarray):
        allowed = np.asarray(allowed, dtype=bool)
        if allowed.ndim != 2 or allowed.shape[1] != N or allowed.shape[0] == 0:
            raise ValueError(f"mask must be [n, {N}], got {allowed.shape}")
        self.allowed = allowed
        if not self._has_legal_path():
            raise NoLegalPath("constraint mask admits no legal tag sequence")

    def __len__(self) -> int:
        return len(self.allowed)

    def _has_legal_path(self) -> bool:
        reach = START_LEGAL & self.allowed[0]
        for i in range(1, len(self.allowed)):
            reach = (reach[:, None] & TRANS_LEGAL).any(axis=0) & self.allowed[i]
            if not reach.any():
                return False
        return bool((reach & END_LEGAL).any())

    @classmethod
    def all_allowed(cls, n: int) -> "ConstraintMask":
        return cls(np.ones((n, N), dtype=bool))

    def is_restricting(self) -> bool:
        return not self.allowed.all()


def _allowed_array(mask, n: int) -> np.ndarray | None:
    if mask is None:
        return None
    allowed = mask.allowed if isinstance(mask, ConstraintMask) else np.asarray(mask, dtype=bool)
    if allowed.shape != (n, N):
        raise LengthMismatch(f"mask shape {allowed.shape} for sentence of length {n}")
    return allowed


# ---------------------------------------------------------------------------
# Forward-backward

# alpha[i, l]: log-sum over prefixes ending at i with label l, including the
# start weight and emissions up to i. beta[i, l]: log-sum over suffixes from
# i with label l, excluding emission i, including the end weight. Marginals
# are then exp(alpha + beta - log Z); on hard-excluded entries the -inf
# scores make them exactly 0.


@dataclass
class _FB:
    log_alpha: np.ndarray
    log_beta: np.ndarray
    log_z: float
    unigram: np.ndarray  # [n, 4]
    bigram: np.ndarray  # [n-1, 4, 4]


def _masked_emissions(E: np.ndarray, allowed: np.ndarray | None) -> np.ndarray:
    if allowed is None:
        return E
    return np.where(allowed, E, NEG_INF)


def _forward(Em, trans, start, end):
    n = len(Em)
    log_alpha = np.empty((n, N))
    log_alpha[0] = start + Em[0]
    for i in range(1, n):
        log_alpha[i] = Em[i] + logsumexp(log_alpha[i - 1][:, None] + trans, axis=0)
    log_z = float(logsumexp(log_alpha[n - 1] + end, axis=0))
    return log_alpha, log_z


def _backward(Em, trans, end):
    n = len(Em)
    log_beta = np.empty((n, N))
    log_beta[n - 1] = end
    for i in range(n - 2, -1, -1):
        log_beta[i] = logsumexp(trans + (Em[i + 1] + log_beta[i + 1])[None, :], axis=1)
    return log_beta


def _forward_backward(E, trans, start, end, allowed=None) -> _FB:
    Em = _masked_emissions(E, allowed)
    n = len(Em)
    log_alpha, log_z = _forward(Em, trans, start, end)
    if log_z == NEG_INF:
        raise NoLegalPath("no legal tag sequence has finite score")
    log_beta = _backward(Em, trans, end)
    unigram = np.exp(log_alpha + log_beta - log_z)
    if n > 1:
        bigram = np.exp(
            log_alpha[:-1, :, None]
            + trans[None, :, :]
            + (Em[1:] + log_beta[1:])[:, None, :]
            - log_z
        )
    else:
        bigram = np.zeros((0, N, N))
    return _FB(log_alpha, log_beta, log_z, unigram, bigram)


# ---------------------------------------------------------------------------
# Inference operations


def _path_score(E, t, trans, start, end) -> float:
    s = start[t[0]] + E[0, t[0]]
    for i in range(1, len(t)):
        s = s + trans[t[i - 1], t[i]] + E[i, t[i]]
    return float(s + end[t[-1]])


def score_sequence(sentence: str, tags, model: CrfModel) -> float:
    """Unnormalized path score; -inf iff any start/transition/end is illegal."""
    t = tagset.parse_tags(tags)
    if len(t) != len(sentence):
        raise LengthMismatch(f"{len(t)} tags for {len(sentence)} characters")
    if not t:
        raise SentenceTooShort("empty sentence")
    return _path_score(model.emissions(sentence), t, model.trans, model.start, model.end)


def log_partition(sentence: str, model: CrfModel, mask=None) -> float:
    """log of the summed exp-scores of all legal sequences (respecting mask)."""
    if not sentence:
        raise SentenceTooShort("empty sentence")
    allowed = _allowed_array(mask, len(sentence))
    Em = _masked_emissions(model.emissions(sentence), allowed)
    _, log_z = _forward(Em, model.trans, model.start, model.end)
    if log_z == NEG_INF:
        raise NoLegalPath("constraint mask admits no legal tag sequence")
    return log_z


def bigram_marginals(sentence: str, model: CrfModel) -> np.ndarray:
    """p(l, l' | junction i) as a [n-1, 4, 4] tensor; illegal bigrams are 0."""
    if len(sentence) < 2:
        raise SentenceTooShort("bigram marginals need at least 2 characters")
    fb = _forward_backward(model.emissions(sentence), model.trans, model.start, model.end)
    return fb.bigram


def boundary_probabilities(sentence: str, model: CrfModel) -> np.ndarray:
    """Boundary probability at every junction, shape [n-1]."""
    marg = bigram_marginals(sentence, model)
    out = np.zeros(len(marg))
    for a, b in _BOUNDARY_PAIRS:
        out += marg[:, a, b]
    return out


def boundary_probability(sentence: str, model: CrfModel, i: int) -> float:
    """Probability of a word boundary between characters i and i+1."""
    if not 0 <= i < len(sentence) - 1:
        raise IndexOutOfRange(f"junction {i} outside sentence of length {len(sentence)}")
    return float(boundary_probabilities(sentence, model)[i])


def viterbi(sentence: str, model: CrfModel, mask=None) -> str:
    """Highest-scoring legal sequence respecting ``mask``.

    Ties are broken toward the lower label id (B<M<E<S) at the earliest
    position where tied paths differ, which makes decoding deterministic.
    """
    n = len(sentence)
    if n == 0:
        raise SentenceTooShort("empty sentence")
    allowed = _allowed_array(mask, n)
    Em = _masked_emissions(model.emissions(sentence), allowed)
    # delta[i, l]: best suffix score from position i with label l.
    delta = np.empty((n, N))
    delta[n - 1] = Em[n - 1] + model.end
    for i in range(n - 2, -1, -1):
        delta[i] = Em[i] + np.max(model.trans + delta[i + 1][None, :], axis=1)
    first = model.start + delta[0]
    if np.max(first) == NEG_INF:
        raise NoLegalPath("constraint mask admits no legal tag sequence")
    # Greedy forward selection: np.argmax takes the first (lowest-id) maximum.
    tags = [int(np.argmax(first))]
    for i in range(1, n):
        cand = model.trans[tags[-1]] + delta[i]
        tags.append(int(np.argmax(cand)))
    return tagset.tags_to_str(tags)


# ---------------------------------------------------------------------------
# Losses and gradients


@dataclass
class Gradient:
    """Gradient arrays shaped like the model parameters (0 on illegal entries)."""

    emit: np.ndarray
    trans: np.ndarray
    start: np.ndarray
    end: np.ndarray

    @classmethod
    def zeros(cls, model: CrfModel) -> "Gradient":
        return cls(
            np.zeros_like(model.emit_w),
            np.zeros((N, N)),
            np.zeros(N),
            np.zeros(N),
        )


def _add_expected_counts(
    grad: Gradient, ids: np.ndarray, unigram: np.ndarray, bigram: np.ndarray, sign: float
) -> None:
    n_templates = ids.shape[1]
    np.add.at(grad.emit, ids.ravel(), sign * np.repeat(unigram, n_templates, axis=0))
    grad.trans += sign * bigram.sum(axis=0)
    grad.start += sign * unigram[0]
    grad.end += sign * unigram[-1]


def _add_observed_counts(grad: Gradient, ids: np.ndarray, t: tuple[int, ...], sign: float) -> None:
    for i, tag in enumerate(t):
        grad.emit[ids[i], tag] += sign  # the ids at one position are distinct
    tarr = np.asarray(t)
    np.add.at(grad.trans, (tarr[:-1], tarr[1:]), sign)
    grad.start[t[0]] += sign
    grad.end[t[-1]] += sign


def _full_example_loss(model, ids, E, t, grad: Gradient | None) -> float:
    fb = _forward_backward(E, model.trans, model.start, model.end)
    loss = fb.log_z - _path_score(E, t, model.trans, model.start, model.end)
    if grad is not None:
        _add_expected_counts(grad, ids, fb.unigram, fb.bigram, +1.0)
        _add_observed_counts(grad, ids, t, -1.0)
    return loss


def _partial_example_loss(model, ids, E, allowed, grad: Gradient | None) -> float:
    fb_full = _forward_backward(E, model.trans, model.start, model.end)
    fb_con = _forward_backward(E, model.trans, model.start, model.end, allowed)
    if grad is not None:
        # subtract marginals before scattering: when the mask excludes
        # nothing the difference is exactly zero, so the update is too
        _add_expected_counts(
            grad, ids, fb_full.unigram - fb_con.unigram, fb_full.bigram - fb_con.bigram, +1.0
        )
    return fb_full.log_z - fb_con.log_z


def nll_loss_and_grad(batch, model: CrfModel) -> tuple[float, Gradient]:
    """Negative log-likelihood of gold sequences, summed over the batch.

    The gradient is expected feature counts minus gold counts, covering
    emissions, transitions and start/end weights.
    """
    grad = Gradient.zeros(model)
    loss = 0.0
    for sentence, tags in batch:
        t = tagset.parse_tags(tags)
        if len(t) != len(sentence):
            raise LengthMismatch(f"{len(t)} tags for {len(sentence)} characters")
        if not tagset.is_legal(t):
            raise IllegalTagSequence(f"illegal gold sequence {tagset.tags_to_str(t)!r}")
        ids = model.vocab.encode(sentence)
        E = model.emit_w[ids].sum(axis=1)
        loss += _full_example_loss(model, ids, E, t, grad)
    return loss, grad


def partial_nll_loss_and_grad(batch, model: CrfModel) -> tuple[float, Gradient]:
    """Marginalized loss log Z - log Z_constrained, summed over the batch.

    Minimizing it pushes probability mass onto the sequences a constraint
    mask allows; the gradient is (full - constrained) expected counts.
    """
    grad = Gradient.zeros(model)
    loss = 0.0
    for sentence, mask in batch:
        allowed = _allowed_array(mask, len(sentence))
        ids = model.vocab.encode(sentence)
        E = model.emit_w[ids].sum(axis=1)
        loss += _partial_example_loss(model, ids, E, allowed, grad)
    return loss, grad


# ---------------------------------------------------------------------------
# Training


@dataclass
class TrainConfig:
    """Optimization and pipeline settings.

    ``mode`` selects how target-domain data is used downstream:
    ``baseline`` (ignore it), ``ctt`` (complete partial annotations by
    constrained decoding, then retrain), ``self_training`` (complete by
    unconstrained decoding) or ``partial_crf`` (train directly on the
    marginalized loss).
    """

    epochs: int = 10
    learning_rate: float = 0.1
    l2: float = 1e-5
    batch_chars: int = 1000
    seed: int = 0
    threshold: float = 0.5
    mode: str = "ctt"
    deterministic: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        if self.mode not in ("baseline", "ctt", "self_training", "partial_crf"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class FullExample:
    sentence: str
    tags: str


class PartialExample:
    """A sentence whose annotation is a constraint mask."""

    def __init__(self, sentence: str, mask: ConstraintMask):
        if len(mask) != len(sentence):
            raise LengthMismatch(f"mask of length {len(mask)} for {len(sentence)} characters")
        self.sentence = sentence
        self.mask = mask


def _batches(order: list[int], examples, batch_chars: int):
    batch: list[int] = []
    chars = 0
    for idx in order:
        batch.append(idx)
        chars += len(examples[idx].sentence)
        if chars >= batch_chars:
            yield batch
            batch, chars = [], 0
    if batch:
        yield batch


def _dev_f1(model: CrfModel, dev: list[SegmentedSentence]) -> float:
    from .evaluate import prf  # local import: evaluate does not import crf

    preds = [tagset.labels_to_words(viterbi(s.chars, model), s.chars) for s in dev]
    return prf(dev, preds).f1


def train(
    examples,
    config: TrainConfig,
    dev: list[SegmentedSentence] | None = None,
) -> CrfModel:
    """Mini-batch gradient descent on full and/or partial examples.

    Builds a fresh vocabulary from the training sentences, then optimizes
    with a fixed learning rate and per-update L2 decay. Returns the epoch
    with the best dev F1 when ``dev`` is given, otherwise the final epoch.
    Deterministic for a fixed seed.
    """
    examples = list(examples)
    if not examples:
        raise EmptyDataset("no training sentences")

    vocab = feat.FeatureVocabulary()
    for ex in examples:
        vocab.add_sentence(ex.sentence)
    vocab.freeze()
    model = CrfModel(vocab)

    prepared = []
    for ex in examples:
        ids = vocab.encode(ex.sentence)
        if isinstance(ex, FullExample):
            t = tagset.parse_tags(ex.tags)
            if len(t) != len(ex.sentence):
                raise LengthMismatch(
                    f"{len(t)} tags for {len(ex.sentence)} characters"
                )
            if not tagset.is_legal(t):
                raise IllegalTagSequence(f"illegal gold sequence {ex.tags!r}")
            prepared.append((ids, t, None))
        else:
            prepared.append((ids, None, ex.mask.allowed))

    rng = random.Random(config.seed)
    order = list(range(len(examples)))
    best: CrfModel | None = None
    best_f1 = -1.0
    lr = config.learning_rate
    for _epoch in range(config.epochs):
        rng.shuffle(order)
        for batch in _batches(order, examples, config.batch_chars):
            grad = Gradient.zeros(model)
            for idx in batch:
                ids, t, allowed = prepared[idx]
                E = model.emit_w[ids].sum(axis=1)
                if t is not None:
                    _full_example_loss(model, ids, E, t, grad)
                else:
                    _partial_example_loss(model, ids, E, allowed, grad)
            scale = 1.0 / len(batch)
            model.emit_w -= lr * (scale * grad.emit + config.l2 * model.emit_w)
            model.trans[TRANS_LEGAL] -= lr * (
                scale * grad.trans[TRANS_LEGAL] + config.l2 * model.trans[TRANS_LEGAL]
            )
            model.start[START_LEGAL] -= lr * (
                scale * grad.start[START_LEGAL] + config.l2 * model.start[START_LEGAL]
            )
            model.end[END_LEGAL] -= lr * (
                scale * grad.end[END_LEGAL] + config.l2 * model.end[END_LEGAL]
            )
        if dev:
            f1 = _dev_f1(model, dev)
            if f1 > best_f1:
                best_f1 = f1
                best = model.copy()
    return best if best is not None else model
