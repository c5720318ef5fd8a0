"""
Context and query perturbations with seeded determinism and edit logs

Every operator only produces an edit log; the perturbed context is always
obtained by replaying that log on the original sample.
"""

import logging
import re
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from src.config import MASK_TOKEN
from src.data_classes import (
    Document,
    Edit,
    Lexicon,
    PerturbationKind,
    PerturbedSample,
    QASample,
    SupportingFact,
)
from src.errors import (
    InvalidFactCount,
    MissingLexicon,
    MissingPrefix,
    NoIrrelevantSentence,
    ReplayMismatch,
)
from src.utils import make_rng

logger = logging.getLogger(__name__)

# Words and single punctuation marks; the whitespace between them is kept as-is
TOKEN_RE = re.compile(r"\w+|[^\w\s]")
WORD_RE = re.compile(r"\w+")
PARENTHETICAL_RE = re.compile(r"\s*\([^)]*\)\s*$")

EXPLICIT_COUNTS = {2: 1, 3: 1, 4: 2}

Span = Tuple[int, int]
EntityDetector = Callable[[str, QASample], List[Span]]


def perturb_count(fact_count: int) -> int:
    """Number of supporting sentences altered for a sample with ``fact_count`` facts."""
    if fact_count < 2:
        raise InvalidFactCount(f"fact_count must be >= 2, got {fact_count}")
    return EXPLICIT_COUNTS.get(fact_count, fact_count // 2)


def target_facts(sample: QASample) -> List[SupportingFact]:
    """Distinct positions among the last ``perturb_count`` supporting facts."""
    k = perturb_count(sample.fact_count)
    targets = []
    for fact in sample.supporting_facts[-k:]:
        if fact not in targets:
            targets.append(fact)
    return targets


def _shortfall(sample: QASample) -> List[str]:
    """Flag samples whose last supporting facts repeat a sentence, so fewer edits are made."""
    if len(target_facts(sample)) < perturb_count(sample.fact_count):
        logger.debug("Sample %s: duplicated target facts, fewer edits than perturb_count", sample.id)
        return ["duplicate_target"]
    return []


def _distinct_facts(sample: QASample) -> List[SupportingFact]:
    out = []
    for fact in sample.supporting_facts:
        if fact not in out:
            out.append(fact)
    return out


def _sentence(sample: QASample, fact: SupportingFact) -> str:
    return sample.document(fact.title).sentences[fact.sentence_index]


def _doc_position(sample: QASample, title: str) -> int:
    for i, doc in enumerate(sample.context):
        if doc.title == title:
            return i
    raise ReplayMismatch(f"no document titled {title!r}")


# Replay

def replay_edits(
    sample: QASample, edits: Sequence[Edit]
) -> Tuple[Tuple[Document, ...], str, Tuple[SupportingFact, ...]]:
    """Apply an edit log to the original sample.

    Returns the perturbed context, the perturbed query, and the positions the
    surviving supporting sentences occupy in the perturbed context.
    """
    docs = [
        [doc.title, [[i, s] for i, s in enumerate(doc.sentences)], doc.degenerate]
        for doc in sample.context
    ]
    query = sample.question

    def find(title: str):
        for doc in docs:
            if doc[0] == title:
                return doc[1]
        raise ReplayMismatch(f"edit names absent document {title!r}")

    for n, edit in enumerate(edits):
        if edit.op == "prefix_query":
            if query != edit.before:
                raise ReplayMismatch(f"edit {n}: query does not match")
            query = edit.after
            continue
        if edit.op == "reorder_documents":
            perm = edit.permutation or ()
            if sorted(perm) != list(range(len(docs))):
                raise ReplayMismatch(f"edit {n}: {perm} is not a permutation of {len(docs)} documents")
            docs = [docs[i] for i in perm]
            continue

        rows = find(edit.title)
        if edit.sentence_index is None or not 0 <= edit.sentence_index < len(rows):
            raise ReplayMismatch(f"edit {n}: sentence index {edit.sentence_index} out of range")
        row = rows[edit.sentence_index]
        current = row[1]

        if edit.op in ("remove_sentence", "replace_sentence", "rewrite_sentence"):
            if current != edit.before:
                raise ReplayMismatch(f"edit {n}: sentence text does not match")
            if edit.op == "remove_sentence":
                del rows[edit.sentence_index]
            else:
                row[1] = edit.after
        elif edit.op in ("mask_span", "substitute_word"):
            if edit.span is None:
                if current != edit.before:
                    raise ReplayMismatch(f"edit {n}: sentence text does not match")
                continue
            start, end = edit.span
            if current[start:end] != edit.before:
                raise ReplayMismatch(f"edit {n}: span text does not match")
            row[1] = current[:start] + edit.after + current[end:]
        else:
            raise ReplayMismatch(f"edit {n}: unknown op {edit.op!r}")

    context = tuple(
        Document(title=title, sentences=tuple(s for _, s in rows), degenerate=degenerate or not rows)
        for title, rows, degenerate in docs
    )

    support = []
    for fact in _distinct_facts(sample):
        for title, rows, _ in docs:
            if title != fact.title:
                continue
            for position, (orig, _) in enumerate(rows):
                if orig == fact.sentence_index:
                    support.append(SupportingFact(title, position))
            break
    return context, query, tuple(support)


def _finish(
    sample: QASample,
    kind: PerturbationKind,
    seed: int,
    edits: List[Edit],
    flags: Sequence[str] = (),
) -> PerturbedSample:
    context, query, support = replay_edits(sample, edits)
    return PerturbedSample(
        base=sample.id,
        kind=kind,
        context=context,
        query=query,
        edits=tuple(edits),
        seed=seed,
        support=support,
        flags=tuple(flags),
    )


def evidence_context(perturbed: PerturbedSample) -> Tuple[Document, ...]:
    """Documents restricted to the surviving supporting sentences, in context order."""
    keep: Dict[str, List[int]] = {}
    for fact in perturbed.support:
        keep.setdefault(fact.title, []).append(fact.sentence_index)
    docs = []
    for doc in perturbed.context:
        if doc.title in keep:
            indices = sorted(set(keep[doc.title]))
            docs.append(Document(title=doc.title, sentences=tuple(doc.sentences[i] for i in indices)))
    return tuple(docs)


# Core perturbations

def _removal_edits(sample: QASample, facts: Sequence[SupportingFact]) -> List[Edit]:
    # descending index per document keeps logged indices equal to original ones
    ordered = sorted(facts, key=lambda f: (_doc_position(sample, f.title), -f.sentence_index))
    return [
        Edit(
            op="remove_sentence",
            title=f.title,
            sentence_index=f.sentence_index,
            before=_sentence(sample, f),
        )
        for f in ordered
    ]


def sentence_removal(sample: QASample, seed: int = 0) -> PerturbedSample:
    """Delete the last ``perturb_count`` supporting sentences."""
    edits = _removal_edits(sample, target_facts(sample))
    return _finish(sample, PerturbationKind.SENTENCE_REMOVAL, seed, edits, _shortfall(sample))


def sentence_replacement(sample: QASample, seed: int, policy: str = "error") -> PerturbedSample:
    """Replace each target supporting sentence with a non-supporting sentence of the same document."""
    rng = make_rng(seed)
    supporting: Dict[str, set] = {}
    for fact in sample.supporting_facts:
        supporting.setdefault(fact.title, set()).add(fact.sentence_index)

    edits, fallback, flags = [], [], []
    for fact in target_facts(sample):
        doc = sample.document(fact.title)
        target = doc.sentences[fact.sentence_index]
        candidates = [
            i
            for i, s in enumerate(doc.sentences)
            if i not in supporting[fact.title] and s != target
        ]
        if not candidates:
            if policy != "degrade-to-removal":
                raise NoIrrelevantSentence(
                    f"sample {sample.id!r}: document {fact.title!r} has no non-supporting sentence"
                )
            logger.debug("Sample %s: no replacement for (%s, %d), removing instead", sample.id, fact.title, fact.sentence_index)
            fallback.append(fact)
            flags.append("degraded_to_removal")
            continue
        choice = candidates[int(rng.integers(len(candidates)))]
        edits.append(
            Edit(
                op="replace_sentence",
                title=fact.title,
                sentence_index=fact.sentence_index,
                before=target,
                after=doc.sentences[choice],
            )
        )
    edits.extend(_removal_edits(sample, fallback))
    flags = sorted(set(flags + _shortfall(sample)))
    return _finish(sample, PerturbationKind.SENTENCE_REPLACEMENT, seed, edits, flags)


class TitleEntityDetector:
    """Finds mentions of any context-document title inside a sentence.

    Both the full title and its form without a trailing parenthetical
    ("Mercury (planet)" -> "Mercury") are searched; overlapping matches are
    resolved longest first, then leftmost.
    """

    def __call__(self, sentence: str, sample: QASample) -> List[Span]:
        names = set()
        for doc in sample.context:
            names.add(doc.title)
            names.add(PARENTHETICAL_RE.sub("", doc.title))
        found = []
        for name in names:
            if not name.strip():
                continue
            pattern = re.compile(r"(?<!\w)" + re.escape(name) + r"(?!\w)")
            found.extend(m.span() for m in pattern.finditer(sentence))

        chosen: List[Span] = []
        for start, end in sorted(set(found), key=lambda s: (-(s[1] - s[0]), s[0])):
            if all(end <= s or start >= e for s, e in chosen):
                chosen.append((start, end))
        return sorted(chosen)


def ner_replacement(
    sample: QASample, detector: Optional[EntityDetector] = None, seed: int = 0
) -> PerturbedSample:
    """Mask detected entity spans in the target supporting sentences with [MASK]."""
    detector = detector or TitleEntityDetector()
    edits, flags = [], []
    for fact in target_facts(sample):
        text = _sentence(sample, fact)
        spans = sorted(detector(text, sample))
        if not spans:
            edits.append(
                Edit(
                    op="mask_span",
                    title=fact.title,
                    sentence_index=fact.sentence_index,
                    before=text,
                    after=text,
                    flags=("unmatched",),
                )
            )
            flags.append("unmatched")
            continue
        # right to left so earlier offsets stay valid
        for start, end in reversed(spans):
            edits.append(
                Edit(
                    op="mask_span",
                    title=fact.title,
                    sentence_index=fact.sentence_index,
                    span=(start, end),
                    before=text[start:end],
                    after=MASK_TOKEN,
                )
            )
    flags = sorted(set(flags + _shortfall(sample)))
    return _finish(sample, PerturbationKind.NER_REPLACEMENT, seed, edits, flags)


# Extended taxonomy

def tokenize(text: str) -> List[Span]:
    """Token spans: runs of word characters and single punctuation marks."""
    return [m.span() for m in TOKEN_RE.finditer(text)]


def _shuffle_tokens(text: str, rng) -> str:
    spans = tokenize(text)
    if len(spans) < 2:
        return text
    tokens = [text[s:e] for s, e in spans]
    order = rng.permutation(len(tokens))
    pieces = [text[: spans[0][0]]]
    for slot, (start, end) in enumerate(spans):
        pieces.append(tokens[order[slot]])
        next_start = spans[slot + 1][0] if slot + 1 < len(spans) else len(text)
        pieces.append(text[end:next_start])
    return "".join(pieces)


def word_reordering(sample: QASample, seed: int) -> PerturbedSample:
    rng = make_rng(seed)
    edits = []
    for fact in target_facts(sample):
        text = _sentence(sample, fact)
        shuffled = _shuffle_tokens(text, rng)
        edits.append(
            Edit(
                op="rewrite_sentence",
                title=fact.title,
                sentence_index=fact.sentence_index,
                before=text,
                after=shuffled,
                flags=("unchanged",) if shuffled == text else (),
            )
        )
    return _finish(sample, PerturbationKind.WORD_REORDERING, seed, edits, _shortfall(sample))


def source_reordering(sample: QASample, seed: int) -> PerturbedSample:
    rng = make_rng(seed)
    permutation = tuple(int(i) for i in rng.permutation(len(sample.context)))
    edits = [Edit(op="reorder_documents", permutation=permutation)]
    return _finish(sample, PerturbationKind.SOURCE_REORDERING, seed, edits)


def random_noise_injection(sample: QASample, seed: int, lexicon: Lexicon, noise_words: int = 1) -> PerturbedSample:
    if not lexicon.noise:
        raise MissingLexicon("noise vocabulary is empty")
    rng = make_rng(seed)
    edits = []
    for fact in target_facts(sample):
        text = _sentence(sample, fact)
        lead = [lexicon.noise[int(i)] for i in rng.integers(len(lexicon.noise), size=noise_words)]
        trail = [lexicon.noise[int(i)] for i in rng.integers(len(lexicon.noise), size=noise_words)]
        edits.append(
            Edit(
                op="rewrite_sentence",
                title=fact.title,
                sentence_index=fact.sentence_index,
                before=text,
                after=" ".join(lead + [text] + trail),
            )
        )
    return _finish(sample, PerturbationKind.RANDOM_NOISE_INJECTION, seed, edits, _shortfall(sample))


def _match_case(word: str, replacement: str) -> str:
    if len(word) > 1 and word.isupper():
        return replacement.upper()
    if word[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def lexicon_replacement(
    sample: QASample, seed: int, table: Dict[str, Tuple[str, ...]], kind: PerturbationKind
) -> PerturbedSample:
    """Substitute every whole-word lexicon hit inside the target sentences."""
    rng = make_rng(seed)
    edits = []
    for fact in target_facts(sample):
        text = _sentence(sample, fact)
        hits = []
        for m in WORD_RE.finditer(text):
            options = table.get(m.group().lower())
            if options:
                choice = options[int(rng.integers(len(options)))]
                hits.append((m.span(), m.group(), _match_case(m.group(), choice)))
        for span, word, replacement in reversed(hits):
            edits.append(
                Edit(
                    op="substitute_word",
                    title=fact.title,
                    sentence_index=fact.sentence_index,
                    span=span,
                    before=word,
                    after=replacement,
                )
            )
    flags = _shortfall(sample)
    if not edits:
        logger.debug("Sample %s: no lexicon hit for %s", sample.id, kind.value)
        flags.append("empty_lexicon_hit")
    return _finish(sample, kind, seed, edits, flags)


def prefix_injection(sample: QASample, prefix: str, seed: int = 0) -> PerturbedSample:
    edits = [
        Edit(
            op="prefix_query",
            before=sample.question,
            after=f"{prefix.rstrip()} {sample.question}",
        )
    ]
    return _finish(sample, PerturbationKind.PREFIX_INJECTION, seed, edits)


def apply_perturbation(
    sample: QASample,
    kind: PerturbationKind,
    seed: int,
    lexicon: Optional[Lexicon] = None,
    prefix: Optional[str] = None,
    detector: Optional[EntityDetector] = None,
    replacement_policy: str = "error",
    noise_words: int = 1,
) -> PerturbedSample:
    """Dispatch to the operator for ``kind``."""
    kind = PerturbationKind(kind)
    if kind == PerturbationKind.ORIGINAL:
        return _finish(sample, kind, seed, [])
    if kind == PerturbationKind.SENTENCE_REMOVAL:
        return sentence_removal(sample, seed)
    if kind == PerturbationKind.SENTENCE_REPLACEMENT:
        return sentence_replacement(sample, seed, replacement_policy)
    if kind == PerturbationKind.NER_REPLACEMENT:
        return ner_replacement(sample, detector, seed)
    if kind == PerturbationKind.WORD_REORDERING:
        return word_reordering(sample, seed)
    if kind == PerturbationKind.SOURCE_REORDERING:
        return source_reordering(sample, seed)
    if kind == PerturbationKind.PREFIX_INJECTION:
        if not prefix:
            raise MissingPrefix("PrefixInjection requires a prefix")
        return prefix_injection(sample, prefix, seed)

    if lexicon is None:
        raise MissingLexicon(f"{kind.value} requires a lexicon")
    if kind == PerturbationKind.RANDOM_NOISE_INJECTION:
        return random_noise_injection(sample, seed, lexicon, noise_words)
    if kind == PerturbationKind.SYNONYM_REPLACEMENT:
        return lexicon_replacement(sample, seed, lexicon.synonyms, kind)
    return lexicon_replacement(sample, seed, lexicon.antonyms, kind)
