"""
Accuracy, corpus BLEU, ROUGE-L and exact match.

Sequences may be given as token lists or as whitespace-separated strings.
"""
import math
from collections import Counter
from typing import List, Sequence, Union

import numpy as np

from pcode_config.errors import DataError

Tokens = Union[str, Sequence[str]]


def _tokens(seq: Tokens) -> List[str]:
    return seq.split() if isinstance(seq, str) else list(seq)


def accuracy(predictions: Sequence[int], labels: Sequence[int]) -> float:
    if len(predictions) != len(labels):
        raise DataError(f"{len(predictions)} predictions for {len(labels)} labels")
    if not labels:
        raise DataError("Accuracy of an empty set is undefined")
    return float(np.mean(np.asarray(predictions) == np.asarray(labels)))


def _ngrams(tokens: List[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: Sequence[Tokens], references: Sequence[Tokens], max_n: int = 4,
         smoothing: bool = True) -> float:
    """
    Corpus-level BLEU in [0, 100].

    Clipped n-gram counts are summed over the corpus. When some precision is zero
    and ``smoothing`` is on, orders n >= 2 get add-one counts; a zero unigram
    precision always gives 0. Brevity penalty is exp(1 - r/c) when c <= r.

    Examples:
        bleu(["the cat sat"], ["the cat sat down"]) -> 71.65
    """
    if len(candidates) != len(references):
        raise DataError(f"{len(candidates)} candidates for {len(references)} references")
    matches = np.zeros(max_n)
    totals = np.zeros(max_n)
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_tokens, ref_tokens = _tokens(cand), _tokens(ref)
        cand_len += len(cand_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, max_n + 1):
            cand_counts, ref_counts = _ngrams(cand_tokens, n), _ngrams(ref_tokens, n)
            matches[n - 1] += sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
            totals[n - 1] += max(len(cand_tokens) - n + 1, 0)

    if cand_len == 0 or matches[0] == 0:
        return 0.0
    precisions = np.divide(matches, totals, out=np.zeros(max_n), where=totals > 0)
    if (precisions == 0).any():
        if not smoothing:
            return 0.0
        precisions[1:] = (matches[1:] + 1) / (totals[1:] + 1)
    brevity = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / cand_len)
    return float(100 * brevity * math.exp(np.mean(np.log(precisions))))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b):
            current.append(previous[j] + 1 if x == y else max(previous[j + 1], current[j]))
        previous = current
    return previous[-1]


def rouge_l(candidate: Tokens, reference: Tokens) -> float:
    """
    LCS-based F-measure (beta = 1); 0 when either side is empty.

    Examples:
        rouge_l("a b c d", "a c b d") -> 0.75
    """
    cand, ref = _tokens(candidate), _tokens(reference)
    if not cand or not ref:
        return 0.0
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision, recall = lcs / len(cand), lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def mean_rouge_l(candidates: Sequence[Tokens], references: Sequence[Tokens]) -> float:
    if len(candidates) != len(references):
        raise DataError(f"{len(candidates)} candidates for {len(references)} references")
    if not candidates:
        return 0.0
    return float(np.mean([rouge_l(c, r) for c, r in zip(candidates, references)]))


def exact_match(candidates: Sequence[Tokens], references: Sequence[Tokens]) -> float:
    if len(candidates) != len(references):
        raise DataError(f"{len(candidates)} candidates for {len(references)} references")
    if not candidates:
        return 0.0
    return float(np.mean([_tokens(c) == _tokens(r) for c, r in zip(candidates, references)]))
