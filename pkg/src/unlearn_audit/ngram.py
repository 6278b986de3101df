"""Count-based n-gram language models.

Sentences are padded with (order - 1) start tokens and one end token before
counting, and no smoothing is applied: deleting a sentence therefore changes
exactly the counts of the n-grams it contained, which is the signal the
reconstruction attacks rely on.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from .core import AuditError, TokenSeq

START_ID = 0
END_ID = 1
START_WORD = "<s>"
END_WORD = "</s>"


class FragmentLengthError(AuditError):
    """A fragment query whose length does not match the requested order."""


def pad_sentence(seq: TokenSeq, order: int) -> tuple:
    return (START_ID,) * (order - 1) + tuple(seq) + (END_ID,)


class NGramModel:
    """Maximum-likelihood n-gram model over integer token sequences.

    Stores count tables for every order up to ``order`` plus the total
    window count per order, all taken over the padded sentences.
    """

    def __init__(self, order: int):
        if order not in (1, 2, 3):
            raise ValueError("order must be 1, 2, or 3")
        self.order = order
        self.counts: dict[int, Counter] = {k: Counter() for k in range(1, order + 1)}
        self.totals: dict[int, int] = {k: 0 for k in range(1, order + 1)}

    def fit(self, sentences) -> "NGramModel":
        for seq in sentences:
            padded = pad_sentence(seq, self.order)
            for k in range(1, self.order + 1):
                table = self.counts[k]
                for i in range(len(padded) - k + 1):
                    table[padded[i : i + k]] += 1
                self.totals[k] += len(padded) - k + 1
        return self

    def sentence_probability(self, seq: TokenSeq) -> float:
        """Chain-rule probability of a full sentence, boundary tokens added."""
        padded = pad_sentence(seq, self.order)
        ctx_len = self.order - 1
        prob = 1.0
        for i in range(ctx_len, len(padded)):
            gram = padded[i - ctx_len : i + 1]
            num = self.counts[self.order][gram]
            if num == 0:
                return 0.0
            if ctx_len == 0:
                den = self.totals[1]
            else:
                den = self.counts[ctx_len][gram[:-1]]
            prob *= num / den
        return prob

    def fragment_probability(self, gram: TokenSeq, order: int | None = None) -> float:
        """Joint frequency c(g)/C_k of one fragment of length exactly k."""
        k = self.order if order is None else order
        if not 1 <= k <= self.order:
            raise FragmentLengthError(f"no count table of order {k}")
        gram = tuple(gram)
        if len(gram) != k:
            raise FragmentLengthError(f"fragment length {len(gram)} != order {k}")
        return self.counts[k][gram] / self.totals[k]

    def fragment_probabilities(self, grams, order: int | None = None) -> np.ndarray:
        k = self.order if order is None else order
        if not 1 <= k <= self.order:
            raise FragmentLengthError(f"no count table of order {k}")
        table = self.counts[k]
        total = self.totals[k]
        out = np.empty(len(grams))
        for i, g in enumerate(grams):
            g = tuple(g)
            if len(g) != k:
                raise FragmentLengthError(f"fragment length {len(g)} != order {k}")
            out[i] = table[g] / total
        return out

    def conditional_probability(self, context: TokenSeq, token: int) -> float:
        """P(token | context) for a context of length order - 1."""
        context = tuple(context)
        if len(context) != self.order - 1:
            raise FragmentLengthError("context must have length order-1")
        if self.order == 1:
            return self.counts[1][(token,)] / self.totals[1]
        den = self.counts[self.order - 1][context]
        if den == 0:
            return 0.0
        return self.counts[self.order][context + (token,)] / den
