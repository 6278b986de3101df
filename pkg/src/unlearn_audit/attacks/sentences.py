"""Deleted-sentence reconstruction against count-based language models.

The attack scans fragment probabilities on both oracles, classifies the
n-grams whose probability dropped across the deletion, links them into a
graph by (n-1)-token overlap, and searches for a repeat-tolerant path that
covers every node. Boundary padding gives the graph a unique entry point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from ..core import AuditError, Oracle
from ..ngram import END_ID, START_ID


class DictionaryTooLargeError(AuditError):
    """Scanning this dictionary would exceed the fragment-query budget."""


class SearchBudgetExceededError(AuditError):
    """Path search hit its node-expansion cap before finding any cover."""


@dataclass(frozen=True)
class DiffGraph:
    """Directed graph over n-grams whose reported probability decreased.

    An edge v -> w exists exactly when the last (order - 1) tokens of v equal
    the first (order - 1) tokens of w in order; unigram graphs have no edges.
    """

    order: int
    nodes: tuple
    edges: Mapping
    start_nodes: tuple
    repeat_budget: int = 2

    @classmethod
    def from_nodes(cls, nodes: Iterable[tuple], order: int, repeat_budget: int = 2) -> "DiffGraph":
        nodes = tuple(sorted(set(nodes)))
        edges: dict = {v: () for v in nodes}
        if order > 1:
            by_prefix: dict = {}
            for w in nodes:
                by_prefix.setdefault(w[: order - 1], []).append(w)
            for v in nodes:
                edges[v] = tuple(sorted(by_prefix.get(v[1:], ())))
        starts = tuple(v for v in nodes if v[0] == START_ID)
        return cls(order=order, nodes=nodes, edges=edges, start_nodes=starts,
                   repeat_budget=repeat_budget)


def _classify_decreased(grams, p_before, p_after, tau: float, rule: str) -> set:
    """Apply the decrease test to aligned probability vectors.

    The raw rule compares probabilities directly; the median-ratio rule
    divides out the global renormalization every undeleted n-gram shares.
    """
    decreased = set()
    if rule == "raw":
        for g, pb, pa in zip(grams, p_before, p_after):
            if pb > 0 and pa < pb:
                decreased.add(g)
        return decreased
    ratios = np.asarray(p_after) / np.asarray(p_before)
    m_hat = float(np.median(ratios)) if len(ratios) else 0.0
    for g, pa, r in zip(grams, p_after, ratios):
        if pa == 0.0 or r < m_hat - tau:
            decreased.add(g)
    return decreased


def _scan_order(before: Oracle, after: Oracle, token_ids, order: int, tau: float, rule: str) -> set:
    """Full enumeration scan at one order; the after-oracle is only asked
    about fragments the before-model already reported positive."""
    grams = list(itertools.product(token_ids, repeat=order))
    p_before = before.query_fragments(grams, order=order)
    positive = [(g, pb) for g, pb in zip(grams, p_before) if pb > 0.0]
    if not positive:
        return set()
    pos_grams = [g for g, _ in positive]
    pos_before = [pb for _, pb in positive]
    p_after = after.query_fragments(pos_grams, order=order)
    return _classify_decreased(pos_grams, pos_before, p_after, tau, rule)


def _pruned_trigram_scan(
    before: Oracle, after: Oracle, token_ids, tau: float, rule: str, query_budget: int
) -> set:
    """Trigram scan that never enumerates |D|^3 fragments.

    Phase discipline forbids returning to the before-oracle once the
    after-oracle is touched, so all before-model knowledge is gathered up
    front: the order-2 scan finds the positive bigrams, and every trigram
    whose two bigrams are positive (an overlap join, a superset of all
    positive trigrams) is queried while the before-oracle is still open.
    The decrease rule then sees the complete positive-trigram table, making
    the pruned scan return exactly the full-enumeration node set.
    """
    bigrams = list(itertools.product(token_ids, repeat=2))
    p2 = before.query_fragments(bigrams, order=2)
    positive2 = [g for g, pb in zip(bigrams, p2) if pb > 0.0]
    by_first: dict = {}
    for g in positive2:
        by_first.setdefault(g[0], []).append(g[1])
    candidates = sorted(
        (a, b, c) for (a, b) in positive2 for c in by_first.get(b, ())
    )
    if before.query_count + len(candidates) > query_budget:
        raise DictionaryTooLargeError(
            f"positive-bigram join needs {len(candidates)} fragment queries, "
            f"over the budget {query_budget}"
        )
    if not candidates:
        return set()
    p3_before = before.query_fragments(candidates, order=3)
    positive3 = [(g, pb) for g, pb in zip(candidates, p3_before) if pb > 0.0]
    if not positive3:
        return set()
    pos_grams3 = [g for g, _ in positive3]
    pos_before3 = [pb for _, pb in positive3]
    p3_after = after.query_fragments(pos_grams3, order=3)
    return _classify_decreased(pos_grams3, pos_before3, p3_after, tau, rule)


def decreased_ngram_graph(
    before: Oracle,
    after: Oracle,
    token_ids,
    order: int,
    tau: float = 1e-9,
    rule: str = "median-ratio",
    full_enumeration_limit: int = 200_000,
    query_budget: int = 30_000_000,
    repeat_budget: int = 2,
) -> DiffGraph:
    """Scan both oracles and build the graph of decreased n-grams.

    Enumerates all |D|^order fragments when that fits the limit; otherwise
    trigram scans fall back to bigram-guided pruning. Query counts stay
    within ``query_budget`` per oracle or the scan refuses to start.
    """
    if rule not in ("median-ratio", "raw"):
        raise ValueError(f"unknown decrease rule {rule!r}")
    token_ids = tuple(token_ids)
    size = len(token_ids) ** order
    if size <= full_enumeration_limit and size <= query_budget:
        nodes = _scan_order(before, after, token_ids, order, tau, rule)
    elif order == 3 and len(token_ids) ** 2 <= query_budget:
        nodes = _pruned_trigram_scan(before, after, token_ids, tau, rule, query_budget)
    elif size <= query_budget:
        nodes = _scan_order(before, after, token_ids, order, tau, rule)
    else:
        raise DictionaryTooLargeError(
            f"|D|^{order} = {size} fragment queries exceed the budget {query_budget}"
        )
    return DiffGraph.from_nodes(nodes, order, repeat_budget=repeat_budget)


def _strip_boundaries(tokens) -> tuple:
    return tuple(t for t in tokens if t not in (START_ID, END_ID))


def _path_sentence(path) -> tuple:
    tokens = list(path[0])
    for node in path[1:]:
        tokens.append(node[-1])
    return _strip_boundaries(tokens)


def search_covering_path(
    graph: DiffGraph,
    max_repeats: int | None = None,
    expansion_cap: int = 200_000,
):
    """Depth-first search for a path from a start node covering every node.

    Each node may be visited at most 1 + max_repeats times. Among covering
    paths the one with the fewest repeated visits wins, ties going to the
    lexicographically smallest token sequence; boundary tokens are stripped
    from the returned sentence. Returns None when the search space holds no
    covering path, and raises SearchBudgetExceededError only if the
    expansion cap was hit before finding any.
    """
    if max_repeats is None:
        max_repeats = graph.repeat_budget
    if not graph.nodes:
        return ()
    if not graph.start_nodes:
        return None
    total = len(graph.nodes)
    best: list = [None]  # (repeats, sentence)
    expansions = [0]
    exhausted = [True]

    def walk(node, visits, covered, path, repeats):
        expansions[0] += 1
        if expansions[0] > expansion_cap:
            exhausted[0] = False
            return
        if best[0] is not None and repeats > best[0][0]:
            return
        if covered == total:
            sentence = _path_sentence(path)
            cand = (repeats, sentence)
            if best[0] is None or cand < best[0]:
                best[0] = cand
            return
        for nxt in graph.edges[node]:
            seen = visits.get(nxt, 0)
            if seen > max_repeats:
                continue
            visits[nxt] = seen + 1
            path.append(nxt)
            walk(nxt, visits, covered + (1 if seen == 0 else 0), path, repeats + (1 if seen else 0))
            path.pop()
            if visits[nxt] == 1:
                del visits[nxt]
            else:
                visits[nxt] = seen

    for start in graph.start_nodes:
        walk(start, {start: 1}, 1, [start], 0)
    if best[0] is not None:
        return best[0][1]
    if not exhausted[0]:
        raise SearchBudgetExceededError(
            f"no covering path within {expansion_cap} node expansions"
        )
    return None


def enumerate_covering_sentences(graph: DiffGraph, max_repeats: int, expansion_cap: int = 200_000) -> set:
    """Every sentence reachable as a covering path within the repeat budget.
    Diagnostic helper for studying search ambiguity on small graphs."""
    found = set()
    if not graph.nodes:
        return {()}
    total = len(graph.nodes)
    expansions = [0]

    def walk(node, visits, covered, path, repeats):
        expansions[0] += 1
        if expansions[0] > expansion_cap:
            raise SearchBudgetExceededError("enumeration cap hit")
        if covered == total:
            found.add(_path_sentence(path))
        for nxt in graph.edges[node]:
            seen = visits.get(nxt, 0)
            if seen > max_repeats:
                continue
            visits[nxt] = seen + 1
            path.append(nxt)
            walk(nxt, visits, covered + (1 if seen == 0 else 0), path, repeats + (1 if seen else 0))
            path.pop()
            if visits[nxt] == 1:
                del visits[nxt]
            else:
                visits[nxt] = seen

    for start in graph.start_nodes:
        walk(start, {start: 1}, 1, [start], 0)
    return found


def bag_of_words(graph: DiffGraph) -> tuple:
    """Unordered fallback: the leading token of every decreased n-gram,
    boundary tokens dropped, each node contributing once."""
    return tuple(sorted(_strip_boundaries(v[0] for v in graph.nodes)))
