"""IF...THEN rules over anchored sub-centroids and per-query similarity reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centroids import SubCentroidBank
from .errors import ConfigError, DataError
from .head import class_scores
from .numerics import DTYPE, similarity_matrix


@dataclass(frozen=True)
class Clause:
    own_anchor: int  # training row of the class's exemplar
    rival_anchor: int  # training row of another class's exemplar
    relation: str = "greater-similarity"


@dataclass(frozen=True)
class Rule:
    class_id: int
    disjuncts: tuple  # K tuples of T clauses

    @property
    def num_clauses(self) -> int:
        return sum(len(d) for d in self.disjuncts)

    def to_text(self) -> str:
        parts = []
        for conj in self.disjuncts:
            terms = [f"[I,#{cl.own_anchor}]>[I,#{cl.rival_anchor}]" for cl in conj]
            parts.append("(" + " AND ".join(terms) + ")")
        return "IF " + " OR ".join(parts) + f" THEN (class {self.class_id})"

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "disjuncts": [[[cl.own_anchor, cl.rival_anchor] for cl in conj] for conj in self.disjuncts],
        }


@dataclass(frozen=True)
class ReportEntry:
    class_id: int
    sub_index: int
    anchor_id: int | None
    similarity: float
    normalized: float


@dataclass(frozen=True)
class SimilarityReport:
    query_id: int | None
    entries: tuple
    predicted_class: int

    def to_text(self) -> str:
        lines = [f"query={self.query_id} predicted={self.predicted_class}"]
        for rank, e in enumerate(self.entries, start=1):
            anchor = "-" if e.anchor_id is None else e.anchor_id
            lines.append(
                f"rank={rank} class={e.class_id} sub={e.sub_index} anchor={anchor} "
                f"similarity={e.similarity:.6f} normalized={e.normalized:.6f}"
            )
        return "\n".join(lines)


def default_rivals(bank: SubCentroidBank, c: int) -> list[tuple[int, int]]:
    """Every active sub-centroid of every other class."""
    return [(r, k) for r in range(bank.num_classes) if r != c for k in range(int(bank.per_class[r]))]


def build_rule(bank: SubCentroidBank, c: int, rivals=None) -> Rule:
    """One disjunct per sub-centroid of class ``c``, each requiring the query
    to be closer to that exemplar than to every rival exemplar."""
    if bank.anchor_ids is None:
        raise ConfigError("rules need an anchored bank")
    rivals = default_rivals(bank, c) if rivals is None else list(rivals)
    if not rivals:
        raise ConfigError("rule needs at least one rival")
    if any(int(rc) == c for rc, _ in rivals):
        raise ConfigError(f"rival list contains class {c}")
    disjuncts = []
    for k in range(int(bank.per_class[c])):
        own = int(bank.anchor_ids[c, k])
        disjuncts.append(tuple(Clause(own, int(bank.anchor_ids[rc, rk])) for rc, rk in rivals))
    return Rule(c, tuple(disjuncts))


def evaluate_rule(rule: Rule, query_feature, anchor_features) -> bool:
    """``anchor_features`` maps a training row id to its embedding (any
    indexable, e.g. the full N x d training feature matrix)."""
    q = np.asarray(query_feature, dtype=DTYPE)[None, :]

    def sim(anchor_id):
        try:
            row = anchor_features[anchor_id]
        except (IndexError, KeyError):
            raise DataError(f"cannot resolve anchor {anchor_id}") from None
        return float(similarity_matrix(q, np.asarray(row, dtype=DTYPE)[None, :])[0, 0])

    return any(all(sim(cl.own_anchor) > sim(cl.rival_anchor) for cl in conj) for conj in rule.disjuncts)


def similarity_report(query_feature, bank: SubCentroidBank, m: int, query_id=None) -> SimilarityReport:
    """Top-``m`` classes by best sub-centroid similarity.

    ``normalized`` is the softmax of the reported raw similarities.
    """
    if not 1 <= m <= bank.num_classes:
        raise ConfigError(f"m must lie in [1, {bank.num_classes}], got {m}")
    scores, winners = class_scores(np.asarray(query_feature, dtype=DTYPE)[None, :], bank, return_winners=True)
    scores, winners = scores[0], winners[0]
    # stable sort keeps the lowest class id first among equal scores
    order = np.argsort(-scores, kind="stable")[:m]
    raw = scores[order]
    w = np.exp(raw - raw.max())
    w = w / w.sum()
    entries = tuple(
        ReportEntry(
            int(c),
            int(winners[c]),
            None if bank.anchor_ids is None else int(bank.anchor_ids[c, winners[c]]),
            float(raw[i]),
            float(w[i]),
        )
        for i, c in enumerate(order)
    )
    return SimilarityReport(query_id, entries, int(order[0]))
