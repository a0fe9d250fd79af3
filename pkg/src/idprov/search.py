"""Matching, ranking, identification and evaluation.

A fingerprint matches every product that defines all of its names.  The
candidates are ranked by popularity score, highest first, with missing
scores counting as zero and ties going to the alphabetically first name.

:func:`identify` repeats sample -> match -> rank up to ``trials`` times and
asks a verifier about the top candidate only, stopping at the first one it
accepts.  :func:`evaluate` measures recall@k and precision@k over a golden
set, both per outcome and keeping only each subject's best outcome.
"""

from __future__ import annotations

import json
import math
import random
import re
from collections.abc import Callable, Container, Iterable, Sequence
from dataclasses import dataclass, field

from .corpus import ReleaseRecord, defs_release
from .errors import (
    EmptySubject,
    InsufficientIdentifiers,
    NoFileBoundaries,
    TruthMissing,
    UndefinedForEmptyResult,
)
from .index import InvertedIndex
from .sample import Fingerprint, SamplerConfig, Strategy, sample, trial_seed

__all__ = [
    "RankedCandidates",
    "IdentifyConfig",
    "TrialRecord",
    "IdentifyResult",
    "EvalRow",
    "EvalReport",
    "Verifier",
    "match",
    "rank",
    "verify_jaccard",
    "containment_verifier",
    "identify",
    "recall_at_k",
    "precision_at_k",
    "metric_rows",
    "best_outcome",
    "evaluate",
    "is_test_or_example",
    "report_ks",
]

# (subject names, top candidate id, index) -> accept the candidate?
Verifier = Callable[[frozenset[str], int, InvertedIndex], bool]


@dataclass(frozen=True)
class RankedCandidates:
    entries: tuple[tuple[int, str, float | None], ...]
    fingerprint: Fingerprint | None = None

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list[int]:
        return [pid for pid, _, _ in self.entries]

    def position(self, pid: int) -> int | None:
        """1-based rank of ``pid``, or None if it is not a candidate."""
        for i, (p, _, _) in enumerate(self.entries, 1):
            if p == pid:
                return i
        return None


def match(index: InvertedIndex, fingerprint: Fingerprint | Iterable[str]) -> set[int]:
    """Products defining every name of ``fingerprint``."""
    names = fingerprint.names if isinstance(fingerprint, Fingerprint) else set(fingerprint)
    if not names:
        raise ValueError("cannot match an empty fingerprint")
    postings = sorted((index.posting(n) for n in names), key=len)
    result = set(postings[0])
    for ids in postings[1:]:
        if not result:
            break
        result.intersection_update(ids)
    return result


def rank(
    index: InvertedIndex, candidates: Iterable[int],
    fingerprint: Fingerprint | None = None,
) -> RankedCandidates:
    entries = sorted(
        ((pid, index.names[pid], index.scores.get(pid)) for pid in set(candidates)),
        key=lambda e: (-(e[2] or 0.0), e[1]),
    )
    return RankedCandidates(tuple(entries), fingerprint)


def verify_jaccard(subject: Iterable[str], candidate: Container[str], tau: float) -> bool:
    """Share of the subject's names that the candidate also defines, against ``tau``."""
    subject = set(subject)
    if not subject:
        raise EmptySubject("subject defines no identifiers")
    shared = sum(1 for n in subject if n in candidate)
    return shared / len(subject) >= tau


def containment_verifier(tau: float = 0.5) -> Verifier:
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")

    def verify(subject: frozenset[str], pid: int, index: InvertedIndex) -> bool:
        return verify_jaccard(subject, index.product_defs(pid), tau)

    return verify


# --- identification -------------------------------------------------------------


@dataclass(frozen=True)
class IdentifyConfig:
    N: int = 3
    trials: int = 5
    strategy: Strategy = Strategy.SINGLE_FILE
    blocklist: Container[str] = frozenset()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        SamplerConfig(self.N, self.blocklist, self.seed)  # validates N and seed

    def sampler(self, seed: int) -> SamplerConfig:
        return SamplerConfig(self.N, self.blocklist, seed)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    fingerprint: Fingerprint | None
    candidates: int
    top: int | None
    verified: bool
    error: str | None = None

    def to_json(self, index: InvertedIndex | None = None) -> dict:
        fp = self.fingerprint
        return {
            "trial": self.trial,
            "fingerprint": sorted(fp.names) if fp else None,
            "sources": [list(s) for s in fp.sources] if fp else None,
            "candidates": self.candidates,
            "top": index.names[self.top] if index and self.top is not None else self.top,
            "verified": self.verified,
            "error": self.error,
        }


@dataclass(frozen=True)
class IdentifyResult:
    product: int | None
    trial: int | None
    trials: tuple[TrialRecord, ...]

    @property
    def found(self) -> bool:
        return self.product is not None


def _draw_outcome(
    release: ReleaseRecord, index: InvertedIndex, cfg: IdentifyConfig, seed: int
) -> RankedCandidates:
    rng = random.Random(seed)
    fp = sample(release, cfg.sampler(seed), cfg.strategy, rng)
    return rank(index, match(index, fp), fp)


def identify(
    release: ReleaseRecord, index: InvertedIndex, cfg: IdentifyConfig = IdentifyConfig(),
    verifier: Verifier | None = None,
) -> IdentifyResult:
    """Look for the origin of ``release``, inspecting one candidate per trial."""
    if not release.has_file_boundaries:
        raise NoFileBoundaries(release.release_id)
    verifier = verifier or containment_verifier()
    subject = frozenset(defs_release(release))
    records = []
    for t in range(1, cfg.trials + 1):
        try:
            outcome = _draw_outcome(release, index, cfg, trial_seed(cfg.seed, t))
        except InsufficientIdentifiers as exc:
            records.append(TrialRecord(t, None, 0, None, False, str(exc)))
            continue
        if not outcome.entries:
            records.append(TrialRecord(t, outcome.fingerprint, 0, None, False))
            continue
        top = outcome.entries[0][0]
        ok = verifier(subject, top, index)
        records.append(TrialRecord(t, outcome.fingerprint, len(outcome), top, ok))
        if ok:
            return IdentifyResult(top, t, tuple(records))
    return IdentifyResult(None, None, tuple(records))


# --- metrics --------------------------------------------------------------------


def recall_at_k(outcome: RankedCandidates, truth: int, k: int) -> int:
    pos = outcome.position(truth)
    return 1 if pos is not None and pos <= k else 0


def precision_at_k(outcome: RankedCandidates, truth: int, k: int) -> float:
    n = len(outcome)
    if n == 0:
        raise UndefinedForEmptyResult("precision is undefined for an empty result")
    return 1.0 / min(k, n) if recall_at_k(outcome, truth, k) else 0.0


@dataclass(frozen=True)
class EvalRow:
    k: int
    relevant: int
    relevant_share: float
    recall: float
    precision: float
    fscore: float


def _fscore(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def report_ks(max_n: int) -> list[int]:
    """k = 1..10, 100 and the largest result size, without repeats."""
    return sorted({*range(1, 11), 100, max(max_n, 1)})


def metric_rows(
    outcomes: Sequence[tuple[RankedCandidates, int]], ks: Iterable[int] | None = None
) -> list[EvalRow]:
    """Average recall over all outcomes and precision over non-empty ones."""
    if ks is None:
        ks = report_ks(max((len(o) for o, _ in outcomes), default=0))
    # (result size, rank of the truth) computed once per outcome
    seen = [(len(o), o.position(t)) for o, t in outcomes]
    nonempty = sum(1 for n, _ in seen if n)
    rows = []
    for k in ks:
        relevant = sum(1 for n, _ in seen if n >= k)
        hits = [n for n, pos in seen if pos is not None and pos <= k]
        r = len(hits) / len(seen) if seen else 0.0
        p = sum(1.0 / min(k, n) for n in hits) / nonempty if nonempty else 0.0
        share = relevant / len(seen) if seen else 0.0
        rows.append(EvalRow(k, relevant, share, r, p, _fscore(p, r)))
    return rows


def best_outcome(outcomes: Sequence[RankedCandidates], truth: int) -> int:
    """Index of the best of a subject's outcomes.

    Lowest rank of the truth wins; without the truth, a non-empty result beats
    an empty one; then smaller results, then earlier trials.
    """
    def key(i: int) -> tuple:
        o = outcomes[i]
        pos = o.position(truth)
        return (pos if pos is not None else math.inf, len(o) == 0, len(o), i)

    return min(range(len(outcomes)), key=key)


_TEST_OR_EXAMPLE = re.compile(r"test|example")


def is_test_or_example(path: str) -> bool:
    """True if a directory component of ``path`` mentions test or example."""
    return any(_TEST_OR_EXAMPLE.search(part) for part in path.split("/")[:-1])


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)
    best_rows: list[EvalRow] = field(default_factory=list)
    subjects: int = 0
    unsampleable: int = 0
    outcomes: int = 0
    empty: int = 0
    successful: int = 0
    failed: int = 0
    # failed or empty outcomes whose fingerprint came from a test/example path
    failed_test_example: int = 0
    empty_test_example: int = 0

    def totals(self) -> dict[str, int]:
        return {
            "subjects": self.subjects,
            "unsampleable": self.unsampleable,
            "outcomes": self.outcomes,
            "empty": self.empty,
            "successful": self.successful,
            "failed": self.failed,
            "failed_test_example": self.failed_test_example,
            "empty_test_example": self.empty_test_example,
        }

    def to_tsv(self) -> str:
        lines = []
        for title, rows in (("per-outcome", self.rows), ("best-of-trials", self.best_rows)):
            lines.append(f"# {title}")
            lines.append("k\trelevant\trecall\tprecision\tfscore")
            lines.extend(
                f"{r.k}\t{r.relevant}\t{r.recall:.4f}\t{r.precision:.4f}\t{r.fscore:.4f}"
                for r in rows
            )
        lines.append("# totals")
        lines.extend(f"# {k}\t{v}" for k, v in self.totals().items())
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        def rows_json(rows: list[EvalRow]) -> list[dict]:
            return [r.__dict__.copy() for r in rows]

        doc = {
            "per_outcome": rows_json(self.rows),
            "best_of_trials": rows_json(self.best_rows),
            "totals": self.totals(),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def evaluate(
    golden: Sequence[tuple[ReleaseRecord, str]], index: InvertedIndex,
    cfg: IdentifyConfig = IdentifyConfig(), trials_per_subject: int | None = None,
) -> EvalReport:
    """Run ``trials_per_subject`` fingerprint draws per golden subject.

    Subject ``i`` draws trial ``t`` with seed
    ``trial_seed(trial_seed(cfg.seed, i), t)``.  Subjects that cannot supply
    a fingerprint are counted as unsampleable and contribute no outcome.
    """
    missing = [truth for _, truth in golden if index.product_id(truth) is None]
    if missing:
        raise TruthMissing(missing)
    trials = trials_per_subject or cfg.trials
    report = EvalReport(subjects=len(golden))
    per_outcome: list[tuple[RankedCandidates, int]] = []
    best: list[tuple[RankedCandidates, int]] = []
    for i, (release, truth_name) in enumerate(golden):
        truth = index.product_id(truth_name)
        base = trial_seed(cfg.seed, i)
        outcomes = []
        for t in range(1, trials + 1):
            try:
                outcomes.append(_draw_outcome(release, index, cfg, trial_seed(base, t)))
            except InsufficientIdentifiers:
                break  # the release has no fingerprint at all
        if not outcomes:
            report.unsampleable += 1
            continue
        for o in outcomes:
            per_outcome.append((o, truth))
            paths = o.fingerprint.paths if o.fingerprint else []
            flagged = any(is_test_or_example(p) for p in paths)
            if not o.entries:
                report.empty += 1
                report.empty_test_example += flagged
            elif o.position(truth) is None:
                report.failed += 1
                report.failed_test_example += flagged
            else:
                report.successful += 1
        best.append((outcomes[best_outcome(outcomes, truth)], truth))
    report.outcomes = len(per_outcome)
    report.rows = metric_rows(per_outcome)
    report.best_rows = metric_rows(best)
    return report
