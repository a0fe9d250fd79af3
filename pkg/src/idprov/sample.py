"""Random fingerprints drawn from a subject release.

A fingerprint is a handful of distinct class/function names, none of them
blocklisted.  Two strategies decide where the names come from:

``single-file``
    Pick a file at random and draw all ``N`` names from it.  Files with too
    few eligible names are set aside and another file is drawn.

``disjoint-files``
    Draw ``N`` files and one new name from each.  A file that cannot
    contribute is set aside and replaced.  Before each name is committed the
    sampler checks that the remaining files can still complete the
    fingerprint, so it fails only when no valid assignment exists.

All randomness comes from a :class:`random.Random` seeded from the config.
:func:`trial_seed` derives independent per-trial seeds from one base seed.
"""

from __future__ import annotations

import enum
import random
from collections.abc import Container, Iterable, Mapping, Sequence
from dataclasses import dataclass

from .corpus import ReleaseRecord
from .errors import InsufficientIdentifiers, NoFileBoundaries

__all__ = [
    "Strategy",
    "SamplerConfig",
    "Fingerprint",
    "eligible_names",
    "sample_single_file",
    "sample_disjoint_files",
    "sample",
    "trial_seed",
    "has_fingerprint",
]

_MASK64 = (1 << 64) - 1


class Strategy(str, enum.Enum):
    SINGLE_FILE = "single-file"
    DISJOINT_FILES = "disjoint-files"


@dataclass(frozen=True)
class SamplerConfig:
    N: int = 3
    blocklist: Container[str] = frozenset()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("fingerprint size N must be at least 1")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Fingerprint:
    names: frozenset[str]
    # (path, name) in draw order
    sources: tuple[tuple[str, str], ...]
    strategy: Strategy
    N: int

    @property
    def paths(self) -> list[str]:
        return [p for p, _ in self.sources]

    def prefix(self, n: int) -> Fingerprint:
        """The fingerprint made of the first ``n`` names drawn."""
        src = self.sources[:n]
        return Fingerprint(frozenset(name for _, name in src), src, self.strategy, len(src))


def trial_seed(seed: int, trial: int) -> int:
    """SplitMix64 finaliser applied to ``seed + (trial + 1) * golden gamma``."""
    z = (seed + (trial + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def eligible_names(names: Iterable[str], blocklist: Container[str]) -> set[str]:
    return {n for n in names if n not in blocklist}


def _eligible_files(
    release: ReleaseRecord, blocklist: Container[str]
) -> list[tuple[str, list[str]]]:
    if not release.has_file_boundaries:
        raise NoFileBoundaries(release.release_id)
    # Sorted so that a seed means the same draw whatever the mapping order.
    return [
        (path, sorted(eligible_names(release.files[path], blocklist)))
        for path in sorted(release.files)
    ]


def _draw(pool: list, rng: random.Random):
    """Remove and return a uniformly chosen element of ``pool``."""
    i = rng.randrange(len(pool))
    pool[i], pool[-1] = pool[-1], pool[i]
    return pool.pop()


def sample_single_file(
    release: ReleaseRecord, cfg: SamplerConfig, rng: random.Random | None = None
) -> Fingerprint:
    rng = rng or random.Random(cfg.seed)
    pool = _eligible_files(release, cfg.blocklist)
    while pool:
        path, names = _draw(pool, rng)
        if len(names) >= cfg.N:
            picked = rng.sample(names, cfg.N)
            return Fingerprint(
                frozenset(picked), tuple((path, n) for n in picked),
                Strategy.SINGLE_FILE, cfg.N,
            )
    raise InsufficientIdentifiers(
        f"no file of release {release.release_id!r} has {cfg.N} eligible names"
    )


def _can_assign(files: Sequence[Sequence[str]], taken: set[str], need: int) -> bool:
    """True if ``need`` of ``files`` can each get a distinct name not in ``taken``.

    Augmenting-path bipartite matching that stops as soon as ``need`` is hit.
    """
    if need <= 0:
        return True
    owner: dict[str, int] = {}

    def augment(fi: int, seen: set[str]) -> bool:
        for n in files[fi]:
            if n in taken or n in seen:
                continue
            seen.add(n)
            other = owner.get(n)
            if other is None or augment(other, seen):
                owner[n] = fi
                return True
        return False

    size = 0
    for fi in range(len(files)):
        if augment(fi, set()):
            size += 1
            if size >= need:
                return True
    return False


def sample_disjoint_files(
    release: ReleaseRecord, cfg: SamplerConfig, rng: random.Random | None = None
) -> Fingerprint:
    rng = rng or random.Random(cfg.seed)
    pool = [f for f in _eligible_files(release, cfg.blocklist) if f[1]]
    taken: set[str] = set()
    if not _can_assign([names for _, names in pool], taken, cfg.N):
        raise InsufficientIdentifiers(
            f"release {release.release_id!r} cannot supply {cfg.N} names from "
            f"{cfg.N} distinct files"
        )
    sources: list[tuple[str, str]] = []
    while len(sources) < cfg.N:
        path, names = _draw(pool, rng)
        options = [n for n in names if n not in taken]
        rng.shuffle(options)
        rest = [names for _, names in pool]
        for n in options:
            # Commit only if the other files can still finish the job.  A file
            # none of whose names passes is in no valid assignment.
            if _can_assign(rest, taken | {n}, cfg.N - len(sources) - 1):
                taken.add(n)
                sources.append((path, n))
                break
    return Fingerprint(frozenset(taken), tuple(sources), Strategy.DISJOINT_FILES, cfg.N)


_SAMPLERS = {
    Strategy.SINGLE_FILE: sample_single_file,
    Strategy.DISJOINT_FILES: sample_disjoint_files,
}


def sample(
    release: ReleaseRecord, cfg: SamplerConfig,
    strategy: Strategy = Strategy.SINGLE_FILE, rng: random.Random | None = None,
) -> Fingerprint:
    return _SAMPLERS[Strategy(strategy)](release, cfg, rng)


def has_fingerprint(
    files: Mapping[str, Iterable[str]], N: int, blocklist: Container[str],
    strategy: Strategy,
) -> bool:
    """Whether any fingerprint of size ``N`` can be drawn from ``files``."""
    lists = [sorted(eligible_names(v, blocklist)) for v in files.values()]
    if Strategy(strategy) is Strategy.SINGLE_FILE:
        return any(len(v) >= N for v in lists)
    return _can_assign(lists, set(), N)
