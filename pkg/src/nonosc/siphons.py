"""Minimal siphons of the Petri-net view of a network.

A species set ``P`` is a siphon when every reaction producing a member of
``P`` also consumes a member of ``P``.  Minimal siphons are found by a
closure-driven branch and bound: pick a reaction that violates the rule and
branch on which of its reactants joins the set.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .netmodel import Network
from .ratlinalg import RatVector

MAX_SPECIES = 32


class TooLargeError(ValueError):
    pass


class Persistence(str, enum.Enum):
    CERTIFIED = "PersistenceCertified"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Siphon:
    species: frozenset[int]
    minimal: bool = True
    trivial: bool = False

    def sorted_species(self) -> tuple[int, ...]:
        return tuple(sorted(self.species))

    def names(self, net: Network) -> list[str]:
        return [net.species[i].name for i in self.sorted_species()]


def _producers_consumers(net: Network):
    producers = [[] for _ in range(net.n_species)]
    consumes = []
    for j, r in enumerate(net.reactions):
        for i in r.products.species():
            producers[i].append(j)
        consumes.append(frozenset(r.reactants.species()))
    return producers, consumes


def is_siphon(net: Network, species: Iterable[int]) -> bool:
    """Definitional check: input reactions of the set are output reactions of it."""
    s = set(species)
    if not s:
        return False
    for r in net.reactions:
        produces = any(i in s for i in r.products.species())
        consumes = any(i in s for i in r.reactants.species())
        if produces and not consumes:
            return False
    return True


def minimal_siphons(net: Network) -> list[Siphon]:
    """All inclusion-minimal siphons, sorted by size then lexicographically."""
    if net.n_species > MAX_SPECIES:
        raise TooLargeError(f"{net.n_species} species exceeds the limit of {MAX_SPECIES}")
    producers, consumes = _producers_consumers(net)
    found: set[frozenset[int]] = set()

    def violated(current: frozenset[int]) -> int | None:
        for i in sorted(current):
            for j in producers[i]:
                if not (consumes[j] & current):
                    return j
        return None

    def grow(current: frozenset[int]) -> None:
        if any(f <= current for f in found):
            return
        j = violated(current)
        if j is None:
            for f in [f for f in found if current < f]:
                found.discard(f)
            found.add(current)
            return
        for i in sorted(consumes[j]):
            grow(current | {i})

    for root in range(net.n_species):
        grow(frozenset({root}))

    minimal = [s for s in found if not any(o < s for o in found)]
    minimal.sort(key=lambda s: (len(s), sorted(s)))
    return [Siphon(s) for s in minimal]


def classify_triviality(siphon: Siphon, rays: Sequence[RatVector]) -> Siphon:
    """Trivial iff the siphon contains the support of a nonnegative conservation law."""
    supports = [frozenset(i for i, x in enumerate(r) if x) for r in rays]
    trivial = any(s and s <= siphon.species for s in supports)
    return replace(siphon, trivial=trivial)


def persistence_verdict(net: Network, rays: Sequence[RatVector] | None = None) -> Persistence:
    if rays is None:
        from .netmodel import stoichiometry_matrix
        from .ratlinalg import nonneg_kernel_rays

        rays = nonneg_kernel_rays(stoichiometry_matrix(net).T)
    siphons = [classify_triviality(s, rays) for s in minimal_siphons(net)]
    return Persistence.CERTIFIED if all(s.trivial for s in siphons) else Persistence.UNKNOWN
