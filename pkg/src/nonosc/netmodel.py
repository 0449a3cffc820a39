"""Reaction networks and their text format.

A network file is line oriented::

    # comment
    species L Rc K S C P
    L + Rc <-> K
    S + K <-> C
    R5: C -> P + K
    P -> S

``<->`` expands to a forward and a backward reaction, in that order.  A
complex is ``0`` (empty) or ``term (+ term)*`` with ``term := [n ]name``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .ratlinalg import RatMatrix

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")
_LABEL = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*:(?!:)")


class NetworkError(ValueError):
    """Base class for network construction and parsing errors."""


class NetworkSyntaxError(NetworkError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnknownSpeciesError(NetworkError):
    pass


class DuplicateSpeciesError(NetworkError):
    pass


@dataclass(frozen=True)
class Species:
    name: str
    index: int


@dataclass(frozen=True)
class Complex:
    """Nonnegative integer combination of species, keyed by species index."""

    coefficients: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_mapping(cls, coeffs: Mapping[int, int]) -> Complex:
        if any(c < 0 for c in coeffs.values()):
            raise NetworkError("complex coefficients must be nonnegative")
        return cls(tuple(sorted((i, c) for i, c in coeffs.items() if c)))

    def __getitem__(self, species: int) -> int:
        return dict(self.coefficients).get(species, 0)

    def species(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.coefficients)

    def is_empty(self) -> bool:
        return not self.coefficients


@dataclass(frozen=True)
class Reaction:
    reactants: Complex
    products: Complex
    label: str = ""

    def __post_init__(self):
        if self.reactants == self.products:
            raise NetworkError(f"reaction {self.label or '?'} has identical sides")


@dataclass(frozen=True)
class Network:
    species: tuple[Species, ...]
    reactions: tuple[Reaction, ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not self.species:
            raise NetworkError("network needs at least one species")
        if not self.reactions:
            raise NetworkError("network needs at least one reaction")
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise DuplicateSpeciesError("duplicate species name")
        if [s.index for s in self.species] != list(range(len(names))):
            raise NetworkError("species indices must be contiguous in declaration order")
        n = len(names)
        for r in self.reactions:
            for i in r.reactants.species() + r.products.species():
                if not 0 <= i < n:
                    raise UnknownSpeciesError(f"species index {i} out of range")
        object.__setattr__(self, "_index", {s.name: s.index for s in self.species})

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def species_names(self) -> list[str]:
        return [s.name for s in self.species]

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSpeciesError(f"unknown species {name!r}") from None

    def to_text(self) -> str:
        """Canonical text form; parsing it back gives an equal network."""
        names = self.species_names

        def fmt(cplx: Complex) -> str:
            if cplx.is_empty():
                return "0"
            return " + ".join(names[i] if c == 1 else f"{c} {names[i]}" for i, c in cplx.coefficients)

        lines = ["species " + " ".join(names)]
        for r in self.reactions:
            prefix = f"{r.label}: " if r.label else ""
            lines.append(f"{prefix}{fmt(r.reactants)} -> {fmt(r.products)}")
        return "\n".join(lines) + "\n"


def _parse_complex(text: str, lineno: int, col0: int, lookup) -> dict[int, int]:
    stripped = text.strip()
    if not stripped:
        raise NetworkSyntaxError("empty complex (write 0 for the empty complex)", lineno, col0 + 1)
    if stripped == "0":
        return {}
    coeffs: dict[int, int] = {}
    offset = 0
    for term in text.split("+"):
        col = col0 + offset + (len(term) - len(term.lstrip())) + 1
        offset += len(term) + 1
        parts = term.split()
        if len(parts) == 1:
            count, name = 1, parts[0]
        elif len(parts) == 2 and parts[0].isdigit():
            count, name = int(parts[0]), parts[1]
            if count <= 0:
                raise NetworkSyntaxError("coefficient must be a positive integer", lineno, col)
        else:
            raise NetworkSyntaxError(f"malformed term {term.strip()!r}", lineno, col)
        if not _NAME.match(name):
            raise NetworkSyntaxError(f"bad species name {name!r}", lineno, col)
        idx = lookup(name, lineno, col)
        coeffs[idx] = coeffs.get(idx, 0) + count
    return coeffs


def parse_network(text: str) -> Network:
    """Parse the network text format described in the module docstring."""
    declared: list[str] | None = None
    order: list[str] = []
    raw: list[tuple[str, dict[int, int], dict[int, int], bool, int]] = []

    def lookup(name: str, lineno: int, col: int) -> int:
        if declared is not None:
            if name not in index:
                raise UnknownSpeciesError(f"line {lineno}, column {col}: undeclared species {name!r}")
            return index[name]
        if name not in index:
            index[name] = len(order)
            order.append(name)
        return index[name]

    index: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        head = body.split()
        if head[0] == "species":
            if declared is not None:
                raise NetworkSyntaxError("second species line", lineno, 1)
            if raw:
                raise NetworkSyntaxError("species line must precede reactions", lineno, 1)
            names = head[1:]
            if not names:
                raise NetworkSyntaxError("species line lists no species", lineno, 1)
            for name in names:
                if not _NAME.match(name):
                    raise NetworkSyntaxError(f"bad species name {name!r}", lineno, body.index(name) + 1)
            if len(set(names)) != len(names):
                dup = next(n for n in names if names.count(n) > 1)
                raise DuplicateSpeciesError(f"line {lineno}: species {dup!r} declared twice")
            declared = names
            order = list(names)
            index = {n: i for i, n in enumerate(names)}
            continue

        label = ""
        start = 0
        m = _LABEL.match(body)
        if m and ("->" in body[m.end():]):
            label = m.group(1)
            start = m.end()
        rest = body[start:]
        if "<->" in rest:
            arrow, reversible = "<->", True
        elif "->" in rest:
            arrow, reversible = "->", False
        else:
            raise NetworkSyntaxError("expected '->' or '<->'", lineno, start + 1)
        if rest.count("->") != 1:
            raise NetworkSyntaxError("more than one arrow", lineno, start + 1)
        apos = rest.index(arrow)
        lhs, rhs = rest[:apos], rest[apos + len(arrow):]
        left = _parse_complex(lhs, lineno, start, lookup)
        right = _parse_complex(rhs, lineno, start + apos + len(arrow), lookup)
        if not left and not right:
            raise NetworkSyntaxError("both sides are the empty complex", lineno, start + 1)
        if left == right:
            raise NetworkSyntaxError("reaction has identical sides", lineno, start + 1)
        raw.append((label, left, right, reversible, lineno))

    if not raw:
        raise NetworkSyntaxError("no reactions", max(1, len(text.splitlines())), 1)

    reactions = []
    for label, left, right, reversible, _ in raw:
        reactions.append(Reaction(Complex.from_mapping(left), Complex.from_mapping(right), label))
        if reversible:
            back = f"{label}_rev" if label else ""
            reactions.append(Reaction(Complex.from_mapping(right), Complex.from_mapping(left), back))
    species = tuple(Species(n, i) for i, n in enumerate(order))
    return Network(species, tuple(reactions))


def read_network(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def stoichiometry_matrix(net: Network) -> RatMatrix:
    """``Gamma[i][j] = beta_ij - alpha_ij`` (species by reaction)."""
    n, m = net.n_species, net.n_reactions
    cols = []
    for r in net.reactions:
        col = [0] * n
        for i, c in r.products.coefficients:
            col[i] += c
        for i, c in r.reactants.coefficients:
            col[i] -= c
        cols.append(col)
    return RatMatrix(([Fraction(cols[j][i]) for j in range(m)] for i in range(n)), ncols=m)


def reactant_pairs(net: Network) -> list[tuple[int, int]]:
    """Reaction-reactant pairs ``(j, i)`` (0-based), reactions in order and
    reactants in species-index order within a reaction."""
    return [(j, i) for j, r in enumerate(net.reactions) for i, _ in r.reactants.coefficients]
