"""End-to-end certification pipeline and report serialization.

The verdict is ``RobustlyNonOscillatory`` only when five gates pass in
order: no critical siphon, every species conserved by a nonnegative law,
``w^T v < 0`` for every nonzero rank-one factor, a verified PWL common
Lyapunov function for the second-compound LDI, and the LaSalle condition.
Anything else is ``Inconclusive`` with the first failing gate named.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

from .compound import additive_compound
from .lyapunov import (
    ConstructionError,
    NotConvergedError,
    PWLFunction,
    UnboundedError,
    algorithm1,
    closure_builder,
    defective_sum_witness,
    lasalle_check,
    spectral_word_witness,
    verify_conic,
    verify_discrete,
)
from .netmodel import Network, stoichiometry_matrix
from .ratlinalg import RatMatrix, format_fraction
from .siphons import classify_triviality, minimal_siphons
from .stoich import build_reduction, conservation_laws, rank_one_matrices

log = logging.getLogger(__name__)


class Verdict(str, enum.Enum):
    ROBUST = "RobustlyNonOscillatory"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class CertifyOptions:
    independent: Sequence[str | int] | None = None
    algorithm: str = "iterative"
    max_iter: int = 100
    max_word_len: int = 6
    fallback_closure: bool = False

    def __post_init__(self):
        if self.algorithm not in ("iterative", "closure"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.max_iter < 1 or self.max_word_len < 1:
            raise ValueError("max_iter and max_word_len must be positive")


@dataclass
class Certificate:
    """JSON-ready analysis record; every section is plain data."""

    network: dict = field(default_factory=dict)
    reduction: dict = field(default_factory=dict)
    siphons: dict = field(default_factory=dict)
    ldi: dict = field(default_factory=dict)
    lyapunov: dict = field(default_factory=dict)
    lasalle: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    verdict: dict = field(default_factory=dict)

    @property
    def result(self) -> Verdict:
        return Verdict(self.verdict["result"])

    @property
    def failed_gate(self) -> str | None:
        return self.verdict.get("failed_gate")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> Certificate:
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def network_digest(net: Network) -> str:
    return hashlib.sha256(net.to_text().encode("utf-8")).hexdigest()


def _strs(v) -> list[str]:
    return [format_fraction(x) for x in v]


def _set_text(names: Sequence[str]) -> str:
    return "{" + ", ".join(names) + "}"


class _Gates:
    def __init__(self, cert: Certificate):
        self.cert = cert
        self.failed: str | None = None

    def fail(self, reason: str) -> None:
        if self.failed is None:
            self.failed = reason

    def note(self, msg: str) -> None:
        log.info(msg)
        self.cert.diagnostics.append(msg)


def certify(net: Network, options: CertifyOptions | None = None) -> Certificate:
    """Run the whole analysis; errors become diagnostics and an Inconclusive verdict."""
    options = options or CertifyOptions()
    cert = Certificate()
    gates = _Gates(cert)
    try:
        _run(net, options, cert, gates)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        gates.note(f"error: {type(exc).__name__}: {exc}")
        gates.fail(f"analysis error ({type(exc).__name__})")
    if gates.failed is None:
        cert.verdict = {"result": Verdict.ROBUST.value, "failed_gate": None}
    else:
        cert.verdict = {"result": Verdict.INCONCLUSIVE.value, "failed_gate": gates.failed}
    return cert


def _run(net: Network, options: CertifyOptions, cert: Certificate, gates: _Gates) -> None:
    names = net.species_names
    cert.network = {
        "digest": network_digest(net),
        "species": names,
        "reactions": net.to_text().splitlines()[1:],
        "n_species": net.n_species,
        "n_reactions": net.n_reactions,
    }

    gamma = stoichiometry_matrix(net)
    basis = conservation_laws(gamma)
    rays = basis.nonneg_rays
    covered = basis.covered_species()
    uncovered = [names[i] for i in range(net.n_species) if i not in covered]
    cert.reduction = {
        "c": basis.c,
        "N": None,
        "conservation_rays": [_strs(r) for r in rays],
        "conservation_basis": [_strs(r) for r in basis.rows],
        "conservative": not uncovered,
    }

    siphons = [classify_triviality(s, rays) for s in minimal_siphons(net)]
    critical = [s for s in siphons if not s.trivial]
    cert.siphons = {
        "minimal": [{"species": s.names(net), "trivial": s.trivial} for s in siphons],
        "critical": [s.names(net) for s in critical],
    }
    if critical:
        gates.fail(f"critical siphon {_set_text(critical[0].names(net))}")
    if uncovered:
        gates.fail(f"not conservative: {_set_text(uncovered)} outside every nonnegative conservation law")

    rs = build_reduction(net, gamma=gamma, basis=basis, independent=options.independent)
    dim = rs.dim
    mats = rank_one_matrices(rs)
    wtv = rs.wtv()
    cert.reduction.update(
        {
            "N": dim * (dim - 1) // 2,
            "dim": dim,
            "independent": [names[i] for i in rs.independent],
            "T": rs.T.to_strings(),
            "T_inv": rs.T_inv.to_strings(),
            "gamma_r": rs.gamma_r.to_strings(),
        }
    )
    pairs = [{"reaction": j + 1, "species": names[i]} for j, i in rs.pairs]

    active = [l for l, A in enumerate(mats) if not A.is_zero()]
    for l, A in enumerate(mats):
        if A.is_zero():
            gates.note(f"A{l + 1} vanishes (reactant {names[rs.pairs[l][1]]} is held constant); dropped from the LDI")
    if dim < 2:
        gates.note(f"reduced dimension {dim} < 2: the second compound is empty and the LDI gates hold vacuously")
        compounds: list[RatMatrix] = []
    else:
        compounds = [additive_compound(A, 2).matrix for A in mats]
        bad = [l for l in active if wtv[l] >= 0]
        if bad:
            l = bad[0]
            j, i = rs.pairs[l]
            kind = "linear" if wtv[l] == 0 else "exponential"
            gates.fail(f"w^T v = {format_fraction(wtv[l])} >= 0 for A{l + 1} (reaction {j + 1}, {names[i]}; {kind} growth)")
    cert.ldi = {
        "pairs": pairs,
        "wtv": _strs(wtv),
        "A": [A.to_strings() for A in mats],
        "A2": [M.to_strings() for M in compounds],
        "first_order": _first_order(mats, wtv, active, dim, options, gates),
    }

    cert.lyapunov = {"algorithm": options.algorithm, "status": "skipped", "rows": [], "essential_rows": [],
                     "conic_verified": None, "discrete_verified": None, "multipliers": []}
    cert.lasalle = {"ranks": [], "rank_condition": None, "active_kernel_trivial": [], "active_condition": None}
    ldi = [compounds[l] for l in active] if compounds else []
    if gates.failed is not None or not ldi:
        if gates.failed is not None:
            gates.note("Lyapunov construction skipped: an earlier gate failed")
        return

    projections2 = [RatMatrix.identity(A.nrows) - A / wtv[l] for l, A in zip(active, ldi)]
    V = _construct(ldi, projections2, options, cert, gates)
    if V is None:
        return
    conic = verify_conic(V, ldi)
    discrete = verify_discrete(V, projections2)
    cert.lyapunov.update(
        {
            "rows": V.to_strings(),
            "essential_rows": V.essential().to_strings(),
            "conic_verified": conic.ok,
            "discrete_verified": discrete,
            "multipliers": [
                {"row": k + 1, "matrix": active[l] + 1,
                 "lambda": {str(j + 1): format_fraction(x) for j, x in enumerate(lam) if x}}
                for (k, l), lam in sorted(conic.multipliers.items())
            ],
        }
    )
    if not conic.ok:
        k, l = conic.failures[0]
        gates.fail(f"no verified PWL Lyapunov function (row {k + 1} against A{active[l] + 1}^(2))")
        return
    if not discrete:
        gates.note("discrete-time cross-check failed although the conic check passed")

    report = lasalle_check(V, ldi)
    cert.lasalle = {
        "ranks": report.ranks,
        "rank_condition": report.passed,
        "active_kernel_trivial": report.active_kernel_trivial,
        "active_condition": report.active_passed,
    }
    if not report.passed:
        rows = ", ".join(str(i + 1) for i in report.deficient_rows())
        gates.note(f"LaSalle rank condition is deficient on rows {rows}; the active-region kernel test decides")
    if not report.active_passed:
        bad = next(i for i, (r, ok) in enumerate(zip(report.ranks, report.active_kernel_trivial))
                   if r < report.dim and not ok)
        gates.fail(f"LaSalle condition fails on row {bad + 1}")


def _construct(ldi, projections2, options, cert, gates) -> PWLFunction | None:
    def closure():
        return closure_builder(projections2, max_len=options.max_word_len)

    try:
        if options.algorithm == "closure":
            V = closure()
        else:
            try:
                V = algorithm1(ldi, options.max_iter)
            except NotConvergedError as exc:
                if not options.fallback_closure:
                    raise
                gates.note(f"iterative construction: {exc}; falling back to the closure builder")
                cert.lyapunov["algorithm"] = "closure"
                V = closure()
    except UnboundedError as exc:
        cert.lyapunov["status"] = "unbounded"
        gates.note(f"second-order LDI: {exc.witness.describe()}")
        gates.fail("no PWL Lyapunov function (second-order LDI is unstable)")
        return None
    except ConstructionError as exc:
        cert.lyapunov["status"] = "not_converged" if isinstance(exc, NotConvergedError) else "failed"
        gates.note(f"Lyapunov construction: {exc}")
        gates.fail("no PWL Lyapunov function constructed")
        return None
    cert.lyapunov["status"] = "constructed"
    return V


def _first_order(mats, wtv, active, dim, options, gates) -> dict:
    out = {"spectral_word": None, "defective_sum": None, "witness": None}
    usable = [l for l in active if wtv[l] < 0]
    if dim < 1 or not usable:
        return out
    projs = [RatMatrix.identity(dim) - mats[l] / wtv[l] for l in usable]
    word = spectral_word_witness(projs, options.max_word_len)
    if word is not None:
        word = replace(word, letters=tuple(usable[i] for i in word.letters))
    sums = defective_sum_witness([mats[l] for l in usable])
    if sums is not None:
        sums = replace(sums, letters=tuple(usable[i] for i in sums.letters))
    out["spectral_word"] = None if word is None else word.to_dict()
    out["defective_sum"] = None if sums is None else sums.to_dict()
    first = word or sums
    if first is not None:
        out["witness"] = first.to_dict()
        gates.note(f"first-order LDI is not stable (informational): {first.describe()}")
    return out


def emit_report(cert: Certificate, format: str = "json") -> bytes:
    """Deterministic serialization: sorted JSON keys, or a fixed text layout."""
    if format == "json":
        return (json.dumps(cert.to_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")
    if format == "text":
        return _text(cert).encode("utf-8")
    raise ValueError(f"unknown report format {format!r}")


def _text(cert: Certificate) -> str:
    net, red = cert.network, cert.reduction
    lines = [
        f"network {net.get('digest', '?')}",
        f"species ({net.get('n_species')}): {' '.join(net.get('species', []))}",
        f"reactions: {net.get('n_reactions')}",
    ]
    if red:
        lines.append(f"conservation laws (c={red.get('c')}):")
        lines += [f"  [{' '.join(r)}]" for r in red.get("conservation_basis", [])]
        lines.append(f"conservative: {'yes' if red.get('conservative') else 'no'}")
        if "independent" in red:
            lines.append(f"independent species: {' '.join(red['independent'])} (N={red.get('N')})")
    if cert.siphons:
        lines.append("minimal siphons:")
        lines += [f"  {_set_text(s['species'])} {'trivial' if s['trivial'] else 'critical'}"
                  for s in cert.siphons["minimal"]]
    if cert.ldi:
        lines.append("reaction-reactant pairs:")
        lines += [f"  A{n}: reaction {p['reaction']}, {p['species']}, w^T v = {w}"
                  for n, (p, w) in enumerate(zip(cert.ldi["pairs"], cert.ldi["wtv"]), start=1)]
        wit = cert.ldi["first_order"]["witness"]
        if wit is not None:
            letters = ", ".join(f"A{i}" for i in wit["letters"])
            lines.append(f"first-order instability witness: {wit['kind']} [{letters}]")
    lyap = cert.lyapunov
    if lyap:
        lines.append(f"Lyapunov construction ({lyap['algorithm']}): {lyap['status']}")
        if lyap["rows"]:
            lines.append(f"Lyapunov rows ({len(lyap['rows'])}):")
            lines += [f"  [{' '.join(r)}]" for r in lyap["rows"]]
            lines.append(f"conic verification: {'pass' if lyap['conic_verified'] else 'fail'}")
            lines.append(f"discrete verification: {'pass' if lyap['discrete_verified'] else 'fail'}")
    if cert.lasalle and cert.lasalle.get("ranks"):
        lines.append(f"LaSalle ranks: {' '.join(map(str, cert.lasalle['ranks']))}")
        lines.append(f"LaSalle rank condition: {'pass' if cert.lasalle['rank_condition'] else 'fail'}")
        lines.append(f"LaSalle active-region condition: {'pass' if cert.lasalle['active_condition'] else 'fail'}")
    if cert.diagnostics:
        lines.append("diagnostics:")
        lines += [f"  {d}" for d in cert.diagnostics]
    lines.append(f"verdict: {cert.verdict['result']}")
    if cert.verdict.get("failed_gate"):
        lines.append(f"failed gate: {cert.verdict['failed_gate']}")
    return "\n".join(lines) + "\n"
