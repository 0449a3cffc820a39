"""Command-line interface.

Exit codes: 0 when the network is certified robustly non-oscillatory,
1 when the verdict is inconclusive, 2 on input or usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from .certify import CertifyOptions, Verdict, certify, emit_report
from .compound import additive_compound
from .lyapunov import algorithm1, defective_sum_witness, spectral_word_witness
from .netmodel import NetworkError, read_network, stoichiometry_matrix
from .ratlinalg import RatMatrix, format_fraction
from .siphons import TooLargeError, classify_triviality, minimal_siphons
from .simulate import MassActionParams, ParamError, StepRejected, feasible_point, integrate, read_params
from .stoich import ReductionError, build_reduction, conservation_laws, rank_one_matrices

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2


def _species_list(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [s.strip() for s in text.split(",") if s.strip()]


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _print_matrix(M: RatMatrix, indent: str = "  ") -> None:
    rows = M.to_strings()
    width = max((len(x) for r in rows for x in r), default=1)
    for r in rows:
        print(indent + " ".join(x.rjust(width) for x in r))


def cmd_certify(args) -> int:
    net = read_network(args.file)
    options = CertifyOptions(
        independent=_species_list(args.independent),
        algorithm=args.algorithm,
        max_iter=args.max_iter,
        max_word_len=args.max_word_len,
        fallback_closure=args.fallback_closure,
    )
    # bad coordinate choices are usage errors, not analysis outcomes
    build_reduction(net, independent=options.independent)
    cert = certify(net, options)
    if args.json:
        with open(args.json, "wb") as fh:
            fh.write(emit_report(cert, "json"))
    if args.text or not args.json:
        sys.stdout.write(emit_report(cert, "text").decode("utf-8"))
    return EXIT_OK if cert.result is Verdict.ROBUST else EXIT_INCONCLUSIVE


def cmd_siphons(args) -> int:
    net = read_network(args.file)
    rays = conservation_laws(stoichiometry_matrix(net)).nonneg_rays
    siphons = [classify_triviality(s, rays) for s in minimal_siphons(net)]
    for s in siphons:
        print("{" + ", ".join(s.names(net)) + "}", "trivial" if s.trivial else "critical")
    verdict = "PersistenceCertified" if all(s.trivial for s in siphons) else "Unknown"
    print(f"persistence: {verdict}")
    return EXIT_OK


def cmd_conservation(args) -> int:
    net = read_network(args.file)
    basis = conservation_laws(stoichiometry_matrix(net))
    names = net.species_names
    print("species: " + " ".join(names))
    print(f"nonnegative extreme rays ({len(basis.nonneg_rays)}):")
    for r in basis.nonneg_rays:
        print("  [" + " ".join(format_fraction(x) for x in r) + "]")
    print(f"basis (c={basis.c}):")
    for r in basis.rows:
        print("  [" + " ".join(format_fraction(x) for x in r) + "]")
    uncovered = [names[i] for i in range(net.n_species) if i not in basis.covered_species()]
    print("conservative: " + ("yes" if not uncovered else "no, uncovered " + " ".join(uncovered)))
    return EXIT_OK


def cmd_compound(args) -> int:
    net = read_network(args.file)
    rs = build_reduction(net, independent=_species_list(args.independent))
    names = net.species_names
    print("independent species: " + " ".join(names[i] for i in rs.independent))
    for n, (A, (j, i)) in enumerate(zip(rank_one_matrices(rs), rs.pairs), start=1):
        print(f"A{n} (reaction {j + 1}, {names[i]}):")
        _print_matrix(A)
        if args.order <= A.nrows:
            print(f"A{n}^({args.order}):")
            _print_matrix(additive_compound(A, args.order).matrix)
    return EXIT_OK


def cmd_instability(args) -> int:
    net = read_network(args.file)
    rs = build_reduction(net, independent=_species_list(args.independent))
    mats = rank_one_matrices(rs)
    wtv = rs.wtv()
    keep = [l for l, a in enumerate(wtv) if a < 0 and not mats[l].is_zero()]
    if args.second_order:
        if rs.dim < 2:
            print("reduced dimension below 2: no second-order LDI")
            return EXIT_OK
        mats = [additive_compound(A, 2).matrix for A in mats]
    projs = [RatMatrix.identity(mats[l].nrows) - mats[l] / wtv[l] for l in keep]
    found = False
    word = spectral_word_witness(projs, args.max_word_len)
    if word is not None:
        print("spectral screen: " + _relabel(word, keep).describe())
        found = True
    sums = defective_sum_witness([mats[l] for l in keep])
    if sums is not None:
        print("defective-sum screen: " + _relabel(sums, keep).describe())
        found = True
    if not found:
        print(f"no instability witness up to word length {args.max_word_len}")
    return EXIT_OK


def _relabel(w, keep):
    return replace(w, letters=tuple(keep[i] for i in w.letters))


def cmd_simulate(args) -> int:
    net = read_network(args.file)
    rs = build_reduction(net, independent=_species_list(args.independent))
    if args.params:
        params = read_params(args.params, net.n_reactions, rs.c)
    elif args.rates is not None and args.totals is not None:
        params = MassActionParams(np.array(args.rates), np.array(args.totals))
    else:
        raise ParamError("give --params FILE or both --rates and --totals")
    xd0 = np.array(args.init) if args.init is not None else feasible_point(rs, params)
    N = rs.dim * (rs.dim - 1) // 2
    delta0 = np.array(args.delta0) if args.delta0 is not None else np.ones(N)
    V = None
    if N:
        V = algorithm1([additive_compound(A, 2).matrix for A in rank_one_matrices(rs)], 100)
    traj = integrate(rs, params, xd0, delta0, args.t_end, args.dt, V=V, sample_every=args.sample_every)
    if args.csv:
        traj.to_csv(args.csv)
    print("t_end: " + repr(float(traj.t[-1])))
    print("x_d(t_end): " + " ".join(f"{v:.12g}" for v in traj.xd[-1]))
    if N:
        print(f"|delta(0)| = {np.linalg.norm(traj.delta[0]):.6g}, |delta(t_end)| = {np.linalg.norm(traj.delta[-1]):.6g}")
        print(f"V(0) = {traj.V[0]:.6g}, V(t_end) = {traj.V[-1]:.6g}, max increase = {np.max(np.diff(traj.V), initial=0.0):.3g}")
    for note in traj.notes:
        print("note: " + note)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonosc", description="Certify robust non-oscillation of reaction networks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="run the full certification pipeline")
    p.add_argument("file")
    p.add_argument("--independent", help="comma-separated independent species, in coordinate order")
    p.add_argument("--algorithm", choices=["iterative", "closure"], default="iterative")
    p.add_argument("--fallback-closure", action="store_true", help="use the closure builder if the iteration stalls")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--max-word-len", type=int, default=6)
    p.add_argument("--json", metavar="OUT", help="write the JSON certificate here")
    p.add_argument("--text", action="store_true", help="print the text report (default unless --json)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("siphons", help="list minimal siphons and their triviality")
    p.add_argument("file")
    p.set_defaults(func=cmd_siphons)

    p = sub.add_parser("conservation", help="print conservation laws")
    p.add_argument("file")
    p.set_defaults(func=cmd_conservation)

    p = sub.add_parser("compound", help="print the rank-one matrices and their additive compounds")
    p.add_argument("file")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--independent")
    p.set_defaults(func=cmd_compound)

    p = sub.add_parser("instability", help="search for instability witnesses of an LDI")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--first-order", dest="second_order", action="store_false")
    g.add_argument("--second-order", dest="second_order", action="store_true")
    p.add_argument("--max-word-len", type=int, default=6)
    p.add_argument("--independent")
    p.set_defaults(func=cmd_instability, second_order=False)

    p = sub.add_parser("simulate", help="integrate mass-action dynamics and the second variational system")
    p.add_argument("file")
    p.add_argument("--params", help="file with 'k<j> = value' and 'total<i> = value' lines")
    p.add_argument("--rates", type=_floats, help="comma-separated rate constants")
    p.add_argument("--totals", type=_floats, help="comma-separated conserved totals")
    p.add_argument("--init", type=_floats, help="initial reduced state (default: interior point)")
    p.add_argument("--delta0", type=_floats, help="initial variational state (default: all ones)")
    p.add_argument("--t-end", type=float, default=50.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--sample-every", type=int, default=1)
    p.add_argument("--csv", metavar="OUT")
    p.add_argument("--independent")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, NetworkError, ReductionError, ParamError, TooLargeError, ValueError, StepRejected) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
