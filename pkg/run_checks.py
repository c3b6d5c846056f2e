"""Verification suites, classification, characters and intertwiners from the command line.

Exit status is 0 when every check passes, 1 when any check fails and 2 on usage errors.
"""
import argparse
import sys
import time

from sympy import QQ

from exact_arith import idx, rational_str
from superalgebra import JACOBI_MAX_INDEX, SECTORS, jacobi_sweep, n1_embedding_check
from rewrite_engine import (k_action_residual, k_commutator_residual, levels, series_oracle,
                            verma_weight_dims)
from weight_modules import (FAMILIES, QUOTIENTS, ModuleSpec, instantiate_window, mirror, parity_flip,
                            verify_axioms_symbolic)
from analysis import (DEFAULT_MAX_INDEX, DEFAULT_WINDOW, classify_simplicity, coherence_sweep,
                      crosscheck_quartic_in_rabc, find_intertwiners, find_invariant_subspaces,
                      injectivity_defect, match_rab_parameter, restrict_window, slot_span,
                      trivial_vectors, verify_length_one_recurrences, verify_length_two_constraints,
                      verify_quartic_reduction, verify_sextic_vanishing)
from utils import (DEFAULT_N_JOBS, DEFAULT_SEED, Report, canonical_json, make_rng, parse_rational_arg,
                   parse_window, print_banner, results_table, status_of, write_report)

CHARACTER_DEPTH_CAP = 12
EMBEDDING_MAX_INDEX = 4
REPORT_CHARACTER_DEPTH = 6
# (b, c) on 2b - c = 2 and on 2b + c = 2
PARTNER_POINTS = (("2", "2"), ("0", "2"))
MAX_LISTED_FAILURES = 10


def _flag_value(args, name):
    return getattr(args, name, None)


def build_spec(args, suffix=""):
    """ModuleSpec from ``--family/--a/--b/--c`` (or the ``2``-suffixed module-2 flags)."""
    family = _flag_value(args, "family" + suffix)
    if family is None:
        raise ValueError("--family{} is required".format(suffix))
    a, b, c = (_flag_value(args, name + suffix) for name in ("a", "b", "c"))
    if a is None or b is None:
        raise ValueError("--a{0} and --b{0} are required".format(suffix))
    if family in ("at", "rabc") and c is None:
        raise ValueError("Family {} needs --c{}".format(family, suffix))
    if family in ("a", "rab") and c is not None:
        raise ValueError("Family {} takes no --c{}".format(family, suffix))
    quotient = _flag_value(args, "quotient" + suffix) or "full"
    return ModuleSpec.concrete(family, a, b, c, quotient=quotient)


def _timed(args, report, start):
    if args.timing:
        report.timing = time.time() - start
    return report


def _residual_map(residuals):
    return {name: str(value) for name, value in residuals.items()}


def run_verify_algebra(args):
    sectors = [args.sector] if args.sector else list(SECTORS)
    max_index = args.max_index or JACOBI_MAX_INDEX
    reports = []
    for sector in sectors:
        start = time.time()
        count, failures = jacobi_sweep(sector, max_index, args.n_jobs, verbose=not args.quiet)
        payload = {"max_index": str(max_index), "triples": str(count), "failures": str(len(failures)),
                   "examples": [{"x": x, "y": y, "z": z, "residual": r}
                                for x, y, z, r in failures[:MAX_LISTED_FAILURES]]}
        reports.append(_timed(args, Report("super-jacobi", status_of(not failures), payload, sector), start))
    return reports


def run_verify_modules(args):
    families = [args.family] if args.family else list(FAMILIES)
    reports = []
    for family in families:
        start = time.time()
        result = verify_axioms_symbolic(ModuleSpec.symbolic(family))
        payload = {"family": family, "pairs": str(len(result.residuals)),
                   "failures": result.failures()[:MAX_LISTED_FAILURES]}
        reports.append(_timed(args, Report("module-axioms", status_of(result.passed), payload, "n2-ramond"),
                              start))
    return reports


def run_verify_lemmas(args):
    checks = [
        ("k-action", lambda: {"residual": k_action_residual()}),
        ("k-commutator", lambda: {"residual": k_commutator_residual()}),
        ("quartic-reduction", lambda: {"residual": verify_quartic_reduction()}),
        ("sextic-vanishing", lambda: {"residual": verify_sextic_vanishing()}),
        ("quartic-crosscheck-rabc", lambda: {"residual": crosscheck_quartic_in_rabc()}),
        ("length-one-recurrences", verify_length_one_recurrences),
        ("length-two-constraints", verify_length_two_constraints),
    ]
    reports = []
    for name, check in checks:
        start = time.time()
        residuals = _residual_map(check())
        ok = all(value == "0" for value in residuals.values())
        reports.append(_timed(args, Report(name, status_of(ok), {"residuals": residuals}, "n2-ramond"), start))
    return reports


def run_verify_embedding(args):
    max_index = args.max_index or EMBEDDING_MAX_INDEX
    sectors = [args.sector] if args.sector else ["n2-ramond", "n2-ns"]
    reports = []
    for sector in sectors:
        if not sector.startswith("n2"):
            raise ValueError("The N=1 embedding lives in N=2 sectors, got {}".format(sector))
        start = time.time()
        if sector == "n2-ramond":
            indices = list(range(-max_index, max_index + 1))
        else:
            indices = [QQ(2 * k + 1, 2) for k in range(-max_index, max_index)]
        failures = []
        for p in indices:
            for q in indices:
                residual = n1_embedding_check(p, q, sector)
                if not residual.is_zero:
                    failures.append({"p": str(idx(p)), "q": str(idx(q)), "residual": str(residual)})
        payload = {"pairs": str(len(indices) ** 2), "failures": failures[:MAX_LISTED_FAILURES]}
        reports.append(_timed(args, Report("n1-embedding", status_of(not failures), payload, sector), start))
    return reports


VERIFY_TARGETS = {
    "algebra": run_verify_algebra,
    "modules": run_verify_modules,
    "lemmas": run_verify_lemmas,
    "embedding": run_verify_embedding,
}


def cmd_verify(args):
    return VERIFY_TARGETS[args.target](args)


def _window(args):
    return args.window or DEFAULT_WINDOW


def _max_index(args):
    return args.max_index or DEFAULT_MAX_INDEX


def cmd_classify(args):
    spec = build_spec(args)
    start = time.time()
    verdict = classify_simplicity(spec, _window(args), _max_index(args), rng=make_rng(args.seed))
    if verdict.verdict == "simple":
        status = "pass"
    else:
        status = "witness" if verdict.witnesses else "fail"
    report = Report("classify", status, verdict.to_json(), "n2-ramond", spec.rational_parameters())
    return [_timed(args, report, start)]


def cmd_character(args):
    depth = args.depth
    if depth > CHARACTER_DEPTH_CAP:
        raise ValueError("Depth {} exceeds the cap {}".format(rational_str(depth), CHARACTER_DEPTH_CAP))
    sectors = [args.sector] if args.sector else list(SECTORS)
    reports = []
    for sector in sectors:
        start = time.time()
        dims = verma_weight_dims(sector, depth)
        oracle = series_oracle(sector, depth)
        table = [{"level": rational_str(level), "pbw": str(d), "oracle": str(o)}
                 for level, d, o in zip(levels(sector, depth), dims, oracle)]
        match = dims == oracle
        payload = {"depth": rational_str(depth), "match": match, "table": table}
        reports.append(_timed(args, Report("character", status_of(match), payload, sector), start))
    return reports


def cmd_submodules(args):
    spec = build_spec(args)
    lo, hi = _window(args)
    maxidx = _max_index(args)
    start = time.time()
    W = instantiate_window(spec, lo, hi, maxidx)
    witnesses = find_invariant_subspaces(W, maxidx, make_rng(args.seed))
    trivial = trivial_vectors(W)
    defect_index = args.defect_index
    payload = {
        "module": spec.describe(),
        "quotient": spec.quotient,
        "window": [str(lo), str(hi)],
        "length": str(W.length()),
        "support": [rational_str(w) for w in W.support()],
        "witnesses": [w.to_json() for w in witnesses],
        "trivial_vectors": trivial.to_json(),
        "injectivity_defect": {str(label): str(d) for label, d in injectivity_defect(W, defect_index).items()},
    }
    report = Report("submodules", "witness" if witnesses else "pass", payload, "n2-ramond",
                    spec.rational_parameters())
    return [_timed(args, report, start)]


def cmd_intertwine(args):
    source = build_spec(args)
    target = build_spec(args, "2")
    if args.flip2:
        target = parity_flip(target)
    if args.mirror2:
        target = mirror(target)
    lo, hi = _window(args)
    maxidx = _max_index(args)
    start = time.time()
    W1 = instantiate_window(source, lo, hi, maxidx)
    if args.sub_slots:
        W1 = restrict_window(W1, slot_span(W1, args.sub_slots))
    W2 = instantiate_window(target, lo, hi, maxidx)
    result = find_intertwiners(W1, W2, args.parity_reversing, make_rng(args.seed))
    payload = {"source": source.describe(), "target": target.describe()}
    if args.sub_slots:
        payload["source_slots"] = list(args.sub_slots)
    payload.update(result.to_json())
    return [_timed(args, Report("intertwine", status_of(result.bijective), payload, "n2-ramond"), start)]


def _intertwiner_report(name, W1, W2, parity_reversing, seed, extra=None):
    result = find_intertwiners(W1, W2, parity_reversing, make_rng(seed))
    payload = dict(extra or {})
    payload.update(result.to_json())
    return Report(name, status_of(result.bijective), payload, "n2-ramond")


def cmd_report(args):
    """Every suite in one document."""
    reports = []
    for target in VERIFY_TARGETS:
        args.target = target
        reports.extend(cmd_verify(args))

    depth = args.depth if args.depth is not None else REPORT_CHARACTER_DEPTH
    args.sector, args.depth = None, depth
    reports.extend(cmd_character(args))

    lo, hi = _window(args)
    maxidx = _max_index(args)
    start = time.time()
    rows = coherence_sweep(window=(lo, hi), maxidx=maxidx, n_jobs=args.n_jobs, seed=args.seed,
                           verbose=not args.quiet)
    coherent = all(row["coherent"] for row in rows)
    reports.append(_timed(args, Report("coherence", status_of(coherent),
                                       {"points": str(len(rows)), "rows": rows}, "n2-ramond"), start))

    start = time.time()
    shift_source = instantiate_window(ModuleSpec.concrete("a", "1/3", "2"), lo, hi, maxidx)
    shift_target = instantiate_window(ModuleSpec.concrete("a", "4/3", "2"), lo, hi, maxidx)
    reports.append(_timed(args, _intertwiner_report("intertwine-shift", shift_source, shift_target, False,
                                                    args.seed), start))

    start = time.time()
    rab = ModuleSpec.concrete("rab", "1/3", "2")
    reports.append(_timed(args, _intertwiner_report(
        "intertwine-parity-change", instantiate_window(rab, lo, hi, maxidx),
        instantiate_window(parity_flip(rab), lo, hi, maxidx), True, args.seed), start))

    candidates = [parse_rational_arg("{}/2".format(k)) for k in range(-4, 7)]
    for b, c in PARTNER_POINTS:
        start = time.time()
        sub = ModuleSpec.concrete("rabc", "1/5", b, c, quotient="simple-subquotient")
        expected = sub.rational_parameters()["b"] - QQ(1, 2)
        matches = match_rab_parameter(sub, candidates, (lo, hi), maxidx)
        found = any(m.rational_parameters()["b"] == expected and m.parity_flipped for m in matches)
        payload = {"module": sub.describe(), "expected_b": rational_str(expected),
                   "matches": [m.describe() for m in matches]}
        reports.append(_timed(args, Report("subquotient-partner", status_of(found), payload, "n2-ramond"), start))
    return reports


COMMANDS = {
    "verify": cmd_verify,
    "classify": cmd_classify,
    "character": cmd_character,
    "submodules": cmd_submodules,
    "intertwine": cmd_intertwine,
    "report": cmd_report,
}


def _add_module_flags(parser, suffix="", required=False):
    parser.add_argument("--family" + suffix, choices=FAMILIES, required=required,
                        help="Module family{}.".format(" of module 2" if suffix else ""))
    for name in ("a", "b", "c"):
        parser.add_argument("--{}{}".format(name, suffix), type=parse_rational_arg, default=None,
                            help="Parameter {} as an exact rational (N or N/D).".format(name))


def _add_window_flags(parser):
    parser.add_argument("--window", type=parse_window, default=None,
                        help="Label window LO:HI (default {}:{}).".format(*DEFAULT_WINDOW))
    parser.add_argument("--max-index", type=int, default=None,
                        help="Largest generator index (default {} for windows, {} for the Jacobi sweep)."
                        .format(DEFAULT_MAX_INDEX, JACOBI_MAX_INDEX))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Print the reports as JSON.")
    common.add_argument("--out", default=None, help="Also write the JSON reports to this file.")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed for random closures and spot checks.")
    common.add_argument("--n-jobs", type=int, default=DEFAULT_N_JOBS, help="Number of joblib workers.")
    common.add_argument("--quiet", action="store_true", help="Disable progress bars.")
    common.add_argument("--timing", action="store_true", help="Record wall-clock seconds in the reports.")

    parser = argparse.ArgumentParser(description="Exact checks for the N=2 superconformal algebras and their "
                                                 "cuspidal modules.",
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", parents=[common], help="Run a verification suite.",
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    verify.add_argument("target", choices=list(VERIFY_TARGETS), help="Suite to run.")
    verify.add_argument("--sector", choices=SECTORS, default=None, help="Restrict to one sector.")
    verify.add_argument("--family", choices=FAMILIES, default=None, help="Restrict the module suite to one family.")
    verify.add_argument("--max-index", type=int, default=None, help="Largest generator index.")

    classify = sub.add_parser("classify", parents=[common], help="Classify a module as simple or not.",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_module_flags(classify, required=True)
    _add_window_flags(classify)

    character = sub.add_parser("character", parents=[common], help="Verma weight-space dimensions.",
                               formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    character.add_argument("--sector", choices=SECTORS, default=None, help="Restrict to one sector.")
    character.add_argument("--depth", type=parse_rational_arg, default=parse_rational_arg("1"),
                           help="Deepest level (half-integers allowed in NS sectors).")

    submodules = sub.add_parser("submodules", parents=[common], help="Search a window for submodules.",
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_module_flags(submodules, required=True)
    _add_window_flags(submodules)
    submodules.add_argument("--quotient", choices=QUOTIENTS, default="full", help="Module to realize.")
    submodules.add_argument("--defect-index", type=int, default=1,
                            help="n in the injectivity defect of L_n + L_{n+1} + H_n + G_n.")

    intertwine = sub.add_parser("intertwine", parents=[common], help="Solve for intertwiners.",
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_module_flags(intertwine, required=True)
    _add_module_flags(intertwine, "2", required=True)
    _add_window_flags(intertwine)
    intertwine.add_argument("--flip2", action="store_true", help="Apply the parity change to module 2.")
    intertwine.add_argument("--mirror2", action="store_true",
                            help="Twist module 2 by H -> -H, G^+ <-> G^-.")
    intertwine.add_argument("--sub-slots", nargs="+", default=None,
                            help="Restrict module 1 to the invariant span of these slots.")
    intertwine.add_argument("--parity-reversing", action="store_true", help="Solve for parity-reversing maps.")

    report = sub.add_parser("report", parents=[common], help="Run every suite and emit one JSON document.",
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_window_flags(report)
    report.add_argument("--depth", type=parse_rational_arg, default=None,
                        help="Character depth (default {}).".format(REPORT_CHARACTER_DEPTH))
    report.add_argument("--family", default=None, help=argparse.SUPPRESS)
    report.add_argument("--sector", default=None, help=argparse.SUPPRESS)
    return parser


def print_report(report):
    title = report.check if report.sector is None else "{} [{}]".format(report.check, report.sector)
    print_banner(title)
    print("status: {}".format(report.status), flush=True)
    for key, value in report.payload.items():
        if isinstance(value, list) and value and isinstance(value[0], dict):
            columns = [k for k, v in value[0].items() if not isinstance(v, (dict, list))]
            print(results_table([{k: row[k] for k in columns} for row in value], columns), flush=True)
        elif isinstance(value, list):
            print("{}: {}".format(key, ", ".join(map(str, value)) if value else "none"), flush=True)
        elif isinstance(value, dict) and key != "trivial_vectors":
            for name, item in value.items():
                print("{}[{}]: {}".format(key, name, item), flush=True)
        else:
            print("{}: {}".format(key, value if not isinstance(value, dict) else value.get("description")),
                  flush=True)
    if report.timing is not None:
        print("timing: {:.3f}s".format(report.timing), flush=True)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.time()
    try:
        reports = COMMANDS[args.command](args)
    except ValueError as err:
        parser.error(str(err))

    if args.json:
        sys.stdout.write(canonical_json(reports))
    else:
        for report in reports:
            print_report(report)
        print("Done. {}".format(time.time() - start), flush=True)
    if args.out:
        write_report(reports, args.out)
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
