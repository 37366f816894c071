"""Command-line front end: ``alloyqg {spectrum,props,wegner,ids,replay}``.

Exit codes: 0 success, 1 a checked property failed, 2 usage or configuration
error.  Every run writes its CSVs plus ``manifest.json`` into ``--out``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .assembly import assemble_system, box_bc, build_mesh, default_bc, solve_spectrum
from .bracketing import BracketingReport, InterlacingReport, check_bracketing, check_interlacing
from .corpus import random_instance
from .errors import CheckFailed, GapGuardViolation, QuantumGraphError, SolverFailure
from .graph import LatticeSpec, chain_view, full_view, lattice_box, load_graph
from .ids import (
    Box,
    IdsExperiment,
    check_equivariance,
    check_superadditivity,
    counting_bound,
    exhaustion_run,
    free_config,
    random_partition,
)
from .io import (
    RunManifest,
    config_hash,
    ensure_dir,
    eigenvector_rows,
    scatter_svg,
    spectrum_rows,
    step_plot_svg,
    write_csv,
    write_text,
)
from .potential import AlloyConfig, CouplingLaw, SingleSitePotential, load_alloy, sample_disorder, validate_alloy_config
from .wegner import (
    HellmannFeynmanReport,
    UniqueContinuationReport,
    WegnerExperiment,
    hellmann_feynman,
    uc_uniformity,
    unique_continuation_report,
    wegner_scan,
)

PROG = "alloyqg"
CHECK_HEADER = ("check", "key", "lambda", "lhs", "rhs", "status")


class UsageError(Exception):
    def __init__(self, flag, message):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("usage", message)


# -- flag parsing -------------------------------------------------------------

def _floats(flag, text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(flag, f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(flag, "empty list")
    return vals


def _ints(flag, text):
    vals = _floats(flag, text)
    if any(v != int(v) for v in vals):
        raise UsageError(flag, f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _pair(flag, text):
    try:
        a, b = (float(t) for t in text.split(":"))
    except ValueError:
        raise UsageError(flag, f"expected a:b, got {text!r}") from None
    if b < a:
        raise UsageError(flag, "upper end below lower end")
    return a, b


def parse_lambda_grid(text, flag="--lambda-grid"):
    parts = text.split(":")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if len(parts) != 3:
            raise ValueError
    except (ValueError, IndexError):
        raise UsageError(flag, f"expected start:stop:count, got {text!r}") from None
    if count < 1 or stop < start:
        raise UsageError(flag, "need count >= 1 and stop >= start")
    return np.linspace(start, stop, count)


def resolve_seed(seed):
    if seed is not None:
        return int(seed)
    env = os.environ.get("QG_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError("QG_SEED", f"not an integer: {env!r}") from None


def _load(flag, loader, path):
    try:
        return loader(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(flag, f"cannot load {path!r}: {exc}") from None


def _alloy(args, default=None):
    if getattr(args, "alloy", None):
        return _load("--alloy", load_alloy, args.alloy)
    return default if default is not None else AlloyConfig.default()


def _validated(flag, config, view):
    report = validate_alloy_config(config, view)
    if not report.ok:
        raise UsageError(flag, report.violations[0])
    return config


# -- subcommands --------------------------------------------------------------

class Run:
    """Collects written files and failed checks for one invocation."""

    def __init__(self, args):
        self.args = args
        self.out = ensure_dir(args.out)
        self.outputs = []
        self.failures = []

    def csv(self, name, header, rows):
        write_csv(os.path.join(self.out, name), header, rows)
        self.outputs.append(name)
        for i, r in enumerate(rows):
            status = r[-1]
            if status is False or status == "fail":
                self.failures.append((name, i + 2, r))  # line number counting the header

    def svg(self, name, text):
        write_text(os.path.join(self.out, name), text)
        self.outputs.append(name)


def cmd_spectrum(args, run):
    g = _load("--graph", load_graph, args.graph)
    view = full_view(g)
    config = _validated("--alloy", _alloy(args), view)
    sample = sample_disorder(config, view, args.seed, args.index)
    mesh = build_mesh(view, config, h_max=args.h_max, degree=args.degree)
    system = assemble_system(view, config, sample, default_bc(view), mesh)
    if args.k is None and args.lambda_max is None:
        raise UsageError("--k", "give --k or --lambda-max")
    spec = solve_spectrum(system, k=args.k, lam_max=args.lambda_max, want_vectors=args.vectors)
    run.csv("spectrum.csv", ("n", "lambda", "residual"), spectrum_rows(spec))
    if args.vectors:
        run.csv("eigenvectors.csv", ("n", "edge", "x", "value"), eigenvector_rows(spec, system))


def _props_instances(args):
    """(name, view, config, sample, mesh) tuples for the selected suite inputs."""
    if args.graph:
        g = _load("--graph", load_graph, args.graph)
        view = full_view(g)
        config = _validated("--alloy", _alloy(args), view)
        mesh = build_mesh(view, config, h_max=args.h_max, degree=args.degree)
        return [("graph", view, config, sample_disorder(config, view, args.seed, args.index), mesh)]
    if args.chain:
        out = []
        for m in _ints("--chain", args.chain):
            if m < 1:
                raise UsageError("--chain", "chain length must be >= 1")
            view = chain_view(m)
            default = None
            if args.support:
                a, b = _pair("--support", args.support)
                default = AlloyConfig(CouplingLaw.uniform(), s=b - a,
                                      template=SingleSitePotential.indicator(None, a, b))
            config = _validated("--alloy", _alloy(args, default), view)
            mesh = build_mesh(view, config, h_max=args.h_max, degree=args.degree)
            out.append((f"chain{m}", view, config, sample_disorder(config, view, args.seed, args.index), mesh))
        return out
    instances = []
    for i in range(args.corpus):
        inst = random_instance(args.seed + i)
        instances.append((f"corpus{args.seed + i}", inst.view, inst.config, inst.sample, inst.mesh))
    return instances


def cmd_props(args, run):
    suites = set(args.suites.split(",")) if args.suites else None
    known = {"bracketing", "interlacing", "hf", "uc"}
    if suites is not None and not suites <= known:
        raise UsageError("--suites", f"unknown suite(s) {sorted(suites - known)}")
    instances = _props_instances(args)
    if suites is None:
        suites = {"bracketing", "interlacing"} if not (args.graph or args.chain) else known
    lo_hi = _pair("--interval", args.interval)

    brk, itl, hf, hf_sums, uc, uc_min = [], [], [], [], [], {}
    for name, view, config, sample, mesh in instances:
        vertices = sorted(view.v_lambda, key=str)
        edges = list(view.edge_ids)
        if args.targets == "first":
            vertices, edges = vertices[:1], edges[:1]
        if "bracketing" in suites:
            for kind, targets in (("vertex", vertices), ("edge", edges)):
                for t in targets:
                    r = check_bracketing(view, config, sample, mesh, t, args.k, kind=kind, strict=False)
                    brk.extend((name, kind, t, *row) for row in r.rows)
        if "interlacing" in suites:
            for e in edges:
                r = check_interlacing(view, config, sample, mesh, e, args.k_interlace, strict=False)
                itl.extend((name, e, *row) for row in r.rows)
                itl.append((name, e, "converse", 0, math.nan, math.nan, 2, r.converse_ok))
                itl.append((name, e, "direct_sum", 0, r.direct_sum_error, math.nan, 0, r.direct_sum_ok))
        if "hf" in suites:
            r = hellmann_feynman(view, config, sample, mesh, lo_hi, rel_tol=args.hf_tol)
            hf.extend((name, *row) for row in r.rows)
            hf_sums.extend((name, *row) for row in r.sums)
        if "uc" in suites:
            r = unique_continuation_report(view, config, sample, mesh, lo_hi)
            uc.extend((name, *row) for row in r.rows)
            uc_min[view.n_edges] = r.min_ratio

    if "bracketing" in suites:
        run.csv("bracketing.csv", ("instance", "kind", "target") + BracketingReport.header, brk)
    if "interlacing" in suites:
        run.csv("interlacing.csv", ("instance", "edge") + InterlacingReport.header, itl)
    if "hf" in suites:
        run.csv("hf.csv", ("instance",) + HellmannFeynmanReport.header, hf)
        run.csv("hf_sums.csv", ("instance", "n", "lambda", "sum_derivatives", "support_mass", "pass"), hf_sums)
    if "uc" in suites:
        run.csv("uc.csv", ("instance",) + UniqueContinuationReport.header, uc)
        if len(uc_min) > 1:
            ok, ref = uc_uniformity(uc_min)
            rows = [(m, uc_min[m], ref, bool(uc_min[m] >= ref / 2)) for m in sorted(uc_min)]
            run.csv("uc_uniformity.csv", ("n_edges", "min_ratio", "reference", "pass"), rows)


def _lattice_view(nu, size):
    if nu == 1:
        return chain_view(size)
    return lattice_box(LatticeSpec(nu, size))[1]


def cmd_wegner(args, run):
    sizes = _ints("--sizes", args.sizes)
    eps = _floats("--eps", args.eps)
    if any(not 0 < e <= 1 for e in eps):
        raise UsageError("--eps", "windows must lie in (0, 1]")
    if args.samples < 100:
        raise UsageError("--samples", "need at least 100 samples per cell")
    if args.nu < 1:
        raise UsageError("--nu", "must be >= 1")
    if args.nu >= 2 and min(sizes) < 3:
        raise UsageError("--sizes", "box sides must be >= 3")
    config = _alloy(args)
    for s in sizes:
        _validated("--alloy", config, _lattice_view(args.nu, s))
    exp = WegnerExperiment(lambda s: _lattice_view(args.nu, s), tuple(sizes), config, args.lam,
                           tuple(eps), args.samples, args.seed, h_max=args.h_max, degree=args.degree,
                           bc_rule=box_bc)
    rep = wegner_scan(exp, threads=args.threads)
    run.csv("wegner.csv", rep.header, rep.rows())

    # exact checks carry pass/fail; statistical diagnostics carry "info"
    checks = [("monotone_in_eps", "all", args.lam, math.nan, math.nan, "pass" if rep.monotone_in_eps else "fail")]
    checks.append(("c_hat", "max_ratio", args.lam, rep.c_hat, math.nan, "info"))
    checks.append(("pooled_ratio", "all", args.lam, rep.pooled_ratio, rep.pooled_ratio_stderr, "info"))
    checks.append(("cells_within_2se", "all", args.lam, math.nan, math.nan,
                   "info-yes" if rep.cells_within_2se else "info-no"))
    for e, slope, se, r2, ok in rep.size_trends:
        checks.append(("size_trend", f"eps={e!r}", args.lam, slope, 2 * se, "info-yes" if ok else "info-no"))
    for s, a, b, q, ok in rep.halving:
        checks.append(("halving", f"size={s} eps={a!r}/{b!r}", args.lam, q, math.nan,
                       "info-yes" if ok else "info-no"))
    for s, slope, r2 in rep.eps_fits:
        checks.append(("eps_fit", f"size={s}", args.lam, slope, r2, "info"))
    run.csv("wegner_checks.csv", CHECK_HEADER, checks)
    if args.svg:
        groups = []
        for s in sizes:
            cells = [c for c in rep.cells if c.size == s]
            groups.append((f"size {s}", [c.epsilon for c in cells], [c.ratio for c in cells],
                           [c.ratio_stderr for c in cells]))
        run.svg("wegner.svg", scatter_svg(groups, "mean count / (eps * edges)", "epsilon", "ratio"))


def _probe_lambdas(grid, n=4):
    idx = sorted(set(int(round(t)) for t in np.linspace(0, len(grid) - 1, min(n, len(grid)))))
    return [float(grid[i]) for i in idx]


def cmd_ids(args, run):
    sizes = _ints("--sizes", args.sizes)
    grid = parse_lambda_grid(args.lambda_grid)
    if args.nu < 1:
        raise UsageError("--nu", "must be >= 1")
    if min(sizes) < 3:
        raise UsageError("--sizes", "box sides must be >= 3")
    if args.free and args.alloy:
        raise UsageError("--free", "cannot be combined with --alloy")
    config = free_config() if args.free else _alloy(args)
    views = {l: lattice_box(LatticeSpec(args.nu, l))[1] for l in sizes}
    for v in views.values():
        _validated("--alloy", config, v)
    try:
        exp = IdsExperiment(args.nu, tuple(sizes), tuple(float(x) for x in grid), config, args.seed,
                            args.samples_per_size, h_max=args.h_max, degree=args.degree)
    except ValueError as exc:
        raise UsageError("--sizes", str(exc)) from None
    res = exhaustion_run(exp, threads=args.threads)

    reps = res.replicates
    if reps == 1:
        rows = [(c.l, float(x), float(n), int(f)) for c in res.curves for x, n, f in zip(c.lambdas, c.N, c.F)]
        run.csv("ids.csv", ("l", "lambda", "N_l", "F_l"), rows)
    else:
        rows = [(c.l, i % reps, float(x), float(n), int(f)) for i, c in enumerate(res.curves)
                for x, n, f in zip(c.lambdas, c.N, c.F)]
        run.csv("ids.csv", ("l", "replicate", "lambda", "N_l", "F_l"), rows)
        run.csv("ids_variance.csv", ("l", "lambda", "mean_N", "std_N"), res.variance)
    run.csv("convergence.csv", ("lambda", "l_from", "l_to", "abs_diff"), res.convergence)
    run.csv("sup_differences.csv", ("l_from", "l_to", "sup_abs_diff"), res.sup_differences)
    if res.free_limit:
        run.csv("free_limit.csv", ("l", "lambda", "N_l", "sqrt_lambda_over_pi", "abs_err", "bound_3_over_l",
                                   "within"), [r[:-1] + ("yes" if r[-1] else "no",) for r in res.free_limit])

    # exact checks
    checks = []
    for c in res.curves:
        k_bound = config.potential_bound(views[c.l])
        for x, f in zip(c.lambdas, c.F):
            b = counting_bound(views[c.l].n_edges, args.nu, float(x), k_bound)
            checks.append(("counting_bound", f"l={c.l}", float(x), int(f), b, "pass" if f <= b else "fail"))
    l0 = sizes[0]
    probes = _probe_lambdas(grid)
    shift = (1,) + (0,) * (args.nu - 1)
    for lam in probes:
        r = check_equivariance(LatticeSpec(args.nu, l0), config, lam, shift, args.seed, 0,
                               h_max=args.h_max, degree=args.degree, strict=False)
        checks.append(("equivariance", f"l={l0} shift={shift}", lam, r.F, r.F_shifted, "pass" if r.ok else "fail"))
    rng = np.random.default_rng([args.seed, 104729])
    q = Box.cube(args.nu, l0)
    for p in range(args.partitions):
        parts = random_partition(q, rng, int(rng.integers(1, 4)))
        key = "partition=" + "|".join(f"{b.lower}-{b.upper}" for b in parts).replace(" ", "")
        for lam in probes:
            try:
                r = check_superadditivity(q, parts, config, None, lam, master_seed=args.seed,
                                          h_max=args.h_max, degree=args.degree, strict=False)
            except GapGuardViolation:
                checks.append(("superadditivity", key, lam, math.nan, math.nan, "skipped"))
                continue
            checks.append(("superadditivity", key, lam, r.F_box, sum(r.F_parts), "pass" if r.ok else "fail"))
    run.csv("ids_checks.csv", CHECK_HEADER, checks)
    if args.svg:
        series = [(f"l = {c.l}", c.lambdas, c.N) for c in res.curves_for(0)]
        run.svg("ids.svg", step_plot_svg(series, "finite-volume IDS", "lambda", "N_l"))


# -- parser -------------------------------------------------------------------

def build_parser():
    p = _Parser(prog=PROG, description="Alloy-type random Schroedinger operators on metric graphs.")
    p.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--out", default="qg_out", help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--h-max", type=float, default=0.125, dest="h_max")
        sp.add_argument("--degree", type=int, default=2, choices=(1, 2, 3))
        sp.add_argument("--svg", action="store_true")
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="master seed (fallback: $QG_SEED, then 0)")

    sp = sub.add_parser("spectrum", help="one solve and export")
    common(sp)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--alloy")
    sp.add_argument("--index", type=int, default=0, help="disorder sample index")
    sp.add_argument("--k", type=int)
    sp.add_argument("--lambda-max", type=float, dest="lambda_max")
    sp.add_argument("--vectors", action="store_true", help="also export eigenfunction node values")

    sp = sub.add_parser("props", help="bracketing, interlacing, Hellmann-Feynman, unique continuation")
    common(sp)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--graph")
    src.add_argument("--chain", help="comma-separated chain lengths")
    src.add_argument("--corpus", type=int, default=50, help="number of random corpus instances")
    sp.add_argument("--alloy")
    sp.add_argument("--support", help="a:b indicator profile on every chain edge (no --alloy)")
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--suites", help="comma list of bracketing,interlacing,hf,uc")
    sp.add_argument("--targets", choices=("first", "all"), default="first")
    sp.add_argument("--k", type=int, default=30)
    sp.add_argument("--k-interlace", type=int, default=20, dest="k_interlace")
    sp.add_argument("--interval", default="0:40")
    sp.add_argument("--hf-tol", type=float, default=1e-3, dest="hf_tol")

    sp = sub.add_parser("wegner", help="Monte Carlo interval-count scan")
    common(sp)
    sp.add_argument("--nu", type=int, default=1)
    sp.add_argument("--sizes", required=True, help="chain edge counts (nu=1) or box sides")
    sp.add_argument("--eps", required=True)
    sp.add_argument("--lambda", type=float, required=True, dest="lam")
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--alloy")

    sp = sub.add_parser("ids", help="lattice exhaustion and superadditivity checks")
    common(sp)
    sp.add_argument("--nu", type=int, default=1)
    sp.add_argument("--sizes", required=True)
    sp.add_argument("--lambda-grid", required=True, dest="lambda_grid")
    sp.add_argument("--free", action="store_true")
    sp.add_argument("--alloy")
    sp.add_argument("--samples-per-size", type=int, default=1, dest="samples_per_size")
    sp.add_argument("--partitions", type=int, default=5)

    sp = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--threads", type=int, default=None)
    return p


COMMANDS = {"spectrum": cmd_spectrum, "props": cmd_props, "wegner": cmd_wegner, "ids": cmd_ids}
# flags that never change CSV contents
_NEUTRAL = {"out", "threads", "svg", "subcommand"}


def _replay_argv(args):
    m = RunManifest.load(args.manifest)
    argv = list(m.params["argv"]) + ["--out", args.out]
    if args.threads is not None:
        argv += ["--threads", str(args.threads)]
    return argv


def _strip(argv, flags):
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        name = a.split("=", 1)[0]
        if name in flags:
            skip = "=" not in a
            continue
        out.append(a)
    return out


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            raise UsageError("subcommand", "choose one of spectrum, props, wegner, ids, replay")
        if args.subcommand == "replay":
            return run_cli(_replay_argv(args))
        if args.threads < 1:
            raise UsageError("--threads", "must be >= 1")
        args.seed = resolve_seed(args.seed)
        run = Run(args)
        COMMANDS[args.subcommand](args, run)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except CheckFailed as exc:
        print(f"{PROG}: check failed: {exc} (row {exc.row})", file=sys.stderr)
        return 1
    except SolverFailure as exc:  # residual check on the computed eigenpairs
        print(f"{PROG}: check failed: {exc}", file=sys.stderr)
        return 1
    except (QuantumGraphError, ValueError) as exc:
        print(f"{PROG}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2

    paths = {k: getattr(args, k) for k in ("graph", "alloy") if getattr(args, k, None)}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _NEUTRAL}
    recorded = _strip(argv, {"--out", "--threads", "--seed"}) + ["--seed", str(args.seed)]
    manifest = RunManifest(args.subcommand, paths, args.seed, run.out, config_hash(paths, params), __version__,
                           {"argv": recorded}, sorted(run.outputs))
    manifest.write(os.path.join(run.out, "manifest.json"))
    for name, line, row in run.failures:
        print(f"{PROG}: check failed: {name} line {line}: {row}", file=sys.stderr)
    return 1 if run.failures else 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
