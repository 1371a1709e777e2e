"""``sqhard`` command line: generate, verify, correlate, sample, budget, oracle-demo.

Exit status: 0 success, 1 usage or parse error, 2 construction failure,
3 verification ran but a hard check failed.
"""
from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from . import io
from .junta import (IsingInstance, JuntaInstance, ProductInstance, bits_to_str, correlation_bound_check,
                    correlation_bruteforce, fourier_coeff, ising_generic_table,
                    ising_pmf_table, ising_sample, junta_pmf_table, junta_sample, product_pmf_table,
                    product_sample, tv_identity_check, uniform_table, walsh_hadamard)
from .momentmatch import (BINARY, ISING, DEFAULT_C_C, InfeasibleInterval, MatchConfig, NegativityError,
                          SingularSystem, audit_bounds, construct_A, kravchuk_residual, moment_tolerance)
from .report import AuditReport
from .scalar import DEFAULT_BITS, EXACT_ARITH, Arith, format_scalar, parse_scalar
from .sqharness import (MODES, OracleSession, build_family, family_correlation_matrix,
                        family_validator, prop_3_10_budget, sq_budget, stat_query)
from .univariate import chi_squared, raw_moment, uniform_binomial

EXIT_OK, EXIT_USAGE, EXIT_CONSTRUCTION, EXIT_CHECK_FAILED = 0, 1, 2, 3
EXHAUSTIVE_LIMIT = 16


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--mode", choices=("exact", "float"), default=d("exact"))
    p.add_argument("--precision-bits", type=int, default=d(DEFAULT_BITS))
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--json", action="store_true", default=d(False))


def _arith(args) -> Arith:
    return EXACT_ARITH if args.mode == "exact" else Arith("float", args.precision_bits)


def _subset(text: Optional[str], M: int, m: Optional[int], seed: int) -> List[int]:
    if text:
        try:
            S = sorted(int(t) for t in text.split(","))
        except ValueError as e:
            raise UsageError(f"bad subset {text!r}") from e
        return S
    if m is None:
        raise UsageError("give --S or --m")
    if not 0 < m < M:
        raise UsageError("need 0 < m < M")
    rng = np.random.default_rng(seed)
    return sorted(int(i) for i in rng.choice(M, m, replace=False))


def _emit(reports: Sequence[AuditReport], args, stream=None) -> None:
    stream = stream or sys.stdout
    if args.json:
        stream.write(json.dumps([r.to_dict() for r in reports], indent=2) + "\n")
    else:
        for r in reports:
            stream.write("\n".join(r.lines()) + "\n")


def _fmt_any(x, a: Arith) -> str:
    """Exact string for rationals, full-precision decimal otherwise."""
    return format_scalar(x, EXACT_ARITH if isinstance(x, Fraction) else a.float_ctx())


def _write(inst: io.InstanceFile, out: Optional[str]) -> None:
    if out:
        io.write_instance(inst, out)
    else:
        sys.stdout.write(io.serialize(inst))


# -- gen -------------------------------------------------------------------------


def _match_config(args, arith: Arith) -> MatchConfig:
    if args.target == BINARY:
        if args.delta is not None:
            raise UsageError("binary targets take --eps")
        shift = parse_scalar(args.eps or "0", arith)
    else:
        if args.eps is not None:
            raise UsageError("ising targets take --delta")
        arith = arith.float_ctx()
        shift = parse_scalar(args.delta or "0", arith)
    C = Fraction(args.C) if args.C else None
    return MatchConfig(args.m, args.k, args.target, shift, C, Fraction(args.c_C), arith, args.escape_hatch)


def cmd_gen(args) -> int:
    arith = _arith(args)
    config = {k: v for k, v in vars(args).items() if k not in ("func", "out", "json") and v is not None}
    summary: List[AuditReport] = []
    if args.kind in ("univariate", "junta"):
        cfg = _match_config(args, arith)
        res = construct_A(cfg)
        params = {"target": cfg.target, "m": cfg.m, "k": cfg.k, "shift": cfg.shift, "C": res.C,
                  "c_C": Fraction(args.c_C), "interval": f"{res.lower}..{res.upper - 1}"}
        if res.degraded:
            params["degraded"] = "true"
        S: Sequence[int] = ()
        if args.kind == "junta":
            if args.M is None:
                raise UsageError("junta needs --M")
            S = _subset(args.S, args.M, cfg.m, args.seed)
            JuntaInstance(res.A, tuple(S), args.M)
            params["M"] = args.M
        inst = io.from_univariate(res.A, params, args.seed, config, args.kind, S)
        summary.append(res.diagnostics)
    elif args.kind == "product":
        S = _subset(args.S, args.M, args.m, args.seed)
        p = ProductInstance(args.M, tuple(S), parse_scalar(args.eps or "0", arith), arith)
        inst = io.from_product(p, args.seed, config)
    elif args.kind == "ising":
        a = arith.float_ctx()
        S = _subset(args.S, args.M, args.m, args.seed)
        eta = parse_scalar(args.eta, a)
        p = IsingInstance(args.M, tuple(S), parse_scalar(args.delta_pair or "0", a), eta, a)
        inst = io.from_ising(p, eta, args.seed, config)
    else:
        fam = build_family(args.M, args.m, Fraction(args.c), args.size, args.seed, args.strategy,
                           check_hypothesis=not args.no_hypothesis_check)
        inst = io.from_family(fam, args.seed, config)
        summary.append(family_validator(fam))
    _write(inst, args.out)
    _emit(summary, args, sys.stdout if args.out else sys.stderr)
    return EXIT_OK


# -- verify ----------------------------------------------------------------------


def _identities_univariate(inst: io.InstanceFile, rep: AuditReport) -> None:
    A = io.to_univariate(inst)
    a = A.arith
    rep.check("normalization", a.close(A.total(), 1), A.total() - 1, a.tolerance(2))
    rep.check("nonnegative", A.is_nonnegative(), min(A.pmf), 0)
    if "k" in inst.parameters:
        k = int(inst.parameters["k"])
        ref = uniform_binomial(A.m, a)
        worst, ok = a.zero(), True
        for i in range(1, k + 1):
            mine, want = raw_moment(A, i), raw_moment(ref, i)
            ok &= a.close(mine, want, 4)
            worst = max(worst, abs(mine - want))
        rep.check("moments_match", ok, worst, moment_tolerance(a))
        rep.values["nu"] = kravchuk_residual(A, k)


def _rebuild(inst: io.InstanceFile):
    p = inst.parameters
    target = p["target"]
    arith = inst.arith if target == BINARY else inst.arith.float_ctx()
    cfg = MatchConfig(int(p["m"]), int(p["k"]), target, parse_scalar(p["shift"], arith), Fraction(p["C"]),
                      Fraction(p.get("c_C", str(DEFAULT_C_C))), arith)
    return construct_A(cfg)


def _identities_junta(inst: io.InstanceFile, rep: AuditReport) -> None:
    _identities_univariate(inst, rep)
    J = io.to_junta(inst)
    a = J.arith
    if J.M <= EXHAUSTIVE_LIMIT:
        table = junta_pmf_table(J)
        total = sum(table, a.zero())
        rep.check("cube_normalization", a.close(total, 1), total - 1, a.tolerance(2))
        if J.M <= 12:
            coeffs = walsh_hadamard(table)
            worst = max(abs(coeffs[T] - fourier_coeff(J, T)) for T in range(1 << J.M))
            rep.check("fourier_cross_check", worst <= a.tolerance(2), worst, a.tolerance(2))
            corr = correlation_bruteforce(table, table, uniform_table(J.M, a))
            chi2 = chi_squared(J.A, uniform_binomial(J.m, a))
            rep.check("chi2_embedding", a.close(corr, chi2), abs(corr - chi2), a.tolerance(2))
    if J.M <= 20 and "target" in inst.parameters and "shift" in inst.parameters:
        p = inst.parameters
        if p["target"] == BINARY:
            target = ProductInstance(J.M, J.S, parse_scalar(p["shift"], a), a)
        else:
            f = a.float_ctx()
            target = IsingInstance(J.M, J.S, parse_scalar(p["shift"], f) / J.m, Fraction(0), f)
        brute, one_d = tv_identity_check(J, target)
        tol = a.tolerance(2) if p["target"] == BINARY else a.float_ctx().tolerance(4)
        rep.check("tv_identity", abs(brute - one_d) <= tol, abs(brute - one_d), tol)
        rep.values["tv"] = one_d


def _identities_block(inst: io.InstanceFile, rep: AuditReport) -> None:
    if inst.kind == "product":
        obj = io.to_product(inst)
        table_fn = product_pmf_table
    else:
        obj = io.to_ising(inst)
        table_fn = ising_pmf_table
        proj = obj.projection()
        rep.check("ferromagnetic", obj.coupling >= 0, obj.coupling, 0)
        eta = parse_scalar(inst.parameters["eta"], obj.arith)
        rep.check("high_temperature", (obj.m - 1) * obj.coupling <= 1 - eta, (obj.m - 1) * obj.coupling, 1 - eta)
        rep.check("projection_normalized", obj.arith.close(proj.total(), 1), proj.total() - 1)
    a = obj.arith
    if obj.M <= EXHAUSTIVE_LIMIT:
        table = table_fn(obj)
        total = sum(table, a.zero())
        rep.check("cube_normalization", a.close(total, 1), total - 1, a.tolerance(2))
        if inst.kind == "ising" and obj.M <= 12:
            generic = ising_generic_table(obj.theta(), a)
            worst = max(abs(u - v) for u, v in zip(table, generic))
            rep.check("generic_ising_agreement", worst <= a.tolerance(4), worst, a.tolerance(4))


def _bounds(inst: io.InstanceFile, rep: AuditReport) -> None:
    if inst.kind not in ("univariate", "junta") or "k" not in inst.parameters:
        rep.values["bounds"] = "not applicable"
        return
    res = _rebuild(inst)
    stored = io.to_univariate(inst)
    same = all(res.A.arith.close(u, v) for u, v in zip(res.A.pmf, stored.pmf))
    rep.check("regenerated_matches_file", same)
    if res.q.is_zero():
        rep.values["bounds"] = "trivial instance"
        return
    rep.extend(audit_bounds(res), "audit.")
    if inst.kind == "junta":
        J = io.to_junta(inst)
        k = int(inst.parameters["k"])
        nu = kravchuk_residual(J.A, k)
        others = [i for i in range(J.M) if i not in J.S]
        for r in range(J.m + 1):
            if J.m - r > len(others):
                continue
            S2 = list(J.S[:r]) + others[:J.m - r]
            rep.extend(correlation_bound_check(J.A, J.S, S2, k, nu), f"overlap{r}.")


def _oracle(inst: io.InstanceFile, rep: AuditReport, args, queries: int = 200, tau=Fraction(1, 100)) -> None:
    if inst.kind not in ("junta", "product", "ising"):
        rep.values["oracle"] = "not applicable"
        return
    table, a, M = _cube_table(inst)
    if table is None:
        rep.values["oracle"] = f"M above {EXHAUSTIVE_LIMIT}"
        return
    rng = np.random.default_rng(args.seed)
    tau = a.num(tau)
    worst = a.zero()
    for mode in MODES:
        s = OracleSession(table, tau, mode, args.seed, arith=a)
        for _ in range(queries):
            f = [a.num(Fraction(int(v), 1 << 16)) for v in rng.integers(-(1 << 16), 1 << 16, size=1 << M, endpoint=True)]
            stat_query(s, f)
        worst = max(worst, max(abs(r.answer - r.expectation) for r in s.log))
    rep.check("answers_within_tau", worst <= tau, worst, tau)
    if inst.kind == "junta" and "k" in inst.parameters:
        J = io.to_junta(inst)
        k = int(inst.parameters["k"])
        nu = kravchuk_residual(J.A, k)
        if nu == 0:
            coeffs = walsh_hadamard(table)
            gaps = [abs(coeffs[T]) for T in range(1, 1 << M) if bin(T).count("1") <= k]
            rep.check("low_degree_blind", max(gaps) == 0, max(gaps), 0)


def _cube_table(inst: io.InstanceFile):
    if inst.kind == "junta":
        obj = io.to_junta(inst)
        fn = junta_pmf_table
    elif inst.kind == "product":
        obj = io.to_product(inst)
        fn = product_pmf_table
    else:
        obj = io.to_ising(inst)
        fn = ising_pmf_table
    if obj.M > EXHAUSTIVE_LIMIT:
        return None, obj.arith, obj.M
    return fn(obj), obj.arith, obj.M


def verify_instance(inst: io.InstanceFile, suite: str, args, title: str) -> AuditReport:
    rep = AuditReport(title)
    rep.values["kind"] = inst.kind
    if suite in ("identities", "all"):
        if inst.kind == "univariate":
            _identities_univariate(inst, rep)
        elif inst.kind == "junta":
            _identities_junta(inst, rep)
        elif inst.kind in ("product", "ising"):
            _identities_block(inst, rep)
        else:
            rep.extend(family_validator(io.to_family(inst)))
    if suite in ("bounds", "all"):
        _bounds(inst, rep)
    if suite in ("oracle", "all"):
        _oracle(inst, rep, args)
    return rep


def _ratio_table(reports: Sequence[AuditReport]) -> AuditReport:
    table = AuditReport("ratio_table")
    for r in reports:
        for key in ("audit.L1.ratio", "audit.sup.ratio", "audit.tv.ratio", "audit.chi2.ratio"):
            if key in r.values:
                table.values[f"{r.title}.{key[6:]}"] = r.values[key]
    return table


def cmd_verify(args) -> int:
    paths = sorted(glob.glob(os.path.join(args.path, "*.json"))) if os.path.isdir(args.path) else [args.path]
    if not paths:
        raise UsageError(f"no instance files under {args.path}")
    reports = [verify_instance(io.read_instance(p), args.suite, args, os.path.basename(p)) for p in paths]
    if len(paths) > 1 and args.suite in ("bounds", "all"):
        reports.append(_ratio_table(reports))
    _emit(reports, args)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


# -- correlate -------------------------------------------------------------------


def cmd_correlate(args) -> int:
    ainst, finst = io.read_instance(args.instance), io.read_instance(args.family)
    if ainst.kind not in ("univariate", "junta") or finst.kind != "family":
        raise UsageError("correlate takes a univariate/junta file and a family file")
    A = io.to_univariate(ainst)
    fam = io.to_family(finst)
    if fam.m != A.m:
        raise UsageError(f"family subsets have size {fam.m} but A lives on {{0..{A.m}}}")
    a = A.arith
    cert = family_correlation_matrix(A, fam)
    rep = AuditReport(f"correlate s={cert.size}")
    for i, row in enumerate(cert.matrix):
        rep.values[f"row{i}"] = " ".join(format_scalar(v, a) for v in row)
    s = cert.size
    rep.values.update({"s": s, "gamma": format_scalar(cert.gamma, a), "beta": format_scalar(cert.beta, a)})
    if cert.beta > 0:
        if cert.gamma > 0:
            budget, tol = sq_budget(cert.gamma, cert.beta, s, a)
            rep.values["budget"] = format_scalar(budget, a)
            rep.values["tolerance"] = _fmt_any(tol, a)
        else:
            rep.values["budget"] = "0"
            rep.values["tolerance"] = "0"
        k = int(ainst.parameters.get("k", "0"))
        nu = kravchuk_residual(A, k)
        prop = prop_3_10_budget(cert.beta, nu, A.m, k, s, a.float_ctx())
        f = a.float_ctx()
        for key in ("tau", "budget", "tolerance"):
            rep.values[f"prop.{key}"] = format_scalar(prop[key], f)
    if args.brute:
        if fam.M > 20:
            raise UsageError("--brute needs M <= 20")
        tables = [junta_pmf_table(JuntaInstance(A, S, fam.M)) for S in fam.subsets]
        u = uniform_table(fam.M, a)
        diff = a.zero()
        for i in range(s):
            for j in range(i, s):
                diff = max(diff, abs(abs(correlation_bruteforce(tables[i], tables[j], u)) - cert.matrix[i][j]))
        rep.values["max_abs_diff"] = str(diff) if a.exact else format_scalar(diff, a)
        rep.check("brute_force_agreement", diff <= a.tolerance(2), diff, a.tolerance(2))
    _emit([rep], args)
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


# -- sample / budget / oracle-demo -----------------------------------------------


def cmd_sample(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    inst = io.read_instance(args.instance)
    if inst.kind == "junta":
        obj = io.to_junta(inst)
        pts = junta_sample(obj, args.seed, args.n)
    elif inst.kind == "product":
        obj = io.to_product(inst)
        pts = product_sample(obj, args.seed, args.n)
    elif inst.kind == "ising":
        obj = io.to_ising(inst)
        pts = ising_sample(obj, args.seed, args.n)
    else:
        raise UsageError(f"cannot sample from a {inst.kind} file")
    text = "".join(bits_to_str(int(x), obj.M) + "\n" for x in pts)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_budget(args) -> int:
    a = _arith(args)
    rep = AuditReport("budget")
    if args.gamma is not None:
        if args.beta is None or args.s is None:
            raise UsageError("--gamma needs --beta and --s")
        budget, tol = sq_budget(parse_scalar(args.gamma, a), parse_scalar(args.beta, a), args.s, a)
        rep.values["budget"] = format_scalar(budget, a)
        rep.values["tolerance"] = _fmt_any(tol, a)
    if args.chi2 is not None:
        if None in (args.m, args.k, args.s):
            raise UsageError("--chi2 needs --m, --k and --s")
        f = a.float_ctx()
        prop = prop_3_10_budget(parse_scalar(args.chi2, f), parse_scalar(args.nu, f), args.m, args.k, args.s, f)
        for key in ("tau", "budget", "tolerance"):
            rep.values[f"prop.{key}"] = format_scalar(prop[key], f)
    if not rep.values:
        raise UsageError("give --gamma/--beta/--s or --chi2/--m/--k/--s")
    _emit([rep], args)
    return EXIT_OK


def cmd_oracle_demo(args) -> int:
    inst = io.read_instance(args.instance)
    rep = AuditReport("oracle-demo")
    _oracle(inst, rep, args, args.queries, Fraction(args.tau))
    _emit([rep], args)
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqhard", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    g = sub.add_parser("gen", parents=[common], help="generate an instance file")
    g.add_argument("kind", choices=io.KINDS)
    g.add_argument("--target", choices=(BINARY, ISING), default=BINARY)
    g.add_argument("--m", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--M", type=int)
    g.add_argument("--S")
    g.add_argument("--eps")
    g.add_argument("--delta")
    g.add_argument("--delta-pair")
    g.add_argument("--eta", default="1/2")
    g.add_argument("--C")
    g.add_argument("--c-C", default=str(DEFAULT_C_C))
    g.add_argument("--escape-hatch", action="store_true")
    g.add_argument("--c")
    g.add_argument("--size", type=int)
    g.add_argument("--strategy", choices=("rejection", "greedy"), default="rejection")
    g.add_argument("--no-hypothesis-check", action="store_true")
    g.add_argument("-o", "--out")
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", parents=[common], help="run check suites on a file or directory")
    v.add_argument("path")
    v.add_argument("--suite", choices=("identities", "bounds", "oracle", "all"), default="all")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("correlate", parents=[common], help="family correlation matrix and SQ budget")
    c.add_argument("instance")
    c.add_argument("family")
    c.add_argument("--brute", action="store_true")
    c.set_defaults(func=cmd_correlate)

    s = sub.add_parser("sample", parents=[common], help="draw bitstrings from an instance")
    s.add_argument("instance")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_sample)

    b = sub.add_parser("budget", parents=[common], help="query-budget arithmetic")
    b.add_argument("--gamma")
    b.add_argument("--beta")
    b.add_argument("--s", type=int)
    b.add_argument("--chi2")
    b.add_argument("--nu", default="0")
    b.add_argument("--m", type=int)
    b.add_argument("--k", type=int)
    b.set_defaults(func=cmd_budget)

    o = sub.add_parser("oracle-demo", parents=[common], help="random queries against a STAT(tau) oracle")
    o.add_argument("instance")
    o.add_argument("--tau", default="1/100")
    o.add_argument("--queries", type=int, default=200)
    o.set_defaults(func=cmd_oracle_demo)
    return parser


_REQUIRED = {
    "univariate": ("m", "k"), "junta": ("m", "k", "M"), "product": ("M",), "ising": ("M",),
    "family": ("M", "m", "c", "size"),
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            missing = [f"--{k}" for k in _REQUIRED[args.kind] if getattr(args, k) is None]
            if missing:
                raise UsageError(f"gen {args.kind} needs {' '.join(missing)}")
        return args.func(args)
    except (UsageError, io.FormatError, OSError) as e:
        print(f"sqhard: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NegativityError, InfeasibleInterval, SingularSystem) as e:
        print(f"sqhard: construction failed: {e}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except (ValueError, ZeroDivisionError) as e:
        code = EXIT_CONSTRUCTION if args.command == "gen" else EXIT_USAGE
        print(f"sqhard: {'construction failed' if code == EXIT_CONSTRUCTION else 'error'}: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
