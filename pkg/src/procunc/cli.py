"""``procunc`` command-line interface.

Exit codes: 0 success, 1 domain failure or violation, 2 input error.
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import numpy as np

from . import channels as ch
from . import harness as hs
from . import jsonio
from . import majorization as mj
from . import tester as tst
from .entropy import mu_bound
from .errors import InputError, ProcuncError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--log-base", type=float, default=2.0, help="logarithm base for entropies (default 2)")
    p.add_argument("--tol", action="append", default=[], metavar="KEY=VAL",
                   help=f"override a tolerance; keys: {', '.join(hs.DEFAULT_TOLERANCES)}")
    p.add_argument("--enumeration-cap", type=int, default=mj.DEFAULT_CAP,
                   help="largest m+n for exhaustive subset enumeration (default 16)")
    p.add_argument("--overlap-exclude-complement", action="store_true",
                   help="leave completion effects out of the overlap (exploration only)")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")
    p.add_argument("-o", "--output", default="-", help="write the JSON report here (default stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="procunc", description="Uncertainty relations for quantum processes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", parents=[common], help="load and validate every object in a document")
    v.add_argument("file", help="input JSON ('-' for stdin)")

    b = sub.add_parser("bounds", parents=[common], help="overlap bound and majorization bound vectors")
    b.add_argument("file")
    b.add_argument("--testers", nargs=2, metavar=("T1", "T2"))
    b.add_argument("--primal", action="store_true", help="also solve primal SDPs and report tightness")

    r = sub.add_parser("verify", parents=[common], help="Monte-Carlo verification campaign")
    r.add_argument("file")
    r.add_argument("--testers", nargs=2, metavar=("T1", "T2"))
    r.add_argument("--samples", type=int)
    r.add_argument("--seed", type=int, help="campaign seed (overrides PROCUNC_SEED)")
    r.add_argument("--env-dim", type=int)
    r.add_argument("--bounds", metavar="FILE", help="check these bound vectors instead of recomputing")
    r.add_argument("--csv", metavar="FILE", help="write per-sample slacks as CSV")
    r.add_argument("--tightness", action="store_true", help="run the primal-witness tightness probe")
    r.add_argument("--conjecture", action="store_true", help="run the conjectured-bound explorer")
    r.add_argument("--timing", action="store_true", help="include wall-clock timings (breaks byte identity)")

    lat = sub.add_parser("lattice", parents=[common], help="GLB/LUB of vectors under majorization")
    lat.add_argument("--vector", action="append", default=[], metavar="X1,X2,...")
    lat.add_argument("--file", help="JSON list of vectors or document with a 'vectors' section")

    sc = sub.add_parser("state-case", parents=[common], help="compare process and state pipelines for d_A = 1")
    sc.add_argument("file")
    sc.add_argument("--povms", nargs=2, metavar=("M", "N"), required=True)
    sc.add_argument("--random-states", type=int, default=0, metavar="K", help="add K random states")
    sc.add_argument("--seed", type=int)
    return parser


def _tolerances(pairs) -> dict:
    out = {}
    for item in pairs:
        key, sep, val = item.partition("=")
        if not sep or key not in hs.DEFAULT_TOLERANCES:
            raise UsageError(f"bad --tol {item!r}; expected KEY=VAL with KEY in {sorted(hs.DEFAULT_TOLERANCES)}")
        try:
            out[key] = float(val)
        except ValueError as exc:
            raise UsageError(f"bad --tol value {val!r}") from exc
    return out


def _seed(args, campaign: dict) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("PROCUNC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"PROCUNC_SEED must be an integer, got {env!r}") from exc
    return int(campaign.get("seed", 0))


def _emit(args, payload: dict):
    text = jsonio.dumps(payload)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)


def _pick_testers(doc: jsonio.Document, names) -> tuple[tst.Tester, tst.Tester]:
    if names is None:
        names = (doc.campaign or {}).get("testers") or list(doc.testers)[:2]
    if len(names) != 2:
        raise UsageError("need two testers: pass --testers T1 T2")
    return doc.tester(names[0]), doc.tester(names[1])


# -- subcommands -----------------------------------------------------------

def cmd_validate(args) -> int:
    doc = jsonio.load_document(args.file)
    objects = []

    def record(kind, name, fn):
        entry = {"kind": kind, "name": name}
        try:
            entry.update(fn())
        except (ProcuncError, ValueError) as exc:
            entry.update(ok=False, error=str(exc))
        objects.append(entry)
        if not entry["ok"]:
            sys.stderr.write(f"{kind} {name!r}: {entry.get('error', 'failed validation')}\n")

    def state(m):
        res = ch.density_residuals(m)
        ch.check_density(m)
        return {"ok": True, "residuals": res}

    def povm(p):
        res = ch.povm_residuals(p)
        ch.validate_povm(p)
        return {"ok": True, "residuals": res}

    def channel(c):
        rep = ch.validate_cptp(c)
        out = {"ok": rep.ok, "residuals": rep.as_dict()}
        if not rep.ok:
            out["error"] = (f"not CPTP: min eigenvalue of Choi matrix {rep.cp_residual:.6e}, "
                            f"trace-preservation residual {rep.tp_residual:.6e}")
        return out

    def tester(name):
        t = doc.tester(name)
        return {"ok": True, "outcomes": t.outcomes, "dims": [t.d_R, t.d_A, t.d_B]}

    for name, (m, _) in doc.states.items():
        record("state", name, lambda m=m: state(m))
    for name, p in doc.povms.items():
        record("povm", name, lambda p=p: povm(p))
    for name, c in doc.channels.items():
        record("channel", name, lambda c=c: channel(c))
    for name in doc.testers:
        record("tester", name, lambda name=name: tester(name))
    if doc.campaign is not None:
        record("campaign", "campaign", lambda: {"ok": True, "config": _config(args, doc).as_dict()})
    ok = all(o["ok"] for o in objects)
    _emit(args, {"ok": ok, "version": doc.version, "objects": objects})
    return EXIT_OK if ok else EXIT_FAIL


def _bound_report(t1, t2, args, retain_primal: bool) -> tuple[dict, mj.BoundVectors]:
    table = tst.overlap_table(t1, t2, args.overlap_exclude_complement)
    bounds = mj.compute_bounds(t1, t2, cap=args.enumeration_cap, threads=_workers(args),
                               retain_primal=retain_primal)
    certs = [{
        "k": k,
        "subset": list(map(int, sub)),
        "value": r.value, "upper": r.upper, "lower": r.lower,
        "duality_gap": r.duality_gap, "feasibility_residual": r.feasibility_residual,
        "status": r.status, "route": r.route,
        "X": jsonio.encode_operator(r.optimizer, (t1.d_A,)),
    } for k, (sub, r) in enumerate(zip(bounds.argmax_subsets, bounds.certificates), start=1)]
    report = {
        "version": jsonio.VERSION,
        "testers": [t1.name, t2.name],
        "log_base": args.log_base,
        "overlap_table": table.entries.tolist(),
        "overlap": table.max_overlap,
        "overlap_argmax": list(table.argmax),
        "exclude_complement": table.exclude_complement,
        "rhs": mu_bound(table.max_overlap, args.log_base),
        "bounds": bounds.as_dict(),
        "certificates": certs,
    }
    return report, bounds


def _workers(args) -> int:
    return (os.cpu_count() or 1) if args.threads == 0 else args.threads


def cmd_bounds(args) -> int:
    doc = jsonio.load_document(args.file)
    t1, t2 = _pick_testers(doc, args.testers)
    report, bounds = _bound_report(t1, t2, args, args.primal)
    ok = True
    if args.primal:
        tol = _tolerances(args.tol).get("tightness", hs.DEFAULT_TOLERANCES["tightness"])
        tp = hs.tightness_probe(t1, t2, bounds, tol)
        report["tightness"] = tp.as_dict()
        report["primal_optimizers"] = [jsonio.encode_operator(j, t1.channel_dims) for j in bounds.primal_optimizers]
        ok = tp.ok
    _emit(args, report)
    return EXIT_OK if ok else EXIT_FAIL


def _config(args, doc: jsonio.Document) -> hs.CampaignConfig:
    camp = dict(doc.campaign or {})
    camp["seed"] = _seed(args, camp)
    if getattr(args, "samples", None) is not None:
        camp["samples"] = args.samples
    if getattr(args, "env_dim", None) is not None:
        camp["env_dim"] = args.env_dim
    camp["tolerances"] = {**camp.get("tolerances", {}), **_tolerances(args.tol)}
    camp["enumeration_cap"] = args.enumeration_cap if args.enumeration_cap != mj.DEFAULT_CAP else camp.get(
        "enumeration_cap", mj.DEFAULT_CAP)
    camp["log_base"] = args.log_base
    camp["exclude_complement"] = args.overlap_exclude_complement
    camp["threads"] = args.threads
    camp["timing"] = getattr(args, "timing", False)
    camp.pop("testers", None)
    try:
        return hs.CampaignConfig.from_dict(camp)
    except TypeError as exc:
        raise InputError(f"bad campaign section: {exc}") from exc


def cmd_verify(args) -> int:
    doc = jsonio.load_document(args.file)
    config = _config(args, doc)
    t1, t2 = _pick_testers(doc, args.testers)
    config.dims = (t1.d_R, t1.d_A, t1.d_B)
    bounds = None
    if args.bounds:
        raw = jsonio.read_json(args.bounds)
        bounds = jsonio.bounds_from_json(raw.get("bounds", raw) if isinstance(raw, dict) else raw)
    elif args.tightness:
        bounds = mj.compute_bounds(t1, t2, cap=config.enumeration_cap, threads=config.workers, retain_primal=True)
    report = hs.run_verification(config, t1, t2, bounds, csv_path=args.csv)
    out = report.as_dict()
    ok = report.ok
    if args.tightness:
        if bounds.primal_optimizers is None:
            raise UsageError("--tightness needs primal optimizers; do not combine it with --bounds")
        tp = hs.tightness_probe(t1, t2, bounds, config.tolerances["tightness"])
        out["tightness"] = tp.as_dict()
        ok = ok and tp.ok
    if args.conjecture:
        out["conjecture"] = hs.conjecture_explore(t1, t2, config, bounds)
    out["ok"] = ok
    _emit(args, out)
    if not ok:
        sys.stderr.write(f"{report.total_violations} violation(s) recorded\n")
    return EXIT_OK if ok else EXIT_FAIL


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.replace(" ", "").strip("()[]").split(",") if x])
    except ValueError as exc:
        raise UsageError(f"bad vector {text!r}") from exc


def cmd_lattice(args) -> int:
    vectors = [_parse_vector(v) for v in args.vector]
    if args.file:
        raw = jsonio.read_json(args.file)
        raw = raw.get("vectors") if isinstance(raw, dict) else raw
        if not isinstance(raw, list):
            raise InputError("lattice file must hold a list of vectors or a 'vectors' section")
        vectors += [jsonio.decode_vector(v) for v in raw]
    if not vectors:
        raise UsageError("give at least one --vector or a --file")
    lb = mj.lattice_bounds(vectors)
    _emit(args, {"version": jsonio.VERSION, "vectors": [v.tolist() for v in lb.members], **lb.as_dict()})
    return EXIT_OK


def cmd_state_case(args) -> int:
    doc = jsonio.load_document(args.file)
    for name in args.povms:
        if name not in doc.povms:
            raise InputError(f"unknown POVM {name!r}")
    m, n = (doc.povms[k] for k in args.povms)
    states = [s for s, dims in doc.states.values() if s.shape[0] == m.dim]
    if args.random_states:
        rng = np.random.default_rng(_seed(args, doc.campaign or {}))
        states += [ch.random_density(m.dim, rng) for _ in range(args.random_states)]
    if not states:
        raise UsageError("no states of matching dimension; use --random-states K")
    tol = _tolerances(args.tol).get("regression", hs.DEFAULT_TOLERANCES["regression"])
    rep = hs.state_case_regression(m, n, states, tol=tol, cap=args.enumeration_cap, base=args.log_base)
    _emit(args, rep)
    return EXIT_OK if rep["ok"] else EXIT_FAIL


COMMANDS = {
    "validate": cmd_validate,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
    "lattice": cmd_lattice,
    "state-case": cmd_state_case,
}


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _tolerances(args.tol)  # reject bad keys even where a command has no use for them
        return COMMANDS[args.command](args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except ProcuncError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
