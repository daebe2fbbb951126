"""Command-line entry point: ``hartigan-lab <command> ...``.

Commands
--------
run              Hartigan-Wong or Lloyd run on a point file or a built-in gadget
lowerbound       build the gadget instance, generate and verify its script
verify-appendix  print the ten gadget inequalities with exact values
smoothed         perturbed running-time sweep, written as CSV

Exit codes: 0 success, 1 verification failure, 2 run hit max_iters,
64 bad usage, 65 inconsistent configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from hartigan_lab import io as hio
from hartigan_lab.geometry import InvariantError
from hartigan_lab.local_search import (
    ScriptInvalidError,
    Termination,
    hw_run,
    init_clustering,
    is_hw_local_opt,
    is_lloyd_local_opt,
    lloyd_potential,
    lloyd_run,
    make_rule,
)

EX_OK = 0
EX_FAIL = 1
EX_MAX_ITERS = 2
EX_USAGE = 64
EX_CONFIG = 65


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _builtin(spec: str):
    from hartigan_lab.lower_bound import build_instance

    name, _, arg = spec.partition(":")
    if name != "gadget" or not arg:
        raise ConfigError(f"unknown builtin instance {spec!r} (expected gadget:M)")
    try:
        m = int(arg)
    except ValueError:
        raise ConfigError(f"bad gadget size in {spec!r}") from None
    try:
        return build_instance(m)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _sigmas(text: str) -> list:
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sigma list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty sigma list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hartigan-lab", description="Hartigan-Wong k-means local search lab")
    p.add_argument("--config", help="JSON file with option defaults (flags take precedence)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    r = sub.add_parser("run", help="run Hartigan-Wong or Lloyd on a point set")
    src = r.add_mutually_exclusive_group()
    src.add_argument("--input", help="CSV or JSON point file")
    src.add_argument("--builtin", help="built-in instance, e.g. gadget:5")
    r.add_argument("--format", choices=["csv", "json"])
    r.add_argument("--k", type=int)
    r.add_argument("--mode", choices=["exact", "float"], default="exact")
    r.add_argument("--method", choices=["hw", "lloyd"], default="hw")
    r.add_argument("--rule", choices=["first", "best", "random", "scripted"], default="first")
    r.add_argument("--init", choices=["balanced_random", "given"])
    r.add_argument("--assignment", help="JSON list of cluster ids for --init given")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-iters", type=int)
    r.add_argument("--trace", help="write moves as JSON lines here")
    r.add_argument("--summary", help="write the run summary JSON here (default: stdout)")

    lb = sub.add_parser("lowerbound", help="exponential gadget instance")
    lb.add_argument("--m", type=int, required=True)
    lb.add_argument("--verify", action="store_true")
    lb.add_argument("--trace", help="write the certified moves as JSON lines here")
    lb.add_argument("--report", help="write the verification report JSON here")
    lb.add_argument("--max-m", type=int, default=32)

    sub.add_parser("verify-appendix", help="print the ten gadget inequalities")

    sm = sub.add_parser("smoothed", help="smoothed running-time sweep")
    base = sm.add_mutually_exclusive_group()
    base.add_argument("--input", help="CSV or JSON point file inside [0,1]^d")
    base.add_argument("--builtin", help="built-in instance, e.g. gadget:8")
    sm.add_argument("--format", choices=["csv", "json"])
    sm.add_argument("--k", type=int)
    sm.add_argument("--sigma", type=_sigmas, required=True, help="comma-separated list")
    sm.add_argument("--trials", type=int, default=20)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--mode", choices=["exact", "float"], default="float")
    sm.add_argument("--rule", choices=["first", "best", "random", "scripted"], default="first")
    sm.add_argument("--init", choices=["balanced_random", "given"])
    sm.add_argument("--max-iters", type=int)
    sm.add_argument("--workers", type=int, help="parallel trials (default: $HARTIGAN_LAB_THREADS or cores)")
    sm.add_argument("--timing", action="store_true", help="record wall time (makes output non-reproducible)")
    sm.add_argument("--out", help="CSV output path (default: stdout)")
    return p


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            conf = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(conf, dict):
            raise ConfigError("config file must hold a JSON object")
        known = set(vars(args))
        unknown = sorted(set(conf) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        # re-parse so that flags win over the config file, which wins over defaults
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**{key.replace("-", "_"): v for key, v in conf.items()})
        args = parser.parse_args(argv)
    return args


def _effective(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items())}


def _load_points(args, exact):
    try:
        return hio.parse_points(args.input, args.format, exact=exact)
    except hio.ParseError as e:
        raise ConfigError(f"{args.input}: {e}") from None
    except OSError as e:
        raise ConfigError(str(e)) from None


def cmd_run(args) -> int:
    exact = args.mode == "exact"
    inst = None
    if args.builtin:
        inst = _builtin(args.builtin)
        points = inst.points if exact else inst.points.as_float()
        k = args.k or inst.k
        if k != inst.k:
            raise ConfigError(f"gadget instance has k={inst.k}")
    elif args.input:
        points = _load_points(args, exact)
        k = args.k
    else:
        raise ConfigError("run needs --input or --builtin")
    if k is None:
        raise ConfigError("--k is required")
    if args.rule == "scripted" and inst is None:
        raise ConfigError("the scripted rule requires a gadget instance (--builtin gadget:M)")
    init = args.init or ("given" if inst is not None else "balanced_random")
    assignment = None
    if init == "given":
        if args.assignment:
            assignment = json.loads(Path(args.assignment).read_text())
        elif inst is not None:
            assignment = list(inst.initial.assign)
        else:
            raise ConfigError("--init given needs --assignment")
    try:
        start = init_clustering(points, k, init, seed=args.seed, assignment=assignment)
    except InvariantError as e:
        raise ConfigError(str(e)) from None

    summary = {"config": _effective(args), "n": len(points), "d": points.dim, "k": k}
    if args.method == "lloyd":
        lt = lloyd_run(points, start, max_iters=args.max_iters or 10_000)
        if args.trace:
            with open(args.trace, "w") as fh:
                for i, (assign, centers) in enumerate(lt.rounds):
                    rec = {
                        "round": i,
                        "assignment": list(assign),
                        "centers": [[hio.format_scalar(c) for c in ctr] for ctr in centers],
                    }
                    fh.write(hio.dumps_line(rec))
        summary.update(
            method="lloyd",
            rounds=lt.iterations,
            converged=lt.converged,
            final_potential=hio.format_scalar(lloyd_potential(points, lt.assign, lt.centers)),
            assignment=list(lt.assign),
        )
        code = EX_OK if lt.converged else EX_MAX_ITERS
    else:
        script = None
        roles = None
        if args.rule == "scripted":
            from hartigan_lab.lower_bound import scripted_sequence

            script = scripted_sequence(inst.m)
        if inst is not None:
            roles = inst.roles
        rule = make_rule(args.rule, seed=args.seed, script=script)
        fh = open(args.trace, "w") if args.trace else None
        try:
            def stream(i, mv, _clustering):
                if fh is not None:
                    fh.write(hio.dumps_line(hio.move_record(i, mv, roles[mv.point] if roles else None)))

            try:
                trace = hw_run(points, start, rule, max_iters=args.max_iters, callback=stream)
            except ScriptInvalidError as e:
                print(f"error: {e}", file=sys.stderr)
                return EX_FAIL
        finally:
            if fh is not None:
                fh.close()
        final = trace.clustering
        summary.update(
            method="hw",
            iterations=trace.iterations,
            terminated=trace.terminated.value,
            initial_potential=hio.format_scalar(trace.initial_potential),
            final_potential=hio.format_scalar(trace.final_potential),
            is_hw_local_opt=is_hw_local_opt(final, points),
            is_lloyd_local_opt=is_lloyd_local_opt(final, points),
            assignment=list(final.assign),
        )
        code = EX_MAX_ITERS if trace.terminated == Termination.MAX_ITERS else EX_OK
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def cmd_lowerbound(args) -> int:
    from hartigan_lab.lower_bound import build_instance, scripted_sequence, verify_sequence

    if args.m < 2:
        raise ConfigError("m must be ≥ 2")
    try:
        inst = build_instance(args.m, max_m=args.max_m)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    moves = scripted_sequence(args.m)
    if not (args.verify or args.trace or args.report):
        print(f"moves={len(moves)}")
        return EX_OK
    fh = open(args.trace, "w") if args.trace else None

    def stream(i, mv):
        if fh is not None:
            fh.write(hio.dumps_line(hio.move_record(i, mv, moves[i].role)))

    try:
        report = verify_sequence(inst, moves, check_local_opt=args.verify, on_move=stream)
    except ScriptInvalidError as e:
        print(f"moves={len(moves)} verification FAILED: {e}")
        return EX_FAIL
    finally:
        if fh is not None:
            fh.close()
    if args.report:
        doc = report.to_dict()
        doc["config"] = _effective(args)
        hio.dump_json(doc, args.report)
    if args.verify:
        status = "min_gain>0" if report.ok else "min_gain<=0"
        print(f"moves={report.moves} {status}")
        print(
            f"min_gain={hio.format_scalar(report.min_gain)} "
            f"final_local_opt={str(report.final_is_local_opt).lower()}"
        )
        return EX_OK if report.ok else EX_FAIL
    print(f"moves={report.moves}")
    return EX_OK


def cmd_verify_appendix(args) -> int:
    from hartigan_lab.lower_bound import appendix_inequalities

    vals = appendix_inequalities()
    width = max(len(name) for name, _ in vals)
    for name, v in vals:
        print(f"{name:<{width}}  {hio.format_scalar(v):>8}  {float(v):.6f}")
    return EX_OK if all(v > 0 for _, v in vals) else EX_FAIL


def cmd_smoothed(args) -> int:
    from hartigan_lab.smoothed import smoothed_sweep

    if args.mode == "exact":
        raise ConfigError("Gaussian perturbation requires float mode")
    if args.builtin:
        base = _builtin(args.builtin)
    elif args.input:
        base = _load_points(args, exact=False)
        if args.k is None:
            raise ConfigError("--k is required with --input")
    else:
        raise ConfigError("smoothed needs --input or --builtin")
    if args.rule == "scripted" and (not args.builtin or any(s != 0 for s in args.sigma)):
        raise ConfigError("the scripted rule needs a gadget instance and sigma=0")
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    if any(s < 0 for s in args.sigma):
        raise ConfigError("sigma must be non-negative")
    try:
        result = smoothed_sweep(
            base,
            args.k,
            args.sigma,
            trials=args.trials,
            seed=args.seed,
            rule=args.rule,
            init=args.init,
            max_iters=args.max_iters,
            workers=args.workers,
        )
    except (ValueError, InvariantError) as e:
        raise ConfigError(str(e)) from None
    text = result.to_csv(timing=args.timing)
    if args.out:
        Path(args.out).write_text(text)
        meta = {"config": _effective(args), "sweep": result.config}
        hio.dump_json(meta, str(args.out) + ".meta.json")
    else:
        sys.stdout.write(text)
    return EX_OK


COMMANDS = {
    "run": cmd_run,
    "lowerbound": cmd_lowerbound,
    "verify-appendix": cmd_verify_appendix,
    "smoothed": cmd_smoothed,
}


def main(argv=None) -> int:
    try:
        args = _parse(sys.argv[1:] if argv is None else list(argv))
    except UsageError as e:
        print(e, file=sys.stderr)
        return EX_USAGE
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_CONFIG
    except SystemExit as e:  # --help
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_CONFIG


if __name__ == "__main__":
    sys.exit(main())
