"""Command-line frontend: every computation as a reproducible, scriptable run.

Exit codes: 0 success, 1 a verification sweep found a violation, 2 bad
input, 3 capability limit, 4 solver failure.
"""
from __future__ import annotations

import argparse
import datetime
import json
import sys
import time

import numpy as np

from . import __version__, distill, pauli, qkdrate, qstate as qs, uncert
from .errors import (
    CapabilityError,
    ConstructionError,
    ContractError,
    DimensionError,
    LabelError,
    SolverError,
)

EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_CAPABILITY = 3
EXIT_SOLVER = 4


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _emit(report: dict, rows: list[dict] | None, args) -> None:
    """Write the report (and tabular rows, for CSV) to --out or stdout."""
    report = dict(report)
    report["version"] = __version__
    if not args.no_timestamp:
        report["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if args.format == "json":
        if rows is not None:
            report["rows"] = rows
        text = json.dumps(report, indent=2, default=_fmt) + "\n"
    else:
        lines = [f"# {k}={_fmt(v)}" for k, v in report.items() if k != "rows"]
        if rows:
            cols = list(rows[0])
            lines.append(",".join(cols))
            for r in rows:
                lines.append(",".join(_fmt(r[c]) for c in cols))
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _base_report(args, command: str, **params) -> dict:
    rep = {"command": command, "parameters": params}
    if getattr(args, "seed", None) is not None:
        rep["seed"] = args.seed
    return rep


# ---------------------------------------------------------------- codes ----

_CODES = {"rep3": pauli.repetition3, "shor9": pauli.shor9}


def cmd_codes(args) -> int:
    if args.code not in _CODES:
        print(f"unknown code {args.code!r}; choose from {sorted(_CODES)}", file=sys.stderr)
        return EXIT_BAD_INPUT
    code = _CODES[args.code]()
    if args.subcommand == "table":
        rows = []
        if args.code == "rep3":
            # Classical three-bit repetition table: codeword pair, error
            # position, syndrome bits.
            for pos in (None, 0, 1, 2):
                err = pauli.PauliOp(3, 0 if pos is None else 1 << pos, 0)
                s_z, _ = pauli.syndromes_of(code, err)
                bits0 = "".join(str((err.x_mask >> i) & 1) for i in range(3))
                bits1 = "".join(str(((err.x_mask ^ 0b111) >> i) & 1) for i in range(3))
                rows.append(
                    {
                        "pair": f"({bits0};{bits1})",
                        "position": 0 if pos is None else pos + 1,
                        "syndrome": "".join(str(b) for b in s_z.bits),
                    }
                )
        else:
            for pos in range(code.n):
                for kind, mask in (("X", (1 << pos, 0)), ("Z", (0, 1 << pos))):
                    err = pauli.PauliOp(code.n, *mask)
                    s_z, s_x = pauli.syndromes_of(code, err)
                    rows.append(
                        {
                            "error": f"{kind}{pos + 1}",
                            "sZ": "".join(str(b) for b in s_z.bits),
                            "sX": "".join(str(b) for b in s_x.bits),
                        }
                    )
        vb = pauli.virtual_basis(code)
        report = _base_report(args, f"codes table {args.code}")
        report["virtual_qubits"] = [
            {"index": i + 1, "amplitude": a.letters(), "phase": p.letters()}
            for i, (a, p) in enumerate(vb.pairs)
        ]
        _emit(report, rows, args)
        return 0
    # decode-demo
    noise = pauli.BellDiagonalParams(*args.noise)
    total = 0
    corrected = 0
    rows = []
    for pos in range(code.n):
        for kind in ("X", "Z", "Y"):
            letters = ["I"] * code.n
            letters[pos] = kind
            err = pauli.PauliOp.from_string("".join(letters))
            s_z, s_x = pauli.syndromes_of(code, err)
            corr = pauli.decode_ml(code, s_z, s_x, noise)
            ok = not pauli.residual_is_logical_error(code, err, corr)
            total += 1
            corrected += ok
            rows.append({"error": f"{kind}{pos + 1}", "correction": corr.letters(), "ok": ok})
    report = _base_report(args, f"codes decode-demo {args.code}", noise=list(args.noise))
    report["corrected"] = corrected
    report["total"] = total
    _emit(report, rows, args)
    return 0


# ---------------------------------------------------------- uncertainty ----


def _random_states(relation: str, count: int, seed: int):
    rng = np.random.default_rng(seed)
    for i in range(count):
        if relation == "mu":
            yield f"random-{i}", qs.random_pure({"A": 2}, rng)
        elif relation == "berta":
            yield f"random-{i}", qs.random_density({"A": 2, "B": 2}, rng)
        else:
            yield f"random-{i}", qs.random_pure({"A": 2, "B": 2, "C": 2}, rng)


def _fixture_states(relation: str):
    if relation == "mu":
        yield "fixture-plus", qs.from_amplitudes({"A": 2}, [1, 1])
    elif relation == "berta":
        yield "fixture-epr", qs.epr_pair("A", "B").density()
    else:
        yield "fixture-epr-c", qs.epr_pair("A", "B").tensor(qs.basis_state({"C": 2}, 0))


def _states_from_file(path: str):
    with open(path) as fh:
        items = json.load(fh)
    if not isinstance(items, list):
        items = [items]
    for i, obj in enumerate(items):
        yield f"file-{i}", qs.from_json(json.dumps(obj))


def cmd_uncertainty(args) -> int:
    relation = args.relation
    pair = uncert.zx_pair(2)
    if args.states is None:
        source = _fixture_states(relation)
    elif args.states.startswith("random:"):
        try:
            _, count, seed = args.states.split(":")
            source = _random_states(relation, int(count), int(seed))
        except ValueError:
            print("expected random:N:seed", file=sys.stderr)
            return EXIT_BAD_INPUT
    else:
        source = _states_from_file(args.states)
    rows = []
    min_slack = float("inf")
    for sid, state in source:
        if relation == "mu":
            h1 = uncert._outcome_entropy(state, pair.basis1, list(state.names)[0])
            h2v = uncert._outcome_entropy(state, pair.basis2, list(state.names)[0])
            bound = 1.0
            slack = uncert.check_maassen_uffink(state, pair)
        elif relation == "berta":
            rho = state if isinstance(state, qs.DensityMatrix) else state.density()
            h1 = uncert.measured_cond_entropy(rho, "A", pair.basis1, "B")
            h2v = uncert.measured_cond_entropy(rho, "A", pair.basis2, "B")
            bound = 1.0 + qs.cond_entropy(rho, "A", "B")
            slack = uncert.check_berta(rho, pair, target="A")
        else:
            rho = state.density()
            h1 = uncert.measured_cond_entropy(rho.partial_trace({"A", "B"}), "A", pair.basis1, "B")
            h2v = uncert.measured_cond_entropy(rho.partial_trace({"A", "C"}), "A", pair.basis2, "C")
            bound = 1.0
            slack = uncert.check_tripartite(state, pair, "A", "B", "C")
        min_slack = min(min_slack, slack)
        rows.append({"state": sid, "H1": h1, "H2": h2v, "bound": bound, "slack": slack})
    report = _base_report(args, f"uncertainty {relation}", states=args.states or "fixture")
    report["min_slack"] = min_slack
    report["violations"] = sum(1 for r in rows if r["slack"] < -uncert.SLACK_TOL)
    _emit(report, rows, args)
    return 0 if report["violations"] == 0 else EXIT_CHECK_FAILED


# -------------------------------------------------------------- distill ----


def cmd_distill_sim(args) -> int:
    p = pauli.BellDiagonalParams(*args.p)
    t0 = time.perf_counter()
    run = distill.simulate_distillation(p, args.n, args.n_z, args.n_x, args.trials, args.seed)
    wall = time.perf_counter() - t0
    report = _base_report(
        args,
        "distill sim",
        p=list(args.p),
        n=args.n,
        n_Z=args.n_z,
        n_X=args.n_x,
        trials=args.trials,
    )
    report.update(
        {
            "failures": run.failures,
            "logical_error_rate": run.logical_error_rate,
            "rate": run.rate,
        }
    )
    if not args.no_timestamp:
        # timing is suppressed together with the timestamp so that identical
        # command + seed gives byte-identical files
        report["wall_seconds"] = wall
    if args.log:
        import os

        new = not os.path.exists(args.log)
        with open(args.log, "a") as fh:
            if new:
                fh.write(distill.CSV_HEADER + ",wall_seconds\n")
            fh.write(run.to_csv_row() + f",{wall:.6g}\n")
    _emit(report, None, args)
    return 0


def cmd_distill_channel_code(args) -> int:
    res = distill.channel_code_from_ir(args.p_flip, args.n, args.n_syndrome, args.trials, args.seed)
    report = _base_report(
        args,
        "distill channel-code",
        p_flip=args.p_flip,
        n=args.n,
        n_syndrome=args.n_syndrome,
        trials=args.trials,
    )
    report.update(res)
    _emit(report, None, args)
    return 0


# ------------------------------------------------------------------ qkd ----


def _model(args) -> qkdrate.KeyRateModel:
    return qkdrate.KeyRateModel(args.protocol, q=args.q, m=args.m)


def cmd_qkd_rate(args) -> int:
    r = qkdrate.rate(_model(args), args.delta)
    report = _base_report(args, "qkd rate", protocol=args.protocol, delta=args.delta, q=args.q, m=args.m)
    report["rate"] = r
    _emit(report, None, args)
    return 0


def cmd_qkd_threshold(args) -> int:
    res = qkdrate.threshold(_model(args), tol=args.tol)
    report = _base_report(args, "qkd threshold", protocol=args.protocol, q=args.q, m=args.m, tol=args.tol)
    report.update(json.loads(res.to_json()))
    _emit(report, None, args)
    return 0


def cmd_qkd_optimize(args) -> int:
    report = _base_report(args, "qkd optimize", protocol=args.protocol, m=args.m, tol=args.tol)
    if args.delta is not None:
        q_star, r_star = qkdrate.optimize_preprocessing(args.protocol, args.delta, m=args.m)
        report["parameters"]["delta"] = args.delta
        report.update({"q_star": q_star, "rate_star": r_star})
    else:
        res = qkdrate.optimized_threshold(args.protocol, m=args.m, tol=args.tol)
        report.update(json.loads(res.to_json()))
    _emit(report, None, args)
    return 0


def cmd_qkd_sweep(args) -> int:
    lo, hi, count = args.deltas
    rows = []
    for d in np.linspace(lo, hi, int(count)):
        rows.append(
            {
                "protocol": args.protocol,
                "delta": float(d),
                "q": args.q,
                "m": args.m,
                "rate": qkdrate.rate(_model(args), float(d)),
            }
        )
    report = _base_report(args, "qkd sweep", protocol=args.protocol, q=args.q, m=args.m)
    _emit(report, rows, args)
    return 0


# ---------------------------------------------------------------- parser ---


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write the report to this path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")


def _probs(text: str) -> tuple[float, ...]:
    parts = tuple(float(t) for t in text.split(","))
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected four comma-separated probabilities")
    return parts


def _span(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected lo:hi:count")
    return float(parts[0]), float(parts[1]), int(parts[2])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cqinfo", description=__doc__)
    sub = ap.add_subparsers(dest="group", required=True)

    codes = sub.add_parser("codes", help="stabilizer code tables and decoding demos")
    codes.add_argument("subcommand", choices=("table", "decode-demo"))
    codes.add_argument("code")
    codes.add_argument("--noise", type=_probs, default=(0.85, 0.05, 0.05, 0.05))
    _add_common(codes)
    codes.set_defaults(func=cmd_codes)

    unc = sub.add_parser("uncertainty", help="uncertainty-relation sweeps")
    unc.add_argument("relation", choices=("mu", "berta", "tri"))
    unc.add_argument("states", nargs="?", default=None, help="file path or random:N:seed")
    _add_common(unc)
    unc.set_defaults(func=cmd_uncertainty, format_default="csv")

    dst = sub.add_parser("distill", help="distillation and coding simulations")
    dsub = dst.add_subparsers(dest="subcommand", required=True)
    sim = dsub.add_parser("sim", help="CSS-hashing distillation Monte Carlo")
    sim.add_argument("--p", type=_probs, required=True, help="p00,p01,p10,p11")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--n-z", type=int, required=True)
    sim.add_argument("--n-x", type=int, default=0)
    sim.add_argument("--trials", type=int, default=1000)
    sim.add_argument("--log", default=None, help="append a CSV row to this file")
    _add_common(sim)
    sim.set_defaults(func=cmd_distill_sim)
    cc = dsub.add_parser("channel-code", help="coset channel code over a BSC")
    cc.add_argument("--p-flip", type=float, required=True)
    cc.add_argument("--n", type=int, required=True)
    cc.add_argument("--n-syndrome", type=int, required=True)
    cc.add_argument("--trials", type=int, default=2000)
    _add_common(cc)
    cc.set_defaults(func=cmd_distill_channel_code)

    qkd = sub.add_parser("qkd", help="key rates, thresholds, preprocessing optimization")
    qsub = qkd.add_subparsers(dest="subcommand", required=True)
    for name, fn in (
        ("rate", cmd_qkd_rate),
        ("threshold", cmd_qkd_threshold),
        ("optimize", cmd_qkd_optimize),
        ("sweep", cmd_qkd_sweep),
    ):
        p = qsub.add_parser(name)
        p.add_argument("--protocol", choices=qkdrate.PROTOCOLS, required=True)
        p.add_argument("--q", type=float, default=0.0)
        p.add_argument("--m", type=int, default=1)
        p.add_argument("--tol", type=float, default=1e-5)
        if name == "rate":
            p.add_argument("--delta", type=float, required=True)
        if name == "optimize":
            p.add_argument("--delta", type=float, default=None, help="optimize q at fixed delta instead of the threshold")
        if name == "sweep":
            p.add_argument("--deltas", type=_span, required=True, help="lo:hi:count")
        _add_common(p)
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CapabilityError as exc:
        print(f"capability: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except SolverError as exc:
        print(f"solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConstructionError, ContractError, DimensionError, LabelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
