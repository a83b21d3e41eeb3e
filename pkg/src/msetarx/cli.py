"""Command line interface: ``simulate``, ``fit``, ``stationarity``, ``reproduce``.

Exit status: 0 success, 2 usage error, 3 validation error, 4 numeric or
estimation error. Errors go to stderr as one line of JSON.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import io
from .estimators import ALGORITHMS, FitConfig, fit, residual_diagnostics
from .exceptions import MSETARXError, ValidationError
from .model import ThresholdPartition, check_model
from .simulate import SimulationConfig, make_dgp, simulate_msetarx
from .stationarity import check_regime_stationarity

EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit_error(kind, message, code, problems=None):
    payload = {"error": kind, "exit_code": code, "message": message}
    if problems:
        payload["problems"] = problems
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def _fit_config(doc, args):
    """FitConfig from a config document; a full model document also serves as reference."""
    reference = None
    if "regimes" in doc:
        reference = check_model(io.model_from_dict(doc))
        dims = doc["dims"]
    else:
        dims = doc.get("dims", doc)
    try:
        partition = ThresholdPartition(doc["partition"])
        d, p, q = int(dims["d"]), int(dims["p"]), int(dims.get("q", 0))
    except KeyError as exc:
        raise ValidationError(f"fit config is missing key {exc.args[0]!r}") from exc

    def pick(flag, key, default):
        value = getattr(args, flag)
        return value if value is not None else doc.get(key, default)

    return FitConfig(
        partition=partition,
        d=d,
        p=p,
        q=q,
        algorithm=args.algorithm,
        ridge=float(pick("ridge", "ridge", 1e-3)),
        alpha=float(pick("alpha", "alpha", 1.0)),
        upsilon=pick("upsilon", "upsilon", 1.0),
        record_trajectory=args.trajectory is not None,
        reference=reference,
    ).validate()


def _fit_report(result):
    doc = result.to_dict()
    diag = residual_diagnostics(result)
    doc["residuals"] = {"n": diag["n"], "mean": diag["mean"], "cov": diag["cov"]}
    return doc


def _write_trajectory(path, traj):
    cols = ["step", "regime", "max_abs_error"] + [c for c in ("r", "s") if c in traj]
    keys = ["step", "regime", "error"] + cols[3:]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in zip(*(traj[k].tolist() for k in keys)):
            w.writerow([repr(v) if isinstance(v, float) else str(v) for v in row])


def cmd_simulate(args):
    spec = io.load_model(args.model)
    cfg = SimulationConfig(n_samples=args.n, burn_in=args.burn_in, seed=args.seed)
    sim = simulate_msetarx(spec, cfg)
    F = sim.F if spec.kappa > 0 and spec.q > 0 else None
    io.write_series(args.out, sim.Y, F, sim.regime_trace if args.trace else None)
    return 0


def cmd_fit(args):
    doc = io.load_json(args.model_config)
    cfg = _fit_config(doc, args)
    if args.trajectory and cfg.reference is None:
        raise UsageError("--trajectory needs a full model document as --model-config")
    Y, F, _ = io.read_series(args.data)
    result = fit(Y, F if cfg.q > 0 else None, cfg)
    io.save_report(args.out, _fit_report(result))
    if args.trajectory:
        _write_trajectory(args.trajectory, result.trajectory)
    return 0


def cmd_stationarity(args):
    spec = io.load_model(args.model)
    report = check_regime_stationarity(spec)
    doc = report.to_dict(spec.partition)
    if spec.name:
        doc["model"] = spec.name
    io.save_report(args.out, doc)
    return 0


def _coefficient_rows(spec, result):
    rows = []
    for k, J in enumerate(spec.partition.regimes()):
        est = result.coefficients(J)
        true = spec.regimes[J]
        pairs = [("a0", true.a0[:, None], est["a0"][:, None])]
        pairs += [(f"A{i + 1}", true.A[i], est["A"][i]) for i in range(spec.p)]
        for tau in range(spec.q):
            pairs.append(
                (f"LambdaXi{tau + 1}", true.Lambda @ spec.exogenous.Xi[tau], est["LambdaXi"][tau])
            )
        for name, T_, E in pairs:
            for (i, j), tv in np.ndenumerate(T_):
                ev = float(E[i, j])
                rows.append(
                    [k + 1, "".join(map(str, J)), int(result.counts[k]), name, i + 1, j + 1,
                     float(tv), ev, abs(ev - float(tv))]
                )
    return rows


def cmd_reproduce(args):
    spec = make_dgp(args.dgp)
    os.makedirs(args.out_dir, exist_ok=True)
    cfg = SimulationConfig(n_samples=args.n, burn_in=args.burn_in, seed=args.seed)
    sim = simulate_msetarx(spec, cfg)
    F = sim.F if spec.q > 0 else None

    fit_cfg = FitConfig(
        partition=spec.partition,
        d=spec.d,
        p=spec.p,
        q=spec.q,
        algorithm=args.algorithm,
        ridge=args.ridge,
        alpha=args.alpha,
        upsilon=args.upsilon,
    ).validate()
    result = fit(sim.Y, F, fit_cfg)

    path = lambda name: os.path.join(args.out_dir, name)  # noqa: E731
    io.save_model(path("model.json"), spec)
    io.write_series(path("series.csv"), sim.Y, F, sim.regime_trace)
    report = _fit_report(result)
    report["seed"] = args.seed
    report["n_samples"] = args.n
    io.save_report(path("fit.json"), report)
    io.save_report(
        path("stationarity.json"), check_regime_stationarity(spec).to_dict(spec.partition)
    )

    rows = _coefficient_rows(spec, result)
    with open(path("table.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["regime", "index", "regime_time", "block", "row", "col",
                    "true", "estimate", "abs_error"])
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else str(v) for v in r])

    print(f"{args.dgp}: {args.n} samples, seed {args.seed}, {args.algorithm} fit")
    for k, J in enumerate(spec.partition.regimes()):
        a0 = result.coefficients(J)["a0"]
        print(
            f"  regime {k + 1} {J}: regime time {int(result.counts[k]):6d}  "
            f"a0 = ({', '.join(f'{v:.4f}' for v in a0)})"
        )
    print(f"  total regime time {int(result.counts.sum())}; "
          f"max |error| {max(r[-1] for r in rows):.4f}")
    return 0


def build_parser():
    parser = _Parser(prog="msetarx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a model to CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", action="store_true", help="append the regime column")
    p.set_defaults(func=cmd_simulate)

    def algo_options(p, default=None):
        p.add_argument("--algorithm", choices=ALGORITHMS, required=default is None,
                       default=default)
        p.add_argument("--ridge", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--upsilon", type=float)

    p = sub.add_parser("fit", help="estimate coefficients from a CSV series")
    p.add_argument("--model-config", required=True)
    p.add_argument("--data", required=True)
    algo_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--trajectory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("stationarity", help="companion spectral radii of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stationarity)

    p = sub.add_parser("reproduce", help="simulate a published DGP and tabulate estimates")
    p.add_argument("dgp", choices=["dgp1", "dgp2"])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=50_000)
    p.add_argument("--burn-in", type=int, default=1000)
    algo_options(p, default="batch")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command == "reproduce":
            args.ridge = 1e-3 if args.ridge is None else args.ridge
            args.alpha = 1.0 if args.alpha is None else args.alpha
            args.upsilon = 1.0 if args.upsilon is None else args.upsilon
        return args.func(args)
    except UsageError as exc:
        return _emit_error("usage", str(exc), EXIT_USAGE)
    except MSETARXError as exc:
        kind = "validation" if isinstance(exc, ValidationError) else "numeric"
        return _emit_error(kind, str(exc), exc.exit_code, getattr(exc, "problems", None))
    except OSError as exc:
        return _emit_error("io", str(exc), ValidationError.exit_code)


if __name__ == "__main__":
    sys.exit(main())
