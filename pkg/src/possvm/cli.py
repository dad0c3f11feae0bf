"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or model error, 3 training did
not converge (or, for ``compare``, the two classifiers disagree).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import dataio
from .core import Dataset, GramOperator, KernelSpec
from .errors import PossvmError
from .oracle import brute_force_max_margin_2d, enumerate_1d
from .possibilistic import (PossTrainConfig, train_possibilistic_kernel,
                            train_possibilistic_linear)
from .probabilistic import MulticlassModel, ProbTrainConfig, train_probabilistic
from .svm import HARD, SvmConfig, train_svm
from .uncertainty import ZERO_LIKELIHOOD, generalized_log_likelihood, sigmoid

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOT_CONVERGED = 0, 1, 2, 3

COSINE_THRESHOLD = 0.999
MARGIN_GAP_THRESHOLD = 1e-3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _kernel_args(p):
    p.add_argument("--kernel", choices=["linear", "rbf", "poly"], default="linear")
    p.add_argument("--sigma", type=float, help="gaussian (rbf) kernel width")
    p.add_argument("--degree", type=int, help="polynomial kernel degree")


def _penalty(text):
    if text == HARD:
        return HARD
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or {HARD!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("C must be positive")
    return value


def _bounds(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        vals = []
    if len(vals) != 4 or vals[0] >= vals[1] or vals[2] >= vals[3]:
        raise argparse.ArgumentTypeError("bounds must be xmin,xmax,ymin,ymax with min < max")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="possvm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic CSV dataset")
    g.add_argument("--shape", choices=["blobs", "xor", "circles", "overlap1d"], required=True)
    g.add_argument("--n", type=int, default=20, help="samples per class")
    g.add_argument("--noise", type=float, default=1.0)
    g.add_argument("--sep", type=float, default=8.0, help="blob centre distance in noise units")
    g.add_argument("--classes", type=int, default=2, help="number of blobs (blobs only)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train a classifier",
                       description="CSV files hold feature columns then the label column.")
    t.add_argument("--method", choices=["prob", "poss", "svm"], required=True)
    _kernel_args(t)
    t.add_argument("--C", type=_penalty, default=None, help=f"SVM penalty or {HARD!r}")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--max-iter", type=int, default=None)
    t.add_argument("--tol", type=float, default=None)
    t.add_argument("--json", action="store_true", help="print the report as JSON")

    p = sub.add_parser("predict", help="label a CSV with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")

    c = sub.add_parser("compare", help="possibilistic classifier vs hard-margin SVM")
    c.add_argument("--data", required=True)
    _kernel_args(c)
    c.add_argument("--seed", type=int, default=0)

    lk = sub.add_parser("likelihood", help="generalised log-likelihood of a model")
    lk.add_argument("--data", required=True)
    lk.add_argument("--model", required=True)
    lk.add_argument("--tnorm", choices=["product", "min", "lukasiewicz"], required=True)

    gr = sub.add_parser("grid", help="decision values on a 2-D grid (TSV)")
    gr.add_argument("--model", required=True)
    gr.add_argument("--bounds", type=_bounds, required=True)
    gr.add_argument("--res", type=int, default=50)
    gr.add_argument("--out", required=True)
    return parser


def _kernel_from(args) -> KernelSpec:
    if args.kernel == "rbf":
        if args.sigma is None:
            raise UsageError("--kernel rbf requires --sigma")
        if args.degree is not None:
            raise UsageError("--degree does not apply to the rbf kernel")
        if not args.sigma > 0:
            raise UsageError("--sigma must be positive")
        return KernelSpec.gaussian(args.sigma)
    if args.kernel == "poly":
        if args.degree is None:
            raise UsageError("--kernel poly requires --degree")
        if args.sigma is not None:
            raise UsageError("--sigma does not apply to the poly kernel")
        if args.degree < 1:
            raise UsageError("--degree must be >= 1")
        return KernelSpec.polynomial(args.degree)
    if args.sigma is not None or args.degree is not None:
        raise UsageError("--sigma/--degree need --kernel rbf or poly")
    return KernelSpec.linear()


def _print_report(report, as_json):
    if as_json:
        print(json.dumps(report.to_dict(), indent=1, default=float))
        return
    print(f"objective:  {report.final_objective:.12g}")
    if report.margin is not None:
        print(f"margin:     {report.margin:.12g}")
    if report.overlap is not None:
        print(f"overlap:    {report.overlap:.12g}")
    print(f"iterations: {report.iterations}")
    print(f"converged:  {'yes' if report.converged else 'no'}")


def cmd_gen(args):
    spec = dataio.SyntheticSpec(args.shape, args.n, args.noise, args.sep, args.seed, args.classes)
    dataio.save_csv(dataio.generate_synthetic(spec), args.out)
    return EXIT_OK


def cmd_train(args):
    kernel = _kernel_from(args)
    if args.method == "prob":
        if kernel.family != "linear":
            raise UsageError("the probabilistic trainer is linear; drop --kernel")
        if args.C is not None:
            raise UsageError("--C applies only to --method svm")
        kw = {"seed": args.seed}
        if args.max_iter is not None:
            kw["max_iterations"] = args.max_iter
        if args.tol is not None:
            kw["tolerance"] = args.tol
        model, report = train_probabilistic(dataio.load_csv(args.data), ProbTrainConfig(**kw))
    elif args.method == "poss":
        if args.C is not None:
            raise UsageError("the possibilistic trainer has no error penalty; drop --C")
        kw = {"seed": args.seed}
        if args.max_iter is not None:
            kw["max_iterations"] = args.max_iter
        if args.tol is not None:
            kw["tolerance"] = args.tol
        data = dataio.load_csv(args.data, two_class=True)
        cfg = PossTrainConfig(**kw)
        if kernel.family == "linear":
            model, report = train_possibilistic_linear(data, cfg)
        else:
            model, report = train_possibilistic_kernel(data, kernel, cfg)
    else:
        kw = {"seed": args.seed, "penalty": HARD if args.C is None else args.C}
        if args.max_iter is not None:
            kw["max_passes"] = args.max_iter
        if args.tol is not None:
            kw["kkt_tolerance"] = args.tol
        model, report = train_svm(dataio.load_csv(args.data, two_class=True), kernel,
                                  SvmConfig(**kw))
    dataio.save_model(model, args.out)
    _print_report(report, args.json)
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_predict(args):
    model = dataio.load_model(args.model)
    X, y = dataio.read_table(args.data, dimension=model.dimension)
    _, pred = dataio.decision_and_label(model, X)
    if y is not None:
        truth = y
        if not isinstance(model, MulticlassModel) and set(np.unique(y)) <= {0, 1}:
            truth = np.where(y == 0, -1, 1)
        print(f"accuracy: {float(np.mean(pred == truth)):.6f}")
    lines = []
    for k, x in enumerate(X):
        cols = [repr(float(v)) for v in x]
        if y is not None:
            cols.append(str(int(y[k])))
        cols.append(str(int(pred[k])))
        lines.append(",".join(cols))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def compare_classifiers(data: Dataset, kernel: KernelSpec, seed: int = 0) -> dict:
    """Train both classifiers and measure their agreement."""
    data = data.as_two_class()
    cfg = PossTrainConfig(seed=seed)
    svm_model, svm_report = train_svm(data, kernel, SvmConfig(seed=seed))
    c = svm_model.coefficients
    if kernel.family == "linear":
        poss_model, poss_report = train_possibilistic_linear(data, cfg)
        w_svm = data.features.T @ c
        cosine = float(poss_model.weights @ w_svm / np.linalg.norm(w_svm))
    else:
        poss_model, poss_report = train_possibilistic_kernel(data, kernel, cfg)
        beta = poss_model.coefficients
        G = GramOperator(kernel, data.features)
        Gc = G.matvec(c)
        cosine = float(beta @ Gc / math.sqrt(beta @ G.matvec(beta) * (c @ Gc)))
    m_poss = (poss_report.margin if poss_report.margin is not None
              else -poss_report.overlap)
    m_svm = svm_report.margin if svm_report.margin is not None else -svm_report.overlap
    out = {
        "cosine": cosine,
        "possibilistic_margin": m_poss,
        "svm_margin": m_svm,
        "relative_margin_gap": abs(m_poss - m_svm) / abs(m_svm),
        "svm_converged": svm_report.converged,
        "oracle_margin": None,
    }
    if kernel.family == "linear" and data.dimension == 2:
        out["oracle_margin"] = brute_force_max_margin_2d(data).margin
    elif kernel.family == "linear" and data.dimension == 1:
        out["oracle_margin"] = enumerate_1d(data).margin
    out["agree"] = bool(cosine >= COSINE_THRESHOLD
                        and out["relative_margin_gap"] <= MARGIN_GAP_THRESHOLD)
    return out


def cmd_compare(args):
    kernel = _kernel_from(args)
    res = compare_classifiers(dataio.load_csv(args.data, two_class=True), kernel, args.seed)
    print(f"cosine:               {res['cosine']:.12f}")
    print(f"possibilistic margin: {res['possibilistic_margin']:.12g}")
    print(f"svm margin:           {res['svm_margin']:.12g}")
    print(f"relative margin gap:  {res['relative_margin_gap']:.3e}")
    if res["oracle_margin"] is not None:
        print(f"oracle margin:        {res['oracle_margin']:.12g}")
    print(f"agree (cosine >= {COSINE_THRESHOLD}, gap <= {MARGIN_GAP_THRESHOLD:g}): "
          f"{'yes' if res['agree'] else 'no'}")
    return EXIT_OK if res["agree"] else EXIT_NOT_CONVERGED


def model_measures(model, data: Dataset) -> dict:
    """Per-class uncertainty measures ``p(h | x_i)`` for the samples of class h."""
    if isinstance(model, MulticlassModel):
        post = model.posteriors(data.features)
        out = {}
        for h, label in enumerate(model.classes):
            mask = data.labels == label
            if mask.any():
                out[int(label)] = post[mask, h].tolist()
        unknown = set(data.labels.tolist()) - set(model.classes.tolist())
        if unknown:
            raise PossvmError(f"labels {sorted(unknown)} are not classes of the model")
        return out
    data = data.as_two_class()
    f = model.decision_function(data.features)
    return {1: sigmoid(f[data.labels == 1]).tolist(),
            -1: sigmoid(-f[data.labels == -1]).tolist()}


def cmd_likelihood(args):
    model = dataio.load_model(args.model)
    data = dataio.load_csv(args.data)
    value = generalized_log_likelihood(model_measures(model, data), args.tnorm)
    if value == ZERO_LIKELIHOOD:
        print("log-likelihood: -inf (a class has zero conjoined measure)")
    else:
        print(f"log-likelihood: {value:.12g}")
    return EXIT_OK


def cmd_grid(args):
    model = dataio.load_model(args.model)
    if args.res < 1:
        raise UsageError("--res must be >= 1")
    dataio.write_grid_tsv(dataio.export_decision_grid(model, args.bounds, args.res), args.out)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "predict": cmd_predict,
            "compare": cmd_compare, "likelihood": cmd_likelihood, "grid": cmd_grid}


def run(arguments) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(arguments))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"possvm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PossvmError, OSError) as exc:
        print(f"possvm {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
