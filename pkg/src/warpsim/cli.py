"""Command-line surface: reproducible, config-driven pipeline runs.

Exit codes: 1 usage, 2 data error, 3 numeric failure.  Every artifact
embeds the fully expanded configuration, so identical config + seed gives
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import OvrModel, ovr_predict_dataset, ovr_train
from .core import load_dataset, save_dataset
from .errors import WarpsimError
from .evaluate import (
    Grid,
    confidence_interval,
    evaluation_report,
    generalization_bound_rhs,
    landmark_count_bound,
    nn1_classify,
    pca_project,
)
from .landmarks import (
    METHOD_DSELECT,
    METHOD_KMEDOIDS,
    METHOD_RANDOM,
    LandmarkSet,
    select_dselect,
    select_kmedoids,
    select_random,
)
from .metric import SolverOptions
from .sim import SimilarityModel, feature_matrix
from .synth import make_synthetic_split

_SELECTORS = {
    METHOD_RANDOM: select_random,
    METHOD_KMEDOIDS: select_kmedoids,
    METHOD_DSELECT: select_dselect,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _config_echo(args, command: str) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg["command"] = command
    cfg["version"] = __version__
    return cfg


def _parse_grid(args) -> Grid:
    kwargs = {}
    if args.gamma_grid:
        kwargs["gammas"] = [float(x) for x in args.gamma_grid.split(",")]
    if args.lambda_grid:
        kwargs["lambdas"] = [float(x) for x in args.lambda_grid.split(",")]
    if getattr(args, "validation_fraction", None):
        kwargs["validation_fraction"] = args.validation_fraction
    return Grid(**kwargs)


def _select_landmarks(train, args) -> LandmarkSet:
    if getattr(args, "landmarks_file", None):
        with open(args.landmarks_file, "r", encoding="utf-8") as fh:
            return LandmarkSet.from_dict(json.load(fh))
    return _SELECTORS[args.landmarks](train, args.n_landmarks, args.seed)


def cmd_synth(args) -> int:
    train, test = make_synthetic_split(args.n_train // 2, args.n_test // 2, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(train, out / "train.jsonl")
    save_dataset(test, out / "test.jsonl")
    _write_json(out / "synth_config.json", _config_echo(args, "synth"))
    print(f"wrote {len(train)} train / {len(test)} test series to {out}")
    return 0


def cmd_landmarks(args) -> int:
    train = load_dataset(args.train, normalize=args.normalize)
    lms = _select_landmarks(train, args)
    payload = lms.to_dict()
    payload["config"] = _config_echo(args, "landmarks")
    _write_json(args.out, payload)
    print(f"selected {len(lms.indices)} landmarks ({lms.method}) -> {args.out}")
    return 0


def cmd_train(args) -> int:
    train = load_dataset(args.train, normalize=args.normalize)
    lms = _select_landmarks(train, args)
    grid = _parse_grid(args)
    opts = SolverOptions(max_iters=args.max_iters, seed=args.seed)
    model = ovr_train(train, lms, grid, opts, learn_metric_enabled=not args.identity_metric)
    out = Path(args.out)
    cfg = _config_echo(args, "train")
    payload = model.to_dict()
    payload["config"] = cfg
    _write_json(out / "model.json", payload)
    report = dict(model.report)
    report["config"] = cfg
    _write_json(out / "train_report.json", report)
    print(
        f"trained {len(model.classes)} class models "
        f"(gamma={model.report['gamma']}, lambda={model.report['lambda']}) -> {out}"
    )
    return 0


def _load_model(path) -> OvrModel:
    with open(path, "r", encoding="utf-8") as fh:
        return OvrModel.from_dict(json.load(fh))


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    data = load_dataset(args.data, normalize=args.normalize)
    preds = ovr_predict_dataset(model, data)
    payload = {
        "config": _config_echo(args, "predict"),
        "predictions": [
            {"id": it.series.id, "label": p} for it, p in zip(data.items, preds)
        ],
    }
    _write_json(args.out, payload)
    print(f"predicted {len(preds)} series -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    test = load_dataset(args.test, normalize=args.normalize)
    preds = ovr_predict_dataset(model, test)
    report = evaluation_report(test.labels(), preds, model.classes)
    payload = report.to_dict()
    if args.with_1nn:
        if not args.train:
            raise WarpsimError("--with-1nn needs --train")
        train = load_dataset(args.train, normalize=args.normalize)
        eye = np.eye(train.dim)
        nn_preds = [nn1_classify(train, it.series, eye) for it in test.items]
        payload["nn1_accuracy"] = evaluation_report(test.labels(), nn_preds, model.classes).accuracy
    payload["config"] = _config_echo(args, "eval")
    _write_json(args.out, payload)
    print(f"accuracy {report.accuracy:.4f} on {report.n} series -> {args.out}")
    return 0


def cmd_pca(args) -> int:
    model = _load_model(args.model)
    data = load_dataset(args.data, normalize=args.normalize)
    if args.metric_class == "identity":
        simmodel = model.models[0].similarity
        simmodel = SimilarityModel(
            np.eye(simmodel.dim), simmodel.landmarks, simmodel.gamma, simmodel.lam
        )
    else:
        matches = [cm for cm in model.models if cm.label == args.metric_class]
        if not matches:
            raise WarpsimError(f"model has no class {args.metric_class!r}")
        simmodel = matches[0].similarity
    phi = feature_matrix(data, simmodel)
    coords, fractions = pca_project(phi)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "pca.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("id,label,pc1,pc2\n")
        for it, (x, y) in zip(data.items, coords):
            fh.write(f"{it.series.id},{it.label},{x!r},{y!r}\n")
    _write_json(
        out / "pca_variance.json",
        {
            "explained_variance_fractions": fractions.tolist(),
            "config": _config_echo(args, "pca"),
        },
    )
    print(f"pc1+pc2 explain {fractions.sum():.1%} of variance -> {csv_path}")
    return 0


def cmd_bounds(args) -> int:
    payload = {"config": _config_echo(args, "bounds")}
    payload["generalization_rhs"] = generalization_bound_rhs(
        args.d, args.gamma, args.lam, args.m, args.delta
    )
    if args.epsilon1 is not None and args.tau is not None:
        payload["landmark_count"] = landmark_count_bound(
            args.epsilon1, args.gamma, args.delta, args.tau
        )
    if args.out:
        _write_json(args.out, payload)
    print(json.dumps({k: v for k, v in payload.items() if k != "config"}, sort_keys=True))
    return 0


def _add_common_data_flags(p, with_seed=True):
    p.add_argument("--normalize", action="store_true", help="unit-normalize every time moment on load")
    if with_seed:
        p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker cap (recorded in artifacts; the current implementation is sequential)",
    )


def _add_landmark_flags(p):
    p.add_argument("--landmarks", choices=sorted(_SELECTORS), default=METHOD_RANDOM)
    p.add_argument("--n-landmarks", type=int, default=10)
    p.add_argument("--landmarks-file", help="reuse a landmark set written by the landmarks command")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="warpsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"warpsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the seeded synthetic two-class datasets")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=200)
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("landmarks", help="select and save a landmark set")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    _add_landmark_flags(p)
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_landmarks)

    p = sub.add_parser("train", help="cross-validate, fit metrics and separators")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_landmark_flags(p)
    p.add_argument("--gamma-grid", help="comma-separated gamma grid")
    p.add_argument("--lambda-grid", help="comma-separated lambda grid")
    p.add_argument("--validation-fraction", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument(
        "--identity-metric",
        action="store_true",
        help="skip metric learning and keep the identity metric (baseline)",
    )
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score a model on labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--with-1nn", action="store_true", help="also score the 1NN baseline")
    p.add_argument("--train", help="training data for the 1NN baseline")
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pca", help="export 2-D similarity-space coordinates")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--metric-class",
        default="identity",
        help="class label whose learned metric to use, or 'identity'",
    )
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("bounds", help="evaluate the bound calculators")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--epsilon1", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--out")
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except WarpsimError as exc:
        print(f"warpsim: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"warpsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
