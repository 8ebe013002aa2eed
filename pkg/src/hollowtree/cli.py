"""``hollowtree`` command line: train, explain, baselines, pdp, hots, demo-iris."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .cart import DecisionTree, fit_tree
from .contributions import explain_prediction
from .dataset import Dataset, DatasetError, binarize, load_csv, load_iris_binary, stratified_split
from .gbdt import BoostedModel, Hyperparams, fit_gbdt
from .hots import run_hots_cv
from .importance import gini_importance, pdp_1d, pdp_2d, permutation_importance
from .metrics import evaluate
from .report import FORMAT_VERSION, canonical_json, envelope, render_report

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONFIG = 4
EXIT_DATA = 5

SEED_ENV = "HOLLOWTREE_SEED"


class ConfigError(ValueError):
    """Invalid combination of command-line settings."""


@dataclass
class RunConfig:
    subcommand: str
    data: str | None = None
    label_col: str | None = None
    positive: str | None = None
    negative: str | None = None
    hyperparams: dict = field(default_factory=dict)
    folds: int | None = None
    threshold: float | None = None
    seed: int = 0
    out: str | None = None
    options: dict = field(default_factory=dict)
    format_version: str = FORMAT_VERSION

    def to_dict(self) -> dict:
        return asdict(self)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _add_data_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--data", required=required, help="CSV file with a header row")
    p.add_argument("--label-col", default="label", help="label column name (default: label)")
    p.add_argument("--positive", help="raw label mapped to class 1")
    p.add_argument("--negative", help="raw label mapped to class 0")


def _add_hyper_args(p: argparse.ArgumentParser) -> None:
    d = Hyperparams()
    p.add_argument("--n-rounds", type=int, default=d.n_rounds)
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--max-depth", type=int, default=None, help="tree depth (default: 4 single tree, 6 boosted)")
    p.add_argument("--reg-lambda", type=float, default=d.reg_lambda)
    p.add_argument("--base-score", type=float, default=d.base_score)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help=f"random seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--out", default="hollowtree_out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hollowtree", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("train", help="fit a single tree or a boosted model and save it as JSON")
    _add_data_args(p)
    _add_hyper_args(p)
    _add_common(p)
    p.add_argument("--model", choices=("tree", "gbdt"), default="gbdt")
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--test-fraction", type=float, default=0.25, help="stratified holdout share; 0 disables")
    p.add_argument("--dump-model", action="store_true", help="also print the model JSON to stdout")

    p = sub.add_parser("explain", help="per-feature contributions for one row")
    p.add_argument("--model", required=True, help="model JSON written by 'train'")
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", default="label")
    p.add_argument("--row", type=int, required=True, help="0-based data row index")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--sort", choices=("abs", "signed"), default="abs")

    p = sub.add_parser("baselines", help="gini, permutation and partial-dependence baselines on a single tree")
    _add_data_args(p)
    _add_common(p)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--repeats", type=int, default=30)
    p.add_argument("--grid-size", type=int, default=50)
    p.add_argument("--pdp-feature", action="append", help="feature for a 1-D PDP (repeatable; default: top gini)")
    p.add_argument("--pdp-pair", nargs=2, metavar=("F1", "F2"), help="features for a 2-D PDP")

    p = sub.add_parser("pdp", help="partial dependence of one feature or a feature pair")
    _add_data_args(p)
    _add_hyper_args(p)
    _add_common(p)
    p.add_argument("--model", choices=("tree", "gbdt"), default="tree")
    p.add_argument("--feature", required=True)
    p.add_argument("--feature2")
    p.add_argument("--grid-size", type=int, default=50)

    p = sub.add_parser("hots", help="cross-validated directional importance for a boosted model")
    _add_data_args(p)
    _add_hyper_args(p)
    _add_common(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.70)

    p = sub.add_parser("demo-iris", help="baselines and HOTS on the bundled binarized Iris data")
    _add_common(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.70)
    return parser


def _load(args) -> Dataset:
    ds = load_csv(args.data, args.label_col)
    if args.positive is not None or args.negative is not None:
        if args.positive is None or args.negative is None:
            raise ConfigError("--positive and --negative must be given together")
        ds = binarize(ds, args.positive, args.negative)
    elif not ds.is_binary:
        raise DatasetError(
            f"labels in {args.label_col!r} are not 0/1; pass --positive and --negative to binarize"
        )
    return ds


def _hyperparams(args, model: str = "gbdt") -> Hyperparams:
    depth = args.max_depth if args.max_depth is not None else (4 if model == "tree" else 6)
    try:
        return Hyperparams(args.n_rounds, args.learning_rate, depth, args.reg_lambda, args.base_score)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _config(args, **extra) -> RunConfig:
    cfg = RunConfig(
        subcommand=args.subcommand,
        data=getattr(args, "data", None),
        label_col=getattr(args, "label_col", None),
        positive=getattr(args, "positive", None),
        negative=getattr(args, "negative", None),
        seed=args.seed,
        out=getattr(args, "out", None),
    )
    for k, v in extra.items():
        if hasattr(cfg, k) and k != "options":
            setattr(cfg, k, v)
        else:
            cfg.options[k] = v
    return cfg


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _fit_model(kind: str, ds: Dataset, hp: Hyperparams, min_samples_leaf: int = 1):
    if kind == "tree":
        return fit_tree(ds, hp.max_depth, min_samples_leaf)
    return fit_gbdt(ds, hp)


def cmd_train(args) -> int:
    ds = _load(args)
    hp = _hyperparams(args, args.model)
    if not 0.0 <= args.test_fraction < 1.0:
        raise ConfigError(f"--test-fraction must lie in [0, 1), got {args.test_fraction}")
    metrics = {}
    if args.test_fraction > 0:
        train, test = stratified_split(ds, args.test_fraction, args.seed)
        model = _fit_model(args.model, ds.subset(train), hp, args.min_samples_leaf)
        metrics["holdout"] = evaluate(model, ds.subset(test)).to_dict()
        metrics["n_train"], metrics["n_test"] = len(train), len(test)
    model = _fit_model(args.model, ds, hp, args.min_samples_leaf)
    metrics["train"] = evaluate(model, ds).to_dict()
    hyper = hp.to_dict() if args.model == "gbdt" else {"max_depth": hp.max_depth}
    cfg = _config(args, hyperparams=hyper, model=args.model, min_samples_leaf=args.min_samples_leaf,
                  test_fraction=args.test_fraction)
    out = Path(args.out)
    model_json = json.dumps(model.to_dict(), sort_keys=True, indent=1) + "\n"
    _write(out / "model.json", model_json)
    _write(out / "metrics.json", canonical_json(envelope("metrics", metrics, cfg.to_dict())))
    if args.dump_model:
        sys.stdout.write(model_json)
    else:
        print(f"wrote {out / 'model.json'}: " + ", ".join(
            f"{split} accuracy {m['accuracy']:.3f}" for split, m in metrics.items() if isinstance(m, dict)))
    return EXIT_OK


def load_model(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = doc.get("model")
    if kind == "decision_tree":
        return DecisionTree.from_dict(doc)
    if kind == "boosted":
        return BoostedModel.from_dict(doc)
    raise ConfigError(f"{path}: unknown model type {kind!r}")


def cmd_explain(args) -> int:
    model = load_model(args.model)
    ds = load_csv(args.data, args.label_col)
    if ds.feature_names != tuple(model.feature_names):
        raise DatasetError(f"data features {list(ds.feature_names)} do not match model features {list(model.feature_names)}")
    if not 0 <= args.row < ds.n_rows:
        raise ConfigError(f"--row {args.row} outside [0, {ds.n_rows})")
    x = ds.rows[args.row]
    rows = explain_prediction(model, x, sort=args.sort)
    space = "probability" if isinstance(model, DecisionTree) else "log_odds"
    pred = model.predict_proba(x)
    if args.format == "json":
        doc = {
            "row": args.row,
            "space": space,
            "probability": pred,
            "predicted_class": int(pred >= 0.5),
            "rows": [{"feature": r.feature, "weight": r.weight, "value": r.value, "is_bias": r.is_bias} for r in rows],
        }
        sys.stdout.write(canonical_json(doc))
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature", "weight", "value", "is_bias"])
        for r in rows:
            w.writerow([r.feature, f"{r.weight:.6g}", f"{r.value:.6g}", int(r.is_bias)])
        sys.stdout.write(buf.getvalue())
    else:
        print(f"Class = {int(pred >= 0.5)}, probability = {pred:.3f}  ({space})")
        print(f"{'Contribution':>12}  {'Feature':<24} Value")
        for r in rows:
            name = "BIAS" if r.is_bias else r.feature
            print(f"{r.weight:>+12.3f}  {name:<24} {r.value:.2f}")
    return EXIT_OK


def _baselines(ds: Dataset, out: Path, max_depth, min_samples_leaf, repeats, grid_size, seed,
               pdp_features=None, pdp_pair=None, config=None) -> dict:
    tree = fit_tree(ds, max_depth, min_samples_leaf)
    gini = gini_importance(tree)
    perm = permutation_importance(tree, ds, repeats, seed)
    render_report(gini, out, config=config)
    render_report(perm, out, config=config)
    if not pdp_features:
        pdp_features = [ds.feature_names[gini.ranking()[0]]]
    for f in pdp_features:
        render_report(pdp_1d(tree, ds, f, grid_size), out, config=config)
    if pdp_pair:
        render_report(pdp_2d(tree, ds, pdp_pair[0], pdp_pair[1], grid_size), out, config=config)
    summary = {
        "gini": gini.to_dict(),
        "permutation": perm.to_dict(),
        "tree": tree.to_dict(),
        "train_metrics": evaluate(tree, ds).to_dict(),
    }
    _write(out / "baselines.json", canonical_json(envelope("baselines", summary, config)))
    return summary


def cmd_baselines(args) -> int:
    ds = _load(args)
    if args.repeats < 1:
        raise ConfigError(f"--repeats must be at least 1, got {args.repeats}")
    if args.grid_size < 2:
        raise ConfigError(f"--grid-size must be at least 2, got {args.grid_size}")
    for f in (args.pdp_feature or []) + list(args.pdp_pair or []):
        if f not in ds.feature_names:
            raise ConfigError(f"unknown feature {f!r}")
    cfg = _config(args, hyperparams={"max_depth": args.max_depth}, min_samples_leaf=args.min_samples_leaf,
                  repeats=args.repeats, grid_size=args.grid_size, pdp_feature=args.pdp_feature,
                  pdp_pair=args.pdp_pair).to_dict()
    out = Path(args.out)
    summary = _baselines(ds, out, args.max_depth, args.min_samples_leaf, args.repeats, args.grid_size,
                         args.seed, args.pdp_feature, args.pdp_pair, cfg)
    top = max(range(ds.n_features), key=lambda j: summary["gini"]["scores"][j])
    print(f"wrote baselines to {out}; top gini feature: {ds.feature_names[top]}")
    return EXIT_OK


def cmd_pdp(args) -> int:
    ds = _load(args)
    if args.grid_size < 2:
        raise ConfigError(f"--grid-size must be at least 2, got {args.grid_size}")
    for f in filter(None, (args.feature, args.feature2)):
        if f not in ds.feature_names:
            raise ConfigError(f"unknown feature {f!r}")
    hp = _hyperparams(args, args.model)
    model = _fit_model(args.model, ds, hp)
    result = pdp_1d(model, ds, args.feature, args.grid_size) if args.feature2 is None else pdp_2d(
        model, ds, args.feature, args.feature2, args.grid_size)
    hyper = hp.to_dict() if args.model == "gbdt" else {"max_depth": hp.max_depth}
    cfg = _config(args, hyperparams=hyper, model=args.model, feature=args.feature, feature2=args.feature2,
                  grid_size=args.grid_size)
    paths = render_report(result, args.out, config=cfg.to_dict())
    print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def _check_hots_args(args) -> None:
    if args.folds < 2:
        raise ConfigError(f"--folds must be at least 2, got {args.folds}")
    if not args.threshold >= 0:
        raise ConfigError(f"--threshold must be non-negative, got {args.threshold}")


def _hots(ds: Dataset, hp: Hyperparams, folds, threshold, seed, out: Path, cfg: dict):
    report = run_hots_cv(ds, hp, folds, threshold, seed)
    render_report(report, out, config=cfg)
    return report


def _summary_line(report) -> str:
    top = report.top_features("positive", 2)
    return (f"mean fold accuracy {report.mean_accuracy:.3f}; top positive-class features: "
            + ", ".join(f"{report.feature_names[j]} ({report.positive_weights[j]:+.3f})" for j in top))


def cmd_hots(args) -> int:
    _check_hots_args(args)
    hp = _hyperparams(args)
    ds = _load(args)
    cfg = _config(args, hyperparams=hp.to_dict(), folds=args.folds, threshold=args.threshold)
    report = _hots(ds, hp, args.folds, args.threshold, args.seed, Path(args.out), cfg.to_dict())
    print(f"wrote {Path(args.out) / 'hots_report.json'}: " + _summary_line(report))
    return EXIT_OK


def cmd_demo_iris(args) -> int:
    _check_hots_args(args)
    ds = load_iris_binary()
    hp = Hyperparams()
    out = Path(args.out)
    cfg = _config(args, data="<bundled iris>", label_col="species", positive="virginica", negative="versicolor",
                  hyperparams=hp.to_dict(), folds=args.folds, threshold=args.threshold,
                  baseline_max_depth=4, repeats=30, grid_size=50)
    cfg_d = cfg.to_dict()
    _baselines(ds, out, 4, 1, 30, 50, args.seed, ["petal length"], ("petal length", "petal width"), cfg_d)
    report = _hots(ds, hp, args.folds, args.threshold, args.seed, out, cfg_d)
    print(f"wrote demo outputs to {out}: " + _summary_line(report))
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "explain": cmd_explain,
    "baselines": cmd_baselines,
    "pdp": cmd_pdp,
    "hots": cmd_hots,
    "demo-iris": cmd_demo_iris,
}


def _fail(code: int, message: str) -> int:
    print(f"hollowtree: error: {message}".replace("\n", " "), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return COMMANDS[args.subcommand](args)
    except ConfigError as e:
        return _fail(EXIT_CONFIG, str(e))
    except DatasetError as e:
        return _fail(EXIT_DATA, str(e))
    except (FileNotFoundError, PermissionError, IsADirectoryError, NotADirectoryError) as e:
        return _fail(EXIT_IO, str(e))
    except OSError as e:
        return _fail(EXIT_IO, str(e))
    except ValueError as e:
        return _fail(EXIT_CONFIG, str(e))


if __name__ == "__main__":
    sys.exit(main())
