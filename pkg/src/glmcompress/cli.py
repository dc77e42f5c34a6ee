"""Command-line front end: ``fit``, ``compress``, ``evaluate`` and ``pipeline``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Any

from . import __version__
from .compression import (
    CENTROID,
    MEDOID,
    VARIANCE_FLOOR,
    compress,
    select_k,
    ward_cluster,
)
from .data import Dataset, Standardizer, load_csv, standardize
from .ensemble import (
    BagConfig,
    Ensemble,
    build_coefficient_matrix,
    build_significance_matrix,
    fit_ensemble,
)
from .evaluate import evaluate_datasets
from .glm import SelectionConfig

log = logging.getLogger("glmcompress")

# execution-only options; kept out of recorded configs so outputs do not depend on them
_UNRECORDED = {"threads", "out", "func", "verbose"}


def _meta(args: argparse.Namespace) -> dict[str, Any]:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _UNRECORDED}
    return {"tool": "glmcompress", "version": __version__, "seed": args.seed, "config": config}


def _comment(args) -> str:
    return json.dumps(_meta(args), sort_keys=True)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _dump(obj: dict[str, Any]) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _bag_config(args) -> BagConfig:
    return BagConfig(
        n_bags=args.bags,
        features_per_bag=args.features_per_bag,
        candidate_cap=args.candidate_cap,
        selection=SelectionConfig(criterion=args.criterion, max_terms=args.max_terms),
        seed=args.seed,
    )


def _load(path: str, outcome: str, impute: bool) -> Dataset:
    return load_csv(path, outcome, impute_missing=impute)


def cmd_fit(args) -> Ensemble:
    data = _load(args.data, args.outcome, args.impute)
    if args.standardize:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            train, record = standardize(data)
    else:
        train, record = data, Standardizer.identity(data.n_features)
    ensemble = fit_ensemble(train, _bag_config(args), threads=args.threads)
    meta = {
        "data": args.data,
        "outcome": args.outcome,
        "impute": args.impute,
        "standardizer": record.to_dict(),
        "labelMapping": data.metadata.get("label_mapping"),
    }
    ensemble = Ensemble(
        ensemble.models,
        ensemble.feature_names,
        ensemble.family,
        ensemble.bag_seed,
        ensemble.config,
        meta,
    )
    out = Path(args.out)
    _write(out / "ensemble.json", _dump({"meta": _meta(args), **ensemble.to_dict()}))
    comment = _comment(args)
    _write(out / "B.csv", build_coefficient_matrix(ensemble).to_csv(comment))
    _write(out / "S.csv", build_significance_matrix(ensemble).to_csv(comment))
    return ensemble


def _training_data(args, ensemble: Ensemble) -> Dataset:
    meta = ensemble.training_meta
    path = args.data or meta.get("data")
    outcome = args.outcome or meta.get("outcome")
    if not path or not outcome:
        raise ValueError("centroid compression needs --data and --outcome")
    data = _load(path, outcome, bool(meta.get("impute", False)))
    if tuple(data.feature_names) != ensemble.feature_names:
        raise ValueError("training data columns do not match the ensemble's features")
    if "standardizer" in meta:
        data = Standardizer.from_dict(meta["standardizer"]).apply(data)
    return data


def cmd_compress(args, ensemble: Ensemble | None = None) -> None:
    if ensemble is None:
        raw = json.loads(Path(args.ensemble).read_text(encoding="utf-8"))
        ensemble = Ensemble.from_dict(raw)
    S = build_significance_matrix(ensemble)
    dendrogram = ward_cluster(S)
    k_max = min(args.k_max, ensemble.d) if args.k_max else None
    profile = select_k(S, dendrogram, k_max, threads=args.threads, variance_floor=args.variance_floor)
    k = profile.selected_k
    if args.k is not None:
        if not 1 <= args.k <= ensemble.d:
            raise ValueError(f"--k must be in [1, {ensemble.d}]")
        k = args.k
    out = Path(args.out)
    _write(out / "costs.csv", profile.to_csv(_comment(args)))
    strategies = [MEDOID, CENTROID] if args.strategy == "both" else [args.strategy]
    training = _training_data(args, ensemble) if CENTROID in strategies else None
    for strategy in strategies:
        comp = compress(ensemble, S, dendrogram, k, strategy, training, args.min_term_frequency)
        payload = {"meta": _meta(args), "selectedByCost": profile.selected_k, **comp.to_dict()}
        _write(out / f"compressed_{strategy}.json", _dump(payload))


def cmd_evaluate(args) -> None:
    datasets = {}
    for path in args.data:
        name = Path(path).stem
        if name in datasets:
            raise ValueError(f"duplicate dataset name {name!r}")
        datasets[name] = _load(path, args.outcome, args.impute)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = evaluate_datasets(
            datasets,
            _bag_config(args),
            args.folds,
            args.repeats,
            args.seed,
            k_max=args.k_max,
            weighting=args.weighting,
            standardize_features=args.standardize,
            threads=args.threads,
            variance_floor=args.variance_floor,
        )
    for w in caught:
        if "t-tests" in str(w.message):
            print(f"warning: {w.message}", file=sys.stderr)
    out = Path(args.out)
    payload = report.to_dict()
    payload["meta"] = _meta(args)
    _write(out / "report.json", _dump(payload))
    _write(out / "report.txt", f"# {_comment(args)}\n" + report.to_text())


def cmd_pipeline(args) -> None:
    ensemble = cmd_fit(args)
    cmd_compress(args, ensemble)
    cmd_evaluate(argparse.Namespace(**{**vars(args), "data": [args.data]}))


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=".")
    p.add_argument("-v", "--verbose", action="store_true")


def _bagging(p: argparse.ArgumentParser) -> None:
    p.add_argument("--outcome", required=True)
    p.add_argument("--bags", type=int, default=100)
    p.add_argument("--criterion", choices=("aic", "bic"), default="bic")
    p.add_argument("--features-per-bag", type=int, default=None)
    p.add_argument("--candidate-cap", type=int, default=None)
    p.add_argument("--max-terms", type=int, default=10)
    p.add_argument("--impute", action="store_true", help="mean-impute missing feature cells")
    p.add_argument(
        "--no-standardize", dest="standardize", action="store_false",
        help="fit on raw feature scales",
    )


def _compression(p: argparse.ArgumentParser, with_data: bool = True) -> None:
    p.add_argument("--strategy", choices=(MEDOID, CENTROID, "both"), default="both")
    p.add_argument("--k", type=int, default=None, help="override the cost-selected k")
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--variance-floor", type=float, default=VARIANCE_FLOOR)
    p.add_argument("--min-term-frequency", type=float, default=0.0)
    if with_data:
        p.add_argument("--data", default=None)
        p.add_argument("--outcome", default=None)


def _evaluation(p: argparse.ArgumentParser) -> None:
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--weighting", choices=("size", "uniform"), default="size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glmcompress", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a bagged GLM ensemble; write ensemble.json, B.csv, S.csv")
    p.add_argument("--data", required=True)
    _bagging(p)
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compress", help="compress a fitted ensemble; write costs.csv and JSON")
    p.add_argument("--ensemble", required=True)
    _compression(p)
    _common(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("evaluate", help="cross-validate full vs compressed ensembles")
    p.add_argument("--data", required=True, nargs="+")
    _bagging(p)
    _evaluation(p)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--variance-floor", type=float, default=VARIANCE_FLOOR)
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="fit, compress and evaluate one dataset")
    p.add_argument("--data", required=True)
    _bagging(p)
    _compression(p, with_data=False)
    _evaluation(p)
    _common(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
