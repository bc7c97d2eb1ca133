"""Batch command-line front end.

Subcommands: prepare, split, train, eval, predict, correlation.  Settings
resolve as flags over an optional JSON config file over built-in defaults;
anything random sits behind a required seed.  Exit code 0 on success,
2 with a one-line diagnostic on stderr otherwise.
"""

import argparse
import json
import shutil
import sys

import numpy as np

from .data import (
    build_views,
    categories_to_domains,
    movielens_to_domains,
    parse_ratings,
    project_views,
    split_train_test,
    write_ratings,
)
from .errors import ConfigError, DataError, MdcfError
from .evaluate import correlation_matrix, evaluate, format_correlation
from .model import TrainConfig
from .serialize import load_model, save_model
from .trainer import predict_detail, train

_CONFIG_KEYS = {
    "ratings", "out", "kind", "items", "genres", "category_map", "delimiter",
    "fraction", "seed", "train", "test", "train_out", "test_out", "method",
    "d", "max_sweeps", "tol", "threads", "model_out", "model_in", "report_out",
    "input", "variance_floor", "omega_jitter", "link_initial_step",
    "link_max_halvings",
}


def _load_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config file %s is not valid JSON: %s" % (path, exc))
    if not isinstance(config, dict):
        raise ConfigError("config file %s must hold a JSON object" % path)
    unknown = sorted(set(config) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError("unknown config keys: %s" % ", ".join(unknown))
    return config


def _setting(args, config, name, default=None, required=False, cast=None):
    """Flag value if given, else config value, else default."""
    value = getattr(args, name, None)
    if value is None:
        value = config.get(name, default)
    if value is None and required:
        raise ConfigError("missing required setting --%s" % name.replace("_", "-"))
    if value is not None and cast is not None:
        value = cast(value)
    return value


def _write_text(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_prepare(args, config):
    kind = _setting(args, config, "kind", required=True)
    ratings = _setting(args, config, "ratings", required=True)
    out = _setting(args, config, "out", required=True)
    if kind == "canonical":
        parse_ratings(ratings)  # validate before passing through
        shutil.copyfile(ratings, out)
        return 0
    if kind == "movielens":
        items = _setting(args, config, "items", required=True)
        genres = _setting(args, config, "genres", required=True)
        records = movielens_to_domains(ratings, items, genres)
    elif kind == "bookcrossing":
        category_map = _setting(args, config, "category_map", required=True)
        delimiter = _setting(args, config, "delimiter", default=";")
        records = categories_to_domains(ratings, category_map, delimiter)
    else:
        raise ConfigError("unknown dataset kind %r" % kind)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write("\t".join(record) + "\n")
    return 0


def cmd_split(args, config):
    ratings = _setting(args, config, "ratings", required=True)
    fraction = _setting(args, config, "fraction", default=0.8, cast=float)
    seed = _setting(args, config, "seed", required=True, cast=int)
    train_out = _setting(args, config, "train_out", required=True)
    test_out = _setting(args, config, "test_out", required=True)
    ds = parse_ratings(ratings)
    train_ds, test_ds = split_train_test(ds, fraction, seed)
    write_ratings(train_ds, train_out)
    write_ratings(test_ds, test_out)
    return 0


def _train_config(args, config, method):
    seed = _setting(args, config, "seed", required=True, cast=int)
    cfg = TrainConfig(
        d=_setting(args, config, "d", default=10, cast=int),
        seed=seed,
        max_sweeps=_setting(args, config, "max_sweeps", default=200, cast=int),
        rel_tol=_setting(args, config, "tol", default=1e-6, cast=float),
        variance_floor=_setting(args, config, "variance_floor", default=1e-6, cast=float),
        omega_jitter=_setting(args, config, "omega_jitter", default=1e-8, cast=float),
        update_omega=method != "pmf",
        link_enabled=method == "mcf-lf",
        link_initial_step=_setting(args, config, "link_initial_step", default=1.0, cast=float),
        link_max_halvings=_setting(args, config, "link_max_halvings", default=30, cast=int),
        n_threads=_setting(args, config, "threads", default=1, cast=int),
    )
    cfg.validate()
    return cfg


def cmd_train(args, config):
    train_path = _setting(args, config, "train", required=True)
    method = _setting(args, config, "method", required=True)
    if method not in ("pmf", "mcf", "mcf-lf"):
        raise ConfigError("method must be one of pmf, mcf, mcf-lf, got %r" % method)
    model_out = _setting(args, config, "model_out", required=True)
    test_path = _setting(args, config, "test")
    cfg = _train_config(args, config, method)
    train_ds = parse_ratings(train_path)
    views = build_views(train_ds)
    heldout = None
    if test_path is not None:
        test_ds = parse_ratings(test_path)
        heldout, dropped = project_views(test_ds, train_ds)
        if dropped:
            sys.stderr.write("heldout: dropped %d records unknown to the training set\n" % dropped)
    state, report = train(views, cfg, heldout=heldout, progress=sys.stderr)
    save_model(state, model_out)
    if report.abort_reason is not None:
        raise DataError("training aborted: %s" % report.abort_reason)
    sys.stderr.write(
        "trained method=%s sweeps=%d converged=%s\n"
        % (method, report.sweeps_run, str(report.converged).lower())
    )
    return 0


def cmd_eval(args, config):
    model_in = _setting(args, config, "model_in", required=True)
    test_path = _setting(args, config, "test", required=True)
    report_out = _setting(args, config, "report_out")
    state = load_model(model_in if not isinstance(model_in, list) else model_in[0])
    test_ds = parse_ratings(test_path)
    report = evaluate(state, test_ds)
    _write_text(report_out, report.to_text())
    return 0


def cmd_predict(args, config):
    model_in = _setting(args, config, "model_in", required=True)
    input_path = _setting(args, config, "input", required=True)
    out_path = _setting(args, config, "out")
    state = load_model(model_in if not isinstance(model_in, list) else model_in[0])
    if state.user_ids is None or state.item_ids is None:
        raise DataError("model carries no ID tables; cannot predict raw records")
    domain_of = {label: i for i, label in enumerate(state.domains)}
    user_of = {raw: j for j, raw in enumerate(state.user_ids)}
    item_of = [{raw: k for k, raw in enumerate(ids)} for ids in state.item_ids]
    lines = []
    with open(input_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise DataError(
                    "predict input line %d: expected user<TAB>item<TAB>domain" % lineno
                )
            user, item, dom = parts[0], parts[1], parts[2]
            if dom not in domain_of:
                raise DataError("predict input line %d: unknown domain %r" % (lineno, dom))
            i = domain_of[dom]
            value, _, _ = predict_detail(
                state, user_of.get(user), item_of[i].get(item), i
            )
            lines.append("%s\t%s\t%s\t%s" % (user, item, dom, repr(value)))
    _write_text(out_path, ("\n".join(lines) + "\n") if lines else "")
    return 0


def cmd_correlation(args, config):
    model_in = _setting(args, config, "model_in", required=True)
    report_out = _setting(args, config, "report_out")
    paths = model_in if isinstance(model_in, list) else [model_in]
    states = [load_model(p) for p in paths]
    labels = states[0].domains
    for state, path in zip(states, paths):
        if state.domains != labels:
            raise DataError("model %s has different domain labels" % path)
    mean_rho = np.mean([correlation_matrix(s) for s in states], axis=0)
    _write_text(report_out, format_correlation(labels, mean_rho))
    return 0


def _add_common(sub):
    sub.add_argument("--config", help="JSON file with default settings")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mdcf",
        description="Multi-domain collaborative filtering: prepare, split, "
        "train, evaluate, predict, and report cross-domain correlations.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("prepare", help="convert a raw dataset to the 4-column form")
    p.add_argument("--kind", choices=["movielens", "bookcrossing", "canonical"])
    p.add_argument("--ratings")
    p.add_argument("--items", help="item metadata file (movielens kind)")
    p.add_argument("--genres", help="genre table file (movielens kind)")
    p.add_argument("--category-map", dest="category_map",
                   help="item<TAB>category file (bookcrossing kind)")
    p.add_argument("--delimiter", help="raw input field delimiter (bookcrossing kind)")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_prepare)

    p = subs.add_parser("split", help="seeded per-domain train/test split")
    p.add_argument("--ratings")
    p.add_argument("--fraction", type=float, help="train fraction (default 0.8)")
    p.add_argument("--seed", type=int)
    p.add_argument("--train-out", dest="train_out")
    p.add_argument("--test-out", dest="test_out")
    _add_common(p)
    p.set_defaults(func=cmd_split)

    p = subs.add_parser("train", help="fit a model on a 4-column ratings file")
    p.add_argument("--train")
    p.add_argument("--test", help="optional held-out file for a per-sweep RMSE trace")
    p.add_argument("--method", choices=["pmf", "mcf", "mcf-lf"])
    p.add_argument("--d", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--variance-floor", dest="variance_floor", type=float)
    p.add_argument("--omega-jitter", dest="omega_jitter", type=float)
    p.add_argument("--model-out", dest="model_out")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("eval", help="RMSE report for a model on a test file")
    p.add_argument("--model-in", dest="model_in")
    p.add_argument("--test")
    p.add_argument("--report-out", dest="report_out")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("predict", help="score user/item/domain triples")
    p.add_argument("--model-in", dest="model_in")
    p.add_argument("--input")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("correlation", help="normalized domain-correlation report")
    p.add_argument("--model-in", dest="model_in", action="append",
                   help="model file; repeat to average over several runs")
    p.add_argument("--report-out", dest="report_out")
    _add_common(p)
    p.set_defaults(func=cmd_correlation)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except (MdcfError, OSError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
