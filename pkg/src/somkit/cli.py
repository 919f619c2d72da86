"""Command-line interface: train, map, cluster, collect, bench.

Every run resolves a flat dotted-key configuration from three sources,
later ones winning: built-in defaults, then ``--config FILE`` (lines of
``key = value``, ``#`` comments), then explicit flags.  The merged config
is echoed to ``config.txt`` in the output directory, so re-running with
``--config <outdir>/config.txt`` reproduces every non-timing artifact
byte for byte.

Exit codes: 0 on success, 2 for usage or input errors, 1 for anything else.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys

import numpy as np

from . import analysis, bench, clustering, data, render, som
from .errors import ConfigError, InputError, SomkitError
from .grid import GridTopology, Topology
from .kernels import Kernel, Metric, Schedule
from .som import TrainConfig, UpdateMode

_ENV_THREADS = "SOMKIT_THREADS"

# key -> (type tag, default, help)
_GLOBAL_KEYS = {
    "seed": ("int", 0, "run seed (blobs, shuffles, clustering)"),
    "out": ("str", "", "output directory (default: timestamped)"),
    "threads": ("int", 0, f"selection worker threads; 0 = ${_ENV_THREADS} or 1"),
    "quiet": ("bool", False, "suppress progress output"),
}
_DATA_KEYS = {
    "data.csv": ("str", "", "CSV dataset path; empty = synthetic blobs"),
    "data.target": ("str", "", "target column name in data.csv"),
    "data.labels": ("str", "", "label column name in data.csv"),
    "data.standardize": ("bool", True, "z-score features before use"),
    "data.blobs.samples": ("int", 240, "blob sample count"),
    "data.blobs.features": ("int", 4, "blob feature count"),
    "data.blobs.centers": ("int", 3, "blob center count"),
    "data.blobs.std": ("float", 1.0, "blob standard deviation"),
    "data.blobs.box_low": ("float", -10.0, "blob center box lower bound"),
    "data.blobs.box_high": ("float", 10.0, "blob center box upper bound"),
}
_SOM_KEYS = {
    "som.rows": ("int", 10, "grid rows"),
    "som.cols": ("int", 10, "grid columns"),
    "som.topology": ("str", "rectangular", "rectangular or hexagonal"),
    "som.metric": ("str", "euclidean", "cosine, euclidean, manhattan, chebyshev"),
    "som.kernel": ("str", "gaussian", "gaussian, mexican_hat, bubble, triangle"),
    "som.init": ("str", "pca", "pca or random"),
}
_TRAIN_KEYS = {
    "train.epochs": ("int", 100, "training epochs"),
    "train.lr0": ("float", 0.5, "initial learning rate"),
    "train.sigma0": ("float", 0.0, "initial width; 0 = max(rows, cols)/2"),
    "train.lr_schedule": ("str", "inverse", "inverse or linear"),
    "train.sigma_schedule": ("str", "inverse", "inverse or linear"),
    "train.mode": ("str", "batch", "batch or online"),
    "train.d_th": ("float", 1.0, "topographic error ring threshold"),
    "train.gamma": ("float", 0.0, "inverse lr decay constant; 0 = epochs/100"),
}
_RENDER_KEYS = {
    "render.cell_size": ("float", 24.0, "cell size in px"),
    "render.title": ("str", "", "figure title"),
    "render.colorbar": ("bool", True, "draw the sequential colorbar"),
    "render.absent_fill": ("str", "#d9d9d9", "fill for cells without a value"),
}
_MAP_KEYS = {
    "map.model": ("str", "", "model file to analyze"),
    "map.types": (
        "str_list",
        ["umatrix", "hit"],
        "comma list: umatrix,hit,component:<j>,metric:mean,metric:std,"
        "score,rank,classification,cluster[:<k>]",
    ),
}
_CLUSTER_KEYS = {
    "cluster.model": ("str", "", "model file to cluster"),
    "cluster.space": ("str", "weights", "weights, positions, or combined"),
    "cluster.algorithm": ("str", "kmeans", "kmeans or gmm"),
    "cluster.k": ("int", 0, "cluster count; required unless elbow selection is on"),
    "cluster.elbow": ("bool", False, "pick k in [k_min, k_max] by the elbow rule"),
    "cluster.k_min": ("int", 2, "elbow lower k"),
    "cluster.k_max": ("int", 8, "elbow upper k"),
    "cluster.position_weight": ("float", 1.0, "position scale in combined space"),
    "cluster.compare": ("bool", False, "also score every space/algorithm pair"),
}
_COLLECT_KEYS = {
    "collect.model": ("str", "", "model file"),
    "collect.query": ("str", "", "comma floats or file.csv:ROW"),
    "collect.min_samples": ("int", 10, "samples wanted around the BMU"),
    "collect.max_order": ("int", 3, "widest ring to search"),
}
_BENCH_KEYS = {
    "bench.samples": ("int_list", [240, 4000], "comma list of sample sizes"),
    "bench.features": ("int_list", [4, 50], "comma list of feature counts"),
    "bench.rows": ("int", 25, "grid rows"),
    "bench.cols": ("int", 15, "grid columns"),
    "bench.topology": ("str", "rectangular", "rectangular or hexagonal"),
    "bench.epochs": ("int", 100, "training epochs per run"),
    "bench.runs": ("int", 3, "repetitions per cell"),
    "bench.mode": ("str", "batch", "batch or online"),
    "bench.standardize": ("bool", True, "z-score each cell's split"),
    "bench.seed0": ("int", 0, "base seed; run r uses seed0 + r"),
    "bench.large": ("bool", False, "allow desk-unfriendly cells"),
}

_SCHEMAS = {
    "train": {**_GLOBAL_KEYS, **_DATA_KEYS, **_SOM_KEYS, **_TRAIN_KEYS, **_RENDER_KEYS},
    "map": {**_GLOBAL_KEYS, **_MAP_KEYS, **_DATA_KEYS, **_CLUSTER_KEYS, **_RENDER_KEYS},
    "cluster": {**_GLOBAL_KEYS, **_CLUSTER_KEYS, **_RENDER_KEYS},
    "collect": {**_GLOBAL_KEYS, **_COLLECT_KEYS, **_DATA_KEYS},
    "bench": {**_GLOBAL_KEYS, **_BENCH_KEYS},
}


def _parse_value(key: str, tag: str, raw: str):
    raw = raw.strip()
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if tag == "int_list":
            return [int(t) for t in raw.split(",") if t.strip()]
        if tag == "str_list":
            return [t.strip() for t in raw.split(",") if t.strip()]
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {tag} for key {key!r}") from None


def _format_value(tag: str, value) -> str:
    if tag == "bool":
        return "true" if value else "false"
    if tag == "int_list":
        return ",".join(str(v) for v in value)
    if tag == "str_list":
        return ",".join(value)
    if tag == "float":
        return repr(float(value))
    return str(value)


def _read_config(path: str, schema: dict) -> dict:
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in schema:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_value(key, schema[key][0], raw)
    return values


def _echo_config(cfg: dict, schema: dict, command: str, path: str) -> None:
    lines = [f"# somkit {command} configuration"]
    for key in sorted(schema):
        lines.append(f"{key} = {_format_value(schema[key][0], cfg[key])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _flag(parser: argparse.ArgumentParser, name: str, key: str, schema: dict, **kwargs):
    tag, _, help_text = schema[key]
    dest = key.replace(".", "__")
    if tag == "bool":
        parser.add_argument(
            name,
            dest=dest,
            action=argparse.BooleanOptionalAction,
            default=argparse.SUPPRESS,
            help=help_text,
        )
    else:
        if tag == "int":
            kwargs.setdefault("type", int)
        elif tag == "float":
            kwargs.setdefault("type", float)
        parser.add_argument(
            name, dest=dest, default=argparse.SUPPRESS, help=help_text, **kwargs
        )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="somkit", description="Self-organizing map toolkit."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, schema: dict) -> None:
        _flag(p, "--seed", "seed", schema)
        _flag(p, "--out", "out", schema)
        _flag(p, "--threads", "threads", schema)
        _flag(p, "--quiet", "quiet", schema)
        p.add_argument("--config", default=None, help="config file of key = value lines")

    p = sub.add_parser("train", help="train a map and write model, curves, figures")
    schema = _SCHEMAS["train"]
    common(p, schema)
    _flag(p, "--data", "data.csv", schema)
    _flag(p, "--target", "data.target", schema)
    _flag(p, "--labels", "data.labels", schema)
    _flag(p, "--standardize", "data.standardize", schema)
    _flag(p, "--blob-samples", "data.blobs.samples", schema)
    _flag(p, "--blob-features", "data.blobs.features", schema)
    _flag(p, "--blob-centers", "data.blobs.centers", schema)
    _flag(p, "--blob-std", "data.blobs.std", schema)
    _flag(p, "--rows", "som.rows", schema)
    _flag(p, "--cols", "som.cols", schema)
    _flag(p, "--topology", "som.topology", schema)
    _flag(p, "--metric", "som.metric", schema)
    _flag(p, "--kernel", "som.kernel", schema)
    _flag(p, "--init", "som.init", schema)
    _flag(p, "--epochs", "train.epochs", schema)
    _flag(p, "--lr0", "train.lr0", schema)
    _flag(p, "--sigma0", "train.sigma0", schema)
    _flag(p, "--lr-schedule", "train.lr_schedule", schema)
    _flag(p, "--sigma-schedule", "train.sigma_schedule", schema)
    _flag(p, "--mode", "train.mode", schema)
    _flag(p, "--d-th", "train.d_th", schema)
    _flag(p, "--gamma", "train.gamma", schema)
    _flag(p, "--title", "render.title", schema)
    _flag(p, "--cell-size", "render.cell_size", schema)

    p = sub.add_parser("map", help="build map layers from a model (SVG + CSV)")
    schema = _SCHEMAS["map"]
    common(p, schema)
    _flag(p, "--model", "map.model", schema)
    p.add_argument(
        "--types",
        dest="map__types",
        default=argparse.SUPPRESS,
        help=schema["map.types"][2],
    )
    _flag(p, "--data", "data.csv", schema)
    _flag(p, "--target", "data.target", schema)
    _flag(p, "--labels", "data.labels", schema)
    _flag(p, "--standardize", "data.standardize", schema)
    _flag(p, "--blob-samples", "data.blobs.samples", schema)
    _flag(p, "--blob-features", "data.blobs.features", schema)
    _flag(p, "--k", "cluster.k", schema)
    _flag(p, "--k-min", "cluster.k_min", schema)
    _flag(p, "--k-max", "cluster.k_max", schema)
    _flag(p, "--title", "render.title", schema)
    _flag(p, "--cell-size", "render.cell_size", schema)

    p = sub.add_parser("cluster", help="cluster the codebook of a trained model")
    schema = _SCHEMAS["cluster"]
    common(p, schema)
    _flag(p, "--model", "cluster.model", schema)
    _flag(p, "--space", "cluster.space", schema)
    _flag(p, "--algorithm", "cluster.algorithm", schema)
    _flag(p, "--k", "cluster.k", schema)
    _flag(p, "--elbow", "cluster.elbow", schema)
    _flag(p, "--k-min", "cluster.k_min", schema)
    _flag(p, "--k-max", "cluster.k_max", schema)
    _flag(p, "--position-weight", "cluster.position_weight", schema)
    _flag(p, "--compare", "cluster.compare", schema)
    _flag(p, "--title", "render.title", schema)
    _flag(p, "--cell-size", "render.cell_size", schema)

    p = sub.add_parser("collect", help="gather training samples around a query's BMU")
    schema = _SCHEMAS["collect"]
    common(p, schema)
    _flag(p, "--model", "collect.model", schema)
    _flag(p, "--query", "collect.query", schema)
    _flag(p, "--min-samples", "collect.min_samples", schema)
    _flag(p, "--max-order", "collect.max_order", schema)
    _flag(p, "--data", "data.csv", schema)
    _flag(p, "--target", "data.target", schema)
    _flag(p, "--labels", "data.labels", schema)
    _flag(p, "--standardize", "data.standardize", schema)
    _flag(p, "--blob-samples", "data.blobs.samples", schema)
    _flag(p, "--blob-features", "data.blobs.features", schema)

    p = sub.add_parser("bench", help="run the blob benchmark grid")
    schema = _SCHEMAS["bench"]
    common(p, schema)
    _flag(p, "--samples", "bench.samples", schema)
    _flag(p, "--features", "bench.features", schema)
    _flag(p, "--rows", "bench.rows", schema)
    _flag(p, "--cols", "bench.cols", schema)
    _flag(p, "--topology", "bench.topology", schema)
    _flag(p, "--epochs", "bench.epochs", schema)
    _flag(p, "--runs", "bench.runs", schema)
    _flag(p, "--mode", "bench.mode", schema)
    _flag(p, "--standardize", "bench.standardize", schema)
    _flag(p, "--seed0", "bench.seed0", schema)
    _flag(p, "--large", "bench.large", schema)
    return parser


def _resolve_config(args: argparse.Namespace) -> dict:
    schema = _SCHEMAS[args.command]
    cfg = {key: spec[1] for key, spec in schema.items()}
    if args.config:
        cfg.update(_read_config(args.config, schema))
    for dest, value in vars(args).items():
        if dest in ("command", "config"):
            continue
        key = dest.replace("__", ".")
        if key not in schema:
            continue
        if schema[key][0] in ("int_list", "str_list") and isinstance(value, str):
            value = _parse_value(key, schema[key][0], value)
        cfg[key] = value
    return cfg


def _resolve_threads(cfg: dict) -> int:
    threads = cfg["threads"]
    if threads == 0:
        env = os.environ.get(_ENV_THREADS, "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"${_ENV_THREADS} must be an integer, got {env!r}") from None
        else:
            threads = 1
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    return threads


def _prepare_outdir(cfg: dict, command: str) -> tuple[str, str]:
    out = cfg["out"]
    if not out:
        stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
        out = f"somkit-{command}-{stamp}"
    os.makedirs(out, exist_ok=True)
    cfg["out"] = out
    return out, os.path.basename(os.path.normpath(out))


def _say(cfg: dict, message: str) -> None:
    if not cfg["quiet"]:
        print(message, file=sys.stderr)


def _load_dataset(cfg: dict) -> data.Dataset:
    if cfg["data.csv"]:
        return data.load_csv(
            cfg["data.csv"],
            target=cfg["data.target"] or None,
            labels=cfg["data.labels"] or None,
        )
    spec = data.BlobSpec(
        cfg["data.blobs.samples"],
        cfg["data.blobs.features"],
        cfg["data.blobs.centers"],
        cfg["data.blobs.std"],
        (cfg["data.blobs.box_low"], cfg["data.blobs.box_high"]),
        seed=cfg["seed"],
    )
    return data.make_blobs(spec)


def _prepare_features(cfg: dict) -> tuple[data.Dataset, data.Scaler | None]:
    ds = _load_dataset(cfg)
    if cfg["data.standardize"]:
        ds, scaler = data.standardize(ds)
        return ds, scaler
    return ds, None


def _style(cfg: dict, colormap: str) -> render.RenderStyle:
    return render.RenderStyle(
        cell_size=cfg["render.cell_size"],
        colormap=colormap,
        show_colorbar=cfg["render.colorbar"],
        title=cfg["render.title"],
        absent_cell_fill=cfg["render.absent_fill"],
    )


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        epochs=cfg["train.epochs"],
        lr0=cfg["train.lr0"],
        sigma0=cfg["train.sigma0"] or None,
        lr_schedule=Schedule(cfg["train.lr_schedule"]),
        sigma_schedule=Schedule(cfg["train.sigma_schedule"]),
        update_mode=UpdateMode(cfg["train.mode"]),
        seed=cfg["seed"],
        d_th=cfg["train.d_th"],
        gamma=cfg["train.gamma"] or None,
    )


def _enum(kind, raw: str, what: str):
    try:
        return kind(raw)
    except ValueError:
        valid = ", ".join(m.value for m in kind)
        raise InputError(f"unknown {what} {raw!r}, expected one of: {valid}") from None


def _cmd_train(cfg: dict, threads: int) -> int:
    ds, _ = _prepare_features(cfg)
    topo = GridTopology(
        _enum(Topology, cfg["som.topology"], "topology"), cfg["som.rows"], cfg["som.cols"]
    )
    metric = _enum(Metric, cfg["som.metric"], "metric")
    kernel = _enum(Kernel, cfg["som.kernel"], "kernel")
    if cfg["som.init"] == "pca":
        model = som.init_pca(topo, ds.n_features, ds.features, metric, kernel)
    elif cfg["som.init"] == "random":
        model = som.init_random(topo, ds.n_features, ds.features, cfg["seed"], metric, kernel)
    else:
        raise InputError(f"unknown init {cfg['som.init']!r}, expected pca or random")
    tc = _train_config(cfg)
    _say(cfg, f"training {topo.rows}x{topo.cols} {topo.kind.value} map "
              f"on {ds.n_samples}x{ds.n_features} samples for {tc.epochs} epochs")
    report = som.fit(model, ds.features, tc, threads)

    out, run_id = cfg["out"], cfg["run_id"]
    som.save(model, os.path.join(out, "model.som"))
    curves = ["epoch,qe,te"]
    for t in range(tc.epochs):
        curves.append(f"{t},{float(report.qe_curve[t])!r},{float(report.te_curve[t])!r}")
    _write(os.path.join(out, "curves.csv"), "\n".join(curves) + "\n")
    svg = render.render_curves(
        {"qe": report.qe_curve, "te": report.te_curve},
        _style(cfg, "sequential"),
        panels=[["qe"], ["te"]],
    )
    _write(os.path.join(out, f"{run_id}_curves.svg"), svg)
    print(
        f"qe={report.qe_curve[-1]:.6g} te={report.te_curve[-1]:.6g} "
        f"wall={report.wall_seconds:.2f}s out={out}"
    )
    return 0


def _parse_map_type(raw: str) -> tuple[str, int | None]:
    base, _, arg = raw.partition(":")
    if base in ("umatrix", "hit", "score", "rank", "classification"):
        if arg:
            raise InputError(f"map type {base!r} takes no argument, got {raw!r}")
        return base, None
    if base == "component":
        if not arg:
            raise InputError("component map needs a feature index, e.g. component:0")
        try:
            return base, int(arg)
        except ValueError:
            raise InputError(f"bad feature index in {raw!r}") from None
    if base == "metric":
        if arg not in ("mean", "std"):
            raise InputError(f"metric map needs :mean or :std, got {raw!r}")
        return base, 0 if arg == "mean" else 1
    if base == "cluster":
        if not arg:
            return base, None
        try:
            return base, int(arg)
        except ValueError:
            raise InputError(f"bad cluster count in {raw!r}") from None
    raise InputError(
        f"unknown map type {raw!r}; expected umatrix, hit, component:<j>, "
        "metric:mean, metric:std, score, rank, classification, or cluster[:<k>]"
    )


def _cluster_layer(model: som.SomModel, cfg: dict, k_arg: int | None) -> analysis.MapLayer:
    space = clustering.ClusterSpace(
        _enum(clustering.ClusterSpaceKind, cfg["cluster.space"], "cluster space"),
        cfg["cluster.position_weight"],
    )
    feats = clustering.cluster_features(model, space)
    k = k_arg if k_arg is not None else cfg["cluster.k"]
    if not k:
        picked = clustering.elbow(
            feats, range(cfg["cluster.k_min"], cfg["cluster.k_max"] + 1), cfg["seed"]
        )
        k = picked.selected_k
    algo = _enum(clustering.ClusterAlgorithm, cfg["cluster.algorithm"], "algorithm")
    if algo is clustering.ClusterAlgorithm.KMEANS:
        res = clustering.kmeans(feats, k, cfg["seed"])
    else:
        res = clustering.gmm(feats, k, cfg["seed"])
    values = res.assignment.astype(float).reshape(model.rows, model.cols)
    return analysis.MapLayer(model.topo, values, f"cluster{k}")


def _cmd_map(cfg: dict, threads: int) -> int:
    if not cfg["map.model"]:
        raise InputError("map needs --model")
    model = som.load(cfg["map.model"])
    types = [(_parse_map_type(t), t) for t in cfg["map.types"]]

    needs_data = any(t[0][0] in ("hit", "metric", "score", "rank", "classification") for t in types)
    ds = buffer = None
    if needs_data:
        ds, _ = _prepare_features(cfg)
        buffer = analysis.assign(model, ds.features, threads)

    def target_values(what: str) -> np.ndarray:
        if ds.target is None:
            raise InputError(f"map type {what!r} needs a dataset with a target column")
        return ds.target

    out, run_id = cfg["out"], cfg["run_id"]
    for (base, arg), raw in types:
        if base == "umatrix":
            layer = analysis.u_matrix(model)
        elif base == "hit":
            layer = analysis.hit_map(buffer)
        elif base == "component":
            layer = analysis.component_plane(model, arg)
        elif base == "metric":
            layer = analysis.metric_map(buffer, target_values(raw), "mean" if arg == 0 else "std")
        elif base == "score":
            layer = analysis.score_map(buffer, target_values(raw))
        elif base == "rank":
            layer = analysis.rank_map(analysis.metric_map(buffer, target_values(raw), "mean"))
        elif base == "classification":
            labels = ds.labels
            if labels is None:
                raise InputError("map type 'classification' needs a dataset with labels")
            layer = analysis.classification_map(buffer, labels)
        else:
            layer = _cluster_layer(model, cfg, arg)
        colormap = "categorical" if base in ("classification", "cluster") else "sequential"
        _write(os.path.join(out, f"{run_id}_{layer.label}.svg"),
               render.render_map(layer, _style(cfg, colormap)))
        _write(os.path.join(out, f"{run_id}_{layer.label}.csv"), layer.to_csv())
        _say(cfg, f"wrote {layer.label} ({raw})")
    print(f"maps={len(types)} out={out}")
    return 0


def _cmd_cluster(cfg: dict, threads: int) -> int:
    if not cfg["cluster.model"]:
        raise InputError("cluster needs --model")
    model = som.load(cfg["cluster.model"])
    space = clustering.ClusterSpace(
        _enum(clustering.ClusterSpaceKind, cfg["cluster.space"], "cluster space"),
        cfg["cluster.position_weight"],
    )
    feats = clustering.cluster_features(model, space)
    out, run_id = cfg["out"], cfg["run_id"]
    k = cfg["cluster.k"]
    if cfg["cluster.elbow"] and k:
        raise InputError("give either --k or --elbow, not both")
    if not cfg["cluster.elbow"] and k < 1:
        raise InputError(f"cluster needs --k >= 1 or --elbow, got k={k}")
    if cfg["cluster.elbow"]:
        picked = clustering.elbow(
            feats, range(cfg["cluster.k_min"], cfg["cluster.k_max"] + 1), cfg["seed"]
        )
        k = picked.selected_k
        _say(cfg, f"elbow picked k={k} over k={picked.ks[0]}..{picked.ks[-1]}")
        svg = render.render_curves(
            {"inertia": picked.inertias},
            _style(cfg, "sequential"),
            panels=[["inertia"]],
        )
        _write(os.path.join(out, f"{run_id}_elbow.svg"), svg)
        _write(
            os.path.join(out, "elbow.csv"),
            "k,inertia\n"
            + "\n".join(f"{kk},{v!r}" for kk, v in zip(picked.ks, picked.inertias))
            + "\n",
        )
    algo = _enum(clustering.ClusterAlgorithm, cfg["cluster.algorithm"], "algorithm")
    if algo is clustering.ClusterAlgorithm.KMEANS:
        res = clustering.kmeans(feats, k, cfg["seed"])
    else:
        res = clustering.gmm(feats, k, cfg["seed"])
    res.space = space
    q = clustering.quality(feats, res.assignment)

    lines = ["row,col,cluster"]
    for flat, cid in enumerate(res.assignment):
        r, c = divmod(flat, model.cols)
        lines.append(f"{r},{c},{int(cid)}")
    _write(os.path.join(out, "assignment.csv"), "\n".join(lines) + "\n")
    row = clustering.ComparisonRow(
        space.kind.value, algo.value, k, res.objective, res.objective_name,
        q.silhouette, q.davies_bouldin, q.calinski_harabasz,
    )
    _write(os.path.join(out, "metrics.csv"), clustering.comparison_to_csv([row]))
    layer = analysis.MapLayer(
        model.topo, res.assignment.astype(float).reshape(model.rows, model.cols), f"cluster{k}"
    )
    _write(os.path.join(out, f"{run_id}_{layer.label}.svg"),
           render.render_map(layer, _style(cfg, "categorical")))
    if cfg["cluster.compare"]:
        rows = clustering.compare(model, k, cfg["seed"])
        _write(os.path.join(out, "comparison.csv"), clustering.comparison_to_csv(rows))
        _write(os.path.join(out, f"{run_id}_comparison.svg"),
               render.render_bars(rows, _style(cfg, "sequential")))
    print(
        f"k={k} algorithm={algo.value} space={space.kind.value} "
        f"{res.objective_name}={res.objective:.6g} silhouette={q.silhouette:.4f} out={out}"
    )
    return 0


def _parse_query(cfg: dict, dim: int, scaler: data.Scaler | None) -> np.ndarray:
    raw = cfg["collect.query"]
    if not raw:
        raise InputError("collect needs --query (comma floats or file.csv:ROW)")
    if ".csv:" in raw:
        path, _, idx = raw.rpartition(":")
        try:
            row = int(idx)
        except ValueError:
            raise InputError(f"bad row number in query {raw!r}") from None
        qds = data.load_csv(path)
        if not 0 <= row < qds.n_samples:
            raise InputError(f"query row {row} outside 0..{qds.n_samples - 1}")
        q = qds.features[row]
    else:
        try:
            q = np.array([float(tok) for tok in raw.split(",")])
        except ValueError:
            raise InputError(f"cannot parse query vector {raw!r}") from None
    if q.shape != (dim,):
        raise InputError(f"query has {q.shape[0]} values, model expects {dim}")
    if scaler is not None:
        q = scaler.transform(q)
    return q


def _cmd_collect(cfg: dict, threads: int) -> int:
    if not cfg["collect.model"]:
        raise InputError("collect needs --model")
    model = som.load(cfg["collect.model"])
    ds, scaler = _prepare_features(cfg)
    buffer = analysis.assign(model, ds.features, threads)
    query = _parse_query(cfg, model.dim, scaler)
    result = analysis.collect_sample(
        model, buffer, ds.features, query,
        cfg["collect.min_samples"], cfg["collect.max_order"],
    )
    out = cfg["out"]
    lines = ["rank,sample_index,distance,shortfall"]
    flag = "1" if result.shortfall else "0"
    for rank, (idx, dist) in enumerate(zip(result.indices, result.distances)):
        lines.append(f"{rank},{idx},{dist!r},{flag}")
    _write(os.path.join(out, "collected.csv"), "\n".join(lines) + "\n")
    print(
        f"collected={len(result.indices)} orders_used={result.orders_used} "
        f"shortfall={result.shortfall} out={out}"
    )
    return 0


def _cmd_bench(cfg: dict, threads: int) -> int:
    plan = bench.BenchPlan(
        sample_sizes=tuple(cfg["bench.samples"]),
        feature_counts=tuple(cfg["bench.features"]),
        rows=cfg["bench.rows"],
        cols=cfg["bench.cols"],
        topology=_enum(Topology, cfg["bench.topology"], "topology"),
        epochs=cfg["bench.epochs"],
        runs=cfg["bench.runs"],
        update_mode=UpdateMode(cfg["bench.mode"]),
        standardize=cfg["bench.standardize"],
        seed0=cfg["bench.seed0"],
    )
    if bench.requires_large(plan) and not cfg["bench.large"]:
        raise InputError(
            "this plan exceeds the desk-scale envelope; pass --large to run it anyway"
        )
    progress = None if cfg["quiet"] else lambda msg: print(msg, file=sys.stderr)
    rows = bench.run_plan(plan, threads, progress)
    out = cfg["out"]
    _write(os.path.join(out, "bench.csv"), bench.render_table(rows, "csv"))
    text = bench.render_table(rows, "text")
    _write(os.path.join(out, "bench.txt"), text)
    if not cfg["quiet"]:
        print(text, end="")
    else:
        print(f"cells={len(rows)} out={out}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "map": _cmd_map,
    "cluster": _cmd_cluster,
    "collect": _cmd_collect,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        threads = _resolve_threads(cfg)
        out, run_id = _prepare_outdir(cfg, args.command)
        cfg["run_id"] = run_id
        _echo_config(cfg, _SCHEMAS[args.command], args.command, os.path.join(out, "config.txt"))
        return _COMMANDS[args.command](cfg, threads)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SomkitError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
