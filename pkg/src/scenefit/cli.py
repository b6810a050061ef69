"""Command line interface.

Verbs: validate, augment, train, place, evaluate, serve. Every command honors
--seed and is reproducible under it; file writes are atomic. Exit codes:
0 success, 1 usage error, 2 data error (bad scene/config/bundle files),
3 runtime error.

`place` is a thin client: it runs against local model bundles by default and
against a running scenefit service when --server is given.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import build_augmented_dataset
from .bundle import (
    dataset_fingerprint,
    load_model_bundle,
    save_group_model,
)
from .config import (
    SCORER_AUTOENCODER,
    SCORER_CLUSTER_MEAN,
    RunConfig,
    load_config,
)
from .errors import GeometryError, SceneFitError, SchemaError
from .evaluate import (
    ModelScorer,
    PlacementMap,
    map_to_csv,
    map_to_pgm,
    probability_map,
    removal_experiment,
    report_to_json,
    report_to_text,
    top_k,
)
from .geometry import FurnitureGroup
from .model import GaussianKde, cluster_mean
from .nn.serialize import atomic_write_text
from .sceneio import load_scene, load_scene_dir, save_scene_dir
from .training import (
    encode_placements,
    positives_for_group,
    train_group_model,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_dims(text: str) -> tuple[float, float, float]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise UsageError(f"--dims expects LxWxH (e.g. 2.0x1.6x0.5), got {text!r}")
    try:
        l, w, h = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--dims has non-numeric parts: {text!r}") from None
    if min(l, w, h) <= 0:
        raise UsageError("--dims values must be positive")
    return (l, w, h)


def _parse_groups(text: str | None) -> list[FurnitureGroup] | None:
    if text is None:
        return None
    groups = []
    for name in text.split(","):
        name = name.strip()
        try:
            groups.append(FurnitureGroup.from_label(name))
        except GeometryError as e:
            raise UsageError(str(e)) from None
    return groups


def _load_cfg(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    paths: list[Path] = []
    for raw in args.paths:
        p = Path(raw)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.json")))
        else:
            paths.append(p)
    if not paths:
        raise SchemaError("no scene files to validate")
    for path in paths:
        try:
            scene = load_scene(path)
        except SchemaError as e:
            print(f"INVALID {path}")
            print(f"  {e}")
            return EXIT_DATA
        print(f"ok {path} ({scene.id}: {len(scene.walls)} walls, "
              f"{len(scene.objects)} objects)")
    return EXIT_OK


def cmd_augment(args) -> int:
    cfg = _load_cfg(args)
    scenes = load_scene_dir(args.in_dir)
    dataset = build_augmented_dataset(scenes, cfg.augment)
    out = Path(args.out_dir)
    save_scene_dir(dataset.final_scenes, out / "scenes")
    table = dataset.report_table()
    atomic_write_text(out / "report.txt", table)
    print(table, end="")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    scenes = load_scene_dir(args.corpus)
    groups = _parse_groups(args.groups) or [
        g for g in FurnitureGroup if any(s.objects_of(g) for s in scenes)
    ]
    out = Path(args.out_dir)
    fingerprint = dataset_fingerprint(scenes)
    trained = 0
    for group in groups:
        if not any(s.objects_of(group) for s in scenes):
            log.warning("group %s has no instances in the corpus; skipped",
                        group.label)
            continue
        model, tlog = train_group_model(
            scenes, group, cfg.train, dims=cfg.model,
            feature_params=cfg.feature,
            max_support_height=cfg.grid.max_support_height)
        bundle_dir = out / group.label
        save_group_model(model, bundle_dir, extra_metadata={
            "train_config": cfg.train.to_dict(),
            "seed": cfg.train.seed,
            "dataset_fingerprint": fingerprint,
        })
        _write_loss_csv(bundle_dir / "losses.csv", tlog)
        print(f"trained {group.label}: {tlog.n_positives} positives, "
              f"{tlog.n_negatives} negatives -> {bundle_dir}")
        trained += 1
    if trained == 0:
        raise SceneFitError("no requested group had instances to train on")
    return EXIT_OK


def _write_loss_csv(path: Path, tlog) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["stage", "epoch", "loss"])
    for i, loss in enumerate(tlog.siamese_losses):
        writer.writerow(["siamese", i, repr(loss)])
    for i, loss in enumerate(tlog.autoencoder_losses):
        writer.writerow(["autoencoder", i, repr(loss)])
    atomic_write_text(path, buf.getvalue())


def cmd_place(args) -> int:
    cfg = _load_cfg(args)
    dims = _parse_dims(args.dims)
    group = _parse_groups(args.group)[0]
    cell = args.grid_cell if args.grid_cell is not None else cfg.grid.cell_size
    radius = cfg.grid.nms_radius
    if radius is None:
        radius = float(np.hypot(dims[0], dims[1])) / 2.0

    if args.server:
        pmap, picks = _place_via_server(args, group, dims, cell, radius)
    else:
        scene = load_scene(args.scene)
        models = load_model_bundle(args.models)
        if group not in models:
            raise SchemaError(f"no {group.label} model in {args.models}")
        scorer = ModelScorer(models[group])
        pmap = probability_map(scorer, scene, group, dims, cell)
        picks = top_k(pmap, args.k, radius)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    map_to_csv(pmap, out / "heatmap.csv")
    map_to_pgm(pmap, out / "heatmap.pgm")
    print("rank,x,y,P")
    for rank, (x, y, p) in enumerate(picks, start=1):
        print(f"{rank},{x:.3f},{y:.3f},{p:.6f}")
    return EXIT_OK


def _place_via_server(args, group, dims, cell, radius):
    import httpx

    from .sceneio import load_scene, scene_to_doc

    scene_doc = scene_to_doc(load_scene(args.scene))
    payload = {
        "scene": scene_doc,
        "group": group.label,
        "dims": list(dims),
        "cell_size": cell,
        "k": args.k,
        "nms_radius": radius,
        "include_map": True,
    }
    try:
        resp = httpx.post(f"{args.server.rstrip('/')}/placements/map",
                          json=payload, timeout=300.0)
    except httpx.HTTPError as e:
        raise SceneFitError(f"service request failed: {e}") from e
    if resp.status_code != 200:
        raise SceneFitError(f"service returned {resp.status_code}: {resp.text}")
    body = resp.json()
    probs_rows = body["probs"]
    probs = np.array([[0.0 if v is None else v for v in row] for row in probs_rows])
    mask = np.array([[v is not None for v in row] for row in probs_rows])
    pmap = PlacementMap(origin=tuple(body["origin"]), cell_size=body["cell_size"],
                        probs=probs, mask=mask)
    picks = [(p["x"], p["y"], p["prob"]) for p in body["top_k"]]
    return pmap, picks


def _make_train_fn(cfg: RunConfig):
    """Scorer factory for the removal experiment, honoring cfg.eval.scorer."""

    def train_fn(train_scenes, group):
        model, _ = train_group_model(
            train_scenes, group, cfg.train, dims=cfg.model,
            feature_params=cfg.feature,
            max_support_height=cfg.grid.max_support_height)
        if cfg.eval.scorer == SCORER_AUTOENCODER:
            return ModelScorer(model)
        positives = positives_for_group(train_scenes, group)
        proj = model.project_batch(encode_placements(model, positives)).data
        if cfg.eval.scorer == SCORER_CLUSTER_MEAN:
            mu = cluster_mean(proj)

            class _ClusterScorer:
                def score_points(self, scene, g, dims, centers):
                    y = _project_grid(model, scene, dims, centers)
                    return np.exp(-np.linalg.norm(y - mu, axis=1))

            return _ClusterScorer()
        kde = GaussianKde.fit(proj)

        class _KdeScorer:
            def score_points(self, scene, g, dims, centers):
                y = _project_grid(model, scene, dims, centers)
                logd = kde.log_score(y)
                # Relative density: rescaled to (0, 1] per map.
                return np.exp(logd - logd.max())

        return _KdeScorer()

    return train_fn


def _project_grid(model, scene, dims, centers, chunk=512):
    from .encode import encode_grid

    encodings = encode_grid(scene, model.group, dims, centers,
                            model.feature_params, model.max_support_height)
    out = np.empty((len(encodings), model.dims.proj_dim))
    for start in range(0, len(encodings), chunk):
        part = encodings[start:start + chunk]
        out[start:start + len(part)] = model.project_batch(part).data
    return out


def cmd_evaluate(args) -> int:
    cfg = _load_cfg(args)
    scenes = load_scene_dir(args.corpus)
    groups = _parse_groups(args.groups) or [
        g for g in FurnitureGroup if any(s.objects_of(g) for s in scenes)
    ]
    if len(scenes) < cfg.eval.folds:
        raise SceneFitError(
            f"corpus has {len(scenes)} rooms; need at least {cfg.eval.folds} "
            f"for {cfg.eval.folds}-fold evaluation")
    report = removal_experiment(
        scenes, groups, _make_train_fn(cfg), folds=cfg.eval.folds,
        val_fraction=cfg.eval.val_fraction, cell_size=cfg.grid.cell_size,
        nms_radius=cfg.grid.nms_radius, top_n=cfg.eval.top_n, seed=cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_to_text(report, out / "report.txt")
    report_to_json(report, out / "report.json")
    print(report.table(), end="")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(model_dir=args.models)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="scenefit",
                     description="Contextual furniture placement scoring")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="schema-check scene files")
    p.add_argument("paths", nargs="+", help="scene files or directories")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("augment", help="build the augmented corpus")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train per-group placement models")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--groups", help="comma-separated group labels (default: all present)")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("place", help="propose placements in a scene")
    p.add_argument("--models", help="model bundle directory (local mode)")
    p.add_argument("--scene", required=True)
    p.add_argument("--group", required=True)
    p.add_argument("--dims", required=True, help="object size as LxWxH meters")
    p.add_argument("--grid-cell", type=float, default=None)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", default="placement_out")
    p.add_argument("--server", help="base URL of a running scenefit service")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("evaluate", help="object-removal evaluation with k-fold CV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default="eval_out")
    p.add_argument("--groups")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--models", help="model bundle directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "place" and not args.server and not args.models:
            raise UsageError("place needs --models (local) or --server (remote)")
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except SceneFitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
