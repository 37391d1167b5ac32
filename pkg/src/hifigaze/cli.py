"""Command-line interface.

Subcommands: gen (synthetic datasets), extract (manifest -> features),
train (features -> model), eval (LOOCV report), bench (per-stage timings),
plot (report -> SVGs). Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .errors import DataError, HifigazeError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _dims(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hifigaze", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic corpus")
    g.add_argument("--out", required=True, help="output dataset directory")
    g.add_argument("--participants", type=int, required=True)
    g.add_argument("--sessions", type=int, default=6)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--camera", choices=["top", "bottom"], default="top")
    g.add_argument("--dark-prob", type=float, default=0.1)
    g.add_argument("--noise-sigma", type=float, default=3.0)
    g.add_argument("--fps", type=int, default=20)
    g.add_argument("--screen-dims", type=_dims, default=(1290, 2796), metavar="WxH")
    g.add_argument("--screen-render", type=_dims, default=(322, 699), metavar="WxH",
                   help="screen content raster resolution")

    e = sub.add_parser("extract", help="extract features from a manifest")
    e.add_argument("--manifest", required=True)
    e.add_argument("--out", required=True, help="output features directory")
    e.add_argument("--blur-sigma", type=float, default=None,
                   help="thumbnail blur sigma (default: 8.0 scaled to raster width)")
    e.add_argument("--tau", type=float, default=0.35, help="presence threshold")
    e.add_argument("--dump-masks", action="store_true")

    t = sub.add_parser("train", help="train one variant on a feature table")
    t.add_argument("--features", required=True)
    t.add_argument("--variant", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--batch-size", type=int, default=64)
    t.add_argument("--lr", type=float, default=3e-5)
    t.add_argument("--out", required=True, help="model file; history CSV written alongside")

    v = sub.add_parser("eval", help="leave-one-participant-out evaluation")
    v.add_argument("--features", required=True)
    v.add_argument("--variant", action="append", required=True,
                   help="variant id (repeatable), e.g. eb, eb+ec, eb+rv")
    v.add_argument("--loocv", action="store_true", default=True,
                   help="leave-one-participant-out (the only supported scheme)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--epochs", type=int, default=20)
    v.add_argument("--batch-size", type=int, default=64)
    v.add_argument("--lr", type=float, default=3e-5)
    v.add_argument("--report", required=True, help="output report JSON path")

    b = sub.add_parser("bench", help="per-stage timing report")
    b.add_argument("--manifest", required=True)
    b.add_argument("--frames", type=int, default=40)
    b.add_argument("--report", required=True, help="output JSON path")

    pl = sub.add_parser("plot", help="render SVG figures from a report")
    pl.add_argument("--report", required=True)
    pl.add_argument("--out", required=True, help="output directory for SVGs")
    return p


def _needs(variants: list[str]) -> dict:
    from .model import parse_variant

    specs = [parse_variant(v) for v in variants]
    return {
        "with_crops": any(s.use_crops for s in specs),
        "with_thumbs": any(s.use_thumbnail for s in specs),
        "with_heatmaps": any(s.use_heatmap for s in specs),
    }


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        if args.command == "gen":
            from .simulator import gen_dataset

            manifest = gen_dataset(
                args.out,
                n_participants=args.participants,
                sessions=args.sessions,
                seed=args.seed,
                camera=args.camera,
                dark_prob=args.dark_prob,
                noise_sigma=args.noise_sigma,
                fps=args.fps,
                screen_dims=args.screen_dims,
                screen_render_dims=args.screen_render,
            )
            print(manifest)

        elif args.command == "extract":
            from .features import extract_features

            out = extract_features(
                args.manifest,
                args.out,
                blur_sigma=args.blur_sigma,
                tau_presence=args.tau,
                dump_masks=args.dump_masks,
            )
            print(out / "features.csv")

        elif args.command == "train":
            from .features import load_features
            from .model import GazeRegressor, parse_variant

            spec = parse_variant(args.variant)
            table = load_features(
                args.features,
                with_crops=spec.use_crops,
                with_thumbs=spec.use_thumbnail,
                with_heatmaps=spec.use_heatmap,
            )
            keep = ~table.X.vector_masks.any(axis=1) if spec.vector_only else slice(None)
            sub = table.take(keep) if spec.vector_only else table
            reg = GazeRegressor(
                variant=args.variant,
                epochs=args.epochs,
                batch_size=args.batch_size,
                learning_rate=args.lr,
                seed=args.seed,
                screen_dims=table.screen_dims,
            )
            reg.fit(sub.X, sub.y)
            reg.save(args.out)
            hist_path = Path(args.out).with_suffix(".history.csv")
            with open(hist_path, "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["epoch", "mean_loss_px"])
                for i, loss in enumerate(reg.history_):
                    w.writerow([i, repr(loss)])
            print(args.out)

        elif args.command == "eval":
            from .features import load_features
            from .harness import evaluate_variants, write_report

            table = load_features(args.features, **_needs(args.variant))
            report = evaluate_variants(
                table,
                args.variant,
                epochs=args.epochs,
                batch_size=args.batch_size,
                learning_rate=args.lr,
                seed=args.seed,
            )
            write_report(report, args.report)
            print(args.report)

        elif args.command == "bench":
            from .harness import bench

            result = bench(args.manifest, n_frames=args.frames)
            with open(args.report, "w") as f:
                json.dump(result, f, sort_keys=True, indent=1)
            print(args.report)

        elif args.command == "plot":
            from .plots import plot_report

            try:
                with open(args.report) as f:
                    report = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise DataError(f"cannot read report {args.report}: {e}") from e
            for path in plot_report(report, args.out):
                print(path)

    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except HifigazeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
