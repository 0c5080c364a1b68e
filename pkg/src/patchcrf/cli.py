"""Command-line interface.

Subcommands::

    patchcrf train     --data DIR --out FILE [options]
    patchcrf featurize --model FILE --image PATH [--out FILE]
    patchcrf predict   --model FILE --image PATH
    patchcrf eval      --model FILE --data DIR --report FILE
    patchcrf scan      --grid G --order ORDER
    patchcrf info

Datasets are directories with one sub-directory per class. Log verbosity
comes from ``PATCHCRF_LOG`` (e.g. ``INFO``); logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from . import __version__
from .exceptions import ClassTooSmall, EmptyDataset, PatchCRFError
from .grid_scan import GridSpec, ScanOrder, scan_sequence
from .imaging import IMAGE_EXTENSIONS, capabilities
from .persistence import load_model, save_model
from .pipeline import PatchCRFClassifier
from .transition import DEFAULT_KL_SAMPLES

logger = logging.getLogger("patchcrf")


@dataclass
class DatasetManifest:
    root: str
    classes: List[Tuple[str, List[str]]]

    @property
    def class_names(self) -> List[str]:
        return [name for name, _ in self.classes]

    @property
    def counts(self) -> dict:
        return {name: len(paths) for name, paths in self.classes}

    def samples(self):
        """Flatten to ``(paths, labels)``."""
        paths, labels = [], []
        for name, files in self.classes:
            paths.extend(files)
            labels.extend([name] * len(files))
        return paths, labels


def ingest(root) -> DatasetManifest:
    root = Path(root)
    if not root.is_dir():
        raise EmptyDataset(f"{root}: not a directory")
    classes = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        files = sorted(str(f) for f in sub.iterdir()
                       if f.is_file() and f.suffix.lower() in IMAGE_EXTENSIONS)
        if not files:
            logger.warning("class %r has no images; dropped", sub.name)
            continue
        classes.append((sub.name, files))
    if not classes:
        raise EmptyDataset(f"{root}: no class directories with images")
    return DatasetManifest(str(root), classes)


def split(manifest: DatasetManifest, per_class_train: int, seed: int = 0):
    """Seeded per-class shuffle; the first ``per_class_train`` go to training."""
    train, test = [], []
    for idx, (name, files) in enumerate(manifest.classes):
        if len(files) <= per_class_train:
            raise ClassTooSmall(
                f"class {name!r} has {len(files)} images; need more than {per_class_train}")
        rng = np.random.default_rng([int(seed), idx])
        order = rng.permutation(len(files))
        train.append((name, [files[i] for i in sorted(order[:per_class_train])]))
        test.append((name, [files[i] for i in sorted(order[per_class_train:])]))
    return DatasetManifest(manifest.root, train), DatasetManifest(manifest.root, test)


def _write_json(obj, destination):
    text = json.dumps(obj, indent=1) + "\n"
    if destination is None:
        sys.stdout.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")


def _threads(args):
    return args.threads if args.threads else (os.cpu_count() or 1)


def _report(model, manifest, destination, extra=None):
    paths, labels = manifest.samples()
    report = model.evaluate(paths, labels)
    if extra:
        report.extra.update(extra)
    _write_json(report.to_dict(), destination)
    return report


def cmd_train(args):
    if args.data is None and args.data_train is None:
        raise PatchCRFError("train needs --data or --data-train")
    manifest = ingest(args.data if args.data is not None else args.data_train)
    test_manifest = None
    if args.split_train is not None:
        manifest, test_manifest = split(manifest, args.split_train, args.seed)
    if args.data_test is not None:
        test_manifest = ingest(args.data_test)
    if args.report is not None and test_manifest is None:
        raise PatchCRFError("--report needs held-out data (--split-train or --data-test)")
    model = PatchCRFClassifier(
        grid=args.grid, order=args.order, n_components=args.components,
        kl_samples=args.kl_samples, include_self=not args.exclude_self,
        svm_c=args.svm_c, svm_gamma=args.svm_gamma, random_state=args.seed,
        n_jobs=_threads(args))
    paths, labels = manifest.samples()
    logger.info("training on %d images in %d classes", len(paths), len(manifest.classes))
    model.fit(paths, labels)
    save_model(model, args.out)
    if args.report is not None:
        _report(model, test_manifest, args.report)
    return 0


def cmd_featurize(args):
    model = load_model(args.model)
    model.set_params(n_jobs=_threads(args))
    feature = model.transform([args.image])[0]
    _write_json({
        "image": str(args.image),
        "n": int(model.grid) ** 2,
        "m": len(model.classes_),
        "classes": [str(c) for c in model.classes_],
        "feature": feature.tolist(),
    }, args.out)
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    name, decisions = model.predict_image(args.image)
    _write_json({
        "image": str(args.image),
        "class": str(name),
        "decisions": {str(c): float(v) for c, v in zip(model.classes_, decisions)},
    }, None)
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    model.set_params(n_jobs=_threads(args))
    _report(model, ingest(args.data), args.report)
    return 0


def cmd_scan(args):
    path = scan_sequence(GridSpec.square(args.grid), args.order)
    _write_json([list(cell) for cell in path], None)
    return 0


def cmd_info(args):
    _write_json({"version": __version__, **capabilities()}, None)
    return 0


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    orders = [o.value for o in ScanOrder]
    parser = argparse.ArgumentParser(prog="patchcrf", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: all cores); results do not depend on it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a class-per-directory dataset")
    p.add_argument("--data", help="dataset root (one sub-directory per class)")
    p.add_argument("--data-train", help="pre-split training root")
    p.add_argument("--data-test", help="pre-split test root (used with --report)")
    p.add_argument("--grid", type=_positive_int, default=3, help="patches per side (default 3)")
    p.add_argument("--components", type=_positive_int, default=4,
                   help="GMM components per class (default 4)")
    p.add_argument("--order", choices=orders, default="zigzag")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svm-c", type=float, default=10.0)
    p.add_argument("--svm-gamma", type=float, default=None, help="default 1/feature_dim")
    p.add_argument("--kl-samples", type=_positive_int, default=DEFAULT_KL_SAMPLES)
    p.add_argument("--exclude-self", action="store_true",
                   help="drop the self term from the transition normaliser")
    p.add_argument("--split-train", type=_positive_int, default=None, metavar="P",
                   help="train on P random images per class, hold out the rest")
    p.add_argument("--report", help="write an evaluation report on the held-out images")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("featurize", help="emit the probabilistic feature of an image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("predict", help="classify one image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score a model on a labelled dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scan", help="print the cell path of a scan order")
    p.add_argument("--grid", type=_positive_int, required=True)
    p.add_argument("--order", choices=orders, required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("info", help="print version and supported image formats")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("PATCHCRF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="patchcrf: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PatchCRFError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"patchcrf: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
