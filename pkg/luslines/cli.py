"""Command-line entry point ``luslines``.

Subcommands
-----------
phantom
    Write synthetic frames and their ground truth.
train
    Fit the unrolled network to a directory of frames.
detect
    Identify the lines of a frame or of every frame in a directory.
score
    Grade detections against ground truth.
bench
    Time proximal splitting against the unrolled network.

Every subcommand reads the optional ``--config`` file (see
:mod:`luslines.config`); flags take precedence over it.  Failures print a
single line ``error: <category>: <message>`` on standard error and the
exit status is 1.

Examples
--------
A desk-scale run from phantoms to scores.

>>> import os, tempfile
>>> tmp = tempfile.mkdtemp()
>>> spec = os.path.join(tmp, "phantoms.json")
>>> with open(spec, "w") as fobj:
...     _ = fobj.write('{"random": {"count": 2, "height": 64, "width": 80, '
...                    '"max_blines": 2, "seed": 3}}')
>>> truth = os.path.join(tmp, "truth")
>>> main(["phantom", spec, truth])
0
>>> print(sorted(os.listdir(truth)))
['phantom_000.json', 'phantom_000.pgm', 'phantom_001.json', 'phantom_001.pgm']

>>> cfg = os.path.join(tmp, "run.json")
>>> with open(cfg, "w") as fobj:
...     _ = fobj.write('{"solver": "radon", "angle_step": 2}')
>>> found = os.path.join(tmp, "found")
>>> main(["--config", cfg, "detect", truth, "--out", found])
0
>>> print(sorted(os.listdir(found)))
['counts.csv', 'phantom_000.json', 'phantom_000_overlay.pgm', 'phantom_001.json', 'phantom_001_overlay.pgm']
>>> print(open(os.path.join(found, "counts.csv")).readline().strip())
image,n_blines,pleural_found

>>> scores = os.path.join(tmp, "scores.csv")
>>> main(["score", found, truth, "--out", scores])
0
>>> rows = open(scores).read().splitlines()
>>> print(len(rows), rows[0].split(",")[:3], rows[-1].split(",")[0])
4 ['image', 'Precision', 'Recall'] all

Detecting twice gives the same bytes.

>>> again = os.path.join(tmp, "again")
>>> main(["--config", cfg, "detect", truth, "--out", again])
0
>>> print(all(open(os.path.join(found, name), "rb").read()
...           == open(os.path.join(again, name), "rb").read()
...           for name in os.listdir(found)))
True

A missing counterpart is an error.

>>> os.remove(os.path.join(found, "phantom_001.json"))
>>> main(["score", found, truth, "--out", scores])
1
"""

from __future__ import division
from __future__ import unicode_literals

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from luslines.config import load_config, thread_count
from luslines.cpsSolver import cps_solve
from luslines.ducps import ducps_forward, ducps_init, load_params, \
    save_params
from luslines.cauchy import default_gamma
from luslines.errors import ConfigError, FormatError, LuslinesError, \
    MissingFileError, StorageError
from luslines.images import load_image, pad_to, save_image
from luslines.lineIdentification import detect_pipeline
from luslines.overlay import save_colour_overlay, save_overlay
from luslines.phantom import GroundTruth, PhantomSpec, generate_phantom, \
    random_specs
from luslines.radon import forward_radon
from luslines.scoring import match_detections, save_scores
from luslines.training import save_history, train

__docformat__ = 'restructuredtext'

__all__ = ["main", "cmd_phantom", "cmd_train", "cmd_detect", "cmd_score",
           "cmd_bench"]

_log = logging.getLogger(__name__)

_IMAGE_SUFFIXES = (".pgm", ".png")
_LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
_LEVELS = [logging.WARNING, logging.INFO, logging.DEBUG]


def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def _image_paths(source):
    """Frames at `source`, a single file or a directory."""
    if os.path.isfile(source):
        return [source]
    if not os.path.isdir(source):
        raise MissingFileError("{} not found".format(source))
    paths = [os.path.join(source, name) for name in sorted(os.listdir(source))
             if name.lower().endswith(_IMAGE_SUFFIXES)]
    if not paths:
        raise MissingFileError("no PGM or PNG images in {}".format(source))
    return paths


def _makedirs(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise StorageError("{}: cannot create directory ({})"
                           .format(path, exc))


def _read_frame(path, cfg):
    img = load_image(path)
    if cfg.pad_height is not None:
        img = pad_to(img, cfg.pad_height, cfg.pad_width)
    return img


def _read_frames(paths, cfg):
    frames = [_read_frame(path, cfg) for path in paths]
    shapes = {img.shape for img in frames}
    if len(shapes) > 1:
        raise ConfigError("pad_height", "frames differ in size {}; set "
                          "pad_height and pad_width".format(sorted(shapes)))
    return frames


def _params(cfg):
    return load_params(cfg.model_path()) if cfg.model is not None else None


def _phantom_specs(path, seed=0):
    """Phantom descriptions in the JSON file at `path`.

    The file holds either a list of phantom objects or an object
    ``{"random": {...}}`` whose fields are passed to
    :func:`~luslines.phantom.random_specs`, the seed defaulting to `seed`.

    Examples
    --------
    >>> import os, tempfile
    >>> path = os.path.join(tempfile.mkdtemp(), "phantoms.json")
    >>> def specs(text):
    ...     with open(path, "w") as fobj:
    ...         _ = fobj.write(text)
    ...     return _phantom_specs(path)
    >>> print(len(specs('{"random": {"count": 3, "width": 80}}')))
    3
    >>> specs('{"random": {"count": "3"}}')
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: random.count: must be an integer >= 1, got '3'
    >>> specs('{"random": {"count": true}}')
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: random.count: must be an integer >= 1, got True
    >>> specs('{"random": {"count": 3, "height": 64, "width": 40}}')
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: random.max_blines: 3 B-lines 16 px apart do not fit in a width of 40

    The command reports the problem instead of waiting for room.

    >>> main(["phantom", path, os.path.join(os.path.dirname(path), "out")])
    1
    """
    try:
        with open(path) as fobj:
            data = json.load(fobj)
    except FileNotFoundError:
        raise MissingFileError("phantom file {} not found".format(path))
    except (OSError, ValueError) as exc:
        raise FormatError("{}: unreadable phantom file ({})"
                          .format(path, exc))
    if isinstance(data, list):
        return [PhantomSpec.from_dict(item) for item in data]
    if isinstance(data, dict) and set(data) == {"random"}:
        options = dict(data["random"])
        options.setdefault("seed", seed)
        count = options.pop("count", None)
        if (not isinstance(count, int) or isinstance(count, bool)
                or count < 1):
            raise ConfigError("random.count", "must be an integer >= 1, "
                              "got {!r}".format(count))
        try:
            return random_specs(count, **options)
        except ConfigError as exc:
            raise ConfigError("random." + exc.field, exc.message) from None
        except TypeError as exc:
            raise ConfigError("random", str(exc))
    raise FormatError("{}: expected a list of phantoms or "
                      "{{\"random\": {{...}}}}".format(path))


def cmd_phantom(spec_path, out_dir, cfg):
    """Write ``phantom_NNN.pgm`` and ``phantom_NNN.json`` for each phantom."""
    specs = _phantom_specs(spec_path, cfg.seed)
    _makedirs(out_dir)
    for index, spec in enumerate(specs):
        img, truth = generate_phantom(spec)
        stem = os.path.join(out_dir, "phantom_{:03d}".format(index))
        save_image(img, stem + ".pgm")
        truth.save(stem + ".json")
    _log.info("wrote %d phantom(s) to %s", len(specs), out_dir)
    return len(specs)


def cmd_train(image_dir, model_path, history_path, cfg):
    """Train the unrolled network and write its parameters and losses.

    Examples
    --------
    >>> import os, tempfile
    >>> from luslines.config import RunConfig
    >>> from luslines.ducps import load_params
    >>> tmp = tempfile.mkdtemp()
    >>> spec = os.path.join(tmp, "phantoms.json")
    >>> with open(spec, "w") as fobj:
    ...     _ = fobj.write('{"random": {"count": 2, "height": 32, "width": 40, '
    ...                    '"max_blines": 1, "separation": 8, "seed": 4}}')
    >>> cfg = RunConfig.from_dict({"angle_step": 10,
    ...                            "train": {"epochs": 2, "lr0": 1e-3}})
    >>> _ = cmd_phantom(spec, tmp, cfg)
    >>> model, history = [os.path.join(tmp, name)
    ...                   for name in ("model.ducp", "loss.csv")]
    >>> params, records = cmd_train(tmp, model, history, cfg)
    >>> print(load_params(model).shape, load_params(model).k)
    (53, 18) 7
    >>> print(open(history).read().splitlines()[0], len(records))
    epoch,mean_loss,lr 2
    """
    frames = _read_frames(_image_paths(image_dir), cfg)
    geo = cfg.geometry_for(frames[0])
    params, history = train(frames, cfg.train, geo, params=_params(cfg))
    save_params(params, model_path)
    save_history(history, history_path)
    _log.info("model written to %s, loss history to %s", model_path,
              history_path)
    return params, history


def _detect_one(path, out_dir, cfg, params):
    img = _read_frame(path, cfg)
    geo = cfg.geometry_for(img)
    stem = _stem(path)
    result = detect_pipeline(img, geo, params=params, knobs=cfg.knobs(),
                             name=stem, **cfg.solver_args())
    try:
        with open(os.path.join(out_dir, stem + ".json"), "w") as fobj:
            fobj.write(result.to_json())
    except OSError as exc:
        raise StorageError("{}: cannot write detections ({})"
                           .format(stem, exc))
    save_overlay(img, result, geo,
                 os.path.join(out_dir, stem + "_overlay.pgm"))
    if cfg.overlay_png:
        save_colour_overlay(img, result, geo,
                            os.path.join(out_dir, stem + "_overlay.png"))
    return stem, result


def cmd_detect(source, out_dir, cfg):
    """Write detections, overlays and ``counts.csv`` for the frames at
    `source`."""
    paths = _image_paths(source)
    params = _params(cfg) if cfg.solver == "ducps" else None
    _makedirs(out_dir)
    workers = min(thread_count(), len(paths))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(
            lambda path: _detect_one(path, out_dir, cfg, params), paths))

    counts = os.path.join(out_dir, "counts.csv")
    try:
        with open(counts, "w", newline="") as fobj:
            writer = csv.writer(fobj, lineterminator="\n")
            writer.writerow(["image", "n_blines", "pleural_found"])
            for stem, result in results:
                writer.writerow([stem, result.n_blines,
                                 str(result.pleural_found).lower()])
    except OSError as exc:
        raise StorageError("{}: cannot write counts ({})"
                           .format(counts, exc))
    _log.info("%d frame(s): %d B-line(s) in total", len(results),
              sum(result.n_blines for _, result in results))
    return results


def _detected_columns(path):
    try:
        with open(path) as fobj:
            data = json.load(fobj)
        return [float(line["x"]) for line in data["blines"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise FormatError("{}: unreadable detections ({})".format(path, exc))


def _json_stems(directory):
    if not os.path.isdir(directory):
        raise MissingFileError("{} not found".format(directory))
    return {_stem(name) for name in os.listdir(directory)
            if name.endswith(".json")}


def cmd_score(detection_dir, truth_dir, out_path, cfg):
    """Score detections against ground truth paired by file stem."""
    found = _json_stems(detection_dir)
    truth = _json_stems(truth_dir)
    unmatched = sorted(found ^ truth)
    if unmatched:
        raise MissingFileError("no counterpart for {}"
                               .format(", ".join(unmatched)))
    if not truth:
        raise MissingFileError("no ground truth in {}".format(truth_dir))

    reports = []
    for stem in sorted(truth):
        columns = _detected_columns(os.path.join(detection_dir,
                                                 stem + ".json"))
        gt = GroundTruth.load(os.path.join(truth_dir, stem + ".json"))
        reports.append((stem, match_detections(columns, gt,
                                               threshold=cfg.threshold)))
    save_scores(reports, out_path)
    _log.info("scored %d frame(s) into %s", len(reports), out_path)
    return reports


def cmd_bench(image_dir, out_path, cfg):
    """Time proximal splitting to tolerance against the unrolled network.

    The unrolled network uses the configured model, or its initial
    parameters when none is configured.

    Examples
    --------
    >>> import os, tempfile
    >>> from luslines.config import RunConfig
    >>> from luslines.images import save_image
    >>> from luslines.phantom import PhantomSpec, generate_phantom
    >>> tmp = tempfile.mkdtemp()
    >>> for index, column in enumerate((20, 50)):
    ...     img, _ = generate_phantom(PhantomSpec(
    ...         height=64, width=80, pleural_depth=20,
    ...         bline_columns=[column]))
    ...     save_image(img, os.path.join(tmp, "frame_{}.pgm".format(index)))
    >>> out = os.path.join(tmp, "bench.csv")
    >>> rows = cmd_bench(tmp, out, RunConfig(angle_step=2., max_iter=40))
    >>> print([row[3] for row in rows], all(row[1] >= 1 for row in rows))
    [7, 7] True
    >>> lines = open(out).read().splitlines()
    >>> print(len(lines), lines[0])
    4 image,cps_iterations,cps_seconds,ducps_layers,ducps_seconds
    >>> print(lines[-1].split(",")[0], lines[-1].split(",")[3])
    mean 7
    """
    paths = _image_paths(image_dir)
    model = _params(cfg)
    rows = []
    for path in paths:
        img = _read_frame(path, cfg)
        geo = cfg.geometry_for(img)

        begin = time.perf_counter()
        _, iterations = cps_solve(img, geo, gamma=cfg.gamma,
                                  max_iter=cfg.max_iter, tol=cfg.tol)
        cps_seconds = time.perf_counter() - begin

        begin = time.perf_counter()
        r0 = forward_radon(img, geo)
        gamma = cfg.gamma if cfg.gamma is not None else default_gamma(r0)
        params = model if model is not None else ducps_init(geo, gamma)
        params = params.with_gamma(gamma)
        ducps_forward(r0, r0, params)
        ducps_seconds = time.perf_counter() - begin

        _log.debug("%s: %d iterations in %.3g s, %d layers in %.3g s",
                   _stem(path), iterations, cps_seconds, params.k,
                   ducps_seconds)
        rows.append([_stem(path), iterations, cps_seconds, params.k,
                     ducps_seconds])

    table = np.array([row[1:] for row in rows], dtype=float)
    means = table.mean(axis=0)
    try:
        with open(out_path, "w", newline="") as fobj:
            writer = csv.writer(fobj, lineterminator="\n")
            writer.writerow(["image", "cps_iterations", "cps_seconds",
                             "ducps_layers", "ducps_seconds"])
            for row in rows:
                writer.writerow(row[:1] + [row[1], format(row[2], ".6g"),
                                           row[3], format(row[4], ".6g")])
            writer.writerow(["mean"] + [format(value, ".6g")
                                        for value in means])
    except OSError as exc:
        raise StorageError("{}: cannot write timings ({})"
                           .format(out_path, exc))
    return rows


def _parser():
    parser = argparse.ArgumentParser(
        prog="luslines",
        description="Line artifact identification in lung ultrasound "
                    "frames by Cauchy proximal splitting in the Radon "
                    "domain.")
    parser.add_argument("--config", "-c", help="JSON run configuration")
    parser.add_argument("--verbose", "-v", action="count", default=0,
                        help="INFO with -v, DEBUG with -vv")
    commands = parser.add_subparsers(dest="command", required=True)

    phantom = commands.add_parser("phantom", help="write synthetic frames")
    phantom.add_argument("spec", help="JSON list of phantoms or "
                                      "{\"random\": {...}}")
    phantom.add_argument("out", help="output directory")

    training = commands.add_parser("train", help="train the unrolled network")
    training.add_argument("images", help="directory of training frames")
    training.add_argument("--model-out", default="model.ducp",
                          help="parameter file to write "
                               "(default %(default)s)")
    training.add_argument("--history", default="loss.csv",
                          help="loss history CSV (default %(default)s)")
    training.add_argument("--loss", choices=["ssim", "n2n"])
    training.add_argument("--epochs", type=int)

    for name, help_text in (("detect", "identify lines"),
                            ("bench", "time the solvers")):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("images", help="frame or directory of frames")
        if name == "detect":
            sub.add_argument("--out", default="detections",
                             help="output directory (default %(default)s)")
            sub.add_argument("--png", action="store_true", default=None,
                             help="also write colour overlays")
        else:
            sub.add_argument("--out", default="bench.csv",
                             help="timing CSV (default %(default)s)")
        sub.add_argument("--solver", choices=["cps", "ducps", "radon"])
        sub.add_argument("--model", help="parameter file of the network")
        sub.add_argument("--gamma", type=float)
        sub.add_argument("--max-iter", type=int)

    score = commands.add_parser("score", help="grade detections")
    score.add_argument("detections", help="directory of detection JSON")
    score.add_argument("truth", help="directory of ground-truth JSON")
    score.add_argument("--out", default="scores.csv",
                       help="metrics CSV (default %(default)s)")
    score.add_argument("--threshold", type=float)
    return parser


def _overrides(args):
    names = {"solver": "solver", "model": "model", "gamma": "gamma",
             "max_iter": "max_iter", "threshold": "threshold",
             "png": "overlay_png", "loss": "train.loss_kind",
             "epochs": "train.epochs"}
    return {field: getattr(args, name) for name, field in names.items()
            if hasattr(args, name)}


def main(argv=None):
    """Run the command line `argv` and return the exit status."""
    args = _parser().parse_args(argv)
    logging.basicConfig(level=_LEVELS[min(args.verbose, 2)],
                        format=_LOG_FORMAT)
    try:
        cfg = load_config(args.config, **_overrides(args))
        if args.command == "phantom":
            cmd_phantom(args.spec, args.out, cfg)
        elif args.command == "train":
            cmd_train(args.images, args.model_out, args.history, cfg)
        elif args.command == "detect":
            cmd_detect(args.images, args.out, cfg)
        elif args.command == "score":
            cmd_score(args.detections, args.truth, args.out, cfg)
        elif args.command == "bench":
            cmd_bench(args.images, args.out, cfg)
    except LuslinesError as exc:
        print("error: {}: {}".format(exc.category, exc), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
