"""Command-line entry point: ``modrec <generate|train|evaluate|attack|sweep|cross-eval|report>``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adversarial import accuracy_vs_snr_adversarial, confidence_report, epsilon_sweep, fgsm_batch
from .errors import ConfigError, DatasetFormatError, ModrecError
from .evaluation import (
    accuracy_by_snr,
    confusion,
    cross_eval,
    hyperparam_sweep,
    predictions,
    scale_inputs,
    split_indices,
    table_one_recipes,
)
from .io import report as rep
from .io.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .io.config import RunConfig, load_config_file, resolve
from .io.dataset_file import read_dataset, write_dataset
from .kernels import BACKEND
from .nn.training import accuracy, train
from .sigsynth import generate_dataset

log = logging.getLogger("modrec")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------- arguments


def _add_common(p):
    p.add_argument("--config", help="key=value or JSON config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_gen(p):
    p.add_argument("--classes", help="'all' or comma-separated class names")
    p.add_argument("--snr-min", type=float)
    p.add_argument("--snr-max", type=float)
    p.add_argument("--snr-step", type=float)
    p.add_argument("--frames", type=int, help="frames per (class, SNR) combination")
    p.add_argument("--sps", type=int)
    p.add_argument("--rolloff", type=float)
    p.add_argument("--channel", choices=("awgn", "fixed", "random"))
    p.add_argument("--scale", type=float)
    p.add_argument("--delay", type=int)
    p.add_argument("--delay-min", type=int)
    p.add_argument("--delay-max", type=int)
    p.add_argument("--workers", type=int)


def _add_hyper(p):
    p.add_argument("--conv1-filters", type=int)
    p.add_argument("--conv2-filters", type=int)
    p.add_argument("--dense-units", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--l2-coefficient", type=float)
    p.add_argument("--dropout-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)


def _add_split(p):
    p.add_argument("--train-frac", type=float)
    p.add_argument("--val-frac", type=float)
    p.add_argument("--test-frac", type=float)
    p.add_argument("--snr-floor", type=float)
    p.add_argument("--split-seed", type=int)
    p.add_argument("--scaling", choices=("none", "per_frame_rms", "oracle"))


def _add_subset(p):
    p.add_argument("--subset", choices=("test", "heldout", "all"), default="test",
                   help="test split, test plus below-floor frames, or every frame")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modrec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"modrec {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="synthesize a labeled dataset (.mrdf)")
    _add_common(p)
    _add_gen(p)

    p = sub.add_parser("train", help="train a classifier on the training split of a dataset")
    _add_common(p)
    p.add_argument("--data")
    _add_hyper(p)
    _add_split(p)

    p = sub.add_parser("evaluate", help="confusion matrix, per-SNR accuracy and a JSON run report")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--data")
    _add_subset(p)

    p = sub.add_parser("attack", help="FGSM epsilon sweep and adversarial example dumps")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--eps", type=float)
    p.add_argument("--eps-grid", help="comma-separated epsilon values")
    p.add_argument("--examples", type=int, default=20, help="number of flipped examples to dump")
    _add_subset(p)

    p = sub.add_parser("sweep", help="hyperparameter sweep scored on the validation split")
    _add_common(p)
    p.add_argument("--data")
    _add_hyper(p)
    _add_split(p)
    p.add_argument("--budget", type=int)
    p.add_argument("--sweep-conv1")
    p.add_argument("--sweep-conv2")
    p.add_argument("--sweep-dense")
    p.add_argument("--sweep-lr")
    p.add_argument("--sweep-l2")

    p = sub.add_parser("cross-eval", help="train on AWGN and random-delay ISI, test on every channel")
    _add_common(p)
    _add_gen(p)
    _add_hyper(p)
    _add_split(p)

    p = sub.add_parser("report", help="render SVG plots from the CSVs in a directory")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


_OUT_DEFAULTS = {"generate": "dataset.mrdf", "train": "model.ckpt"}


def _run_config(args) -> RunConfig:
    file_values = {}
    if args.config:
        if not Path(args.config).is_file():
            raise FileNotFoundError(f"config file not found: {args.config}")
        file_values = load_config_file(args.config)
    keys = set(RunConfig.keys())
    overrides = {k: v for k, v in vars(args).items() if k in keys and v is not None}
    if "out" not in overrides and "out" not in file_values:
        overrides["out"] = _OUT_DEFAULTS.get(args.command, ".")
    return resolve(file_values, overrides)


def _manifest(path: Path, args, cfg: RunConfig | None, argv, **inputs) -> None:
    rep.write_json({
        "command": args.command,
        "argv": list(argv),
        "config": None if cfg is None else cfg.to_dict(),
        "seed": None if cfg is None else cfg.seed,
        "inputs": inputs,
        "version": __version__,
        "kernel_backend": BACKEND,
    }, path)


def _require_file(path: str | None, flag: str = "--data") -> None:
    if path is None:
        raise UsageError(f"{flag} is required")
    if not Path(path).is_file():
        raise FileNotFoundError(f"no such file: {path}")


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _subset(frames, ckpt: Checkpoint, which: str):
    if which == "all":
        return frames
    split_cfg = RunConfig.from_mapping(ckpt.extra.get("split", {})).split_config()
    _, _, te, ex = split_indices(frames, split_cfg)
    return frames.subset(te if which == "test" else np.sort(np.concatenate([te, ex])))


def _load_model_and_data(args):
    _require_file(args.model, "--model")
    _require_file(args.data)
    ckpt = load_checkpoint(args.model)
    frames = _subset(read_dataset(args.data), ckpt, args.subset)
    if len(frames) == 0:
        raise ConfigError("no frames to evaluate")
    return ckpt, scale_inputs(frames, ckpt.extra.get("scaling", "none"))


# ---------------------------------------------------------------- commands


def cmd_generate(args, argv) -> int:
    cfg = _run_config(args)
    frames = generate_dataset(cfg.gen_config(), cfg.recipe(), workers=cfg.workers)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(frames, out)
    _manifest(out.with_suffix(".manifest.json"), args, cfg, argv, recipe=cfg.recipe().tag)
    log.info("wrote %d frames to %s", len(frames), out)
    return EXIT_OK


def cmd_train(args, argv) -> int:
    cfg = _run_config(args)
    _require_file(args.data)
    frames = scale_inputs(read_dataset(args.data), cfg.scaling)
    tr, va, _, _ = split_indices(frames, cfg.split_config())
    hyper = cfg.hyper()
    spec = hyper.net_spec()
    result = train(spec, hyper, frames.subset(tr), frames.subset(va) if len(va) else None, seed=cfg.seed)
    split_keys = ("train_frac", "val_frac", "test_frac", "snr_floor", "split_seed")
    extra = {"split": {k: getattr(cfg, k) for k in split_keys}, "scaling": cfg.scaling,
             "train_data": str(args.data), "seed": cfg.seed}
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(Checkpoint(spec, result.params, hyper, extra), out)
    rep.write_loss_csv(result.trace, out.with_suffix("." + rep.LOSS_CSV))
    _manifest(out.with_suffix(".manifest.json"), args, cfg, argv, data=args.data)
    log.info("training accuracy %.3f", accuracy(spec, result.params, frames.subset(tr)))
    return EXIT_OK


def cmd_evaluate(args, argv) -> int:
    cfg = _run_config(args)
    ckpt, frames = _load_model_and_data(args)
    pred = predictions(ckpt.spec, ckpt.params, frames)
    cm = confusion(pred, frames.class_ids)
    tags = sorted({f"channel_tag={t}" for t in np.unique(frames.channel_tag)})
    report = rep.RunReport(
        run_id=f"{Path(args.model).stem}@{Path(args.data).stem}:{args.subset}",
        hyperparams=ckpt.hyper.to_dict(),
        dataset_tags=[str(args.data), *tags],
        clean_accuracy=cm.accuracy,
        confusion=cm,
        per_snr=accuracy_by_snr(pred, frames),
        loss_trace=str(Path(args.model).with_suffix("." + rep.LOSS_CSV)),
    )
    out = _outdir(cfg)
    rep.export_report(report, out, formats=("csv", "json"))
    _manifest(out / "manifest.json", args, cfg, argv, model=args.model, data=args.data, subset=args.subset)
    print(f"accuracy {cm.accuracy:.4f} on {cm.total} frames")
    return EXIT_OK


def cmd_attack(args, argv) -> int:
    cfg = _run_config(args)
    ckpt, frames = _load_model_and_data(args)
    grid = sorted(set(cfg.eps_grid) | {0.0, cfg.eps})
    rows = epsilon_sweep(ckpt.spec, ckpt.params, frames, grid)
    out = _outdir(cfg)
    rep.write_epsilon_csv(rows, out / rep.EPSILON_CSV)
    rep.write_snr_attack_csv(accuracy_vs_snr_adversarial(ckpt.spec, ckpt.params, frames, cfg.eps),
                             out / rep.SNR_ATTACK_CSV)
    batch = fgsm_batch(ckpt.spec, ckpt.params, frames.tensors(), frames.class_ids, cfg.eps)
    conf = confidence_report(batch)
    rep.write_json(conf.to_dict(), out / "confidence.json")
    dumps = []
    for i in np.flatnonzero(batch.clean_probs.argmax(1) != batch.adv_probs.argmax(1))[:args.examples]:
        ex = batch[int(i)]
        dumps.append({
            "index": int(i), "snr_db": float(frames.snr_db[i]), "label": ex.label,
            "clean_pred": ex.clean_pred, "clean_confidence": ex.clean_confidence,
            "adv_pred": ex.adv_pred, "adv_confidence": ex.adv_confidence,
            "x": ex.x[0].tolist(), "x_adv": ex.x_adv[0].tolist(),
        })
    rep.write_json({"epsilon": cfg.eps, "examples": dumps}, out / "adversarial_examples.json")
    _manifest(out / "manifest.json", args, cfg, argv, model=args.model, data=args.data, subset=args.subset)
    for r in rows:
        print(f"eps {r.epsilon:g}: accuracy {r.accuracy:.4f}")
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    cfg = _run_config(args)
    _require_file(args.data)
    frames = scale_inputs(read_dataset(args.data), cfg.scaling)
    tr, va, _, _ = split_indices(frames, cfg.split_config())
    if len(va) == 0:
        raise ConfigError("validation split is empty")
    result = hyperparam_sweep(cfg.sweep_space(), frames.subset(tr), frames.subset(va), cfg.seed, cfg.hyper())
    out = _outdir(cfg)
    rep.write_sweep_csv(result, out / rep.SWEEP_CSV)
    best = result.best
    rep.write_json({"run": best.index, "hyperparams": best.hyper.to_dict(), "train_accuracy": best.train_accuracy,
                    "val_accuracy": best.val_accuracy, "param_count": best.param_count}, out / "best_config.json")
    _manifest(out / "manifest.json", args, cfg, argv, data=args.data)
    print(f"best run {best.index}: val accuracy {best.val_accuracy:.4f}")
    return EXIT_OK


def cmd_cross_eval(args, argv) -> int:
    cfg = _run_config(args)
    train_r, test_r = table_one_recipes(cfg.scale, cfg.delay, (cfg.delay_min, cfg.delay_max))
    rows = cross_eval(cfg.gen_config(), train_r, test_r, cfg.hyper(), cfg.split_config(), cfg.seed, cfg.scaling)
    out = _outdir(cfg)
    rep.write_cross_eval_csv(rows, out / rep.CROSS_EVAL_CSV)
    _manifest(out / "manifest.json", args, cfg, argv)
    for r in rows:
        print(f"{r.train_tag} -> {r.test_tag}: {r.accuracy:.4f}")
    return EXIT_OK


def cmd_report(args, argv) -> int:
    from .io.plots import render_directory

    indir = Path(args.indir)
    if not indir.is_dir():
        raise FileNotFoundError(f"no such directory: {indir}")
    rendered = render_directory(indir)
    for path in rendered:
        print(path)
    _manifest(indir / "report.manifest.json", args, None, argv, csv=sorted(p.stem + ".csv" for p in rendered))
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "attack": cmd_attack,
    "sweep": cmd_sweep,
    "cross-eval": cmd_cross_eval,
    "report": cmd_report,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"modrec {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DatasetFormatError) as exc:
        print(f"modrec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ModrecError, ValueError) as exc:
        print(f"modrec: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
