import json

import numpy as np
import pytest

from modrec.cli import main
from modrec.io import dataset_file
from modrec.io.checkpoint import load_checkpoint
from modrec.io.dataset_file import read_dataset
from modrec.io.report import RunReport, read_csv_columns
from modrec.sigsynth import GenConfig, generate_dataset

GEN4 = ["--classes", "BPSK,QPSK,QAM16,GFSK", "--snr-min", "10", "--snr-max", "18", "--snr-step", "8",
        "--frames", "8", "--seed", "3"]
TINY = ["--conv1-filters", "4", "--conv2-filters", "2", "--dense-units", "8", "--epochs", "1", "--batch-size", "16"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["generate", *GEN4, "--out", str(d / "d.mrdf")]) == 0
    assert main(["train", "--data", str(d / "d.mrdf"), *TINY, "--seed", "1", "--out", str(d / "m.ckpt")]) == 0
    return d


def test_generate_full_grid(tmp_path):
    argv = ["generate", "--classes", "all", "--snr-min", "-20", "--snr-max", "18", "--snr-step", "2",
            "--frames", "2", "--channel", "awgn", "--seed", "7", "--out", str(tmp_path / "d1.mrdf")]
    assert main(argv) == 0
    fs = read_dataset(tmp_path / "d1.mrdf")
    assert len(fs) == 11 * 20 * 2
    assert sorted(set(fs.snr_db.tolist())) == list(range(-20, 19, 2))
    ref = generate_dataset(GenConfig(frames_per_combo=2, master_seed=7))
    assert (tmp_path / "d1.mrdf").read_bytes() == dataset_file.encode(ref)
    manifest = json.loads((tmp_path / "d1.manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["config"]["frames"] == 2


def test_generate_isi_channels(tmp_path):
    for ch, tag in (("fixed", 1), ("random", 2)):
        out = tmp_path / f"{ch}.mrdf"
        assert main(["generate", *GEN4, "--channel", ch, "--scale", "0.5", "--out", str(out)]) == 0
        fs = read_dataset(out)
        assert np.all(fs.channel_tag == tag) and np.all(fs.path_scale == 0.5)


def test_generate_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["generate", *GEN4, "--out", str(tmp_path / f"{name}.mrdf")]) == 0
    assert (tmp_path / "a.mrdf").read_bytes() == (tmp_path / "b.mrdf").read_bytes()


def test_train_outputs(workdir):
    ck = load_checkpoint(workdir / "m.ckpt")
    assert ck.spec.conv1_filters == 4 and ck.extra["seed"] == 1
    cols = read_csv_columns(workdir / "m.loss_trace.csv")
    assert cols["batch"][0] == "0" and all(float(v) > 0 for v in cols["train_loss"])
    man = json.loads((workdir / "m.manifest.json").read_text())
    assert man["command"] == "train" and man["config"]["epochs"] == 1


def test_train_reproducible(workdir, tmp_path):
    args = ["train", "--data", str(workdir / "d.mrdf"), *TINY, "--seed", "1", "--out", str(tmp_path / "m.ckpt")]
    assert main(args) == 0
    assert (tmp_path / "m.ckpt").read_bytes() == (workdir / "m.ckpt").read_bytes()
    assert (tmp_path / "m.loss_trace.csv").read_bytes() == (workdir / "m.loss_trace.csv").read_bytes()


def test_evaluate(workdir, capsys):
    out = workdir / "eval"
    assert main(["evaluate", "--model", str(workdir / "m.ckpt"), "--data", str(workdir / "d.mrdf"),
                 "--out", str(out)]) == 0
    assert "accuracy" in capsys.readouterr().out
    report = RunReport.from_dict(json.loads((out / "report.json").read_text()))
    assert report.confusion.total == sum(r.count for r in report.per_snr)
    assert len((out / "confusion.csv").read_text().splitlines()) == 12
    assert len(read_csv_columns(out / "per_snr.csv")["snr_db"]) == 2
    assert (out / "manifest.json").is_file()


def test_attack(workdir, capsys):
    out = workdir / "adv"
    assert main(["attack", "--model", str(workdir / "m.ckpt"), "--data", str(workdir / "d.mrdf"),
                 "--eps", "0.05", "--out", str(out)]) == 0
    assert "eps 0.05" in capsys.readouterr().out
    cols = read_csv_columns(out / "epsilon_sweep.csv")
    assert "0.05" in cols["epsilon"]
    for name in ("snr_adversarial.csv", "confidence.json", "adversarial_examples.json", "manifest.json"):
        assert (out / name).is_file()
    dump = json.loads((out / "adversarial_examples.json").read_text())
    assert dump["epsilon"] == 0.05


def test_sweep_and_report(workdir):
    out = workdir / "sweep"
    assert main(["sweep", "--data", str(workdir / "d.mrdf"), *TINY, "--budget", "2", "--sweep-conv1", "2,4",
                 "--sweep-conv2", "2", "--sweep-dense", "8", "--sweep-lr", "0.001", "--sweep-l2", "0",
                 "--out", str(out)]) == 0
    cols = read_csv_columns(out / "sweep.csv")
    assert len(cols["run"]) == 2 and all(cols["val_accuracy"])
    best = json.loads((out / "best_config.json").read_text())
    assert best["val_accuracy"] == max(float(v) for v in cols["val_accuracy"])
    assert main(["report", "--in", str(out)]) == 0
    assert (out / "sweep.svg").is_file()


def test_cross_eval(tmp_path, capsys):
    assert main(["cross-eval", *GEN4, *TINY, "--out", str(tmp_path)]) == 0
    cols = read_csv_columns(tmp_path / "cross_eval.csv")
    pairs = set(zip(cols["train"], cols["test"]))
    assert {("awgn", "awgn"), ("awgn", "isi-fixed"), ("isi-random", "isi-random"),
            ("isi-random", "isi-fixed")} <= pairs
    assert main(["report", "--in", str(tmp_path)]) == 0
    assert (tmp_path / "cross_eval.svg").is_file()


def test_report_renders_all(workdir):
    out = workdir / "eval2"
    main(["evaluate", "--model", str(workdir / "m.ckpt"), "--data", str(workdir / "d.mrdf"), "--out", str(out)])
    assert main(["report", "--in", str(out)]) == 0
    assert (out / "confusion.svg").is_file() and (out / "per_snr.svg").is_file()
    man = json.loads((out / "report.manifest.json").read_text())
    assert man["command"] == "report" and "confusion.csv" in man["inputs"]["csv"]


def test_config_file_and_override(workdir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("frames = 2\nclasses = BPSK\nsnr_min = 0\nsnr_max = 0\nseed = 4\n")
    assert main(["generate", "--config", str(cfg), "--frames", "3", "--out", str(tmp_path / "x.mrdf")]) == 0
    assert len(read_dataset(tmp_path / "x.mrdf")) == 3


# ---------------------------------------------------------------- exit codes


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["generate", "--frames", "many"]) == 1
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main(["train"]) == 1


def test_missing_config_names_file(tmp_path, capsys):
    missing = str(tmp_path / "missing.cfg")
    assert main(["train", "--config", missing]) == 2
    assert missing in capsys.readouterr().err


def test_missing_inputs(tmp_path, capsys):
    assert main(["train", "--data", str(tmp_path / "nope.mrdf")]) == 2
    assert "nope.mrdf" in capsys.readouterr().err
    assert main(["evaluate", "--model", str(tmp_path / "m.ckpt"), "--data", str(tmp_path / "d.mrdf")]) == 2
    assert main(["report", "--in", str(tmp_path / "absent")]) == 2


def test_corrupt_dataset_is_io_error(tmp_path, capsys):
    bad = tmp_path / "bad.mrdf"
    bad.write_bytes(b"JUNKJUNKJUNK")
    assert main(["train", "--data", str(bad)]) == 2
    assert "magic" in capsys.readouterr().err


def test_validation_errors(tmp_path):
    assert main(["generate", "--frames", "0", "--out", str(tmp_path / "a.mrdf")]) == 3
    assert main(["generate", "--snr-step", "-1", "--out", str(tmp_path / "a.mrdf")]) == 3
    cfg = tmp_path / "c.cfg"
    cfg.write_text("mystery = 1\n")
    assert main(["generate", "--config", str(cfg)]) == 3
