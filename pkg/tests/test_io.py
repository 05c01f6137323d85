import json
import struct

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modrec.errors import (
    BadMagicError,
    ConfigError,
    CorruptionError,
    DatasetFormatError,
    UnsupportedVersionError,
)
from modrec.adversarial import EpsilonRow
from modrec.evaluation import SnrRow, confusion
from modrec.io import checkpoint as ckpt_mod
from modrec.io import dataset_file
from modrec.io.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from modrec.io.config import RunConfig, load_config_file, parse_config_text, resolve
from modrec.io.dataset_file import read_dataset, record_dtype, write_dataset
from modrec.io.plots import render_directory
from modrec.io.report import (
    REPORT_SCHEMA,
    IncompleteReportError,
    RunReport,
    export_report,
    read_confusion_csv,
    read_csv_columns,
    report_from_json,
    report_to_json,
)
from modrec.nn import Hyperparams, NetSpec, init_params
from modrec.sigsynth import CLASS_NAMES, FrameSet, ModClass, generate_dataset


def random_frames(n, seed=0):
    r = np.random.default_rng(seed)
    iq = (r.standard_normal((n, 128)) + 1j * r.standard_normal((n, 128))).astype(np.complex64)
    snr = r.integers(-2000, 1800, n) / 100
    snr[::7] = np.inf
    return FrameSet(iq, r.integers(0, 11, n), snr, r.integers(0, 3, n), r.random(n),
                    r.integers(0, 16, n), r.uniform(0.1, 3, n))


def same(a: FrameSet, b: FrameSet) -> bool:
    return a.identical(b)


# ---------------------------------------------------------------- dataset file


def test_dataset_round_trip_1000(tmp_path):
    fs = random_frames(1000)
    write_dataset(fs, tmp_path / "d.mrdf")
    back = read_dataset(tmp_path / "d.mrdf")
    assert same(fs, back)
    assert back.iq.tobytes() == fs.iq.tobytes()


def test_dataset_layout(tmp_path):
    fs = random_frames(3)
    buf = dataset_file.encode(fs)
    magic, version, n_cls, flen, count = struct.unpack_from("<4sHHHQ", buf)
    assert (magic, version, n_cls, flen, count) == (b"MRDF", 1, 11, 128, 3)
    assert record_dtype().itemsize == 2 + 2 + 1 + 4 + 1 + 4 + 1024
    table = sum(2 + len(n.encode()) for n in CLASS_NAMES)
    assert len(buf) == 18 + table + 3 * 1038
    rec = np.frombuffer(buf, dtype=record_dtype(), offset=18 + table)
    assert rec["iq"][0, 0] == fs.iq[0, 0].real and rec["iq"][0, 1] == fs.iq[0, 0].imag


def test_dataset_empty(tmp_path):
    write_dataset(FrameSet.empty(), tmp_path / "e.mrdf")
    back = read_dataset(tmp_path / "e.mrdf")
    assert len(back) == 0
    assert struct.unpack_from("<Q", (tmp_path / "e.mrdf").read_bytes(), 10)[0] == 0


def test_dataset_generated_round_trip(tmp_path, small_cfg):
    fs = generate_dataset(small_cfg)
    write_dataset(fs, tmp_path / "g.mrdf")
    assert same(read_dataset(tmp_path / "g.mrdf"), fs)


def test_dataset_bytes_deterministic(small_cfg):
    assert dataset_file.encode(generate_dataset(small_cfg)) == dataset_file.encode(generate_dataset(small_cfg))


def test_dataset_errors():
    buf = bytearray(dataset_file.encode(random_frames(4)))
    bad = bytearray(buf)
    bad[0] ^= 0xFF
    with pytest.raises(BadMagicError):
        dataset_file.decode(bytes(bad))
    with pytest.raises(CorruptionError):
        dataset_file.decode(bytes(buf[:-1]))
    with pytest.raises(CorruptionError):
        dataset_file.decode(bytes(buf[:12]))
    v2 = bytearray(buf)
    v2[4:6] = struct.pack("<H", 2)
    with pytest.raises(UnsupportedVersionError):
        dataset_file.decode(bytes(v2))
    with pytest.raises(BadMagicError):
        dataset_file.decode(b"")


def test_unrepresentable_snr_rejected():
    fs = random_frames(2)
    fs.snr_db[0] = 0.001
    with pytest.raises(ConfigError):
        dataset_file.encode(fs)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 40), st.integers(0, 2**32 - 1))
def test_dataset_round_trip_property(n, seed):
    fs = random_frames(n, seed)
    assert same(dataset_file.decode(dataset_file.encode(fs)), fs)


_GOOD = dataset_file.encode(random_frames(2))


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_dataset_fuzz_only_typed_errors(data):
    buf = bytearray(_GOOD)
    for _ in range(data.draw(st.integers(1, 8))):
        pos = data.draw(st.integers(0, len(buf) - 1))
        buf[pos] = data.draw(st.integers(0, 255))
    cut = data.draw(st.integers(0, len(buf)))
    try:
        dataset_file.decode(bytes(buf[:cut]))
    except DatasetFormatError:
        pass


@settings(max_examples=100, deadline=None)
@given(st.binary(max_size=200))
def test_dataset_random_bytes(blob):
    with pytest.raises(DatasetFormatError):
        dataset_file.decode(b"MRDF" + blob if blob[:1] == b"\0" else blob)


# ---------------------------------------------------------------- checkpoints


SPEC = NetSpec(conv1_filters=4, conv2_filters=2, dense_units=8)


def make_ckpt():
    return Checkpoint(SPEC, init_params(SPEC, 5), Hyperparams(conv1_filters=4, conv2_filters=2, dense_units=8),
                      {"seed": 5, "scaling": "none"})


def test_checkpoint_round_trip(tmp_path):
    c = make_ckpt()
    save_checkpoint(c, tmp_path / "m.ckpt")
    back = load_checkpoint(tmp_path / "m.ckpt")
    assert back.spec == c.spec and back.hyper == c.hyper and back.extra == c.extra
    assert list(back.params) == list(c.params)
    for k in c.params:
        assert back.params[k].tobytes() == c.params[k].tobytes()
    assert ckpt_mod.encode(back) == (tmp_path / "m.ckpt").read_bytes()


def test_checkpoint_errors():
    buf = ckpt_mod.encode(make_ckpt())
    with pytest.raises(BadMagicError):
        ckpt_mod.decode(b"XXXX" + buf[4:])
    with pytest.raises(CorruptionError):
        ckpt_mod.decode(buf[:-3])
    with pytest.raises(CorruptionError):
        ckpt_mod.decode(buf + b"\0")
    with pytest.raises(UnsupportedVersionError):
        ckpt_mod.decode(buf[:4] + struct.pack("<H", 9) + buf[6:])


def test_checkpoint_absurd_ndim_is_corruption():
    buf = bytearray(ckpt_mod.encode(make_ckpt()))
    meta_len = struct.unpack_from("<I", buf, 6)[0]
    first = 10 + meta_len + 2  # after the tensor count
    name_len = struct.unpack_from("<H", buf, first)[0]
    buf[first + 2 + name_len] = 244
    with pytest.raises(CorruptionError, match="dimensions"):
        ckpt_mod.decode(bytes(buf))


_CK = ckpt_mod.encode(make_ckpt())


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_checkpoint_fuzz_only_typed_errors(data):
    buf = bytearray(_CK)
    for _ in range(data.draw(st.integers(1, 6))):
        pos = data.draw(st.integers(0, len(buf) - 1))
        buf[pos] = data.draw(st.integers(0, 255))
    try:
        ckpt_mod.decode(bytes(buf[:data.draw(st.integers(0, len(buf)))]))
    except DatasetFormatError:
        pass


# ---------------------------------------------------------------- config


def test_config_key_value_and_json():
    text = "# comment\nframes = 12\nsnr_min=-4  # trailing\nclasses = BPSK, QAM16\neps_grid = 0, 0.05\n"
    cfg = resolve(parse_config_text(text), None)
    assert cfg.frames == 12 and cfg.snr_min == -4.0
    assert cfg.classes == (ModClass.BPSK, ModClass.QAM16)
    assert cfg.eps_grid == (0.0, 0.05)
    j = resolve(parse_config_text(json.dumps({"frames": 12, "classes": ["BPSK", "QAM16"]})), None)
    assert j.frames == 12 and j.classes == cfg.classes


def test_config_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        resolve({"bogus": 1}, None)


def test_config_overrides_win():
    cfg = resolve({"frames": "5", "seed": "1"}, {"seed": 9, "epochs": None})
    assert (cfg.frames, cfg.seed, cfg.epochs) == (5, 9, 10)


@pytest.mark.parametrize("bad", [{"frames": "x"}, {"frames": 1.5}, {"snr_step": 0}, {"channel": "rayleigh"},
                                 {"scaling": "loud"}, {"train_frac": 0.9}, {"eps": -1}, {"budget": 0},
                                 {"dropout_rate": 1.0}, {"classes": "NOPE"}])
def test_config_validated_up_front(bad):
    with pytest.raises(ConfigError):
        resolve(bad, None)


def test_config_parse_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config_text("frames 3")
    with pytest.raises(ConfigError):
        parse_config_text("a=1\na=2")
    with pytest.raises(ConfigError):
        parse_config_text("{not json")
    with pytest.raises(FileNotFoundError):
        load_config_file(tmp_path / "missing.cfg")


def test_config_snr_grid_and_dict():
    cfg = RunConfig()
    assert cfg.snr_grid() == tuple(float(s) for s in range(-20, 19, 2))
    d = cfg.to_dict()
    assert json.loads(json.dumps(d)) == d
    assert resolve(d, None) == cfg


# ---------------------------------------------------------------- reports


def make_report(eps=True):
    pred = np.array([0, 1, 2, 2, 4])
    lab = np.array([0, 1, 2, 3, 4])
    return RunReport(
        run_id="r1",
        hyperparams=Hyperparams().to_dict(),
        dataset_tags=["awgn"],
        clean_accuracy=0.8,
        confusion=confusion(pred, lab),
        per_snr=[SnrRow(0.0, 2, 2), SnrRow(10.0, 3, 2)],
        loss_trace="loss_trace.csv",
        epsilon_sweep=[EpsilonRow(0.0, 0.8, 5), EpsilonRow(0.05, 0.4, 5)] if eps else None,
    )


def test_report_json_round_trip_and_schema():
    for eps in (True, False):
        rep = make_report(eps)
        text = report_to_json(rep)
        jsonschema.validate(json.loads(text), REPORT_SCHEMA)
        assert report_from_json(text) == rep


def test_incomplete_report_lists_sections(tmp_path):
    rep = RunReport(run_id="x", clean_accuracy=0.5)
    with pytest.raises(IncompleteReportError) as info:
        export_report(rep, tmp_path)
    for name in ("hyperparams", "dataset_tags", "confusion", "per_snr"):
        assert name in str(info.value)
    assert not list(tmp_path.iterdir())


def test_confusion_csv_diagonal(tmp_path):
    lab = np.arange(11)
    rep = make_report()
    rep.confusion = confusion(lab, lab)
    export_report(rep, tmp_path, ("csv",))
    lines = (tmp_path / "confusion.csv").read_text().splitlines()
    assert len(lines) == 12
    assert lines[0].split(",")[1:] == list(CLASS_NAMES)
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")[1:]
        assert all(c == "0" for j, c in enumerate(cells) if j != i)
        assert cells[i] == "1"
    assert read_confusion_csv(tmp_path / "confusion.csv") == rep.confusion


def test_per_snr_csv_row_count(tmp_path):
    rep = make_report()
    export_report(rep, tmp_path, ("csv",))
    cols = read_csv_columns(tmp_path / "per_snr.csv")
    assert len(cols["snr_db"]) == len(rep.per_snr)
    assert [float(v) for v in cols["accuracy"]] == [1.0, 2 / 3]


def test_svg_are_pure_functions_of_csv(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    export_report(make_report(), a, ("csv", "json", "svg"))
    export_report(make_report(), b, ("csv", "json", "svg"))
    svgs = sorted(p.name for p in a.glob("*.svg"))
    assert {"confusion.svg", "per_snr.svg", "epsilon_sweep.svg"} <= set(svgs)
    for name in svgs:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    (a / "confusion.svg").unlink()
    render_directory(a)
    assert (a / "confusion.svg").read_bytes() == (b / "confusion.svg").read_bytes()
