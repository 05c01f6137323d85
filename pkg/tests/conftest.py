import numpy as np
import pytest

from modrec.sigsynth import GenConfig, ModClass


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_cfg():
    return GenConfig(snr_grid_db=(0.0, 10.0), frames_per_combo=3, master_seed=99)


@pytest.fixture(scope="session")
def four_class_cfg():
    return GenConfig(
        snr_grid_db=(10.0, 14.0, 18.0),
        frames_per_combo=4,
        classes=(ModClass.BPSK, ModClass.QPSK, ModClass.QAM16, ModClass.GFSK),
        master_seed=5,
    )


def pytest_terminal_summary(terminalreporter):
    from criteria import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {detail}")
