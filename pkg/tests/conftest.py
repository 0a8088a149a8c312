import numpy as np
import pytest

from semctrl.model import init_params
from semctrl.rng import Rng


def small_dims(V=20, d_emb=4, d_s=6, d_p=3, d_z=3, d_h=6):
    return {"V": V, "d_emb": d_emb, "d_s": d_s, "d_p": d_p, "d_z": d_z, "d_h": d_h}


@pytest.fixture
def params():
    p = init_params(small_dims(), Rng(3))
    rng = Rng(11)
    for _, t in p.named():
        if t.data.ndim == 1:
            t.data[:] = 0.1 * rng.gaussian_array(t.shape)
    return p


@pytest.fixture
def np_rng():
    return np.random.default_rng(0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
