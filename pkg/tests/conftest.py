import pathlib

import numpy as np
import pytest

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def data_path(name):
    return DATA / name


def load_data_image(name):
    from gsr import pgm

    return pgm.load_pgm(DATA / name)
