"""Shared fixtures: MI tables are built once per session."""
import numpy as np
import pytest

from app.phy.mutual_information import mi_table_set
from app.relaying.frame import FrameConfig

SEED = 20240101


@pytest.fixture(scope="session")
def tables():
    """QPSK, 16QAM and 64QAM tables on the default [-20, 40] dB / 0.25 dB grid."""
    return mi_table_set(orders=(2, 4, 6))


@pytest.fixture(scope="session")
def open_loop() -> FrameConfig:
    """7 sub-frames, K = 600, T_1 = K/2, T_i = T_1/3."""
    return FrameConfig.open_loop()


@pytest.fixture(scope="session")
def closed_loop() -> FrameConfig:
    """3 sub-frames (400, 100, 100), first-sub-frame rate 1."""
    return FrameConfig.from_first_subframe_rate(1.0, (400, 100, 100))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)
