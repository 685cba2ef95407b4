"""Gray-labelled square QAM alphabets with unit average energy."""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np

from app.errors import DomainError, ParameterError

# Largest relay constellation exercised (64-QAM)
MAX_ORDER_BITS = 6
SYMBOL_TOLERANCE = 1e-9


def _gray(i: int) -> int:
    return i ^ (i >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    order_bits: int
    points: np.ndarray = field(repr=False)  # points[label] for label in 0..2^m-1

    @property
    def size(self) -> int:
        return 1 << self.order_bits

    @property
    def name(self) -> str:
        return "QPSK" if self.order_bits == 2 else f"{self.size}QAM"

    def average_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def label_of(self, symbol: complex) -> int:
        """Label of `symbol`; DomainError when it is not an alphabet point."""
        distances = np.abs(self.points - complex(symbol))
        label = int(np.argmin(distances))
        if distances[label] > SYMBOL_TOLERANCE:
            raise DomainError(f"{symbol!r} is not a {self.name} point")
        return label

    def contains(self, symbol: complex) -> bool:
        return bool(np.min(np.abs(self.points - complex(symbol))) <= SYMBOL_TOLERANCE)

    def modulate(self, labels: Iterable[int]) -> np.ndarray:
        return self.points[np.asarray(list(labels), dtype=int)]

    def random_symbols(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.points[rng.integers(0, self.size, size=size)]


@lru_cache(maxsize=None)
def qam(order_bits: int) -> Constellation:
    """Square 2^m-QAM, Gray mapped per axis: label = (gray(I) << m/2) | gray(Q)."""
    if order_bits < 2 or order_bits % 2:
        raise ParameterError(f"square QAM needs an even order >= 2, got m={order_bits}")
    half = order_bits // 2
    levels_per_axis = 1 << half
    levels = 2.0 * np.arange(levels_per_axis) - (levels_per_axis - 1)
    norm = np.sqrt(2.0 * ((1 << order_bits) - 1) / 3.0)

    points = np.empty(1 << order_bits, dtype=complex)
    for i in range(levels_per_axis):
        for q in range(levels_per_axis):
            label = (_gray(i) << half) | _gray(q)
            points[label] = (levels[i] + 1j * levels[q]) / norm
    points.setflags(write=False)
    return Constellation(order_bits=order_bits, points=points)
