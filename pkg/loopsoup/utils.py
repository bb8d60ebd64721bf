# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Contains miscellaneous utility methods, the package logger and exceptions."""

import logging
from typing import Iterable, List, Sequence, Union
import numpy as np

__all__ = [
    "ArrayLike",
    "logger",
    "LoopSoupError",
    "ConfigurationError",
    "DomainError",
    "DefectLineError",
    "ParameterError",
    "NumericalError",
    "cyclic_pairs",
    "pairwise_sum",
    "format_bytes",
    "format_duration",
]

# anything `np.asarray` accepts
ArrayLike = Union[int, float, Iterable, np.ndarray]


logger = logging.getLogger("loopsoup")

_handler = logging.StreamHandler()
_handler.setLevel(logging.DEBUG)
_handler.setFormatter(
    logging.Formatter(
        "[%(asctime)s] %(levelname)-8s %(name)s: %(message)s", datefmt="%H:%M:%S"
    )
)
logger.addHandler(_handler)
# raised to INFO or DEBUG by `loopsoup -v`
logger.setLevel(logging.WARNING)


class LoopSoupError(Exception):
    """Base error, carries a message and an optional hint."""

    def __init__(self, msg, hint=""):
        super().__init__(msg, hint)

    @property
    def msg(self):
        return self.args[0]

    @property
    def hint(self):
        return self.args[1]

    def __str__(self):
        msg, hint = self.args
        if hint:
            msg += f" ({hint})"
        return msg


class ConfigurationError(LoopSoupError):
    """Invalid user input."""


class DomainError(ConfigurationError):
    pass


class DefectLineError(ConfigurationError):
    pass


class ParameterError(ConfigurationError, ValueError):
    pass


class NumericalError(LoopSoupError):
    pass


class EmptyDomainError(DomainError):
    def __init__(self):
        msg = "a discrete domain must contain at least one face"
        hint = "use a square with n >= 1, a disk with radius >= mesh or a face list"
        super().__init__(msg, hint)


class DisconnectedDomainError(DomainError):
    def __init__(self, components):
        self.components = components
        parts = "; ".join(
            "[" + ", ".join(f"({i}, {j})" for i, j in comp[:4])
            + (", ..." if len(comp) > 4 else "") + "]"
            for comp in components
        )
        msg = f"face list is not edge-connected: {len(components)} components {parts}"
        hint = "join the components by adding faces"
        super().__init__(msg, hint)


def cyclic_pairs(items: Sequence) -> List[tuple]:
    """Consecutive pairs of a closed sequence, including the pair closing it.

    Examples
    --------
    >>> cyclic_pairs([(0, 0), (1, 0), (1, 1)])
    [((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (0, 0))]
    """
    n = len(items)
    return [(items[i], items[(i + 1) % n]) for i in range(n)]


def pairwise_sum(values: ArrayLike) -> np.ndarray:
    """Sums along the first axis with a fixed binary reduction tree.

    The result only depends on the order of the input, not on how the input was
    produced, which keeps reductions of parallel Monte Carlo runs reproducible.

    Parameters
    ----------
    values : (N, ...) array_like
        The values to sum.

    Returns
    -------
    total : np.ndarray
    """
    arr = np.asarray(values)
    if arr.shape[0] == 0:
        return np.zeros(arr.shape[1:], dtype=arr.dtype)
    while arr.shape[0] > 1:
        if arr.shape[0] % 2:
            pad = np.zeros((1, *arr.shape[1:]), dtype=arr.dtype)
            arr = np.concatenate([arr, pad], axis=0)
        arr = arr[0::2] + arr[1::2]
    return arr[0]


def format_bytes(num: float, dec: int = 1) -> str:
    """Formats a byte count with binary prefixes, e.g. ``1.5MiB``."""
    for prefix in ("", "Ki", "Mi", "Gi", "Ti"):
        if abs(num) < 1024:
            break
        num /= 1024
    return f"{num:.{dec}f}{prefix}B"


def format_duration(seconds: float) -> str:
    """Formats a wall time for log messages.

    Sub-second times are given in ms, times below a minute in seconds and
    anything longer as ``h:mm:ss``.
    """
    if seconds < 1:
        return f"{1000 * seconds:.1f}ms"
    if seconds < 60:
        return f"{seconds:.2f}s"
    mins, secs = divmod(round(seconds), 60)
    hours, mins = divmod(mins, 60)
    return f"{hours:d}:{mins:02d}:{secs:02d}"
