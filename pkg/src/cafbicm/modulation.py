"""PSK constellations with bit labelings and the superimposed constellation seen at the relay.

Labels are handled as integers ``0 .. 2**K - 1`` internally. Bit ``s`` (1-based) of a
label is the ``s``-th most significant bit, so the label ``(b1, ..., bK)`` has integer
value ``sum(b_s * 2**(K - s))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

BitLabel = Union[int, str, Sequence[int]]

_BITS_PER_SYMBOL = {"bpsk": 1, "qpsk": 2, "8psk": 3}
# QPSK sits on the diagonals so both quadrature components carry one bit each.
_PHASE_OFFSET = {"bpsk": 0.0, "qpsk": np.pi / 4, "8psk": 0.0}


class LabelingError(ValueError):
    """Raised when a custom labeling table is not a bijection onto F_2^K."""


class DimensionError(ValueError):
    """Raised when bit labels have the wrong length."""


def gray_sequence(k: int) -> list[int]:
    """Binary reflected Gray code of ``k`` bits, in sequence order."""
    return [i ^ (i >> 1) for i in range(1 << k)]


def label_to_int(label: BitLabel, k: int) -> int:
    """Convert a bit label (string ``"01"``, bit sequence, or int) to its integer value."""
    if isinstance(label, (int, np.integer)):
        if not 0 <= int(label) < (1 << k):
            raise DimensionError(f"label {label} out of range for K={k}")
        return int(label)
    if isinstance(label, str):
        bits = [int(ch) for ch in label]
    else:
        bits = [int(b) for b in label]
    if len(bits) != k:
        raise DimensionError(f"label has {len(bits)} bits, expected {k}")
    value = 0
    for b in bits:
        if b not in (0, 1):
            raise DimensionError(f"label bits must be 0/1, got {b}")
        value = (value << 1) | b
    return value


def int_to_label(value: int, k: int) -> str:
    return format(int(value), f"0{k}b")


def label_bits(k: int) -> np.ndarray:
    """Return the ``(2**K, K)`` 0/1 table of all labels; column ``s-1`` holds bit ``s``."""
    idx = np.arange(1 << k)
    shifts = np.arange(k - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def xor_labels(a: BitLabel, b: BitLabel, k: int | None = None) -> str:
    """Bitwise XOR of two labels, returned as a bit string.

    When ``k`` is omitted both labels must be given as strings or bit sequences
    of equal length.
    """
    if k is None:
        la = len(a) if not isinstance(a, (int, np.integer)) else None
        lb = len(b) if not isinstance(b, (int, np.integer)) else None
        if la is None or lb is None:
            raise DimensionError("k is required when labels are given as integers")
        if la != lb:
            raise DimensionError(f"label lengths differ: {la} vs {lb}")
        k = la
    return int_to_label(label_to_int(a, k) ^ label_to_int(b, k), k)


@dataclass(frozen=True)
class Constellation:
    """Unit-radius 2**K-PSK mapper ``F_2^K -> C``.

    ``points[v]`` is the complex symbol for the label with integer value ``v``.
    """

    name: str
    k: int
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return 1 << self.k

    @property
    def bits(self) -> np.ndarray:
        return label_bits(self.k)

    @property
    def peak_power(self) -> float:
        return float(np.max(np.abs(self.points) ** 2))

    def map(self, label: BitLabel) -> complex:
        return complex(self.points[label_to_int(label, self.k)])

    def demap_exact(self, point: complex, atol: float = 1e-12) -> str:
        """Inverse lookup of a noiseless symbol; raises ``KeyError`` if no point matches."""
        d = np.abs(self.points - point)
        v = int(np.argmin(d))
        if d[v] > atol:
            raise KeyError(f"{point} is not a constellation point")
        return int_to_label(v, self.k)

    def angular_labels(self) -> list[str]:
        """Labels sorted by the angle of their point, starting from the smallest angle in [0, 2pi)."""
        ang = np.mod(np.angle(self.points), 2 * np.pi)
        return [int_to_label(v, self.k) for v in np.argsort(ang, kind="stable")]


def make_constellation(name: str, labeling: str | Sequence[BitLabel] = "gray") -> Constellation:
    """Build a BPSK, QPSK or 8PSK constellation.

    Args:
        name: ``"bpsk"``, ``"qpsk"`` or ``"8psk"`` (case-insensitive).
        labeling: ``"gray"`` or ``"natural"``, or a custom table listing the
            label of each point in counter-clockwise angular order, starting at
            the first point (angle pi/4 for QPSK, 0 otherwise).

    Raises:
        LabelingError: if a custom table is not a permutation of all K-bit labels.
    """
    key = name.lower()
    if key not in _BITS_PER_SYMBOL:
        raise ValueError(f"unknown modulation {name!r}; expected one of {sorted(_BITS_PER_SYMBOL)}")
    k = _BITS_PER_SYMBOL[key]
    size = 1 << k

    if isinstance(labeling, str):
        scheme = labeling.lower()
        if scheme == "gray":
            order = gray_sequence(k)
        elif scheme == "natural":
            order = list(range(size))
        else:
            raise LabelingError(f"unknown labeling scheme {labeling!r}")
    else:
        try:
            order = [label_to_int(lab, k) for lab in labeling]
        except DimensionError as exc:
            raise LabelingError(str(exc)) from exc
        if sorted(order) != list(range(size)):
            raise LabelingError(f"labeling {list(labeling)!r} is not a bijection onto F_2^{k}")

    angles = _PHASE_OFFSET[key] + 2 * np.pi * np.arange(size) / size
    points = np.empty(size, dtype=complex)
    points[order] = np.exp(1j * angles)
    if key == "bpsk":
        points = np.round(points.real) + 0j  # exact +1 / -1
    return Constellation(name=key.upper() if key != "8psk" else "8PSK", k=k, points=points)


def map_symbol(c: Constellation, label: BitLabel) -> complex:
    return c.map(label)


@dataclass(frozen=True)
class ReceivedConstellation:
    """Noiseless superimposed points ``M(x_A) + M(x_B) e^{i theta}`` grouped by ``z = x_A xor x_B``.

    ``groups[z, a]`` is the point produced by ``x_A = a`` and ``x_B = z ^ a``.
    """

    theta: float
    k: int
    groups: np.ndarray = field(repr=False)

    def group(self, z: BitLabel) -> np.ndarray:
        return self.groups[label_to_int(z, self.k)]

    def all_points(self) -> np.ndarray:
        return self.groups.ravel()

    def min_distance(self) -> float:
        """Smallest distance between points that belong to different groups."""
        size = self.groups.shape[0]
        pts = self.groups.ravel()
        owner = np.repeat(np.arange(size), size)
        d = np.abs(pts[:, None] - pts[None, :])
        d[owner[:, None] == owner[None, :]] = np.inf
        return float(d.min())

    def table(self, decimals: int = 12) -> list[tuple[str, float, float, int]]:
        """Rows ``(z_label, re, im, multiplicity)`` with coincident points merged."""
        rows = []
        for z in range(self.groups.shape[0]):
            pts = np.round(self.groups[z], decimals) + 0.0  # normalizes -0.0
            uniq, counts = np.unique(pts, return_counts=True)
            for p, m in zip(uniq, counts):
                rows.append((int_to_label(z, self.k), float(p.real), float(p.imag), int(m)))
        return rows


def received_constellation(c: Constellation, theta: float) -> ReceivedConstellation:
    size = c.size
    a = np.arange(size)
    z = np.arange(size)
    b = z[:, None] ^ a[None, :]
    groups = c.points[a][None, :] + c.points[b] * np.exp(1j * theta)
    return ReceivedConstellation(theta=float(theta), k=c.k, groups=groups)
