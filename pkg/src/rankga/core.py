"""Chromosomes, populations, fitness landscapes and level statistics.

Bits are packed little-endian inside bytes: logical position ``j`` (1-based)
lives in byte ``(j-1) // 8`` at bit ``(j-1) % 8``. Every public operation is
expressed on logical positions so the packing never leaks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from rankga.errors import CapacityError, DomainError, InvalidArgument

DELTA_ENUMERATION_CAP = 20


def pack_bits(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    return np.packbits(bits, axis=-1, bitorder="little")


def unpack_bits(packed: np.ndarray, length: int) -> np.ndarray:
    return np.unpackbits(packed, axis=-1, count=length, bitorder="little")


def popcount(packed: np.ndarray) -> np.ndarray:
    """Number of ones along the last (byte) axis."""
    return np.bitwise_count(packed).sum(axis=-1, dtype=np.int64)


def _parse_bitstring(text: str) -> list[int]:
    text = text.strip()
    if not text or any(c not in "01" for c in text):
        raise InvalidArgument(f"not a bitstring literal: {text!r}")
    return [int(c) for c in text]


@dataclass(frozen=True)
class Chromosome:
    """Binary string of fixed length, stored packed."""

    length: int
    packed: bytes

    def __post_init__(self):
        if self.length < 1:
            raise InvalidArgument("chromosome length must be >= 1")
        if len(self.packed) != (self.length + 7) // 8:
            raise InvalidArgument("packed size does not match length")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "Chromosome":
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or np.any(arr > 1):
            raise InvalidArgument("bits must be a flat sequence of 0/1")
        return cls(len(arr), pack_bits(arr).tobytes())

    @classmethod
    def from_string(cls, text: str) -> "Chromosome":
        return cls.from_bits(_parse_bitstring(text))

    @classmethod
    def from_int(cls, value: int, length: int) -> "Chromosome":
        # position j carries bit j-1 of the integer
        return cls.from_bits([(value >> j) & 1 for j in range(length)])

    @classmethod
    def zeros(cls, length: int) -> "Chromosome":
        return cls.from_bits([0] * length)

    @classmethod
    def ones(cls, length: int) -> "Chromosome":
        return cls.from_bits([1] * length)

    @property
    def array(self) -> np.ndarray:
        return np.frombuffer(self.packed, dtype=np.uint8)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(int(b) for b in unpack_bits(self.array, self.length))

    def to_int(self) -> int:
        return sum(b << j for j, b in enumerate(self.bits))

    def complement(self) -> "Chromosome":
        return Chromosome.from_bits([1 - b for b in self.bits])

    def __str__(self):
        return "".join(map(str, self.bits))

    def __len__(self):
        return self.length


@dataclass(frozen=True, eq=False)
class Population:
    """Ordered m-tuple of chromosomes; ``packed`` has shape (m, nbytes)."""

    length: int
    packed: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.packed, dtype=np.uint8)
        if arr.ndim != 2 or arr.shape[1] != (self.length + 7) // 8:
            raise InvalidArgument("packed population has the wrong shape")
        if arr.shape[0] % 2:
            raise InvalidArgument("population size m must be even")
        arr = arr.copy() if arr is self.packed else arr
        arr.setflags(write=False)
        object.__setattr__(self, "packed", arr)

    @classmethod
    def from_bits(cls, bits) -> "Population":
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 2:
            raise InvalidArgument("expected an (m, length) bit array")
        return cls(arr.shape[1], pack_bits(arr))

    @classmethod
    def from_strings(cls, lines: Iterable[str]) -> "Population":
        return cls.from_bits([_parse_bitstring(s) for s in lines])

    @classmethod
    def from_chromosomes(cls, members: Sequence[Chromosome]) -> "Population":
        lengths = {c.length for c in members}
        if len(lengths) != 1:
            raise InvalidArgument("members must share one length")
        return cls.from_bits([c.bits for c in members])

    @classmethod
    def from_ints(cls, values: Sequence[int], length: int) -> "Population":
        vals = np.asarray(values, dtype=np.int64)
        bits = (vals[:, None] >> np.arange(length)) & 1
        return cls.from_bits(bits)

    @classmethod
    def master_over_zeros(cls, m: int, length: int) -> "Population":
        """One copy of 1...1 followed by m-1 copies of 0...0."""
        bits = np.zeros((m, length), dtype=np.uint8)
        bits[0] = 1
        return cls.from_bits(bits)

    @property
    def m(self) -> int:
        return self.packed.shape[0]

    def __len__(self):
        return self.m

    def __getitem__(self, i: int) -> Chromosome:
        return Chromosome(self.length, self.packed[i].tobytes())

    def __iter__(self):
        return (self[i] for i in range(self.m))

    def __eq__(self, other):
        if not isinstance(other, Population):
            return NotImplemented
        return self.length == other.length and np.array_equal(self.packed, other.packed)

    def __hash__(self):
        return hash((self.length, self.packed.tobytes()))

    def bits(self) -> np.ndarray:
        return unpack_bits(self.packed, self.length)

    def to_ints(self) -> np.ndarray:
        if self.length > 62:
            raise CapacityError("integer encoding needs length <= 62")
        return (self.bits().astype(np.int64) << np.arange(self.length)).sum(axis=1)

    def to_lines(self) -> list[str]:
        return ["".join(map(str, row)) for row in self.bits()]


def packed_to_ints(packed: np.ndarray, length: int) -> np.ndarray:
    bits = unpack_bits(packed, length).astype(np.int64)
    return (bits << np.arange(length)).sum(axis=-1)


def _trailing_ones(ints: np.ndarray) -> np.ndarray:
    # lowest clear bit of x is (x+1) & ~x
    low_zero = (ints + 1) & ~ints
    return np.log2(low_zero.astype(np.float64)).astype(np.int64)


LANDSCAPE_KINDS = ("sharp-peak", "one-max", "staircase-table", "custom-table")


@dataclass(frozen=True, eq=False)
class FitnessLandscape:
    """Total fitness map on {0,1}^length.

    ``levels`` is the staircase table g (fitness = g(leading ones), length+1
    entries); ``table`` maps bitstring literals to fitness for the custom
    kind, with ``default`` for every chromosome not listed.
    """

    kind: str
    length: int
    levels: tuple[float, ...] = ()
    table: Mapping[str, float] = field(default_factory=dict)
    default: float | None = None

    def __post_init__(self):
        if self.kind not in LANDSCAPE_KINDS:
            raise InvalidArgument(f"unknown landscape kind {self.kind!r}")
        if self.length < 1:
            raise InvalidArgument("length must be >= 1")
        if self.kind == "staircase-table" and len(self.levels) != self.length + 1:
            raise InvalidArgument("staircase table needs length+1 level values")
        if self.kind == "custom-table":
            for key in self.table:
                if len(_parse_bitstring(key)) != self.length:
                    raise InvalidArgument(f"table key {key!r} has the wrong length")
            if self.default is None and len(self.table) != 2**self.length:
                raise InvalidArgument("custom table must cover every chromosome or give a default")
            if self.length > 62:
                raise CapacityError("custom tables need length <= 62")
            keys = np.array([int(k[::-1], 2) for k in self.table], dtype=np.int64)
            vals = np.array(list(self.table.values()), dtype=np.float64)
            order = np.argsort(keys)
            object.__setattr__(self, "_keys", keys[order])
            object.__setattr__(self, "_vals", vals[order])

    @classmethod
    def sharp_peak(cls, length: int) -> "FitnessLandscape":
        return cls("sharp-peak", length)

    @classmethod
    def one_max(cls, length: int) -> "FitnessLandscape":
        return cls("one-max", length)

    @classmethod
    def staircase(cls, levels: Sequence[float]) -> "FitnessLandscape":
        return cls("staircase-table", len(levels) - 1, levels=tuple(float(v) for v in levels))

    @classmethod
    def custom(cls, length: int, table: Mapping[str, float], default: float | None = None):
        return cls("custom-table", length, table=dict(table), default=default)

    @classmethod
    def constant(cls, length: int, value: float = 1.0) -> "FitnessLandscape":
        return cls("custom-table", length, table={}, default=value)

    # -- evaluation ---------------------------------------------------------

    def evaluate_packed(self, packed: np.ndarray) -> np.ndarray:
        """Fitness of every row of an (..., nbytes) packed array."""
        packed = np.asarray(packed, dtype=np.uint8)
        if self.kind == "one-max":
            return popcount(packed).astype(np.float64)
        if self.kind == "sharp-peak":
            ones = popcount(packed) == self.length
            return np.where(ones, 2.0, 1.0)
        if self.kind == "staircase-table":
            bits = unpack_bits(packed, self.length)
            lead = np.where(bits.all(axis=-1), self.length, np.argmin(bits, axis=-1))
            return np.asarray(self.levels)[lead]
        return self.evaluate_ints(packed_to_ints(packed, self.length))

    def evaluate_ints(self, ints) -> np.ndarray:
        """Fitness of chromosomes given by their integer code (bit j-1 = position j)."""
        ints = np.asarray(ints, dtype=np.int64)
        if self.kind == "one-max":
            return np.bitwise_count(ints).astype(np.float64)
        if self.kind == "sharp-peak":
            return np.where(ints == (1 << self.length) - 1, 2.0, 1.0)
        if self.kind == "staircase-table":
            lead = np.minimum(_trailing_ones(ints), self.length)
            return np.asarray(self.levels)[lead]
        out = np.full(ints.shape, np.nan if self.default is None else self.default)
        if len(self._keys):
            pos = np.clip(np.searchsorted(self._keys, ints), 0, len(self._keys) - 1)
            hit = self._keys[pos] == ints
            out[hit] = self._vals[pos[hit]]
        return out

    def __call__(self, u: Chromosome) -> float:
        if u.length != self.length:
            raise InvalidArgument("chromosome length does not match landscape")
        return float(self.evaluate_packed(u.array[None, :])[0])

    def fitness(self, x: Population) -> np.ndarray:
        if x.length != self.length:
            raise InvalidArgument("population length does not match landscape")
        return self.evaluate_packed(x.packed)

    # -- global facts -------------------------------------------------------

    def values(self) -> np.ndarray:
        """Sorted distinct fitness values taken on the cube."""
        if self.kind == "one-max":
            return np.arange(self.length + 1, dtype=np.float64)
        if self.kind == "sharp-peak":
            return np.array([1.0, 2.0])
        if self.kind == "staircase-table":
            return np.unique(self.levels)
        vals = list(self.table.values())
        if len(self.table) < 2**self.length:
            vals.append(self.default)
        return np.unique(np.asarray(vals, dtype=np.float64))

    def max_fitness(self) -> float:
        return float(self.values()[-1])

    def min_fitness(self) -> float:
        return float(self.values()[0])


# -- level statistics --------------------------------------------------------


def hamming(u: Chromosome, v: Chromosome) -> int:
    if u.length != v.length:
        raise InvalidArgument("hamming distance needs equal lengths")
    return int(popcount(np.bitwise_xor(u.array, v.array)))


def count_at_least(x: Population, f: FitnessLandscape, lam: float) -> int:
    """N(x, lam): members whose fitness is >= lam."""
    return int(np.count_nonzero(f.fitness(x) >= lam))


def level_fitness(x: Population, f: FitnessLandscape, i: int) -> float:
    """Lambda(x, i): fitness of the i-th best member (1-based)."""
    if not 1 <= i <= x.m:
        raise InvalidArgument(f"level index {i} outside 1..{x.m}")
    fit = np.sort(f.fitness(x))[::-1]
    return float(fit[i - 1])


def levels_of(fitness: np.ndarray, ranks: Sequence[int]) -> np.ndarray:
    """Vectorised Lambda(x, i) for several i, from a fitness vector."""
    desc = np.sort(fitness)[::-1]
    return desc[np.asarray(ranks, dtype=np.int64) - 1]


def cube_distance_to(target: np.ndarray, length: int) -> np.ndarray:
    """Hamming distance from every point of the cube to a target set.

    ``target`` is a boolean mask over the 2**length integer codes. The
    transform is separable over coordinates, so one relaxation per bit is
    exact.
    """
    big = length + 1
    dist = np.where(target, 0, big).astype(np.int64)
    idx = np.arange(1 << length, dtype=np.int64)
    for b in range(length):
        np.minimum(dist, dist[idx ^ (1 << b)] + 1, out=dist)
    return dist


def delta_distance(f: FitnessLandscape, lam: float, gamma: float,
                   cap: int = DELTA_ENUMERATION_CAP) -> int:
    """Delta(lam, gamma): max over L(lam) of the distance to L(gamma)."""
    if not lam < gamma:
        raise InvalidArgument("delta_distance needs lam < gamma")
    if f.length > cap:
        raise CapacityError(f"length {f.length} exceeds enumeration cap {cap}")
    fit = f.evaluate_ints(np.arange(1 << f.length, dtype=np.int64))
    upper = fit >= gamma
    if not upper.any():
        raise DomainError(f"L({gamma}) is empty")
    lower = fit >= lam
    dist = cube_distance_to(upper, f.length)
    return int(dist[lower].max())
