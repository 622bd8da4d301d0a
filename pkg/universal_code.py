#!/usr/bin/env python3
"""
Universal codeword set for online Huffman coding.

The j-th codeword (ranks start at 1) has length
    c_U(j) = floor(2 + log2 j + 2 log2(1 + log2 j)).
These lengths satisfy Kraft's inequality, so codewords can be assigned
canonically: keep a counter v, hand out v at the current length, increment,
and shift v left by d whenever the length grows by d. Lengths are
non-decreasing in rank, so the ranks sharing one length form a contiguous
block; the code keeps one row per length and extends the table lazily.
"""

import bisect
import math
import threading
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

from errors import BadParameters, InvalidPrefix

NEAR_INTEGER_TOLERANCE = 1e-9


def _floor_near_integer(rank, nearest):
    """Floor of the length formula when its float value is within tolerance of an integer."""
    if rank & (rank - 1) == 0:
        # Power of two: log2 j is the integer L, compare (1+L)^2 against 2^(m-2-L)
        log_rank = rank.bit_length() - 1
        gap = nearest - 2 - log_rank
        if gap <= 0 or (1 + log_rank) ** 2 >= 2 ** gap:
            return nearest
        return nearest - 1

    with localcontext() as ctx:
        ctx.prec = 60
        ln2 = Decimal(2).ln()
        log_rank = Decimal(rank).ln() / ln2
        value = 2 + log_rank + 2 * (1 + log_rank).ln() / ln2
        return int(value.to_integral_value(rounding='ROUND_FLOOR'))


def ucode_length(rank):
    """Length of the codeword with the given rank (rank >= 1)."""
    rank = int(rank)
    if rank < 1:
        raise BadParameters(f"Codeword ranks start at 1, got {rank}")
    log_rank = math.log2(rank)
    value = 2 + log_rank + 2 * math.log2(1 + log_rank)
    nearest = round(value)
    if abs(value - nearest) < NEAR_INTEGER_TOLERANCE:
        return _floor_near_integer(rank, nearest)
    return math.floor(value)


def ucode_lengths(m):
    """Numpy vector of ucode_length(j) for ranks j = 1..m."""
    ranks = np.arange(1, m + 1, dtype=np.float64)
    log_rank = np.log2(ranks)
    values = 2 + log_rank + 2 * np.log2(1 + log_rank)
    lengths = np.floor(values).astype(np.int64)
    near = np.flatnonzero(np.abs(values - np.round(values)) < NEAR_INTEGER_TOLERANCE)
    for index in near:
        lengths[index] = ucode_length(int(index) + 1)
    return lengths


MAX_CODEWORD_BITS = ucode_length(2 ** 64)


@dataclass(frozen=True)
class Codeword:
    rank: int
    value: int
    length: int

    @property
    def bits(self):
        return format(self.value, f'0{self.length}b')


@dataclass(frozen=True)
class LengthClass:
    """All ranks sharing one codeword length."""
    length: int
    first_rank: int
    count: int
    first_code: int

    @property
    def end_rank(self):
        return self.first_rank + self.count


def _first_rank_beyond(length, start):
    """Smallest rank after start whose codeword is longer than length."""
    lo, step = start, 1
    hi = start + 1
    while ucode_length(hi) <= length:
        lo = hi
        step *= 2
        hi = start + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ucode_length(mid) <= length:
            lo = mid
        else:
            hi = mid
    return hi


class UniversalCode:
    """Lazily materialized canonical realization of the universal set."""

    def __init__(self):
        self._rows = []
        self._first_ranks = []
        self._by_length = {}
        self._lock = threading.Lock()

    def _extend(self):
        if not self._rows:
            rank, length, code = 1, ucode_length(1), 0
        else:
            prev = self._rows[-1]
            rank = prev.end_rank
            length = ucode_length(rank)
            code = (prev.first_code + prev.count) << (length - prev.length)
        count = _first_rank_beyond(length, rank) - rank
        if code + count > 1 << length:
            raise RuntimeError(f"Kraft sum exceeds 1 at length {length}")
        row = LengthClass(length, rank, count, code)
        self._rows.append(row)
        self._first_ranks.append(rank)
        self._by_length[length] = row

    def _ensure_rank(self, rank):
        if self._rows and self._rows[-1].end_rank > rank:
            return
        with self._lock:
            while not self._rows or self._rows[-1].end_rank <= rank:
                self._extend()

    def _ensure_length(self, length):
        if self._rows and self._rows[-1].length >= length:
            return
        with self._lock:
            while not self._rows or self._rows[-1].length < length:
                self._extend()

    def rows(self, up_to_rank=1):
        """Length classes covering ranks 1..up_to_rank."""
        self._ensure_rank(up_to_rank)
        return list(self._rows)

    def codeword_for_rank(self, rank):
        if rank < 1:
            raise BadParameters(f"Codeword ranks start at 1, got {rank}")
        self._ensure_rank(rank)
        row = self._rows[bisect.bisect_right(self._first_ranks, rank) - 1]
        return Codeword(rank, row.first_code + (rank - row.first_rank), row.length)

    def parse_codeword(self, reader):
        """Consume one codeword from a BitReader and return its rank."""
        start = reader.position
        value = 0
        for length in range(1, MAX_CODEWORD_BITS + 1):
            value = (value << 1) | reader.read_bit()
            self._ensure_length(length)
            row = self._by_length.get(length)
            if row is not None and row.first_code <= value < row.first_code + row.count:
                return row.first_rank + (value - row.first_code)
        raise InvalidPrefix(
            f"No codeword of at most {MAX_CODEWORD_BITS} bits starts at bit {start}"
        )

    def kraft_partial_sum(self, m, exact=False):
        """Sum of 2^-c_U(j) over ranks j = 1..m, accumulated per length class."""
        total = Fraction(0)
        for row in self.rows(m):
            if row.first_rank > m:
                break
            count = min(row.count, m - row.first_rank + 1)
            total += Fraction(count, 1 << row.length)
        return total if exact else float(total)


UNIVERSAL_CODE = UniversalCode()


def codeword_for_rank(rank):
    return UNIVERSAL_CODE.codeword_for_rank(rank)


def parse_codeword(reader):
    return UNIVERSAL_CODE.parse_codeword(reader)


def kraft_partial_sum(m, exact=False):
    return UNIVERSAL_CODE.kraft_partial_sum(m, exact=exact)


def is_prefix_free(bitstrings):
    """True if no string is a prefix of another; sorted neighbours suffice."""
    ordered = sorted(bitstrings)
    for shorter, longer in zip(ordered, ordered[1:]):
        if longer.startswith(shorter):
            return False
    return True
