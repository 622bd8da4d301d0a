#!/usr/bin/env python3
"""
Online Huffman coding.

The encoder commits a codeword to each symbol the first time it appears:
the next unused codeword of the universal code (FCFS_U). The decoder has to
learn which symbol that is, so a first occurrence is followed by the symbol
itself as a W-bit literal. Ranks are handed out densely, so the decoder sees a
new symbol exactly when the parsed rank equals its next unused rank.

File layout:
    b"OHC1" | width (1 byte) | body bit count (8 bytes, big-endian) | body
The body is MSB-first and zero-padded to a whole byte.
"""

import heapq
import json
import math
import sys
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import config
from bitstream import BitReader, BitWriter
from bounds import entropy, ohc_guarantee
from errors import (
    BadHeader,
    BadParameters,
    CorpusReadError,
    InvalidPrefix,
    SinkFailure,
    SymbolTooWide,
    TooLarge,
    TruncatedStream,
)
from sampling import RandomSource
from slot_allocation import FrequencyDistribution, validate_instance
from strategies import exact_expected_cost, monte_carlo_expected_cost
from universal_code import codeword_for_rank, parse_codeword, ucode_lengths

MAGIC = b"OHC1"
HEADER_SIZE = len(MAGIC) + 1 + 8
MAX_WIDTH = 64


class SymbolTable:
    """Symbols and their ranks, assigned 1, 2, 3, ... in first-occurrence order."""

    def __init__(self):
        self._rank_of = {}
        self._symbols = []
        self._codewords = []

    def __len__(self):
        return len(self._symbols)

    def __contains__(self, symbol):
        return symbol in self._rank_of

    @property
    def next_rank(self):
        return len(self._symbols) + 1

    def register(self, symbol):
        """Give symbol the next unused rank (or return the rank it already has)."""
        rank = self._rank_of.get(symbol)
        if rank is not None:
            return rank
        rank = self.next_rank
        self._rank_of[symbol] = rank
        self._symbols.append(symbol)
        self._codewords.append(codeword_for_rank(rank))
        return rank

    def rank_of(self, symbol):
        return self._rank_of.get(symbol)

    def symbol_of(self, rank):
        if not 1 <= rank <= len(self._symbols):
            raise InvalidPrefix(f"Rank {rank} has not been assigned (next rank is {self.next_rank})")
        return self._symbols[rank - 1]

    def codeword_of(self, symbol):
        return self._codewords[self._rank_of[symbol] - 1]

    def codewords(self):
        """Map symbol -> Codeword in rank order."""
        return {symbol: cw for symbol, cw in zip(self._symbols, self._codewords)}


@dataclass(frozen=True)
class EncodedStream:
    width: int
    body: bytes
    bit_count: int

    def to_bytes(self):
        return MAGIC + bytes([self.width]) + self.bit_count.to_bytes(8, 'big') + self.body

    @classmethod
    def from_bytes(cls, data):
        """
        Parse a framed stream. A body shorter than the bit count is accepted here
        and reported as TruncatedStream by the decoder.
        """
        data = bytes(data)
        if len(data) < HEADER_SIZE:
            raise BadHeader(f"Stream is {len(data)} bytes, shorter than the {HEADER_SIZE}-byte header")
        if data[:len(MAGIC)] != MAGIC:
            raise BadHeader(f"Bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
        width = data[len(MAGIC)]
        if not 1 <= width <= MAX_WIDTH:
            raise BadHeader(f"Literal width {width} is outside 1..{MAX_WIDTH}")
        bit_count = int.from_bytes(data[len(MAGIC) + 1:HEADER_SIZE], 'big')
        body = data[HEADER_SIZE:]
        if len(body) > math.ceil(bit_count / 8):
            raise BadHeader(f"{len(body)} body bytes for {bit_count} bits")
        return cls(width, body, bit_count)


@dataclass(frozen=True)
class CodeCostReport:
    symbol_count: int
    distinct_symbols: int
    assignment_bits: int
    literal_overhead_bits: int
    # Bits per symbol spent on codewords: sum q_i |x_i| over the empirical q
    assignment_cost: float
    entropy: float
    guarantee: float
    huffman_cost: float

    def to_dict(self):
        return {
            'symbol_count': self.symbol_count,
            'distinct_symbols': self.distinct_symbols,
            'assignment_bits': self.assignment_bits,
            'literal_overhead_bits': self.literal_overhead_bits,
            'assignment_cost': self.assignment_cost,
            'entropy': self.entropy,
            'guarantee': self.guarantee,
            'huffman_cost': self.huffman_cost,
        }


class HuffmanCode(NamedTuple):
    lengths: Tuple[int, ...]
    cost: float


def offline_huffman(f):
    """
    Optimal prefix-code lengths for f by repeatedly merging the two lightest
    subtrees; ties go to the subtree holding the lowest item index.

    Returns:
        HuffmanCode(lengths, cost) with cost = sum q_i * l_i over normalized q.
    """
    dist = f if isinstance(f, FrequencyDistribution) else FrequencyDistribution(tuple(f))
    if dist.n == 1:
        return HuffmanCode((1,), 1.0)

    heap = [(float(w), i, [i]) for i, w in enumerate(dist.weights)]
    heapq.heapify(heap)
    depth = [0] * dist.n
    while len(heap) > 1:
        weight_a, low_a, items_a = heapq.heappop(heap)
        weight_b, low_b, items_b = heapq.heappop(heap)
        for item in items_a:
            depth[item] += 1
        for item in items_b:
            depth[item] += 1
        heapq.heappush(heap, (weight_a + weight_b, min(low_a, low_b), items_a + items_b))

    weights = [float(w) for w in dist.weights]
    cost = math.fsum(w * l for w, l in zip(weights, depth)) / math.fsum(weights)
    return HuffmanCode(tuple(depth), cost)


def fcfsu_assign(first_occurrence_order):
    """The t-th distinct item (0-based t) gets rank t + 1."""
    return {item: position + 1 for position, item in enumerate(first_occurrence_order)}


def ohc_expected_cost(f, mode='exact', trials=config.DEFAULT_TRIALS, rng=None, exact=False, progress=False):
    """
    Expected codeword length of FCFS_U: the FCFS cost of (q, c_U(1..n)) with q
    the normalized frequencies.
    """
    dist = f if isinstance(f, FrequencyDistribution) else FrequencyDistribution(tuple(f))
    lengths = [int(length) for length in ucode_lengths(dist.n)]
    if mode == 'exact':
        if dist.n > config.FCFS_EXACT_LIMIT:
            raise TooLarge(f"Exact evaluation is limited to n <= {config.FCFS_EXACT_LIMIT}")
        inst = validate_instance(dist.normalize(exact=exact), lengths)
        return exact_expected_cost(inst, exact=exact)
    if mode == 'mc':
        inst = validate_instance(dist.normalize(), lengths)
        return monte_carlo_expected_cost(inst, trials=trials, rng=rng or RandomSource(config.DEFAULT_SEED),
                                         progress=progress)
    raise BadParameters(f"Unknown mode '{mode}' (expected exact or mc)")


def code_cost_report(counts, table, assignment_bits, literal_bits):
    """Accounting for one encoded stream; counts maps symbol -> occurrences."""
    total = sum(counts.values())
    if not total:
        return CodeCostReport(0, 0, 0, 0, 0.0, 0.0, ohc_guarantee(0.0), 0.0)
    # Rank order makes the empirical distribution deterministic
    weights = [counts[symbol] for symbol in table.codewords()]
    h = entropy(weights)
    return CodeCostReport(
        symbol_count=total,
        distinct_symbols=len(table),
        assignment_bits=assignment_bits,
        literal_overhead_bits=literal_bits,
        assignment_cost=assignment_bits / total,
        entropy=h,
        guarantee=ohc_guarantee(h),
        huffman_cost=offline_huffman(weights).cost,
    )


def ohc_encode(symbols, width=config.DEFAULT_LITERAL_WIDTH, sink=None):
    """
    Encode a stream of non-negative integer symbols (a bytes object works for W = 8).

    Args:
        symbols: iterable of ints, each below 2**width
        width (int): literal width W in bits
        sink: optional binary file-like object; the framed stream is written to it

    Returns:
        (EncodedStream, CodeCostReport)
    """
    if not 1 <= width <= MAX_WIDTH:
        raise BadParameters(f"Literal width must be in 1..{MAX_WIDTH}, got {width}")

    writer = BitWriter()
    table = SymbolTable()
    counts = Counter()
    assignment_bits = literal_bits = 0
    for symbol in symbols:
        symbol = int(symbol)
        if symbol < 0 or symbol >> width:
            raise SymbolTooWide(f"Symbol {symbol} does not fit in {width} bits")
        counts[symbol] += 1
        known = symbol in table
        if not known:
            table.register(symbol)
        codeword = table.codeword_of(symbol)
        writer.write_bits(codeword.value, codeword.length)
        assignment_bits += codeword.length
        if not known:
            writer.write_bits(symbol, width)
            literal_bits += width

    stream = EncodedStream(width, writer.to_bytes(), writer.bit_count)
    if sink is not None:
        try:
            sink.write(stream.to_bytes())
        except OSError as exc:
            raise SinkFailure(f"Could not write encoded stream: {exc}") from exc
    return stream, code_cost_report(counts, table, assignment_bits, literal_bits)


def ohc_decode(stream):
    """
    Decode an EncodedStream (or its framed bytes) back to the list of symbols.

    On a truncated body the TruncatedStream error carries the symbols decoded
    before the last complete one ran out.
    """
    if not isinstance(stream, EncodedStream):
        stream = EncodedStream.from_bytes(stream)
    reader = BitReader(stream.body, stream.bit_count)
    table = SymbolTable()
    decoded = []
    try:
        while reader.remaining > 0:
            rank = parse_codeword(reader)
            if rank == table.next_rank:
                symbol = reader.read_bits(stream.width)
                known = table.rank_of(symbol)
                if known is not None:
                    raise InvalidPrefix(f"Literal {symbol} for new rank {rank} already has rank {known}")
                table.register(symbol)
            else:
                symbol = table.symbol_of(rank)
            decoded.append(symbol)
    except TruncatedStream as exc:
        raise TruncatedStream(str(exc), decoded=decoded) from exc
    return decoded


def tokens_to_ids(tokens):
    """Map tokens to ids in first-occurrence order; returns (ids, vocabulary)."""
    ids = {}
    sequence = []
    for token in tokens:
        sequence.append(ids.setdefault(token, len(ids)))
    return sequence, list(ids)


def encode_tokens(tokens, width=config.DEFAULT_TOKEN_WIDTH):
    """Token mode: encode token ids; returns (EncodedStream, CodeCostReport, vocabulary)."""
    sequence, vocabulary = tokens_to_ids(tokens)
    if vocabulary and len(vocabulary) - 1 >> width:
        raise SymbolTooWide(f"{len(vocabulary)} distinct tokens do not fit in {width}-bit ids")
    stream, report = ohc_encode(sequence, width=width)
    return stream, report, vocabulary


def decode_tokens(stream, vocabulary):
    try:
        return [vocabulary[i] for i in ohc_decode(stream)]
    except IndexError:
        raise BadHeader(f"Stream refers to token ids beyond the {len(vocabulary)}-entry vocabulary")


def vocab_path(path):
    return f"{path}.vocab.json"


def save_encoded(stream, path, vocabulary=None):
    """Write the framed stream (and the vocabulary sidecar in token mode)."""
    try:
        with open(path, 'wb') as file:
            file.write(stream.to_bytes())
        if vocabulary is not None:
            with open(vocab_path(path), 'w', encoding='utf-8') as file:
                json.dump(vocabulary, file, indent=2, ensure_ascii=False)
    except OSError as exc:
        raise SinkFailure(f"Could not write {path}: {exc}") from exc
    print(f"Saved: {path}", file=sys.stderr)


def load_encoded(path):
    """Read a framed stream; returns (EncodedStream, vocabulary or None)."""
    try:
        with open(path, 'rb') as file:
            stream = EncodedStream.from_bytes(file.read())
    except FileNotFoundError:
        raise CorpusReadError(f"{path} file not found.")
    except OSError as exc:
        raise CorpusReadError(f"Could not read {path}: {exc}")

    vocabulary = None
    try:
        with open(vocab_path(path), 'r', encoding='utf-8') as file:
            vocabulary = json.load(file)
    except FileNotFoundError:
        pass
    except json.JSONDecodeError:
        raise BadHeader(f"{vocab_path(path)} is not a valid JSON file.")
    return stream, vocabulary
