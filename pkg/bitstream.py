"""
MSB-first bit I/O for the universal code and the online Huffman codec.
"""

from errors import TruncatedStream


class BitWriter:
    """Accumulates bits most-significant-first and packs them into bytes."""

    def __init__(self):
        self._out = bytearray()
        self._buf = 0
        self._buf_len = 0
        self.bit_count = 0

    def write_bits(self, value, length):
        """Append the low `length` bits of value, MSB first."""
        if length <= 0:
            return
        if value >> length:
            raise ValueError(f"{value} does not fit in {length} bits")
        self._buf = (self._buf << length) | value
        self._buf_len += length
        self.bit_count += length
        while self._buf_len >= 8:
            self._buf_len -= 8
            self._out.append((self._buf >> self._buf_len) & 0xFF)
        self._buf &= (1 << self._buf_len) - 1

    def write_bitstring(self, bits):
        self.write_bits(int(bits, 2) if bits else 0, len(bits))

    def to_bytes(self):
        """Packed bytes; the final partial byte is zero-padded."""
        if self._buf_len:
            return bytes(self._out) + bytes([(self._buf << (8 - self._buf_len)) & 0xFF])
        return bytes(self._out)


class BitReader:
    """Reads bits MSB-first from a byte string, up to bit_limit bits."""

    def __init__(self, data, bit_limit=None):
        self._data = data
        self.bit_limit = len(data) * 8 if bit_limit is None else bit_limit
        self.position = 0

    @classmethod
    def from_bitstring(cls, bits):
        writer = BitWriter()
        writer.write_bitstring(bits)
        return cls(writer.to_bytes(), len(bits))

    @property
    def remaining(self):
        return self.bit_limit - self.position

    def read_bit(self):
        pos = self.position
        if pos >= self.bit_limit or (pos >> 3) >= len(self._data):
            raise TruncatedStream(f"Bit stream ended at bit {pos}")
        self.position = pos + 1
        return (self._data[pos >> 3] >> (7 - (pos & 7))) & 1

    def read_bits(self, length):
        if length > self.remaining or self.position + length > len(self._data) * 8:
            raise TruncatedStream(
                f"Needed {length} bits at bit {self.position}, only {max(0, self.remaining)} left"
            )
        value = 0
        for _ in range(length):
            value = (value << 1) | self.read_bit()
        return value
