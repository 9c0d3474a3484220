"""Binary framing helpers shared by every wire format.

All integers are big-endian. Variable-length byte strings carry a 4-byte
length prefix; ``frame`` (used for hashing and signed messages) uses 8-byte
prefixes so that the framing is injective for any input size.
"""

from __future__ import annotations

from .errors import DecodeError


def frame(*parts: bytes) -> bytes:
    """Concatenate ``parts`` with 8-byte big-endian length prefixes."""
    out = bytearray()
    for part in parts:
        out += len(part).to_bytes(8, "big")
        out += part
    return bytes(out)


class Writer:
    def __init__(self) -> None:
        self._buf = bytearray()

    def u8(self, value: int) -> Writer:
        self._buf += value.to_bytes(1, "big")
        return self

    def u16(self, value: int) -> Writer:
        self._buf += value.to_bytes(2, "big")
        return self

    def u32(self, value: int) -> Writer:
        self._buf += value.to_bytes(4, "big")
        return self

    def u64(self, value: int) -> Writer:
        self._buf += value.to_bytes(8, "big")
        return self

    def fixed(self, data: bytes) -> Writer:
        self._buf += data
        return self

    def var(self, data: bytes) -> Writer:
        self.u32(len(data))
        self._buf += data
        return self

    def getvalue(self) -> bytes:
        return bytes(self._buf)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._data = memoryview(bytes(data))
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise DecodeError("truncated input")
        chunk = self._data[self._pos : self._pos + n].tobytes()
        self._pos += n
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self._take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self._take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def fixed(self, n: int) -> bytes:
        return self._take(n)

    def var(self, limit: int = 1 << 24) -> bytes:
        n = self.u32()
        if n > limit:
            raise DecodeError(f"field of {n} bytes exceeds limit {limit}")
        return self._take(n)

    def remaining(self) -> int:
        return len(self._data) - self._pos

    def done(self) -> None:
        if self.remaining():
            raise DecodeError(f"{self.remaining()} trailing bytes")
