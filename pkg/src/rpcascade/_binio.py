"""Little-endian binary container primitives shared by the file formats."""

from __future__ import annotations

import struct

import numpy as np

from .exceptions import BadMagicError, TruncatedPayloadError, VersionMismatchError

# dtype codes used in array blocks
_DTYPES = {
    0: np.dtype("<f8"),
    1: np.dtype("<f4"),
    2: np.dtype("<i8"),
    3: np.dtype("<u8"),
    4: np.dtype("u1"),      # bool stored as bytes
    5: np.dtype("<i4"),
    6: None,                # raw bytes
}
_DTYPE_CODES = {np.dtype("float64"): 0, np.dtype("float32"): 1, np.dtype("int64"): 2,
                np.dtype("uint64"): 3, np.dtype("bool"): 4, np.dtype("int32"): 5}


class Reader:
    """Cursor over bytes that fails loudly on truncation."""

    def __init__(self, data: bytes, source: str = "<bytes>"):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedPayloadError(
                f"{self.source}: truncated payload: needed {n} bytes at offset "
                f"{self.pos}, file has {len(self.data)}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        n = self.u32()
        return self.take(n).decode("utf-8")

    def expect_magic(self, magic: bytes):
        got = self.take(len(magic))
        if got != magic:
            raise BadMagicError(f"{self.source}: bad magic: expected {magic!r}, got {got!r}")

    def expect_version(self, version: int):
        got = self.u16()
        if got != version:
            raise VersionMismatchError(
                f"{self.source}: version mismatch: file is v{got}, reader supports v{version}")
        return got

    def array(self) -> np.ndarray | bytes:
        code = self.u8()
        if code not in _DTYPES:
            raise VersionMismatchError(f"{self.source}: unknown dtype code {code}")
        ndim = self.u8()
        dims = tuple(self.u64() for _ in range(ndim))
        if code == 6:
            (n,) = dims
            return self.take(n)
        dt = _DTYPES[code]
        count = int(np.prod(dims, dtype=np.int64)) if dims else 1
        raw = self.take(count * dt.itemsize)
        arr = np.frombuffer(raw, dtype=dt).reshape(dims)
        if code == 4:
            arr = arr.astype(bool)
        return arr.copy()

    def done(self):
        if self.pos != len(self.data):
            raise TruncatedPayloadError(
                f"{self.source}: {len(self.data) - self.pos} unexpected trailing bytes")


class Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def raw(self, b: bytes):
        self.parts.append(b)

    def u8(self, v: int):
        self.parts.append(struct.pack("<B", v))

    def u16(self, v: int):
        self.parts.append(struct.pack("<H", v))

    def u32(self, v: int):
        self.parts.append(struct.pack("<I", v))

    def u64(self, v: int):
        self.parts.append(struct.pack("<Q", v))

    def f64(self, v: float):
        self.parts.append(struct.pack("<d", v))

    def string(self, s: str):
        b = s.encode("utf-8")
        self.u32(len(b))
        self.raw(b)

    def array(self, arr):
        if isinstance(arr, (bytes, bytearray)):
            self.u8(6)
            self.u8(1)
            self.u64(len(arr))
            self.raw(bytes(arr))
            return
        arr = np.ascontiguousarray(arr)
        if arr.dtype == np.dtype("bool"):
            code = 4
            data = arr.astype("u1")
        else:
            if arr.dtype not in _DTYPE_CODES:
                raise TypeError(f"unsupported array dtype {arr.dtype}")
            code = _DTYPE_CODES[arr.dtype]
            data = arr.astype(arr.dtype.newbyteorder("<"))
        self.u8(code)
        self.u8(arr.ndim)
        for d in arr.shape:
            self.u64(d)
        self.raw(data.tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self.parts)
