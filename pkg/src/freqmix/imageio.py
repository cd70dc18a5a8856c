"""PNG reading and writing (8/16-bit, grayscale or RGB)."""

from __future__ import annotations

import io
import os
import struct
import tempfile
import zlib

import numpy as np
import png

from .errors import DecodeError, InvalidParameterError
from .spectral import as_image

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

_UMASK = os.umask(0)
os.umask(_UMASK)


def check_chunks(data: bytes) -> None:
    """Walk the chunk list and verify lengths and CRCs.

    Raises:
        DecodeError: carrying the byte offset of the first bad chunk.
    """
    if data[:8] != PNG_SIGNATURE:
        raise DecodeError("not a PNG file (bad signature)", offset=0)
    pos = 8
    while True:
        if pos + 8 > len(data):
            raise DecodeError("truncated chunk header", offset=pos)
        length, ctype = struct.unpack(">I4s", data[pos : pos + 8])
        end = pos + 12 + length
        if end > len(data):
            raise DecodeError(f"truncated {ctype!r} chunk", offset=pos)
        (crc,) = struct.unpack(">I", data[end - 4 : end])
        if zlib.crc32(data[pos + 4 : end - 4]) & 0xFFFFFFFF != crc:
            raise DecodeError(f"CRC mismatch in {ctype!r} chunk", offset=pos)
        pos = end
        if ctype == b"IEND":
            return


def read_png(path) -> tuple[np.ndarray, int]:
    """Return ``(image, bitdepth)``; alpha is dropped, palettes expanded."""
    with open(path, "rb") as f:
        data = f.read()
    check_chunks(data)
    try:
        width, height, rows, info = png.Reader(bytes=data).asDirect()
        arr = np.vstack([np.asarray(r, dtype=np.float64) for r in rows])
    except png.Error as exc:
        raise DecodeError(f"{path}: {exc}") from None
    bitdepth = info["bitdepth"]
    planes = info["planes"]
    arr = arr.reshape(height, width, planes)
    if info["alpha"]:
        arr = arr[:, :, :-1]
    img = arr / float(2**bitdepth - 1)
    return as_image(img, os.fspath(path)), bitdepth


def read_image(path) -> np.ndarray:
    return read_png(path)[0]


def quantize(img, bitdepth: int = 8) -> np.ndarray:
    if bitdepth not in (8, 16):
        raise InvalidParameterError(f"bit depth must be 8 or 16, got {bitdepth}")
    maxval = 2**bitdepth - 1
    q = np.rint(np.clip(as_image(img), 0.0, 1.0) * maxval)
    return q.astype(np.uint16 if bitdepth == 16 else np.uint8)


def encode_png(img, bitdepth: int = 8) -> bytes:
    q = quantize(img, bitdepth)
    H, W, C = q.shape
    writer = png.Writer(width=W, height=H, greyscale=(C == 1), bitdepth=bitdepth)
    buf = io.BytesIO()
    writer.write(buf, q.reshape(H, W * C))
    return buf.getvalue()


def atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_image(img, path, bitdepth: int = 8) -> None:
    """Clamp to [0, 1], quantise at ``bitdepth`` and write atomically."""
    atomic_write_bytes(path, encode_png(img, bitdepth))
