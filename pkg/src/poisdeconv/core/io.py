"""Grayscale image and kernel file I/O.

Supported formats, chosen by file extension:

* ``.pgm``: Netpbm P2 (ASCII) or P5 (binary), 8- or 16-bit. Values are
  scaled to [0, 1] by ``maxval`` on read and quantized on write.
* ``.pfm``: single-channel ``Pf`` float32, stored at native scale. A negative
  scale field means little-endian payload; rows are stored bottom-to-top.

Kernel text files hold the size ``k`` on the first line followed by ``k``
lines of ``k`` whitespace-separated decimals.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ..errors import DomainError, ParseError
from .image import KERNEL_SUM_TOL, BlurKernel, as_image

_WHITESPACE = b" \t\r\n\v\f"


class _HeaderReader:
    """Pull whitespace-separated header tokens out of a Netpbm-style buffer."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def _skip(self):
        buf = self.buf
        while self.pos < len(buf):
            c = buf[self.pos:self.pos + 1]
            if c in (b" ", b"\t", b"\r", b"\n", b"\v", b"\f"):
                self.pos += 1
            elif c == b"#":
                while self.pos < len(buf) and buf[self.pos:self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            else:
                break

    def token(self, what: str) -> bytes:
        self._skip()
        start = self.pos
        while self.pos < len(self.buf) and self.buf[self.pos:self.pos + 1] not in (
            b" ", b"\t", b"\r", b"\n", b"\v", b"\f", b"#"
        ):
            self.pos += 1
        if self.pos == start:
            raise ParseError(f"missing {what} in header", start)
        return self.buf[start:self.pos]

    def integer(self, what: str, minimum=1) -> int:
        start = self.pos
        tok = self.token(what)
        try:
            value = int(tok)
        except ValueError:
            raise ParseError(f"invalid {what} {tok!r}", start) from None
        if value < minimum:
            raise ParseError(f"{what} must be >= {minimum}, got {value}", start)
        return value

    def end_of_header(self):
        """Consume the single whitespace byte that separates header and payload."""
        if self.pos >= len(self.buf) or self.buf[self.pos:self.pos + 1] not in (
            b" ", b"\t", b"\r", b"\n", b"\v", b"\f"
        ):
            raise ParseError("expected whitespace after header", self.pos)
        self.pos += 1


def _parse_pgm(buf: bytes) -> np.ndarray:
    hdr = _HeaderReader(buf)
    magic = hdr.token("magic number")
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"not a PGM file (magic {magic!r})", 0)
    width = hdr.integer("width")
    height = hdr.integer("height")
    maxval_at = hdr.pos
    maxval = hdr.integer("maxval")
    if maxval > 65535:
        raise ParseError(f"maxval {maxval} exceeds 65535", maxval_at)
    n = width * height
    if magic == b"P5":
        hdr.end_of_header()
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = n * dtype.itemsize
        payload = buf[hdr.pos:hdr.pos + need]
        if len(payload) < need:
            raise ParseError(f"truncated payload: expected {need} bytes, got {len(payload)}",
                             hdr.pos + len(payload))
        values = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    else:
        values = np.empty(n)
        for i in range(n):
            start = hdr.pos
            try:
                values[i] = hdr.integer("sample", minimum=0)
            except ParseError as exc:
                raise ParseError(f"truncated or malformed ASCII payload at sample {i}",
                                 exc.offset if exc.offset is not None else start) from None
    if np.any(values > maxval):
        raise ParseError(f"sample exceeds maxval {maxval}", hdr.pos)
    return values.reshape(height, width) / maxval


def _parse_pfm(buf: bytes) -> np.ndarray:
    nl1 = buf.find(b"\n")
    if nl1 < 0 or buf[:nl1].strip() != b"Pf":
        if buf[:2] == b"PF":
            raise ParseError("color PFM (PF) is not supported", 0)
        raise ParseError("not a grayscale PFM file (expected 'Pf')", 0)
    hdr = _HeaderReader(buf)
    hdr.pos = nl1 + 1
    width = hdr.integer("width")
    height = hdr.integer("height")
    scale_at = hdr.pos
    tok = hdr.token("scale")
    try:
        scale = float(tok)
    except ValueError:
        raise ParseError(f"invalid scale {tok!r}", scale_at) from None
    if scale == 0.0:
        raise ParseError("scale must be nonzero", scale_at)
    hdr.end_of_header()
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    need = width * height * 4
    payload = buf[hdr.pos:hdr.pos + need]
    if len(payload) < need:
        raise ParseError(f"truncated payload: expected {need} bytes, got {len(payload)}",
                         hdr.pos + len(payload))
    data = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return np.flipud(data).astype(np.float64)


def read_image(path) -> np.ndarray:
    """Read a PGM or PFM file into a float64 image grid."""
    path = Path(path)
    buf = path.read_bytes()
    ext = path.suffix.lower()
    if ext == ".pgm":
        img = _parse_pgm(buf)
    elif ext == ".pfm":
        img = _parse_pfm(buf)
    else:
        raise ParseError(f"unsupported image extension {ext!r}")
    if not np.all(np.isfinite(img)):
        raise ParseError("image contains non-finite values")
    return img


def write_image(path, image, bit_depth=8, ascii=False) -> None:
    """Write ``image`` as PGM (quantized to ``bit_depth``) or PFM (float32)."""
    path = Path(path)
    img = as_image(image)
    height, width = img.shape
    ext = path.suffix.lower()
    if ext == ".pgm":
        if bit_depth not in (8, 16):
            raise DomainError(f"PGM bit depth must be 8 or 16, got {bit_depth}")
        maxval = (1 << bit_depth) - 1
        q = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(np.int64)
        if ascii:
            rows = "\n".join(" ".join(str(v) for v in row) for row in q)
            data = f"P2\n{width} {height}\n{maxval}\n{rows}\n".encode("ascii")
        else:
            dtype = ">u2" if bit_depth == 16 else "u1"
            data = f"P5\n{width} {height}\n{maxval}\n".encode("ascii") + q.astype(dtype).tobytes()
    elif ext == ".pfm":
        payload = np.flipud(img).astype("<f4").tobytes()
        data = f"Pf\n{width} {height}\n-1.0\n".encode("ascii") + payload
    else:
        raise DomainError(f"unsupported image extension {ext!r}")
    _atomic_write(path, data)


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def read_kernel(path) -> BlurKernel:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"empty kernel file {path}", 0)
    try:
        k = int(lines[0])
    except ValueError:
        raise ParseError(f"invalid kernel size {lines[0]!r}", 0) from None
    if len(lines) - 1 != k:
        raise ParseError(f"expected {k} kernel rows, found {len(lines) - 1}")
    rows = []
    for i, ln in enumerate(lines[1:]):
        try:
            row = [float(v) for v in ln.split()]
        except ValueError:
            raise ParseError(f"non-numeric value in kernel row {i}") from None
        if len(row) != k:
            raise ParseError(f"kernel row {i} has {len(row)} values, expected {k}")
        rows.append(row)
    taps = np.array(rows)
    total = taps.sum()
    # hand-written files may carry rounded decimals
    if total > 0 and KERNEL_SUM_TOL < abs(total - 1.0) < 1e-6:
        taps = taps / total
    return BlurKernel(taps)


def write_kernel(path, kernel: BlurKernel) -> None:
    lines = [str(kernel.size)]
    lines += [" ".join(repr(float(v)) for v in row) for row in kernel.taps]
    _atomic_write(Path(path), ("\n".join(lines) + "\n").encode("ascii"))
