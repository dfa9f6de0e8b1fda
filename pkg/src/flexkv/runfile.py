"""On-disk sorted-run format.

Little-endian layout:

  header  magic "FLSMRUN1" (8B) | version u32 | entry_count u64
          | key_width u32 | value_width u32 | page_size u32
  data    entries (key | value | seq u64) packed into page_size-aligned blocks
  footer  fence array (first key of each page)
          | bloom bit length u64 | bloom bit bytes | hash count u32
          | checksum u64 (CRC-64 of all preceding bytes)

Persistence is optional; the engine runs in memory by default.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bloom import BloomFilter, FencePointers
from .config import SEQ_WIDTH

MAGIC = b"FLSMRUN1"
VERSION = 1

_HEADER = struct.Struct("<8sIQIII")


class RunFileError(Exception):
    """Corrupt or unsupported run file."""


def _make_crc_table() -> list[int]:
    # CRC-64/XZ, reflected polynomial
    poly = 0xC96C5795D7870F42
    table = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ poly if crc & 1 else crc >> 1
        table.append(crc)
    return table


_CRC_TABLE = _make_crc_table()


def crc64(data: bytes, crc: int = 0) -> int:
    table = _CRC_TABLE
    crc ^= 0xFFFFFFFFFFFFFFFF
    for b in data:
        crc = table[(crc ^ b) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFFFFFFFFFF


@dataclass
class RunFileData:
    keys: np.ndarray     # 'S{kw}', sorted ascending
    seqs: np.ndarray     # int64
    vals: np.ndarray     # 'V{vw}'
    page_size: int
    fences: FencePointers
    bloom: BloomFilter | None


def write_run_file(path: str | Path, keys: np.ndarray, seqs: np.ndarray,
                   vals: np.ndarray, bloom: BloomFilter | None, page_size: int):
    kw = keys.dtype.itemsize
    vw = vals.dtype.itemsize
    n = len(keys)
    stride = kw + vw + SEQ_WIDTH
    epp = page_size // stride
    if epp < 1:
        raise RunFileError("entry larger than a page")

    rows = np.zeros(n, dtype=[("k", f"S{kw}"), ("v", f"V{vw}"), ("s", "<u8")])
    rows["k"] = keys
    rows["v"] = vals
    rows["s"] = seqs.astype(np.uint64)

    out = bytearray()
    out += _HEADER.pack(MAGIC, VERSION, n, kw, vw, page_size)
    n_pages = -(-n // epp) if n else 0
    raw = rows.tobytes()
    for p in range(n_pages):
        block = raw[p * epp * stride:(p + 1) * epp * stride]
        out += block
        out += b"\x00" * (page_size - len(block))
    key_bytes = keys.tobytes()
    for p in range(n_pages):
        out += key_bytes[p * epp * kw:p * epp * kw + kw]
    if bloom is None:
        out += struct.pack("<Q", 0)
        out += struct.pack("<I", 0)
    else:
        out += struct.pack("<Q", bloom.nbits)
        out += bytes(bloom.bits)
        out += struct.pack("<I", bloom.hash_count)
    out += struct.pack("<Q", crc64(bytes(out)))
    Path(path).write_bytes(bytes(out))


def read_run_file(path: str | Path) -> RunFileData:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size + 8:
        raise RunFileError("file too short")
    stored_crc, = struct.unpack("<Q", blob[-8:])
    if crc64(blob[:-8]) != stored_crc:
        raise RunFileError("checksum mismatch")
    magic, version, n, kw, vw, page_size = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise RunFileError(f"bad magic {magic!r}")
    if version != VERSION:
        raise RunFileError(f"unsupported version {version}")
    stride = kw + vw + SEQ_WIDTH
    epp = page_size // stride
    n_pages = -(-n // epp) if n else 0
    off = _HEADER.size

    dtype = np.dtype([("k", f"S{kw}"), ("v", f"V{vw}"), ("s", "<u8")])
    keys = np.empty(n, f"S{kw}")
    seqs = np.empty(n, np.int64)
    vals = np.empty(n, f"V{vw}")
    got = 0
    for p in range(n_pages):
        in_page = min(epp, n - got)
        rows = np.frombuffer(blob, dtype=dtype, count=in_page, offset=off + p * page_size)
        keys[got:got + in_page] = rows["k"]
        seqs[got:got + in_page] = rows["s"].astype(np.int64)
        vals[got:got + in_page] = rows["v"]
        got += in_page
    off += n_pages * page_size

    firsts = [blob[off + p * kw:off + (p + 1) * kw] for p in range(n_pages)]
    off += n_pages * kw
    nbits, = struct.unpack_from("<Q", blob, off)
    off += 8
    bloom = None
    if nbits:
        nbytes = (nbits + 7) // 8
        bits = blob[off:off + nbytes]
        off += nbytes
        hash_count, = struct.unpack_from("<I", blob, off)
        off += 4
        bloom = BloomFilter(nbits, hash_count, sized_for=n)
        bloom.bits = bytearray(bits)
        bloom.inserted = n
    else:
        off += 4
    return RunFileData(keys, seqs, vals, page_size, FencePointers(firsts), bloom)
