"""Wire format – one quantized message per record, little-endian.

    record  := u32 length | body            (length = len(body))
    body    := u32 node_id | u32 round | payload
    payload := b*d bits, MSB-first, zero-padded to a byte boundary
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator, Optional

import numpy as np

from src.codec.quantizer import unpack_bits
from src.errors import LengthMismatch

logger = logging.getLogger(__name__)

_PREFIX = struct.Struct("<I")
_HEADER = struct.Struct("<II")


@dataclass(frozen=True)
class Message:
    node_id: int
    round: int
    payload: bytes

    def indices(self, bits: int, d: int) -> np.ndarray:
        return decode_payload(self.payload, bits, d)


def encode_message(node_id: int, round_index: int, packed_bits: np.ndarray) -> bytes:
    """Body of one record (header + byte-padded payload), without the length prefix."""
    payload = np.packbits(np.asarray(packed_bits, dtype=np.uint8)).tobytes()
    return _HEADER.pack(node_id, round_index) + payload


def decode_payload(payload: bytes, bits: int, d: int) -> np.ndarray:
    n_bits = bits * d
    if len(payload) != (n_bits + 7) // 8:
        raise LengthMismatch(f"payload has {len(payload)} bytes, expected {(n_bits + 7) // 8}")
    raw = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[:n_bits]
    return unpack_bits(raw, bits, d)


class MessageLogWriter:
    """Append-only binary log of every codeword sent during a run."""

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._fh: Optional[BinaryIO] = open(self._path, "wb")
        self.records = 0

    @property
    def path(self) -> Path:
        return self._path

    def write(self, node_id: int, round_index: int, packed_bits: np.ndarray) -> None:
        if self._fh is None:
            raise ValueError(f"message log {self._path} already closed")
        body = encode_message(node_id, round_index, packed_bits)
        self._fh.write(_PREFIX.pack(len(body)))
        self._fh.write(body)
        self.records += 1

    def write_round(self, round_index: int, packed_rows: np.ndarray) -> None:
        """Log one codeword per node, in node order."""
        for node_id, row in enumerate(packed_rows):
            self.write(node_id, round_index, row)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
            logger.info("Message log %s closed (%d records)", self._path, self.records)

    def __enter__(self) -> "MessageLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def iter_message_log(path: str | Path) -> Iterator[Message]:
    data = Path(path).read_bytes()
    offset = 0
    while offset < len(data):
        if offset + _PREFIX.size > len(data):
            raise LengthMismatch(f"truncated length prefix at byte {offset}")
        (length,) = _PREFIX.unpack_from(data, offset)
        offset += _PREFIX.size
        if length < _HEADER.size or offset + length > len(data):
            raise LengthMismatch(f"truncated record at byte {offset}")
        node_id, round_index = _HEADER.unpack_from(data, offset)
        payload = data[offset + _HEADER.size : offset + length]
        offset += length
        yield Message(node_id=node_id, round=round_index, payload=payload)


def read_message_log(path: str | Path) -> list[Message]:
    return list(iter_message_log(path))
