"""Tests for the message wire format and the binary message log."""

import numpy as np
import pytest

from src.codec.quantizer import pack
from src.codec.wire import MessageLogWriter, decode_payload, encode_message, iter_message_log, read_message_log
from src.errors import LengthMismatch


def test_encode_layout():
    body = encode_message(3, 7, pack(np.array([5, 1]), 3))
    assert body[:8] == (3).to_bytes(4, "little") + (7).to_bytes(4, "little")
    # 101 001 -> 10100100 after padding
    assert body[8:] == bytes([0b10100100])


def test_decode_payload():
    indices = np.array([1023, 0, 512], dtype=np.uint64)
    body = encode_message(0, 0, pack(indices, 10))
    assert np.array_equal(decode_payload(body[8:], 10, 3), indices)


def test_decode_wrong_size():
    with pytest.raises(LengthMismatch):
        decode_payload(b"\x00\x00", 10, 3)


class TestMessageLog:
    def test_write_and_read(self, tmp_path):
        rows = np.stack([pack(np.array([i, 2 * i]), 4) for i in range(3)])
        with MessageLogWriter(tmp_path / "log.bin") as log:
            log.write_round(0, rows)
            log.write_round(1, rows[::-1])
            assert log.records == 6

        messages = read_message_log(tmp_path / "log.bin")
        assert [(m.node_id, m.round) for m in messages[:3]] == [(0, 0), (1, 0), (2, 0)]
        assert messages[1].indices(4, 2).tolist() == [1, 2]
        assert messages[3].indices(4, 2).tolist() == [2, 4]

    def test_write_after_close(self, tmp_path):
        log = MessageLogWriter(tmp_path / "log.bin")
        log.close()
        with pytest.raises(ValueError):
            log.write(0, 0, pack(np.array([1]), 2))

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "log.bin"
        with MessageLogWriter(path) as log:
            log.write(0, 0, pack(np.array([1, 2]), 8))
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(LengthMismatch):
            list(iter_message_log(path))
