"""Packet layout ``x = (v_1, ..., v_nv, payload, hash)`` over GF(2).

Each header block ``v_l`` of a source packet is a canonical vector ``e_j``
with ``1 <= j <= L_l`` (indices are 1-based, as on the wire). Bit vectors
are ``uint8`` numpy arrays of 0/1.

Wire format (``to_bytes``/``from_bytes``): the flat vector ``x`` with header
blocks first, then payload, then hash, packed 8 bits per byte in big-endian
bit order (bit 0 of ``x`` is the MSB of byte 0), zero-padded to a whole byte.
Coded packets prepend the spatio-temporal slot as two big-endian uint32
(sink index, slot index), which travels out of band of the coded body.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from ._fallback import hash_int, words_to_int
from .errors import FormatError, NotASourcePacketError

# Fixed deployment key for the payload hash; sinks and sources must agree on it.
HASH_KEY = 0x6E65636F72706961


@dataclass(frozen=True)
class HeaderConfig:
    lengths: tuple[int, ...]
    payload_len: int
    hash_len: int = 16
    q: int = 2

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(int(x) for x in self.lengths))
        if not self.lengths:
            raise FormatError("need at least one header block")
        if any(x < 1 for x in self.lengths):
            raise FormatError(f"header block lengths must be >= 1, got {self.lengths}")
        if self.payload_len < 0 or self.hash_len < 0:
            raise FormatError("payload and hash lengths must be >= 0")
        if self.q != 2:
            raise FormatError("only q = 2 is supported on the wire")

    @classmethod
    def for_packet_length(cls, lengths: Sequence[int], total_len: int = 2048,
                          hash_len: int = 16) -> HeaderConfig:
        """Config whose packets are ``total_len`` bits long in all."""
        return cls(tuple(lengths), total_len - sum(lengths) - hash_len, hash_len)

    @property
    def n_v(self) -> int:
        return len(self.lengths)

    @property
    def header_len(self) -> int:
        return sum(self.lengths)

    @property
    def tail_len(self) -> int:
        """``L_p``: payload plus hash."""
        return self.payload_len + self.hash_len

    @property
    def total_len(self) -> int:
        """``L_x``: full coded-body length."""
        return self.header_len + self.tail_len

    @property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for length in self.lengths:
            out.append(out[-1] + length)
        return tuple(out)


@dataclass(frozen=True)
class Sts:
    sink_index: int = 0
    slot_index: int = 0

    def __post_init__(self):
        if self.sink_index < 0 or self.slot_index < 0:
            raise FormatError("STS fields must be non-negative")


def _bits(values, length: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(values, dtype=np.uint8).reshape(-1)
    if np.any(arr > 1):
        raise FormatError(f"{name} must contain only 0/1")
    if length is not None and arr.size != length:
        raise FormatError(f"{name} has length {arr.size}, expected {length}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def bits_to_int(bits) -> int:
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.size == 0:
        return 0
    return int.from_bytes(np.packbits(arr, bitorder="little").tobytes(), "little")


def int_to_bits(value: int, length: int) -> np.ndarray:
    if length == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = np.frombuffer(value.to_bytes((length + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:length]


def _hash_of_int(payload: int, payload_len: int, hash_len: int) -> int:
    if hash_len == 0:
        return 0
    if _backend.COMPILED:
        nw = max(1, (payload_len + 63) // 64)
        words = np.frombuffer(payload.to_bytes(8 * nw, "little"), dtype="<u8").astype(np.uint64)
        return words_to_int(_backend.hash_words(words, payload_len, hash_len, HASH_KEY))
    return hash_int(payload, payload_len, hash_len, HASH_KEY)


def hash_payload(payload, hash_len: int) -> np.ndarray:
    """Keyed 64-bit avalanche hash of the payload bits, truncated to ``hash_len`` bits."""
    arr = _bits(payload, name="payload")
    return int_to_bits(_hash_of_int(bits_to_int(arr), arr.size, hash_len), hash_len)


def check_hash(candidate, hash_len: int) -> bool:
    """True when the trailing ``hash_len`` bits are the hash of the leading bits."""
    arr = np.asarray(candidate, dtype=np.uint8).reshape(-1)
    if arr.size < hash_len:
        raise FormatError("candidate shorter than the hash")
    plen = arr.size - hash_len
    return _hash_of_int(bits_to_int(arr[:plen]), plen, hash_len) == bits_to_int(arr[plen:])


def tail_is_consistent(tail: int, cfg: HeaderConfig) -> bool:
    """``check_hash`` on a payload+hash vector held as an int (bit i = position i)."""
    payload = tail & ((1 << cfg.payload_len) - 1)
    return _hash_of_int(payload, cfg.payload_len, cfg.hash_len) == tail >> cfg.payload_len


@dataclass(frozen=True, eq=False)
class SourcePacket:
    sts: Sts
    indices: tuple[int, ...]
    payload: np.ndarray
    hash: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(j) for j in self.indices))
        object.__setattr__(self, "payload", _bits(self.payload, name="payload"))
        object.__setattr__(self, "hash", _bits(self.hash, name="hash"))

    @classmethod
    def build(cls, cfg: HeaderConfig, indices: Sequence[int], payload, sts: Sts = Sts()) -> SourcePacket:
        payload = _bits(payload, cfg.payload_len, "payload")
        pkt = cls(sts, tuple(indices), payload, hash_payload(payload, cfg.hash_len))
        _validate(pkt, cfg)
        return pkt

    def _key(self):
        return (self.sts, self.indices, self.payload.tobytes(), self.hash.tobytes())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SourcePacket):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return f"SourcePacket(sts={self.sts}, indices={self.indices}, payload_bits={self.payload.size})"


@dataclass(frozen=True, eq=False)
class CodedPacket:
    sts: Sts
    body: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "body", _bits(self.body, name="body"))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CodedPacket):
            return NotImplemented
        return self.sts == other.sts and np.array_equal(self.body, other.body)

    def __hash__(self) -> int:
        return hash((self.sts, self.body.tobytes()))


def _validate(p: SourcePacket, cfg: HeaderConfig) -> None:
    if len(p.indices) != cfg.n_v:
        raise FormatError(f"expected {cfg.n_v} indices, got {len(p.indices)}")
    for j, length in zip(p.indices, cfg.lengths):
        if not 1 <= j <= length:
            raise FormatError(f"index {j} outside 1..{length}")
    if p.payload.size != cfg.payload_len or p.hash.size != cfg.hash_len:
        raise FormatError("payload/hash length does not match the config")


def flatten_int(p: SourcePacket, cfg: HeaderConfig) -> int:
    _validate(p, cfg)
    value = 0
    for j, off in zip(p.indices, cfg.offsets):
        value |= 1 << (off + j - 1)
    tail = bits_to_int(p.payload) | (bits_to_int(p.hash) << cfg.payload_len)
    return value | (tail << cfg.header_len)


def flatten(p: SourcePacket, cfg: HeaderConfig) -> np.ndarray:
    return int_to_bits(flatten_int(p, cfg), cfg.total_len)


def parse_int(value: int, cfg: HeaderConfig, sts: Sts = Sts()) -> SourcePacket:
    offs = cfg.offsets
    indices = []
    for b, length in enumerate(cfg.lengths):
        block = (value >> offs[b]) & ((1 << length) - 1)
        if block == 0 or block & (block - 1):
            raise NotASourcePacketError(f"header block {b + 1} has {bin(block).count('1')} set bits")
        indices.append(block.bit_length())
    tail = value >> cfg.header_len
    payload = int_to_bits(tail & ((1 << cfg.payload_len) - 1), cfg.payload_len)
    hsh = int_to_bits(tail >> cfg.payload_len, cfg.hash_len)
    return SourcePacket(sts, tuple(indices), payload, hsh)


def parse(v, cfg: HeaderConfig, sts: Sts = Sts()) -> SourcePacket:
    arr = _bits(v, cfg.total_len, "packet")
    return parse_int(bits_to_int(arr), cfg, sts)


def to_bytes(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def from_bytes(data: bytes, nbits: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if bits.size < nbits:
        raise FormatError(f"{len(data)} bytes cannot hold {nbits} bits")
    return bits[:nbits]


def encode_coded(pkt: CodedPacket) -> bytes:
    return struct.pack(">II", pkt.sts.sink_index, pkt.sts.slot_index) + to_bytes(pkt.body)


def decode_coded(data: bytes, cfg: HeaderConfig) -> CodedPacket:
    if len(data) < 8:
        raise FormatError("missing STS prefix")
    r, t = struct.unpack(">II", data[:8])
    return CodedPacket(Sts(r, t), from_bytes(data[8:], cfg.total_len))
