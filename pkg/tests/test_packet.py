import numpy as np
import pytest
from hypothesis import given, strategies as st

from necorpia.errors import FormatError, NotASourcePacketError
from necorpia.packet import (CodedPacket, HeaderConfig, SourcePacket, Sts, check_hash, decode_coded,
                             encode_coded, flatten, from_bytes, hash_payload, parse, to_bytes)


@st.composite
def packets(draw):
    lengths = tuple(draw(st.lists(st.integers(1, 12), min_size=1, max_size=4)))
    cfg = HeaderConfig(lengths, draw(st.integers(0, 150)), draw(st.integers(0, 40)))
    idx = tuple(draw(st.integers(1, L)) for L in lengths)
    payload = draw(st.lists(st.integers(0, 1), min_size=cfg.payload_len, max_size=cfg.payload_len))
    sts = Sts(draw(st.integers(0, 2**32 - 1)), draw(st.integers(0, 2**32 - 1)))
    return cfg, SourcePacket.build(cfg, idx, payload, sts)


def test_config_lengths():
    cfg = HeaderConfig.for_packet_length((50, 50), 2048, 16)
    assert cfg.payload_len == 1932 and cfg.tail_len == 1948 and cfg.total_len == 2048
    assert cfg.offsets == (0, 50, 100)


@pytest.mark.parametrize("kw", [dict(lengths=()), dict(lengths=(0,)), dict(lengths=(3,), payload_len=-1),
                                dict(lengths=(3,), q=3)])
def test_config_rejects(kw):
    kw.setdefault("payload_len", 8)
    with pytest.raises(FormatError):
        HeaderConfig(**kw)


@given(packets())
def test_flatten_parse_roundtrip(case):
    cfg, p = case
    v = flatten(p, cfg)
    assert v.size == cfg.total_len
    for j, off, L in zip(p.indices, cfg.offsets, cfg.lengths):
        block = v[off:off + L]
        assert block.sum() == 1 and block[j - 1] == 1
    assert parse(v, cfg, p.sts) == p
    assert check_hash(v[cfg.header_len:], cfg.hash_len)


@given(packets())
def test_wire_roundtrip(case):
    cfg, p = case
    coded = CodedPacket(p.sts, flatten(p, cfg))
    data = encode_coded(coded)
    assert len(data) == 8 + (cfg.total_len + 7) // 8
    assert decode_coded(data, cfg) == coded


def test_wire_bit_order():
    assert to_bytes([1, 0, 0, 0, 0, 0, 0, 1, 1]) == b"\x81\x80"
    assert from_bytes(b"\x81\x80", 9).tolist() == [1, 0, 0, 0, 0, 0, 0, 1, 1]
    with pytest.raises(FormatError):
        from_bytes(b"\x00", 9)


def test_sts_prefix_is_big_endian():
    cfg = HeaderConfig((2,), 0, 0)
    data = encode_coded(CodedPacket(Sts(1, 258), [1, 0]))
    assert data == b"\x00\x00\x00\x01\x00\x00\x01\x02\x80"
    with pytest.raises(FormatError):
        decode_coded(b"\x00" * 7, cfg)


def test_parse_rejects_non_canonical():
    cfg = HeaderConfig((3, 3), 4, 4)
    v = np.zeros(cfg.total_len, dtype=np.uint8)
    with pytest.raises(NotASourcePacketError):
        parse(v, cfg)
    v[0] = v[1] = 1
    v[4] = 1
    with pytest.raises(NotASourcePacketError):
        parse(v, cfg)


def test_build_validates():
    cfg = HeaderConfig((3,), 4, 4)
    with pytest.raises(FormatError):
        SourcePacket.build(cfg, (4,), [0, 0, 0, 0])
    with pytest.raises(FormatError):
        SourcePacket.build(cfg, (1,), [0, 0, 0])
    with pytest.raises(FormatError):
        SourcePacket.build(cfg, (1,), [0, 2, 0, 0])
    with pytest.raises(FormatError):
        Sts(-1, 0)


def test_hash_is_deterministic_and_sensitive():
    p = np.zeros(100, dtype=np.uint8)
    h0 = hash_payload(p, 32)
    assert np.array_equal(h0, hash_payload(p, 32))
    q = p.copy()
    q[57] = 1
    assert not np.array_equal(h0, hash_payload(q, 32))
    # the length is absorbed too: a trailing zero changes the hash
    assert not np.array_equal(h0, hash_payload(np.zeros(101, dtype=np.uint8), 32))


def test_hash_uniformity():
    rng = np.random.default_rng(3)
    outs = [int("".join(map(str, hash_payload(rng.integers(0, 2, 64), 4))), 2) for _ in range(4000)]
    counts = np.bincount(outs, minlength=16)
    # chi-square with 15 d.o.f.; 99.9% quantile is about 37.7
    assert ((counts - 250) ** 2 / 250).sum() < 37.7


def test_packet_equality_and_hash():
    cfg = HeaderConfig((3,), 4, 4)
    a = SourcePacket.build(cfg, (2,), [1, 0, 1, 0])
    b = SourcePacket.build(cfg, (2,), [1, 0, 1, 0])
    c = SourcePacket.build(cfg, (2,), [1, 0, 1, 0], Sts(0, 1))
    assert a == b and hash(a) == hash(b) and a != c
    assert len({a, b, c}) == 2
