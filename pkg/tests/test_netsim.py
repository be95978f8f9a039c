import logging
import math

import numpy as np
import pytest

from necorpia import netsim as ns
from necorpia.errors import NonTerminationError, TopologyError


@pytest.fixture(scope="module")
def topo():
    return ns.generate_topology(100, 0)


def test_topology_constraints(topo):
    assert topo.n_nodes == 101 and topo.sink == 100
    assert topo.diameter() == 10
    assert topo.min_degree() >= 3
    for u, nbrs in enumerate(topo.adjacency):
        for v in nbrs:
            assert u in topo.adjacency[v]
            assert np.hypot(*(topo.positions[u] - topo.positions[v])) <= topo.radius + 1e-12


def test_topology_deterministic(topo):
    again = ns.generate_topology(100, 0)
    assert again.adjacency == topo.adjacency and again.radius == topo.radius


def test_topology_errors():
    with pytest.raises(ValueError):
        ns.generate_topology(10, 0)
    with pytest.raises(TopologyError):
        ns.generate_topology(20, 0, diameter=40, max_retries=3)


def test_run_conserves_and_decodes(topo):
    cfg = ns.SimConfig(100, 15, seed=3)
    res = ns.run_sts(topo, cfg)
    assert res.decoded and len(res.sink_rows) == 15
    assert all(0 < v < 1 << 15 for v in res.coding_vectors)
    assert res.nonzero_counts[:15] == (1,) * 15  # sources speak first, uncoded
    assert res.total_transmissions == len(res.nonzero_counts)
    assert len(set(res.sources)) == 15 and topo.sink not in res.sources


def test_run_is_deterministic(topo):
    a = ns.run_sts(topo, ns.SimConfig(100, 12, seed=8))
    b = ns.run_sts(topo, ns.SimConfig(100, 12, seed=8))
    assert a == b


def test_scheme_independence(topo):
    schemes = [ns.PlainNC(), ns.Cope(), ns.NecorpiaAdaptive(1), ns.NecorpiaAdaptive(2),
               ns.NecorpiaFixed(2, (60, 60))]
    runs = [ns.run_sts(topo, ns.SimConfig(100, 20, header_scheme=s, seed=5)) for s in schemes]
    assert len({(r.slots_elapsed, r.total_transmissions, r.nonzero_counts) for r in runs}) == 1


def test_non_termination_is_reported(topo, caplog):
    cfg = ns.SimConfig(100, 10, forwarding_factor=0.0, seed=1)
    with caplog.at_level(logging.WARNING), pytest.raises(NonTerminationError) as ei:
        ns.run_sts(topo, cfg)
    assert not ei.value.result.decoded
    assert "undecoded" in caplog.text
    assert not ns.run_sts(topo, cfg, strict=False).decoded


def test_termination_rate():
    logging.disable(logging.WARNING)
    try:
        topos = [ns.generate_topology(100, s) for s in range(10)]
        runs = [ns.run_sts(t, ns.SimConfig(100, g, seed=1000 * g + 10 * i + r), strict=False).decoded
                for g in (5, 10, 20, 30, 40) for i, t in enumerate(topos) for r in range(5)]
    finally:
        logging.disable(logging.NOTSET)
    assert np.mean(runs) >= 0.99


def test_finite_buffer(topo):
    res = ns.run_sts(topo, ns.SimConfig(100, 10, buffer_size=2, seed=4), strict=False)
    assert res.total_transmissions > 0


def test_nonzero_distribution(topo):
    res = [ns.run_sts(topo, ns.SimConfig(100, g, seed=2)) for g in (5, 20)]
    dist = ns.nonzero_coefficient_distribution(res[:1])
    assert sum(dist.values()) == pytest.approx(1.0)
    assert min(dist) >= 1
    means = [ns.mean_of(ns.nonzero_coefficient_distribution([r])) for r in res]
    assert means[1] > means[0]


def test_cope_identifier_sizing():
    assert ns.cope_id_bits(2, 0.5) == 1
    assert ns.cope_id_bits(1, 1e-6) == 0
    b = ns.cope_id_bits(100, 1e-6)
    assert math.comb(100, 2) * 2.0 ** -b <= 1e-6 < math.comb(100, 2) * 2.0 ** -(b - 1)
    assert ns.cope_header_bits(100, 1e-6, {1: 0.5, 3: 0.5}) == 2 * b


def test_necorpia_sizing():
    lengths, lh, total = ns.necorpia_header_bits(20, 2)
    assert len(set(lengths)) == 1 and total == sum(lengths) + lh
    from necorpia.analytics import expected_branches, expected_error_bound
    L = lengths[0]
    assert expected_branches(20, lengths, part="terminal") <= 1000
    assert expected_branches(20, (L - 1,) * 2, part="terminal") > 1000
    assert expected_error_bound(20, lengths, L_h=lh) <= 1e-6 < expected_error_bound(20, lengths, L_h=lh - 1)
    fixed = ns.necorpia_header_bits(20, 2, lengths=(60, 60))
    assert fixed[0] == (60, 60)


def test_entropy_bits():
    assert ns.enumerative_bits(4, 0) == pytest.approx(math.log2(5))
    assert ns.entropy_coded_bits([[0, 1, 0, 1], [0, 0, 0, 0]]) == pytest.approx(
        (math.log2(6) + 2 * math.log2(5)) / 2)
    with pytest.raises(ValueError):
        ns.entropy_coded_bits(np.zeros((0, 3)))
    assert ns.plain_nc_header_bits(100) == 100


def test_config_from_text():
    cfg = ns.SimConfig.from_text("N = 50\ng = 7  # sources\nd = 2.0\nheader_scheme = necorpia:60,60\n"
                                 "buffer_size = unlimited\nseed = 4\n")
    assert cfg == ns.SimConfig(50, 7, 2.0, 1e-6, ns.NecorpiaFixed(2, (60, 60)), None, 4)
    with pytest.raises(ValueError):
        ns.SimConfig.from_text("colour = blue")
    with pytest.raises(ValueError):
        ns.SimConfig(10, 11)


def test_parse_scheme():
    assert ns.parse_scheme("plain") == ns.PlainNC()
    assert ns.parse_scheme("necorpia:1") == ns.NecorpiaAdaptive(1)
    assert ns.parse_scheme("necorpia:50,50:32") == ns.NecorpiaFixed(2, (50, 50), 32)
    with pytest.raises(ValueError):
        ns.parse_scheme("tcp")


def test_sweep_is_deterministic():
    args = ([8], [ns.PlainNC(), ns.Cope(), ns.NecorpiaAdaptive(2)], [0, 1])
    assert ns.header_comparison_sweep(*args) == ns.header_comparison_sweep(*args)
