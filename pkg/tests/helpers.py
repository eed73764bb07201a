"""Small snapshot builders shared by the test modules."""
from __future__ import annotations

from dataclasses import replace

from meshperf.model import Flow, Link, MacParams, NetworkSnapshot, Node, SimLimits
from meshperf.scenario import gen_scenario, grid_outdoor, random_indoor

LINK_RATE = 18_000_000


def chain_nodes(n: int) -> tuple[Node, ...]:
    return tuple(Node(i, 50.0 * i, 0.0) for i in range(n))


def bidir(a: int, b: int, p: float = 1.0, rate: int = LINK_RATE) -> list[Link]:
    return [Link(a, b, p, rate), Link(b, a, p, rate)]


def one_hop(rate_bps: int = 261_000, p: float = 1.0, mac: MacParams | None = None,
            limits: SimLimits | None = None, size: int = 1024) -> NetworkSnapshot:
    return NetworkSnapshot(chain_nodes(2), (Link(0, 1, p, LINK_RATE),),
                           (Flow(0, (0, 1), rate_bps, size),),
                           mac or MacParams(), limits or SimLimits())


def chain(n: int, flows: list[Flow], p: float = 1.0, mac: MacParams | None = None,
          limits: SimLimits | None = None) -> NetworkSnapshot:
    links = [l for i in range(n - 1) for l in bidir(i, i + 1, p)]
    return NetworkSnapshot(chain_nodes(n), tuple(links), tuple(flows),
                           mac or MacParams(), limits or SimLimits())


def shared_bottleneck(rate_bps: int) -> NetworkSnapshot:
    """Two sources 0 and 1 both sending to node 2; their links conflict."""
    links = (Link(0, 2, 1.0), Link(1, 2, 1.0))
    flows = (Flow(0, (0, 2), rate_bps), Flow(1, (1, 2), rate_bps))
    return NetworkSnapshot(chain_nodes(3), links, flows)


COARSE_PROBS = (0.5, 0.75, 0.8, 0.9, 1.0)


def coarse_links(s: NetworkSnapshot) -> NetworkSnapshot:
    """Snap every link quality to a short-period lattice so steady cycles stay short."""
    return replace(s, links=tuple(
        replace(l, delivery_prob=min(COARSE_PROBS, key=lambda q: abs(q - l.delivery_prob)))
        for l in s.links))


def seeded_corpus(count: int) -> list[NetworkSnapshot]:
    """Mixed scenario families: realistic link qualities and rate mixes (usually no
    repeat within the limits) alternating with coarse, equal-rate ones that do repeat."""
    out = []
    for i in range(count):
        family = i % 4
        if family == 0:
            s, _ = gen_scenario(random_indoor(i, 3 + i % 3))
        elif family == 1:
            s, _ = gen_scenario(grid_outdoor(i, 6, rows=6, cols=5))
        elif family == 2:
            s, _ = gen_scenario(random_indoor(i, 1 + i % 3, rate_mix=(261_000,)))
            s = coarse_links(s)
        else:
            s, _ = gen_scenario(grid_outdoor(i, 2 + i % 2, rows=6, cols=5, rate_mix=(485_000,)))
            s = coarse_links(s)
        out.append(s)
    return out
