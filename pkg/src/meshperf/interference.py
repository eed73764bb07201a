"""Link conflict (interference) graph used by both the engine and the oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import NetworkSnapshot


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class InterferenceGraph:
    """Symmetric, reflexive conflict relation over the snapshot's links.

    ``links`` fixes the link indexing; ``conflict_sets[i]`` holds the indices of
    every link that may not be active while link ``i`` transmits (including ``i``).
    """

    links: tuple[tuple[int, int], ...]
    conflict_sets: tuple[frozenset[int], ...]

    def index(self, link: tuple[int, int]) -> int:
        return self.links.index(link)

    def conflicts(self, a: tuple[int, int], b: tuple[int, int]) -> bool:
        return self.index(b) in self.conflict_sets[self.index(a)]


def _two_hop_neighbourhoods(s: NetworkSnapshot) -> list[set[int]]:
    closed = [{n.id} for n in s.nodes]
    for l in s.links:
        closed[l.src].add(l.dst)
        closed[l.dst].add(l.src)
    return closed


def build_interference_graph(s: NetworkSnapshot) -> InterferenceGraph:
    """Two-hop mode: links conflict when an endpoint of one equals or neighbours an
    endpoint of the other. Range mode: when any endpoint pair is within ``meters``."""
    keys = tuple(l.key for l in s.links)
    mode = s.interference.mode
    if mode == "two_hop":
        closed = _two_hop_neighbourhoods(s)
        # nodes within one hop of either endpoint of each link
        reach = [closed[a] | closed[b] for a, b in keys]
    elif mode == "range":
        r = s.interference.meters
        if r is None or any(n.position is None for n in s.nodes):
            raise ConfigurationError("range interference requires meters and node positions")
        pos = [n.position for n in s.nodes]
        near = [{m.id for m in s.nodes if math.dist(pos[n.id], pos[m.id]) <= r}
                for n in s.nodes]
        reach = [near[a] | near[b] for a, b in keys]
    else:
        raise ConfigurationError(f"unknown interference mode {mode!r}")

    by_endpoint: dict[int, list[int]] = {}
    for i, (a, b) in enumerate(keys):
        by_endpoint.setdefault(a, []).append(i)
        by_endpoint.setdefault(b, []).append(i)
    sets = []
    for i in range(len(keys)):
        hit = set()
        for v in reach[i]:
            hit.update(by_endpoint.get(v, ()))
        hit.add(i)
        sets.append(frozenset(hit))
    return InterferenceGraph(keys, tuple(sets))
