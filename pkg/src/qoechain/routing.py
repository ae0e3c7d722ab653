"""Path search over the substrate.

Paths are link-id sequences, which disambiguates parallel links between the
same node pair. A path's cost key is (total latency, hop count, link-id
sequence); comparing full keys makes every choice a total order and keeps
runs reproducible. Failed hosts never appear as interior nodes.
"""

from __future__ import annotations

import heapq
from typing import Iterable

from .errors import InstanceTooLarge, UnknownHost

PathKey = tuple[float, int, tuple[int, ...]]


def path_key(net, path: Iterable[int]) -> PathKey:
    """Cost key of a link path under the current quality overrides."""
    links = tuple(path)
    latency = 0.0
    for link_id in links:
        latency += net.link_quality(link_id).latency_ms
    return (latency, len(links), links)


def shortest_feasible_path(
    net,
    src: int,
    dst: int,
    bw_kbps: int,
    exclude_links: frozenset[int] = frozenset(),
) -> list[int] | None:
    """Minimum-latency simple path from src to dst over feasible links.

    A link is feasible when its available bandwidth covers bw_kbps and it is
    not excluded. Ties fall to fewer hops, then to the lexicographically
    smallest link-id sequence. Returns [] when src == dst and None when no
    feasible path exists. `net` is a NetworkState or a planning view of one.
    """
    if src not in net.nodes or dst not in net.nodes:
        msg = f"unknown node in path query: {src} -> {dst}"
        raise UnknownHost(msg)
    if src == dst:
        return []

    start: PathKey = (0.0, 0, ())
    best: dict[int, PathKey] = {src: start}
    done: set[int] = set()
    heap: list[tuple[float, int, tuple[int, ...], int]] = [(*start, src)]
    while heap:
        latency, hops, links, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == dst:
            return list(links)
        # Failed hosts may terminate a path but never relay one.
        if node != src and node in net.failed_hosts:
            continue
        for link_id in net.adjacency(node):
            if link_id in exclude_links:
                continue
            if net.available_bw(link_id) < bw_kbps:
                continue
            link = net.links[link_id]
            neighbor = link.other(node)
            if neighbor in done:
                continue
            quality = net.link_quality(link_id)
            candidate: PathKey = (
                latency + quality.latency_ms,
                hops + 1,
                links + (link_id,),
            )
            if candidate < best.get(neighbor, (float("inf"), 0, ())):
                best[neighbor] = candidate
                heapq.heappush(heap, (*candidate, neighbor))
    return None


def enumerate_simple_paths(
    net,
    src: int,
    dst: int,
    bw_kbps: int,
    exclude_links: frozenset[int] = frozenset(),
    max_paths: int | None = None,
) -> list[list[int]]:
    """All simple paths (no repeated node) from src to dst over feasible links.

    The exhaustive counterpart of shortest_feasible_path, used by oracles.
    Paths come out in depth-first link-id order. With max_paths set, finding
    more than that raises InstanceTooLarge instead of silently truncating,
    which would quietly bias any comparison built on top.
    """
    if src not in net.nodes or dst not in net.nodes:
        msg = f"unknown node in path query: {src} -> {dst}"
        raise UnknownHost(msg)
    if src == dst:
        return [[]]

    paths: list[list[int]] = []

    def extend(node: int, visited: set[int], trail: list[int]) -> None:
        if node != src and node in net.failed_hosts:
            return
        for link_id in net.adjacency(node):
            if link_id in exclude_links:
                continue
            if net.available_bw(link_id) < bw_kbps:
                continue
            neighbor = net.links[link_id].other(node)
            if neighbor in visited:
                continue
            trail.append(link_id)
            if neighbor == dst:
                paths.append(list(trail))
                if max_paths is not None and len(paths) > max_paths:
                    msg = f"more than {max_paths} simple paths between {src} and {dst}"
                    raise InstanceTooLarge(msg)
            else:
                visited.add(neighbor)
                extend(neighbor, visited, trail)
                visited.remove(neighbor)
            trail.pop()

    extend(src, {src}, [])
    return paths
