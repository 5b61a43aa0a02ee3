"""Community detection on the similarity-weighted social graph.

Two detectors are provided: a randomized label-propagation scheme in which
every node repeatedly adopts the class dominating its neighborhood (summed
by similarity weight), and a deterministic agglomerative scheme that merges
the community pair with the largest positive gain in weighted modularity
until no merge helps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .population import SocialGraph
from .seeding import rng_for


@dataclass
class Partition:
    """Total, non-overlapping community assignment with dense ids 0..c-1."""

    assignment: dict
    converged: bool | None = None
    rounds_used: int | None = None

    def __post_init__(self):
        self.assignment = {int(k): int(v) for k, v in self.assignment.items()}
        if not self.assignment:
            raise ContractError("partition over an empty node set")
        communities = set(self.assignment.values())
        if communities != set(range(len(communities))):
            raise ContractError("community ids must be dense 0..c-1")

    @property
    def count(self) -> int:
        return len(set(self.assignment.values()))

    def members(self) -> dict:
        """Map community id -> sorted member list."""
        out: dict = {}
        for node, comm in self.assignment.items():
            out.setdefault(comm, []).append(node)
        return {c: sorted(ms) for c, ms in sorted(out.items())}


@dataclass(frozen=True)
class CommunityStats:
    count: int
    avg_size: float
    max_size: int
    min_size: int


def _densify(labels: dict) -> dict:
    """Relabel communities to 0..c-1, ordered by each community's lowest
    member id (stable across runs)."""
    groups: dict = {}
    for node, lab in labels.items():
        groups.setdefault(lab, []).append(node)
    ordered = sorted(groups.values(), key=min)
    mapping = {}
    for new_id, members in enumerate(ordered):
        for node in members:
            mapping[node] = new_id
    return mapping


def _check_coverage(graph: SocialGraph, weights: dict) -> None:
    missing = [t for t in graph.ties if t not in weights]
    if missing:
        raise ContractError(f"tie weights missing for {missing[:5]}")


def chinese_whispers(
    graph: SocialGraph, weights: dict, max_rounds: int = 50, seed: int = 0
) -> Partition:
    """Label propagation: nodes start in their own class and, visited in a
    seeded random order each round, adopt the class with the largest summed
    similarity among their neighbors (ties broken by a seeded uniform pick).
    Stops after a round with no change, or after max_rounds."""
    _check_coverage(graph, weights)
    rng = rng_for(seed, "chinese-whispers")
    nbrs: dict = {v: [] for v in graph.nodes}
    for i, j in graph.ties:
        sim = weights[(i, j)].similarity
        nbrs[i].append((j, sim))
        nbrs[j].append((i, sim))
    labels = {v: v for v in graph.nodes}
    nodes = np.array(graph.nodes)
    converged = False
    rounds_used = 0
    for _ in range(max_rounds):
        rounds_used += 1
        changed = False
        for v in nodes[rng.permutation(len(nodes))]:
            v = int(v)
            if not nbrs[v]:
                continue
            scores: dict = {}
            for u, sim in nbrs[v]:
                scores[labels[u]] = scores.get(labels[u], 0.0) + sim
            best = max(scores.values())
            candidates = sorted(lab for lab, s in scores.items() if s == best)
            pick = candidates[0] if len(candidates) == 1 else candidates[int(rng.integers(len(candidates)))]
            if pick != labels[v]:
                labels[v] = pick
                changed = True
        if not changed:
            converged = True
            break
    return Partition(_densify(labels), converged=converged, rounds_used=rounds_used)


def weighted_modularity(graph: SocialGraph, weights: dict, assignment: dict) -> float:
    """Newman modularity with similarity weights as edge strengths:
    Q = sum_c [W_in(c)/m - (K_c / 2m)^2] with m the total tie weight, W_in
    the intra-community weight, and K_c the summed weighted degree."""
    m = sum(weights[t].similarity for t in graph.ties)
    if m == 0.0:
        return 0.0
    w_in: dict = {}
    k: dict = {}
    for i, j in graph.ties:
        s = weights[(i, j)].similarity
        k[assignment[i]] = k.get(assignment[i], 0.0) + s
        k[assignment[j]] = k.get(assignment[j], 0.0) + s
        if assignment[i] == assignment[j]:
            w_in[assignment[i]] = w_in.get(assignment[i], 0.0) + s
    q = 0.0
    for c in set(assignment.values()):
        q += w_in.get(c, 0.0) / m - (k.get(c, 0.0) / (2.0 * m)) ** 2
    return q


def agglomerative_modularity(graph: SocialGraph, weights: dict) -> Partition:
    """Greedy agglomeration: starting from singletons, repeatedly merge the
    community pair with the largest strictly positive modularity gain
    (equal gains broken by the lowest community-id pair); stop when no merge
    increases modularity. Deterministic."""
    _check_coverage(graph, weights)
    m = sum(weights[t].similarity for t in graph.ties)
    labels = {v: v for v in graph.nodes}
    if m == 0.0:
        return Partition(_densify(labels))
    # community state: weighted degree K, and inter-community weights
    k: dict = {v: 0.0 for v in graph.nodes}
    between: dict = {v: {} for v in graph.nodes}
    for i, j in graph.ties:
        s = weights[(i, j)].similarity
        k[i] += s
        k[j] += s
        between[i][j] = between[i].get(j, 0.0) + s
        between[j][i] = between[j].get(i, 0.0) + s
    alive = set(graph.nodes)
    q_running = weighted_modularity(graph, weights, labels)
    while len(alive) > 1:
        best_gain = 0.0
        best_pair = None
        # ascending pair order makes the lowest pair win on equal gains
        for a in sorted(alive):
            for b in sorted(between[a]):
                if b <= a:
                    continue
                gain = between[a][b] / m - k[a] * k[b] / (2.0 * m * m)
                if gain > best_gain:
                    best_gain = gain
                    best_pair = (a, b)
        if best_pair is None:
            break
        q_running += best_gain
        a, b = best_pair
        # merge b into a (a < b keeps the lowest id as the community label)
        k[a] += k[b]
        for other, s in between[b].items():
            if other == a:
                continue
            between[a][other] = between[a].get(other, 0.0) + s
            between[other][a] = between[other].get(a, 0.0) + s
            del between[other][b]
        between[a].pop(b, None)
        del between[b]
        del k[b]
        alive.discard(b)
        for node, lab in labels.items():
            if lab == b:
                labels[node] = a
    # each accepted merge had strictly positive gain, so modularity is
    # non-decreasing; the accumulated gains must match a fresh evaluation
    assert abs(q_running - weighted_modularity(graph, weights, labels)) < 1e-9
    return Partition(_densify(labels))


def partition_stats(p: Partition) -> CommunityStats:
    sizes = [len(ms) for ms in p.members().values()]
    return CommunityStats(
        count=len(sizes),
        avg_size=sum(sizes) / len(sizes),
        max_size=max(sizes),
        min_size=min(sizes),
    )


# ---------------------------------------------------------------------------
# Partition file I/O: CSV agent_id,community_id

def export_partition(p: Partition, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent_id", "community_id"])
        for node in sorted(p.assignment):
            writer.writerow([node, p.assignment[node]])


def import_partition(path) -> Partition:
    assignment = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["agent_id", "community_id"]:
            raise ContractError(f"unexpected partition header {header!r} in {path}")
        for row in reader:
            if not row:
                continue
            assignment[int(row[0])] = int(row[1])
    return Partition(assignment)
