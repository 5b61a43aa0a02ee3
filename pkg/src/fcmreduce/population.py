"""Agent populations, social-network topologies, and interaction channels.

Two ready-made populations ship with the package: weight-jittered variants
of a 13-concept expert obesity map, and fully connected 15-concept
fruit-intake maps with individually random weights. Arbitrary populations
can be imported from the JSON format.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import ChannelError, ConfigError, ContractError, GenerationError
from .fcm import Fcm, fcm_from_dict, fcm_to_dict
from .seeding import int_seed, rng_for

TOPOLOGY_KINDS = ("random", "small_world", "scale_free")


@dataclass(frozen=True)
class Agent:
    """One simulated individual: an integer id and its own ruleset."""

    id: int
    fcm: Fcm


@dataclass
class SocialGraph:
    """Who interacts with whom, and over which shared concept.

    nodes are agent ids (dense 0..n-1 for generated populations; reduced
    models keep the surviving representatives' original ids). ties are
    undirected (i, j) pairs with i < j. channels maps each tie to the one
    concept both endpoint agents observe during an interaction; it is None
    until assign_channels has run.
    """

    nodes: tuple[int, ...]
    ties: tuple[tuple[int, int], ...]
    channels: dict | None = None

    def __post_init__(self):
        self.nodes = tuple(int(v) for v in self.nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise ContractError("duplicate node ids in social graph")
        node_set = set(self.nodes)
        ties = []
        for i, j in self.ties:
            i, j = int(i), int(j)
            if i == j:
                raise ContractError(f"self-tie at node {i}")
            if i > j:
                i, j = j, i
            if i not in node_set or j not in node_set:
                raise ContractError(f"tie ({i}, {j}) references an unknown node")
            ties.append((i, j))
        if len(set(ties)) != len(ties):
            raise ContractError("duplicate ties in social graph")
        self.ties = tuple(sorted(ties))
        if self.channels is not None:
            chans = {}
            for key, label in self.channels.items():
                i, j = int(key[0]), int(key[1])
                if i > j:
                    i, j = j, i
                chans[(i, j)] = label
            missing = set(self.ties) - set(chans)
            if missing:
                raise ContractError(f"channels missing for ties {sorted(missing)[:5]}")
            self.channels = chans

    @property
    def n(self) -> int:
        return len(self.nodes)

    def degree(self, node: int) -> int:
        return sum(1 for i, j in self.ties if node in (i, j))


@dataclass(frozen=True)
class TopologySpec:
    """Which generator to run and with what knobs.

    random: Erdos-Renyi with edge probability p. small_world: Watts-Strogatz
    ring of even degree k rewired with probability beta. scale_free:
    Barabasi-Albert growing from a complete graph on m nodes, each newcomer
    attaching m edges (so |E| = (n - m) * m + m * (m - 1) / 2).
    """

    kind: str
    n: int
    p: float = 0.01
    k: int = 6
    beta: float = 0.1
    m: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TOPOLOGY_KINDS:
            raise ConfigError(f"unknown topology kind {self.kind!r}; valid: {TOPOLOGY_KINDS}")
        if self.n < 2:
            raise ConfigError("topology needs at least 2 nodes")
        if self.kind == "random" and not 0.0 <= self.p <= 1.0:
            raise ConfigError("edge probability p must lie in [0, 1]")
        if self.kind == "small_world":
            if self.k < 2 or self.k % 2 != 0:
                raise ConfigError("ring degree k must be an even integer >= 2")
            if self.k >= self.n:
                raise ConfigError("ring degree k must be smaller than n")
            if not 0.0 <= self.beta <= 1.0:
                raise ConfigError("rewiring probability beta must lie in [0, 1]")
        if self.kind == "scale_free" and not 1 <= self.m < self.n:
            raise ConfigError("attachment count m must satisfy 1 <= m < n")


# ---------------------------------------------------------------------------
# Built-in populations

# 13-concept expert obesity map: 20 directed weighted edges.
OBESITY_EDGES = (
    ("Age", "Exercise", -0.44),
    ("Income", "Exercise", 0.548),
    ("Income", "Fatness perceived as negative", 0.478),
    ("Fatness perceived as negative", "Weight discrimination", 0.739),
    ("Belief in Personal Responsibility", "Weight discrimination", 0.578),
    ("Obesity", "Weight discrimination", 0.84),
    ("Obesity", "Physical health", -0.795),
    ("Weight discrimination", "Depression", 0.732),
    ("Exercise", "Depression", -0.649),
    ("Exercise", "Obesity", -0.638),
    ("Exercise", "Physical health", 0.860),
    ("Depression", "Anti-depressants", 0.592),
    ("Anti-depressants", "Obesity", 0.528),
    ("Anti-depressants", "Food intake", 0.526),
    ("Food intake", "Obesity", 0.637),
    ("Knowledge", "Food intake", -0.5),
    ("Knowledge", "Exercise", 0.5),
    ("Stress", "Depression", 0.54),
    ("Stress", "Food intake", 0.607),
    ("Stress", "Physical health", -0.694),
)

# Fully connected 15-concept fruit-intake map; constructs with several
# operationalizations get a short qualifier so labels stay unique.
CMAES_CONCEPTS = (
    "Awareness",
    "Attitude",
    "Attitude Price",
    "Self-efficacy (can eat more fruit)",
    "Self-efficacy (difficult to eat more fruit)",
    "Social-influence (should eat fruit)",
    "Social-influence (peers eat fruit)",
    "Intention",
    "Action-planning (when)",
    "Action-planning (which fruit)",
    "Action-planning (how many)",
    "Coping planning (interference)",
    "Coping planning (difficulty)",
    "Perceived availability",
    "Visibility at home",
)


def build_obesity_fcm() -> Fcm:
    """The 13-concept, 20-edge expert obesity map (zero activations)."""
    labels = []
    for s, t, _ in OBESITY_EDGES:
        for label in (s, t):
            if label not in labels:
                labels.append(label)
    index = {c: i for i, c in enumerate(labels)}
    weights = np.zeros((len(labels), len(labels)))
    for s, t, w in OBESITY_EDGES:
        weights[index[s], index[t]] = w
    return Fcm(tuple(labels), weights, np.zeros(len(labels)))


def generate_variants(base: Fcm, count: int, jitter: float, seed: int) -> list[Fcm]:
    """count copies of base with each nonzero weight perturbed by uniform
    noise in [-jitter, +jitter], clamped to [-1, 1]. Zero entries stay zero;
    structure and activation are shared with base."""
    if count < 1:
        raise ConfigError("variant count must be >= 1")
    if jitter < 0:
        raise ConfigError("jitter must be >= 0")
    rng = rng_for(seed, "variants")
    mask = base.weights != 0.0
    nnz = int(mask.sum())
    variants = []
    for _ in range(count):
        w = base.weights.copy()
        w[mask] = np.clip(w[mask] + rng.uniform(-jitter, jitter, size=nnz), -1.0, 1.0)
        variants.append(base.with_weights(w))
    return variants


def generate_cmaes_style(count: int, seed: int) -> list[Fcm]:
    """count fully connected 15-concept FCMs: off-diagonal weights uniform in
    [-1, 1], activations uniform in [0, 1], all drawn per agent."""
    if count < 1:
        raise ConfigError("population count must be >= 1")
    rng = rng_for(seed, "cmaes")
    n = len(CMAES_CONCEPTS)
    off_diag = ~np.eye(n, dtype=bool)
    fcms = []
    for _ in range(count):
        w = np.zeros((n, n))
        w[off_diag] = rng.uniform(-1.0, 1.0, size=n * (n - 1))
        a = rng.uniform(0.0, 1.0, size=n)
        fcms.append(Fcm(CMAES_CONCEPTS, w, a))
    return fcms


def randomize_activations(fcms: list[Fcm], seed: int) -> list[Fcm]:
    """Re-draw every FCM's initial activation uniformly in [0, 1]."""
    rng = rng_for(seed, "activations")
    return [f.with_activation(rng.uniform(0.0, 1.0, size=f.n)) for f in fcms]


def make_agents(fcms: list[Fcm]) -> list[Agent]:
    return [Agent(i, f) for i, f in enumerate(fcms)]


# ---------------------------------------------------------------------------
# Population file I/O: a JSON array of FCM objects.

def export_population(fcms: list[Fcm], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([fcm_to_dict(f) for f in fcms], fh, indent=1, sort_keys=True)


def import_population(path) -> list[Fcm]:
    try:
        with open(path, encoding="utf-8") as fh:
            records = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"population file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"population file {path} is not valid JSON: {exc}") from exc
    if not isinstance(records, list) or not records:
        raise ConfigError(f"population file {path} must hold a non-empty JSON array")
    fcms = []
    for idx, record in enumerate(records):
        try:
            fcms.append(fcm_from_dict(record))
        except ConfigError as exc:
            raise ConfigError(f"population record {idx}: {exc}") from exc
    return fcms


# ---------------------------------------------------------------------------
# Topologies and channels

_MAX_TOPOLOGY_RETRIES = 20


def build_topology(spec: TopologySpec) -> SocialGraph:
    """Generate ties (channels unassigned) for the requested topology.

    Retries with derived seeds when the draw leaves isolated nodes (possible
    for the random kind); fails after a bounded number of attempts.
    """
    for attempt in range(_MAX_TOPOLOGY_RETRIES):
        seed = int_seed(spec.seed, "topology", spec.kind, attempt)
        if spec.kind == "random":
            g = nx.gnp_random_graph(spec.n, spec.p, seed=seed)
        elif spec.kind == "small_world":
            g = nx.watts_strogatz_graph(spec.n, spec.k, spec.beta, seed=seed)
        else:
            g = nx.barabasi_albert_graph(
                spec.n, spec.m, seed=seed, initial_graph=nx.complete_graph(spec.m)
            )
        if all(d > 0 for _, d in g.degree()):
            ties = tuple(sorted((i, j) if i < j else (j, i) for i, j in g.edges()))
            return SocialGraph(tuple(range(spec.n)), ties)
    raise GenerationError(
        f"{spec.kind} topology left isolated nodes in {_MAX_TOPOLOGY_RETRIES} attempts "
        f"(n={spec.n}); increase connectivity parameters"
    )


def assign_channels(graph: SocialGraph, agents: list[Agent], seed: int) -> SocialGraph:
    """Give every tie one concept drawn uniformly from the intersection of
    both endpoints' concept sets, so each agent has an equal chance to
    influence any shared concept of its peer."""
    by_id = {a.id: a for a in agents}
    missing = [v for v in graph.nodes if v not in by_id]
    if missing:
        raise ConfigError(f"no agent for graph nodes {missing[:5]}")
    rng = rng_for(seed, "channels")
    channels = {}
    for i, j in graph.ties:
        shared = sorted(set(by_id[i].fcm.concepts) & set(by_id[j].fcm.concepts))
        if not shared:
            raise ChannelError(f"agents {i} and {j} share no concept to interact over")
        channels[(i, j)] = shared[int(rng.integers(len(shared)))]
    return SocialGraph(graph.nodes, graph.ties, channels)


# ---------------------------------------------------------------------------
# Topology file I/O: edge-list CSV i,j,channel_label

def export_topology(graph: SocialGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "channel_label"])
        for i, j in graph.ties:
            label = graph.channels[(i, j)] if graph.channels else ""
            writer.writerow([i, j, label])


def import_topology(path, nodes) -> SocialGraph:
    """Read an edge-list CSV back into a SocialGraph over the given nodes."""
    ties = []
    channels = {}
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["i", "j", "channel_label"]:
                raise ConfigError(f"unexpected topology header {header!r} in {path}")
            for row in reader:
                if not row:
                    continue
                i, j, label = int(row[0]), int(row[1]), row[2]
                ties.append((i, j))
                if label:
                    channels[(i, j) if i < j else (j, i)] = label
    except FileNotFoundError:
        raise ConfigError(f"topology file not found: {path}") from None
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"malformed topology row in {path}: {exc}") from exc
    return SocialGraph(tuple(nodes), tuple(ties), channels or None)
