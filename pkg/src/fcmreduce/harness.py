"""Stochastic interaction harness for hybrid agent/FCM models.

One run initializes every agent from its FCM's initial activation, then for
a fixed number of rounds visits every social tie once in a seeded random
order. At each tie the agent with the lower value on the tie's channel
concept copies the higher agent's value into that concept and re-simulates
its FCM to stabilization; the higher agent is unchanged. The run's output
is the population mean of a designated concept after the final round.

Runs are embarrassingly parallel: run i draws its own RNG stream from
(master_seed, "run", i), so results are independent of execution schedule.
The inner loop is JIT-compiled when numba is available; a pure-Python
fallback with identical semantics is kept for environments without it and
as a reference implementation for tests.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError
from .fcm import SimulationSettings, simulate
from .population import Agent, SocialGraph
from .seeding import seed_sequence

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is an optional accelerator
    _njit = None


@dataclass(frozen=True)
class RunSpec:
    """How to run one experiment: rounds per run, repeats, what to measure."""

    output_concept: str
    settings: SimulationSettings
    rounds: int = 10
    repeats: int = 100
    master_seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")


@dataclass
class OutputDistribution:
    """Per-run scalar outputs over the repeats, ordered by run index."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1 or len(s) == 0:
            raise ContractError("a distribution needs at least one sample")
        if np.any(s < 0.0) or np.any(s > 1.0):
            raise ContractError("output samples must lie in [0, 1]")
        self.samples = s


def interact(a: Agent, b: Agent, channel: str, settings: SimulationSettings):
    """One social interaction over a shared concept.

    The agent with the lower channel value takes the higher agent's value
    into that concept and re-simulates its FCM to stabilization; the other
    agent is unchanged. Equal values are a no-op. Returns the (possibly
    updated) pair (a, b).
    """
    try:
        ia = a.fcm.index_of(channel)
        ib = b.fcm.index_of(channel)
    except ConfigError as exc:
        raise ContractError(f"interaction channel {channel!r}: {exc}") from exc
    va = a.fcm.activation[ia]
    vb = b.fcm.activation[ib]
    if va == vb:
        return a, b
    if va < vb:
        low, idx, value = a, ia, vb
    else:
        low, idx, value = b, ib, va
    start = low.fcm.activation.copy()
    start[idx] = value
    final, _, _ = simulate(low.fcm, start, settings)
    updated = Agent(low.id, low.fcm.with_activation(final))
    return (updated, b) if va < vb else (a, updated)


# ---------------------------------------------------------------------------
# Compiled inner loop. _settle_core/_run_core are written in the numba
# subset; the same source runs as plain Python when numba is missing.

def _settle_core(wt, act, row, c, stab, tol, max_iter, transfer_id, self_mem, buf):
    for _ in range(max_iter):
        prev = act[row, stab]
        for r in range(c):
            x = 0.0
            for s in range(c):
                x += wt[r, s] * act[row, s]
            if self_mem:
                x += act[row, r]
            if transfer_id == 0:
                v = math.tanh(x)
            else:
                v = 1.0 / (1.0 + math.exp(-x))
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            buf[r] = v
        for r in range(c):
            act[row, r] = buf[r]
        if abs(act[row, stab] - prev) < tol:
            break


def _run_core(
    wts, act, ncs, stab_idx, tol, max_iter, transfer_id, self_mem,
    tie_i, tie_j, chan_i, chan_j, orders,
):
    buf = np.empty(act.shape[1])
    for rnd in range(orders.shape[0]):
        for s in range(orders.shape[1]):
            t = orders[rnd, s]
            i = tie_i[t]
            j = tie_j[t]
            vi = act[i, chan_i[t]]
            vj = act[j, chan_j[t]]
            if vi == vj:
                continue
            if vi < vj:
                act[i, chan_i[t]] = vj
                _settle(
                    wts[i], act, i, ncs[i], stab_idx[i], tol, max_iter,
                    transfer_id, self_mem, buf,
                )
            else:
                act[j, chan_j[t]] = vi
                _settle(
                    wts[j], act, j, ncs[j], stab_idx[j], tol, max_iter,
                    transfer_id, self_mem, buf,
                )


if _njit is not None:
    _settle = _njit(cache=True, nogil=True)(_settle_core)
    _run = _njit(cache=True, nogil=True)(_run_core)
else:  # pragma: no cover
    _settle = _settle_core
    _run = _run_core


class _ModelArrays:
    """Population packed into flat arrays for the compiled loop."""

    def __init__(self, agents: list[Agent], graph: SocialGraph, spec: RunSpec):
        if graph.channels is None and graph.ties:
            raise ConfigError("run needs a graph with assigned channels")
        by_id = {a.id: a for a in agents}
        missing = [v for v in graph.nodes if v not in by_id]
        if missing:
            raise ConfigError(f"no agent for graph nodes {missing[:5]}")
        # the model's population is the graph's node set
        self.ids = sorted(graph.nodes)
        pos = {v: p for p, v in enumerate(self.ids)}
        n = len(self.ids)
        max_c = max(by_id[v].fcm.n for v in self.ids)
        self.wts = np.zeros((n, max_c, max_c))
        self.act0 = np.zeros((n, max_c))
        self.ncs = np.zeros(n, dtype=np.int64)
        self.stab_idx = np.zeros(n, dtype=np.int64)
        self.out_idx = np.zeros(n, dtype=np.int64)
        for v in self.ids:
            fcm = by_id[v].fcm
            p = pos[v]
            c = fcm.n
            self.wts[p, :c, :c] = fcm.weights.T
            self.act0[p, :c] = fcm.activation
            self.ncs[p] = c
            try:
                self.stab_idx[p] = fcm.index_of(spec.settings.stabilization_concept)
                self.out_idx[p] = fcm.index_of(spec.output_concept)
            except ConfigError as exc:
                raise ConfigError(f"agent {v}: {exc}") from exc
        ties = list(graph.ties)
        self.tie_i = np.array([pos[i] for i, _ in ties], dtype=np.int64)
        self.tie_j = np.array([pos[j] for _, j in ties], dtype=np.int64)
        self.chan_i = np.zeros(len(ties), dtype=np.int64)
        self.chan_j = np.zeros(len(ties), dtype=np.int64)
        for t, (i, j) in enumerate(ties):
            label = graph.channels[(i, j)]
            try:
                self.chan_i[t] = by_id[i].fcm.index_of(label)
                self.chan_j[t] = by_id[j].fcm.index_of(label)
            except ConfigError as exc:
                raise ConfigError(f"tie ({i}, {j}): {exc}") from exc
        self.transfer_id = 0 if spec.settings.transfer == "tanh" else 1
        self.spec = spec

    def run(self, run_seed) -> float:
        rng = np.random.default_rng(run_seed)
        m = len(self.tie_i)
        orders = np.empty((self.spec.rounds, m), dtype=np.int64)
        for rnd in range(self.spec.rounds):
            orders[rnd] = rng.permutation(m)
        act = self.act0.copy()
        if m > 0:
            _run(
                self.wts, act, self.ncs, self.stab_idx,
                self.spec.settings.stabilization_tolerance,
                self.spec.settings.max_iterations,
                self.transfer_id, self.spec.settings.self_memory,
                self.tie_i, self.tie_j, self.chan_i, self.chan_j, orders,
            )
        out = act[np.arange(len(self.ids)), self.out_idx]
        return float(out.mean())


def run_once(agents: list[Agent], graph: SocialGraph, spec: RunSpec, run_seed) -> float:
    """One stochastic run; the tie visiting order is drawn from run_seed."""
    return _ModelArrays(agents, graph, spec).run(run_seed)


def run_once_reference(agents: list[Agent], graph: SocialGraph, spec: RunSpec, run_seed) -> float:
    """Same semantics as run_once, composed from the public interact() and
    simulate() operations. Slow; used to cross-check the compiled loop."""
    if graph.channels is None and graph.ties:
        raise ConfigError("run needs a graph with assigned channels")
    by_id = {a.id: a for a in agents}
    current = {v: by_id[v] for v in graph.nodes}
    rng = np.random.default_rng(run_seed)
    ties = list(graph.ties)
    for _ in range(spec.rounds):
        for t in rng.permutation(len(ties)):
            i, j = ties[int(t)]
            a, b = interact(current[i], current[j], graph.channels[(i, j)], spec.settings)
            current[i], current[j] = a, b
    values = [
        agent.fcm.activation[agent.fcm.index_of(spec.output_concept)]
        for agent in current.values()
    ]
    return float(np.mean(values))


def run_distribution(
    agents: list[Agent], graph: SocialGraph, spec: RunSpec, workers: int = 1
) -> OutputDistribution:
    """spec.repeats independent runs; run i uses the RNG stream derived from
    (master_seed, "run", i), so the sample vector is identical whether runs
    execute serially or in parallel."""
    model = _ModelArrays(agents, graph, spec)
    seeds = [seed_sequence(spec.master_seed, "run", i) for i in range(spec.repeats)]
    if workers <= 1:
        samples = [model.run(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(model.run, seeds))
    return OutputDistribution(np.array(samples))


# ---------------------------------------------------------------------------
# Distribution file I/O: CSV run_index,output_value plus a JSON sidecar
# with the run spec and master seed.

def export_distribution(dist: OutputDistribution, spec: RunSpec, path, sidecar_path=None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_index", "output_value"])
        for idx, value in enumerate(dist.samples):
            writer.writerow([idx, repr(float(value))])
    if sidecar_path is not None:
        sidecar = {
            "output_concept": spec.output_concept,
            "rounds": spec.rounds,
            "repeats": spec.repeats,
            "master_seed": spec.master_seed,
            "settings": {
                "stabilization_concept": spec.settings.stabilization_concept,
                "max_iterations": spec.settings.max_iterations,
                "stabilization_tolerance": spec.settings.stabilization_tolerance,
                "transfer": spec.settings.transfer,
                "self_memory": spec.settings.self_memory,
            },
        }
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)


def import_distribution(path) -> OutputDistribution:
    samples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["run_index", "output_value"]:
            raise ConfigError(f"unexpected distribution header {header!r} in {path}")
        for row in reader:
            if not row:
                continue
            samples.append(float(row[1]))
    if not samples:
        raise ConfigError(f"distribution file {path} holds no samples")
    return OutputDistribution(np.array(samples))
