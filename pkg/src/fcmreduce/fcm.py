"""Fuzzy cognitive maps and their discrete-iteration simulation.

An FCM is a labeled weighted digraph plus an activation vector: node values
live in [0, 1], edge weights in [-1, 1]. A simulation repeatedly applies a
squashing transfer function to each concept's weighted input until a single
designated concept stops moving (its change between consecutive iterations
falls below a tolerance) or an iteration cap is hit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError

TRANSFER_FUNCTIONS = ("tanh", "sigmoid")


def apply_transfer(x: np.ndarray, transfer: str) -> np.ndarray:
    """Apply the named transfer and rectify into [0, 1].

    "tanh" maps to (-1, 1) and is clamped below at 0 so node values keep
    their defined range; "sigmoid" already lands in (0, 1).
    """
    if transfer == "tanh":
        return np.clip(np.tanh(x), 0.0, 1.0)
    if transfer == "sigmoid":
        return 1.0 / (1.0 + np.exp(-x))
    raise ConfigError(f"unknown transfer function {transfer!r}; valid: {TRANSFER_FUNCTIONS}")


@dataclass(frozen=True, eq=False)
class Fcm:
    """A ruleset: concept labels, causal weight matrix, initial activation.

    weights[i, j] is the causal weight of the edge i -> j; a 0 entry means
    "no edge". Self-loops are permitted only if explicitly set.
    """

    concepts: tuple[str, ...]
    weights: np.ndarray
    activation: np.ndarray

    def __post_init__(self):
        concepts = tuple(self.concepts)
        object.__setattr__(self, "concepts", concepts)
        if not concepts:
            raise ContractError("an FCM needs at least one concept")
        if any(not isinstance(c, str) or not c for c in concepts):
            raise ContractError("concept labels must be non-empty strings")
        if len(set(concepts)) != len(concepts):
            dupes = sorted({c for c in concepts if concepts.count(c) > 1})
            raise ContractError(f"duplicate concept labels: {dupes}")
        n = len(concepts)
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (n, n):
            raise ContractError(f"weight matrix shape {w.shape} does not match {n} concepts")
        if not np.all(np.isfinite(w)) or np.any(np.abs(w) > 1.0):
            raise ContractError("edge weights must lie in [-1, 1]")
        a = np.array(self.activation, dtype=np.float64)
        if a.shape != (n,):
            raise ContractError(f"activation length {a.shape} does not match {n} concepts")
        if not np.all(np.isfinite(a)) or np.any(a < 0.0) or np.any(a > 1.0):
            raise ContractError("activation values must lie in [0, 1]")
        w.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "activation", a)

    @property
    def n(self) -> int:
        return len(self.concepts)

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(self.weights))

    def index_of(self, label: str) -> int:
        try:
            return self.concepts.index(label)
        except ValueError:
            raise ConfigError(f"concept {label!r} not in FCM ({', '.join(self.concepts)})") from None

    def edges(self):
        """Yield (source_label, target_label, weight) for every nonzero entry."""
        src, tgt = np.nonzero(self.weights)
        for i, j in zip(src.tolist(), tgt.tolist()):
            yield self.concepts[i], self.concepts[j], float(self.weights[i, j])

    def with_activation(self, activation) -> "Fcm":
        return Fcm(self.concepts, self.weights, activation)

    def with_weights(self, weights) -> "Fcm":
        return Fcm(self.concepts, weights, self.activation)


@dataclass(frozen=True)
class SimulationSettings:
    """Stopping rule and transfer choice for FCM simulation.

    The stabilization check watches a single designated concept; other
    concepts may still be moving when the run is declared stable. self_memory
    controls whether a concept's own current value feeds its next value
    (update input a[j] + sum_i w[i][j] a[i]) or only the weighted sum does.
    """

    stabilization_concept: str
    max_iterations: int = 100
    stabilization_tolerance: float = 0.05
    transfer: str = "tanh"
    self_memory: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if not self.stabilization_tolerance > 0:
            raise ConfigError("stabilization_tolerance must be > 0")
        if self.transfer not in TRANSFER_FUNCTIONS:
            raise ConfigError(
                f"unknown transfer function {self.transfer!r}; valid: {TRANSFER_FUNCTIONS}"
            )


def step(fcm: Fcm, activation, settings: SimulationSettings) -> np.ndarray:
    """One synchronous update of every concept. Does not mutate its input."""
    a = np.asarray(activation, dtype=np.float64)
    if a.shape != (fcm.n,):
        raise ContractError(f"activation length {a.shape} does not match {fcm.n} concepts")
    x = fcm.weights.T @ a
    if settings.self_memory:
        x = x + a
    return apply_transfer(x, settings.transfer)


def simulate(fcm: Fcm, activation, settings: SimulationSettings):
    """Iterate step() until the designated concept stabilizes or the cap hits.

    Returns (final_activation, iterations_taken, stabilized). Stabilization
    means the designated concept changed by less than the tolerance between
    two consecutive iterations.
    """
    si = fcm.index_of(settings.stabilization_concept)
    a = np.array(activation, dtype=np.float64)
    if a.shape != (fcm.n,):
        raise ContractError(f"activation length {a.shape} does not match {fcm.n} concepts")
    for iteration in range(1, settings.max_iterations + 1):
        nxt = step(fcm, a, settings)
        delta = abs(nxt[si] - a[si])
        a = nxt
        if delta < settings.stabilization_tolerance:
            return a, iteration, True
    return a, settings.max_iterations, False


# ---------------------------------------------------------------------------
# File format: {"concepts": [...], "edges": [{"source", "target", "weight"}],
# "activation": {label: value}}. Unlisted activations default to 0.

def fcm_to_dict(fcm: Fcm) -> dict:
    return {
        "concepts": list(fcm.concepts),
        "edges": [
            {"source": s, "target": t, "weight": w} for s, t, w in fcm.edges()
        ],
        "activation": {
            label: float(v)
            for label, v in zip(fcm.concepts, fcm.activation)
            if v != 0.0
        },
    }


def fcm_from_dict(data: dict) -> Fcm:
    try:
        concepts = list(data["concepts"])
        edges = data.get("edges", [])
        activation_map = data.get("activation", {})
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed FCM object: {exc}") from exc
    if len(set(concepts)) != len(concepts):
        raise ConfigError("duplicate concept label in FCM object")
    index = {c: i for i, c in enumerate(concepts)}
    n = len(concepts)
    weights = np.zeros((n, n))
    for e in edges:
        try:
            s, t, w = e["source"], e["target"], float(e["weight"])
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError(f"malformed edge record {e!r}") from exc
        if s not in index or t not in index:
            raise ConfigError(f"edge {s!r} -> {t!r} references an unknown concept")
        if abs(w) > 1.0:
            raise ConfigError(f"edge {s!r} -> {t!r} has weight {w} outside [-1, 1]")
        if weights[index[s], index[t]] != 0.0:
            raise ConfigError(f"edge {s!r} -> {t!r} listed twice")
        weights[index[s], index[t]] = w
    activation = np.zeros(n)
    for label, value in activation_map.items():
        if label not in index:
            raise ConfigError(f"activation references unknown concept {label!r}")
        activation[index[label]] = float(value)
    try:
        return Fcm(tuple(concepts), weights, activation)
    except ContractError as exc:
        raise ConfigError(str(exc)) from exc


def save_fcm(fcm: Fcm, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fcm_to_dict(fcm), fh, indent=2, sort_keys=True)


def load_fcm(path) -> Fcm:
    with open(path, encoding="utf-8") as fh:
        return fcm_from_dict(json.load(fh))
