"""Function registry, static cluster configuration, and live allocation tables.

The load balancer needs two live tables: per-worker active function
instances, and an activation-id index that maps each live invocation back to
its worker and function.  Both are kept here, together with an incrementally
maintained per-worker memory counter that must always equal the recomputed
sum over instances.

Externally synchronized: exactly one logical writer mutates an ActivityState
at a time; snapshots may be taken between mutations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import yaml


class StateError(Exception):
    """Base class for registry / config / activity-table errors."""


class DuplicateActivation(StateError):
    pass


class UnknownWorker(StateError):
    pass


class UnknownFunction(StateError):
    pass


class CapacityExceeded(StateError):
    pass


class UnknownActivation(StateError):
    """A completion message for a non-live activation (lost or duplicated)."""


@dataclass(frozen=True)
class FunctionMeta:
    name: str
    memory_mb: int
    tag: str

    def __post_init__(self):
        if self.memory_mb <= 0:
            raise ValueError(f"function {self.name!r}: memory_mb must be > 0")


class Registry:
    """Maps function names to their memory occupation and tag."""

    def __init__(self, functions: Iterable[FunctionMeta]):
        self._by_name: dict[str, FunctionMeta] = {}
        for meta in functions:
            if meta.name in self._by_name:
                raise ValueError(f"duplicate function name {meta.name!r}")
            self._by_name[meta.name] = meta

    def __getitem__(self, name: str) -> FunctionMeta:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownFunction(f"function {name!r} is not registered") from None

    def get(self, name: str) -> FunctionMeta | None:
        return self._by_name.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self) -> Iterator[FunctionMeta]:
        return iter(self._by_name.values())

    def __len__(self) -> int:
        return len(self._by_name)

    @classmethod
    def from_obj(cls, data) -> "Registry":
        if not isinstance(data, list):
            raise ValueError("registry file must be a list of functions")
        return cls(
            FunctionMeta(
                name=str(entry["name"]),
                memory_mb=int(entry["memory_mb"]),
                tag=str(entry["tag"]),
            )
            for entry in data
        )

    @classmethod
    def from_file(cls, path) -> "Registry":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_obj(yaml.safe_load(fh))


@dataclass(frozen=True)
class WorkerSpec:
    id: str
    zone: str
    max_memory_mb: int
    cpu_weight: float = 1.0

    def __post_init__(self):
        if self.max_memory_mb <= 0:
            raise ValueError(f"worker {self.id!r}: max_memory_mb must be > 0")
        if self.cpu_weight <= 0:
            raise ValueError(f"worker {self.id!r}: cpu_weight must be > 0")


class ClusterConfig:
    """Ordered map of worker id to WorkerSpec (order matters for ``*``)."""

    def __init__(self, workers: Iterable[WorkerSpec]):
        self._workers: dict[str, WorkerSpec] = {}
        for spec in workers:
            if spec.id in self._workers:
                raise ValueError(f"duplicate worker id {spec.id!r}")
            self._workers[spec.id] = spec
        self.worker_ids: tuple[str, ...] = tuple(self._workers)

    def __getitem__(self, worker_id: str) -> WorkerSpec:
        try:
            return self._workers[worker_id]
        except KeyError:
            raise UnknownWorker(f"worker {worker_id!r} is not configured") from None

    def get(self, worker_id: str) -> WorkerSpec | None:
        return self._workers.get(worker_id)

    def __contains__(self, worker_id: str) -> bool:
        return worker_id in self._workers

    def __iter__(self) -> Iterator[WorkerSpec]:
        return iter(self._workers.values())

    def __len__(self) -> int:
        return len(self._workers)

    def zones(self) -> set[str]:
        return {spec.zone for spec in self}

    @classmethod
    def from_obj(cls, data) -> "ClusterConfig":
        if not isinstance(data, list):
            raise ValueError("cluster config file must be a list of workers")
        return cls(
            WorkerSpec(
                id=str(entry["id"]),
                zone=str(entry["zone"]),
                max_memory_mb=int(entry["max_memory_mb"]),
                cpu_weight=float(entry.get("cpu_weight", 1.0)),
            )
            for entry in data
        )

    @classmethod
    def from_file(cls, path) -> "ClusterConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_obj(yaml.safe_load(fh))


@dataclass(frozen=True)
class WorkerView:
    """Immutable per-worker slice of a snapshot."""

    instances: tuple[tuple[str, str, str], ...]  # (activation, function, tag)
    memory_used: int
    max_memory: int
    tags: frozenset[str]


@dataclass(frozen=True)
class ClusterSnapshot:
    """Consistent read-only view of the activity tables at one logical instant."""

    worker_order: tuple[str, ...]
    memory_used: dict = field(repr=False)
    max_memory: dict = field(repr=False)
    counts: dict = field(repr=False)
    tags: dict = field(repr=False)
    instances: dict = field(repr=False)

    def __contains__(self, worker_id: str) -> bool:
        return worker_id in self.memory_used

    def __getitem__(self, worker_id: str) -> WorkerView:
        if worker_id not in self.memory_used:
            raise UnknownWorker(f"worker {worker_id!r} is not in this snapshot")
        return WorkerView(
            instances=self.instances[worker_id],
            memory_used=self.memory_used[worker_id],
            max_memory=self.max_memory[worker_id],
            tags=self.tags[worker_id],
        )


class ActivityState:
    """The two live tracking tables plus the derived memory counters.

    Invariants (property-tested):
      * the activation index and the per-worker instance tables describe the
        same set of live instances;
      * memory_used[w] always equals the recomputable sum over instances.
    """

    def __init__(self, config: ClusterConfig, registry: Registry):
        self.config = config
        self.registry = registry
        # worker -> {activation: (function, tag)}
        self._instances: dict[str, dict[str, tuple[str, str]]] = {
            wid: {} for wid in config.worker_ids
        }
        # activation -> (worker, function)
        self._index: dict[str, tuple[str, str]] = {}
        self._mem: dict[str, int] = {wid: 0 for wid in config.worker_ids}

    # -- mutation -----------------------------------------------------------

    def record_allocation(
        self, worker: str, activation: str, function: str
    ) -> "ActivityState":
        if activation in self._index:
            raise DuplicateActivation(f"activation {activation!r} is already live")
        if worker not in self._instances:
            raise UnknownWorker(f"worker {worker!r} is not configured")
        meta = self.registry[function]
        max_memory = self.config[worker].max_memory_mb
        if self._mem[worker] + meta.memory_mb > max_memory:
            raise CapacityExceeded(
                f"allocating {function!r} ({meta.memory_mb}MB) on {worker!r} "
                f"would exceed {max_memory}MB "
                f"(used {self._mem[worker]}MB)"
            )
        self._instances[worker][activation] = (function, meta.tag)
        self._index[activation] = (worker, function)
        self._mem[worker] += meta.memory_mb
        return self

    def record_completion(self, activation: str) -> "ActivityState":
        entry = self._index.pop(activation, None)
        if entry is None:
            raise UnknownActivation(f"activation {activation!r} is not live")
        worker, function = entry
        del self._instances[worker][activation]
        self._mem[worker] -= self.registry[function].memory_mb
        return self

    # -- queries ------------------------------------------------------------

    def is_live(self, activation: str) -> bool:
        return activation in self._index

    def locate(self, activation: str) -> tuple[str, str]:
        entry = self._index.get(activation)
        if entry is None:
            raise UnknownActivation(f"activation {activation!r} is not live")
        return entry

    def memory_used(self, worker: str) -> int:
        if worker not in self._mem:
            raise UnknownWorker(f"worker {worker!r} is not configured")
        return self._mem[worker]

    def instance_count(self, worker: str) -> int:
        if worker not in self._instances:
            raise UnknownWorker(f"worker {worker!r} is not configured")
        return len(self._instances[worker])

    def instances_on(self, worker: str) -> tuple[tuple[str, str, str], ...]:
        if worker not in self._instances:
            raise UnknownWorker(f"worker {worker!r} is not configured")
        return tuple(
            (act, fn, tag) for act, (fn, tag) in self._instances[worker].items()
        )

    def worker_tags(self, worker: str) -> set[str]:
        if worker not in self._instances:
            raise UnknownWorker(f"worker {worker!r} is not configured")
        return {tag for (_fn, tag) in self._instances[worker].values()}

    def live_count(self) -> int:
        return len(self._index)

    def snapshot(self) -> ClusterSnapshot:
        memory_used = {}
        max_memory = {}
        counts = {}
        tags = {}
        instances = {}
        for wid in self.config.worker_ids:
            table = self._instances[wid]
            memory_used[wid] = self._mem[wid]
            max_memory[wid] = self.config[wid].max_memory_mb
            counts[wid] = len(table)
            tags[wid] = frozenset(tag for (_fn, tag) in table.values())
            instances[wid] = tuple(
                (act, fn, tag) for act, (fn, tag) in table.items()
            )
        return ClusterSnapshot(
            worker_order=self.config.worker_ids,
            memory_used=memory_used,
            max_memory=max_memory,
            counts=counts,
            tags=tags,
            instances=instances,
        )

    # -- integrity ----------------------------------------------------------

    def recomputed_memory(self, worker: str) -> int:
        return sum(
            self.registry[fn].memory_mb
            for (fn, _tag) in self._instances[worker].values()
        )

    def check_integrity(self) -> None:
        """Assert cross-table consistency; raises AssertionError on violation."""
        total = sum(len(t) for t in self._instances.values())
        assert total == len(self._index), "table bijection violated"
        for activation, (worker, function) in self._index.items():
            entry = self._instances[worker].get(activation)
            assert entry is not None, f"{activation!r} missing from worker table"
            assert entry[0] == function, f"{activation!r} cross-reference mismatch"
        for worker in self._instances:
            assert self._mem[worker] == self.recomputed_memory(worker), (
                f"memory counter for {worker!r} out of sync"
            )
            assert self._mem[worker] <= self.config[worker].max_memory_mb

    def __eq__(self, other) -> bool:
        if not isinstance(other, ActivityState):
            return NotImplemented
        return (
            self._instances == other._instances
            and self._index == other._index
            and self._mem == other._mem
        )
