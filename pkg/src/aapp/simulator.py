"""Deterministic discrete-event simulation of fork-join workloads on a
multi-zone cluster.

The modeled application: a *divide* function splits a problem, writes one
chunk per child to the storage instance in its own zone, and invokes its
*impera* children.  Each impera reads its chunk from the storage instance in
its own zone (visible immediately when the write happened in the same zone,
else only after the replication delay), computes, writes its solution
fragment locally, and completes.  The divide joins on its children, reads
the fragments from its local instance with the same exponential back-off
retry discipline, assembles, and answers the user.  Long-running *heavy*
co-tenants occupy pinned workers and slow every co-resident function down.

All times are integer milliseconds; identical configs (including the seed)
yield bit-identical event lists and metrics.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .cluster import ActivityState, CapacityExceeded, ClusterConfig, Registry
from .dsl import AappScript, parse_script
from .scheduler import NotSchedulable, schedule


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class StorageModel:
    replication_delay_ms: int = 3000
    backoff_initial_ms: int = 1000
    backoff_factor: float = 2.0
    backoff_max_attempts: int = 8

    def __post_init__(self):
        if self.replication_delay_ms < 0:
            raise ConfigError("replication_delay_ms must be >= 0")
        if self.backoff_initial_ms <= 0:
            raise ConfigError("backoff_initial_ms must be > 0")
        if self.backoff_factor < 1:
            raise ConfigError("backoff_factor must be >= 1")
        if self.backoff_max_attempts < 1:
            raise ConfigError("backoff_max_attempts must be >= 1")


@dataclass(frozen=True)
class HeavyFunction:
    function: str
    #: Worker to pin the instance to; scheduled through the script when None.
    worker: str | None = None
    #: Fixed duration; None means the instance lives until its run ends.
    service_time_ms: int | None = None


@dataclass(frozen=True)
class WorkloadSpec:
    runs: int = 5
    divides_per_run: int = 10
    imperas_per_divide: int = 2
    divide_function: str = "divide"
    impera_function: str = "impera"
    heavy: tuple[HeavyFunction, ...] = ()
    #: 'sequential' (each divide waits for the previous) or 'open' (rate-based).
    discipline: str = "sequential"
    #: Mean inter-arrival for the open discipline.
    arrival_interval_ms: int = 1000

    def __post_init__(self):
        if self.runs < 1 or self.divides_per_run < 1 or self.imperas_per_divide < 1:
            raise ConfigError("workload counts must be >= 1")
        if self.discipline not in ("sequential", "open"):
            raise ConfigError("discipline must be 'sequential' or 'open'")


@dataclass
class SimConfig:
    cluster: ClusterConfig
    script: AappScript
    registry: Registry
    storage: StorageModel
    workload: WorkloadSpec
    #: Symmetric one-way latency between zones; every cross-zone pair must be
    #: listed (in either direction), same-zone pairs default to 0.
    zone_latency: dict[tuple[str, str], int] = field(default_factory=dict)
    gateway_zone: str = ""
    #: Base service time per function name (ms); unlisted functions take 0.
    service_times_ms: dict[str, int] = field(default_factory=dict)
    seed: int = 0
    #: Service-time multiplier per co-resident heavy-tagged instance.
    heavy_slowdown: float = 3.0

    def validate(self) -> None:
        zones = self.cluster.zones()
        if not self.gateway_zone:
            raise ConfigError("gateway_zone must name a zone")
        for (a, b) in self.zone_latency:
            if a not in zones and a != self.gateway_zone:
                raise ConfigError(f"zone_latency references unknown zone {a!r}")
            if b not in zones and b != self.gateway_zone:
                raise ConfigError(f"zone_latency references unknown zone {b!r}")
        for a in zones:
            for b in zones:
                if (
                    a < b
                    and (a, b) not in self.zone_latency
                    and (b, a) not in self.zone_latency
                ):
                    raise ConfigError(f"zone_latency missing pair ({a!r}, {b!r})")
        if self.heavy_slowdown < 1:
            raise ConfigError("heavy_slowdown must be >= 1")
        for h in self.workload.heavy:
            if h.function not in self.registry:
                raise ConfigError(f"heavy function {h.function!r} not registered")
            if h.worker is not None and h.worker not in self.cluster:
                raise ConfigError(f"heavy pin {h.worker!r} is not a worker")
        for fn in (self.workload.divide_function, self.workload.impera_function):
            if fn not in self.registry:
                raise ConfigError(f"workload function {fn!r} not registered")

    def latency(self, zone_a: str, zone_b: str) -> int:
        if zone_a == zone_b:
            return self.zone_latency.get((zone_a, zone_b), 0)
        return self.zone_latency.get(
            (zone_a, zone_b), self.zone_latency.get((zone_b, zone_a), 0)
        )


@dataclass(frozen=True)
class SimEvent:
    time: int
    kind: str
    activation: str
    worker: str | None = None
    detail: str | None = None

    def line(self) -> str:
        return f"{self.time}\t{self.kind}\t{self.activation}\t{self.worker or '-'}"


@dataclass(frozen=True)
class InvocationRecord:
    """One divide invocation, with everything its metrics need."""

    index: int
    arrival_ms: int
    latency_ms: int | None
    outcome: str  # 'success' | 'rejected' | 'failed'
    retries: int
    divide_worker: str | None
    divide_zone: str | None
    divide_heavy_coresidents: int
    impera_workers: tuple[str, ...]
    impera_zones: tuple[str, ...]
    impera_heavy_coresidents: tuple[int, ...]

    @property
    def colocated(self) -> bool:
        return (
            self.outcome == "success"
            and self.divide_worker is not None
            and all(w == self.divide_worker for w in self.impera_workers)
        )


def _percentile_nearest_rank(sorted_values: list[int], pct: float) -> int:
    # Nearest-rank percentile over an ascending series.
    n = len(sorted_values)
    rank = max(1, math.ceil(pct * n))
    return sorted_values[min(rank, n) - 1]


@dataclass
class SimMetrics:
    invocations: list[InvocationRecord]
    stray_completions: int = 0

    def latencies(self) -> list[int]:
        return sorted(
            r.latency_ms for r in self.invocations if r.outcome == "success"
        )

    @property
    def total_retries(self) -> int:
        return sum(r.retries for r in self.invocations)

    @property
    def rejected(self) -> int:
        return sum(1 for r in self.invocations if r.outcome == "rejected")

    @property
    def failed(self) -> int:
        return sum(1 for r in self.invocations if r.outcome == "failed")

    @property
    def mean_latency(self) -> float:
        lats = self.latencies()
        return statistics.fmean(lats) if lats else float("nan")

    @property
    def median_latency(self) -> float:
        lats = self.latencies()
        return statistics.median(lats) if lats else float("nan")

    @property
    def p95_latency(self) -> float:
        lats = self.latencies()
        return float(_percentile_nearest_rank(lats, 0.95)) if lats else float("nan")

    @property
    def stdev_latency(self) -> float:
        lats = self.latencies()
        return statistics.pstdev(lats) if len(lats) > 1 else 0.0

    @property
    def colocation_fraction(self) -> float:
        done = [r for r in self.invocations if r.outcome == "success"]
        if not done:
            return float("nan")
        return sum(1 for r in done if r.colocated) / len(done)

    def fraction(self, predicate) -> float:
        """Fraction of successful invocations satisfying a placement predicate."""
        done = [r for r in self.invocations if r.outcome == "success"]
        if not done:
            return float("nan")
        return sum(1 for r in done if predicate(r)) / len(done)

    def zone_fraction(self, zone: str) -> float:
        return self.fraction(lambda r: r.divide_zone == zone)

    def sorted_latency_series(self) -> list[tuple[float, int]]:
        """(percentile, latency_ms) points, ascending, for scatter plotting."""
        lats = self.latencies()
        n = len(lats)
        return [(100.0 * (i + 1) / n, v) for i, v in enumerate(lats)]


class _Storage:
    """Per-zone eventual-consistency visibility tracking.

    A write becomes visible in its own zone immediately and in every other
    zone after the replication lag in force for that write (co-tenancy on
    the writing worker stretches the lag, see _Simulation._write).
    """

    def __init__(self, zones: set[str]):
        self.zones = zones
        self._visible: dict[str, dict[str, int]] = {}

    def write(self, key: str, zone: str, time: int, lag_ms: int) -> None:
        self._visible[key] = {
            z: (time if z == zone else time + lag_ms) for z in self.zones
        }

    def visible_at(self, key: str, zone: str, time: int) -> bool:
        record = self._visible.get(key)
        return record is not None and record[zone] <= time


@dataclass
class _DivideCtx:
    index: int
    activation: str
    worker: str
    zone: str
    arrival: int
    heavy_coresidents: int
    pending: set[int]
    retries: int = 0
    outcome: str = "success"
    impera_workers: dict[int, str] = field(default_factory=dict)
    impera_zones: dict[int, str] = field(default_factory=dict)
    impera_heavy: dict[int, int] = field(default_factory=dict)
    fragment_keys: dict[int, str] = field(default_factory=dict)


@dataclass
class _RunCtx:
    index: int
    divides_done: int = 0
    open_ended_heavy: list[str] = field(default_factory=list)


class _Simulation:
    def __init__(self, cfg: SimConfig, collect_events: bool):
        cfg.validate()
        self.cfg = cfg
        self.state = ActivityState(cfg.cluster, cfg.registry)
        self.rng = random.Random(cfg.seed)
        self.storage = _Storage(cfg.cluster.zones())
        self.now = 0
        self.collect_events = collect_events
        self.events: list[SimEvent] = []
        self._agenda: list = []
        self._aseq = itertools.count()
        self._actno = itertools.count(1)
        self.records: list[InvocationRecord] = []
        self._heavy_tags = {
            cfg.registry[h.function].tag for h in cfg.workload.heavy
        }
        wl = cfg.workload
        self._total_divides = wl.runs * wl.divides_per_run

    # -- engine plumbing -----------------------------------------------------

    def _at(self, time: int, fn, *args) -> None:
        heapq.heappush(self._agenda, (time, next(self._aseq), fn, args))

    def _log(self, time, kind, activation, worker=None, detail=None) -> None:
        if self.collect_events:
            self.events.append(SimEvent(time, kind, activation, worker, detail))

    def run(self) -> tuple[list[SimEvent], SimMetrics]:
        self._at(0, self._start_run, 0)
        while self._agenda:
            time, _seq, fn, args = heapq.heappop(self._agenda)
            self.now = time
            fn(*args)
        # Stable sort: simultaneous events keep their causal creation order.
        self.events.sort(key=lambda e: e.time)
        self.records.sort(key=lambda r: r.index)
        return self.events, SimMetrics(invocations=self.records)

    def _new_activation(self, function: str) -> str:
        return f"{function}-{next(self._actno)}"

    def _zone(self, worker: str) -> str:
        return self.cfg.cluster[worker].zone

    def _heavy_coresidents(self, worker: str, excluding: str | None = None) -> int:
        count = 0
        for act, _fn, tag in self.state.instances_on(worker):
            if tag in self._heavy_tags and act != excluding:
                count += 1
        return count

    def _slowdown(self, worker: str, excluding: str | None = None) -> float:
        return self.cfg.heavy_slowdown ** self._heavy_coresidents(worker, excluding)

    def _service_time(self, function: str, worker: str, activation: str) -> int:
        base = self.cfg.service_times_ms.get(function, 0)
        spec = self.cfg.cluster[worker]
        return int(round(base / spec.cpu_weight * self._slowdown(worker, activation)))

    def _schedule_function(self, function: str, activation: str):
        """Serialized decision + allocation; returns the decision or None."""
        try:
            decision = schedule(
                function,
                self.state.snapshot(),
                self.cfg.script,
                self.cfg.registry,
                self.cfg.cluster,
                self.rng,
            )
        except NotSchedulable:
            self._log(self.now, "rejected", activation)
            return None
        self.state.record_allocation(decision.worker, activation, function)
        self._log(
            self.now, "placed", activation, decision.worker,
            detail=f"block={decision.block_index}",
        )
        return decision

    def _write(self, key: str, worker: str, activation: str, time: int) -> None:
        # Replication out of a congested worker is stretched by the same
        # co-tenancy factor that stretches its compute.
        zone = self._zone(worker)
        lag = int(
            round(
                self.cfg.storage.replication_delay_ms
                * self._slowdown(worker, activation)
            )
        )
        self.storage.write(key, zone, time, lag)
        self._log(time, "storage_write", activation, worker, detail=key)

    def _read_with_retries(
        self, key: str, zone: str, start: int, activation: str, worker: str
    ) -> tuple[int, int, bool]:
        """Returns (finish_time, retries, hit).  Logs every attempt."""
        st = self.cfg.storage
        t = start
        for attempt in range(1, st.backoff_max_attempts + 1):
            self._log(
                t, "storage_read_attempt", activation, worker,
                detail=f"{key}#{attempt}",
            )
            if self.storage.visible_at(key, zone, t):
                self._log(t, "storage_read_hit", activation, worker, detail=key)
                return t, attempt - 1, True
            self._log(t, "storage_read_miss", activation, worker, detail=key)
            if attempt < st.backoff_max_attempts:
                t += int(
                    round(st.backoff_initial_ms * st.backoff_factor ** (attempt - 1))
                )
        return t, st.backoff_max_attempts - 1, False

    # -- runs ----------------------------------------------------------------

    def _start_run(self, run_index: int) -> None:
        ctx = _RunCtx(index=run_index)
        for h in self.cfg.workload.heavy:
            self._at(self.now, self._launch_heavy, ctx, h)
        if self.cfg.workload.discipline == "sequential":
            self._at(self.now, self._launch_divide, ctx, 0)
        else:
            # Open discipline: all arrivals of the run drawn up front.
            t = self.now
            for k in range(self.cfg.workload.divides_per_run):
                self._at(t, self._launch_divide, ctx, k)
                t += max(
                    1,
                    int(round(
                        self.rng.expovariate(
                            1.0 / self.cfg.workload.arrival_interval_ms
                        )
                    )),
                )

    def _launch_heavy(self, ctx: _RunCtx, h: HeavyFunction) -> None:
        activation = self._new_activation(h.function)
        self._log(self.now, "arrival", activation)
        if h.worker is not None:
            try:
                self.state.record_allocation(h.worker, activation, h.function)
            except CapacityExceeded:
                self._log(self.now, "rejected", activation, h.worker)
                return
            self._log(self.now, "placed", activation, h.worker, detail="pinned")
            worker = h.worker
        else:
            decision = self._schedule_function(h.function, activation)
            if decision is None:
                return
            worker = decision.worker
        started = self.now + self.cfg.latency(self.cfg.gateway_zone, self._zone(worker))
        self._log(started, "started", activation, worker)
        if h.service_time_ms is not None:
            self._at(
                started + h.service_time_ms, self._complete_heavy, activation, worker
            )
        else:
            ctx.open_ended_heavy.append(activation)

    def _complete_heavy(self, activation: str, worker: str) -> None:
        self.state.record_completion(activation)
        self._log(self.now, "completed", activation, worker)

    def _finish_run(self, ctx: _RunCtx) -> None:
        for activation in ctx.open_ended_heavy:
            worker, _fn = self.state.locate(activation)
            self._complete_heavy(activation, worker)
        ctx.open_ended_heavy.clear()
        if ctx.index + 1 < self.cfg.workload.runs:
            self._at(self.now, self._start_run, ctx.index + 1)

    # -- divide / impera -----------------------------------------------------

    def _launch_divide(self, ctx: _RunCtx, k: int) -> None:
        wl = self.cfg.workload
        index = ctx.index * wl.divides_per_run + k
        activation = self._new_activation(wl.divide_function)
        arrival = self.now
        self._log(arrival, "arrival", activation)
        decision = self._schedule_function(wl.divide_function, activation)
        if decision is None:
            self.records.append(
                InvocationRecord(
                    index=index, arrival_ms=arrival, latency_ms=None,
                    outcome="rejected", retries=0, divide_worker=None,
                    divide_zone=None, divide_heavy_coresidents=0,
                    impera_workers=(), impera_zones=(),
                    impera_heavy_coresidents=(),
                )
            )
            self._at(self.now, self._divide_finished, ctx)
            return
        worker = decision.worker
        dctx = _DivideCtx(
            index=index,
            activation=activation,
            worker=worker,
            zone=self._zone(worker),
            arrival=arrival,
            heavy_coresidents=self._heavy_coresidents(worker, activation),
            pending=set(range(wl.imperas_per_divide)),
        )
        started = arrival + self.cfg.latency(self.cfg.gateway_zone, dctx.zone)
        self._log(started, "started", activation, worker)
        split_done = started + self._service_time(wl.divide_function, worker, activation)
        self._at(split_done, self._divide_split_done, ctx, dctx)

    def _divide_split_done(self, ctx: _RunCtx, dctx: _DivideCtx) -> None:
        gw = self.cfg.gateway_zone
        for j in sorted(dctx.pending):
            key = f"chunk/{dctx.activation}/{j}"
            self._write(key, dctx.worker, dctx.activation, self.now)
            invoke_at = self.now + self.cfg.latency(dctx.zone, gw)
            self._at(invoke_at, self._launch_impera, ctx, dctx, j, key)

    def _launch_impera(self, ctx: _RunCtx, dctx: _DivideCtx, j: int, chunk_key: str) -> None:
        wl = self.cfg.workload
        activation = self._new_activation(wl.impera_function)
        self._log(self.now, "arrival", activation)
        decision = self._schedule_function(wl.impera_function, activation)
        if decision is None:
            dctx.outcome = "rejected"
            self._at(self.now, self._impera_done, ctx, dctx, j)
            return
        worker = decision.worker
        zone = self._zone(worker)
        dctx.impera_workers[j] = worker
        dctx.impera_zones[j] = zone
        dctx.impera_heavy[j] = self._heavy_coresidents(worker, activation)
        started = self.now + self.cfg.latency(self.cfg.gateway_zone, zone)
        self._log(started, "started", activation, worker)
        read_done, retries, hit = self._read_with_retries(
            chunk_key, zone, started, activation, worker
        )
        dctx.retries += retries
        if not hit:
            dctx.outcome = "failed"
            self._at(read_done, self._complete_impera, ctx, dctx, j, activation, worker, False)
            return
        compute_done = read_done + self._service_time(
            wl.impera_function, worker, activation
        )
        self._at(compute_done, self._complete_impera, ctx, dctx, j, activation, worker, True)

    def _complete_impera(
        self, ctx: _RunCtx, dctx: _DivideCtx, j: int,
        activation: str, worker: str, wrote: bool,
    ) -> None:
        if wrote:
            key = f"frag/{dctx.activation}/{j}"
            self._write(key, worker, activation, self.now)
            dctx.fragment_keys[j] = key
        self.state.record_completion(activation)
        self._log(self.now, "completed", activation, worker)
        # Completion notification travels back through the gateway.
        zone = self._zone(worker)
        notify_at = (
            self.now
            + self.cfg.latency(zone, self.cfg.gateway_zone)
            + self.cfg.latency(self.cfg.gateway_zone, dctx.zone)
        )
        self._at(notify_at, self._impera_done, ctx, dctx, j)

    def _impera_done(self, ctx: _RunCtx, dctx: _DivideCtx, j: int) -> None:
        dctx.pending.discard(j)
        if not dctx.pending:
            self._join_divide(ctx, dctx)

    def _join_divide(self, ctx: _RunCtx, dctx: _DivideCtx) -> None:
        t = self.now
        if dctx.outcome == "success":
            for j in sorted(dctx.fragment_keys):
                t, retries, hit = self._read_with_retries(
                    dctx.fragment_keys[j], dctx.zone, t, dctx.activation, dctx.worker
                )
                dctx.retries += retries
                if not hit:
                    dctx.outcome = "failed"
                    break
        self.state.record_completion(dctx.activation)
        self._log(t, "completed", dctx.activation, dctx.worker)
        response_at = t + self.cfg.latency(dctx.zone, self.cfg.gateway_zone)
        m = self.cfg.workload.imperas_per_divide
        self.records.append(
            InvocationRecord(
                index=dctx.index,
                arrival_ms=dctx.arrival,
                latency_ms=(
                    response_at - dctx.arrival if dctx.outcome == "success" else None
                ),
                outcome=dctx.outcome,
                retries=dctx.retries,
                divide_worker=dctx.worker,
                divide_zone=dctx.zone,
                divide_heavy_coresidents=dctx.heavy_coresidents,
                impera_workers=tuple(
                    dctx.impera_workers.get(j, "") for j in range(m)
                ),
                impera_zones=tuple(dctx.impera_zones.get(j, "") for j in range(m)),
                impera_heavy_coresidents=tuple(
                    dctx.impera_heavy.get(j, 0) for j in range(m)
                ),
            )
        )
        self._at(response_at, self._divide_finished, ctx)

    def _divide_finished(self, ctx: _RunCtx) -> None:
        wl = self.cfg.workload
        ctx.divides_done += 1
        if wl.discipline == "sequential" and ctx.divides_done < wl.divides_per_run:
            self._at(self.now, self._launch_divide, ctx, ctx.divides_done)
        elif ctx.divides_done == wl.divides_per_run:
            self._finish_run(ctx)


def load_sim_config(path) -> SimConfig:
    """Load a simulation config file; cluster/script/registry paths are
    resolved relative to the config file's directory."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError("simulation config must be a mapping")
    base = path.parent

    def _resolve(key: str) -> Path:
        if key not in data:
            raise ConfigError(f"simulation config is missing {key!r}")
        return base / str(data[key])

    cluster = ClusterConfig.from_file(_resolve("cluster"))
    registry = Registry.from_file(_resolve("registry"))
    script = parse_script(_resolve("script").read_text(encoding="utf-8"))

    st = data.get("storage", {}) or {}
    storage = StorageModel(
        replication_delay_ms=int(st.get("replication_delay_ms", 3000)),
        backoff_initial_ms=int(st.get("backoff_initial_ms", 1000)),
        backoff_factor=float(st.get("backoff_factor", 2.0)),
        backoff_max_attempts=int(st.get("backoff_max_attempts", 8)),
    )
    wl = data.get("workload", {}) or {}
    heavy = tuple(
        HeavyFunction(
            function=str(h["function"]),
            worker=str(h["worker"]) if h.get("worker") is not None else None,
            service_time_ms=(
                int(h["service_time_ms"])
                if h.get("service_time_ms") is not None
                else None
            ),
        )
        for h in wl.get("heavy", [])
    )
    workload = WorkloadSpec(
        runs=int(wl.get("runs", 5)),
        divides_per_run=int(wl.get("divides_per_run", 10)),
        imperas_per_divide=int(wl.get("imperas_per_divide", 2)),
        divide_function=str(wl.get("divide_function", "divide")),
        impera_function=str(wl.get("impera_function", "impera")),
        heavy=heavy,
        discipline=str(wl.get("discipline", "sequential")),
        arrival_interval_ms=int(wl.get("arrival_interval_ms", 1000)),
    )
    zone_latency = {}
    for za, inner in (data.get("zone_latency", {}) or {}).items():
        for zb, ms in inner.items():
            zone_latency[(str(za), str(zb))] = int(ms)
    return SimConfig(
        cluster=cluster,
        script=script,
        registry=registry,
        storage=storage,
        workload=workload,
        zone_latency=zone_latency,
        gateway_zone=str(data.get("gateway_zone", "")),
        service_times_ms={
            str(k): int(v)
            for k, v in (data.get("service_times_ms", {}) or {}).items()
        },
        seed=int(data.get("seed", 0)),
        heavy_slowdown=float(data.get("heavy_slowdown", 3.0)),
    )


def run_simulation(
    cfg: SimConfig, collect_events: bool = True
) -> tuple[list[SimEvent], SimMetrics]:
    """Run one simulation; deterministic given the config (incl. seed).

    With collect_events=False the event log is skipped (large runs), and an
    empty list is returned in its place.
    """
    return _Simulation(cfg, collect_events).run()


@dataclass
class PolicyRow:
    name: str
    mean_latency: float
    median_latency: float
    p95_latency: float
    stdev_latency: float
    total_retries: int
    colocation_fraction: float
    rejected: int
    failed: int


@dataclass
class PolicyComparison:
    rows: list[PolicyRow]
    series: dict[str, list[tuple[float, int]]]
    metrics: dict[str, SimMetrics]

    def table(self) -> str:
        header = (
            f"{'script':<20}{'mean':>10}{'median':>10}{'p95':>10}"
            f"{'retries':>9}{'coloc':>8}{'rejected':>9}"
        )
        lines = [header]
        for row in self.rows:
            lines.append(
                f"{row.name:<20}{row.mean_latency:>10.1f}"
                f"{row.median_latency:>10.1f}{row.p95_latency:>10.1f}"
                f"{row.total_retries:>9d}{row.colocation_fraction:>8.3f}"
                f"{row.rejected:>9d}"
            )
        return "\n".join(lines)


def compare_policies(
    cfg: SimConfig,
    scripts: list[tuple[str, AappScript]],
    collect_events: bool = False,
) -> PolicyComparison:
    """Run the same cluster/workload/seed once per script, side by side."""
    rows = []
    series = {}
    metrics = {}
    for name, script in scripts:
        run_cfg = replace(cfg, script=script)
        _events, m = run_simulation(run_cfg, collect_events=collect_events)
        metrics[name] = m
        series[name] = m.sorted_latency_series()
        rows.append(
            PolicyRow(
                name=name,
                mean_latency=m.mean_latency,
                median_latency=m.median_latency,
                p95_latency=m.p95_latency,
                stdev_latency=m.stdev_latency,
                total_retries=m.total_retries,
                colocation_fraction=m.colocation_fraction,
                rejected=m.rejected,
                failed=m.failed,
            )
        )
    return PolicyComparison(rows=rows, series=series, metrics=metrics)
