"""Ready-made two-zone cluster, registry, scripts, and simulation configs.

These presets model a fork-join divide/impera application sharing six
workers (two large and one small per zone) with long-running heavy
co-tenants pinned to the small workers.  Three policy variants are
provided: full co-location (imperas affine with divide, everything
anti-affine with heavy), anti-affinity only, and unconstrained.
"""

from __future__ import annotations

from .cluster import ClusterConfig, FunctionMeta, Registry, WorkerSpec
from .dsl import (
    ANY,
    FAIL,
    AappScript,
    AffinityConstraint,
    Block,
    TagPolicy,
)
from .simulator import HeavyFunction, SimConfig, StorageModel, WorkloadSpec

EU = "eu"
US = "us"


def two_zone_cluster() -> ClusterConfig:
    return ClusterConfig(
        [
            WorkerSpec("eu_w1", EU, 4096, 1.0),
            WorkerSpec("eu_w2", EU, 4096, 1.0),
            WorkerSpec("eu_w3", EU, 2048, 0.5),
            WorkerSpec("us_w1", US, 4096, 1.0),
            WorkerSpec("us_w2", US, 4096, 1.0),
            WorkerSpec("us_w3", US, 2048, 0.5),
        ]
    )


def demo_registry() -> Registry:
    return Registry(
        [
            FunctionMeta("divide", 256, "d"),
            FunctionMeta("impera", 256, "i"),
            FunctionMeta("heavy_eu", 512, "h"),
            FunctionMeta("heavy_us", 512, "h"),
        ]
    )


def zone_latencies() -> dict[tuple[str, str], int]:
    return {(EU, EU): 5, (US, US): 5, (EU, US): 100}


def _policy(tag: str, affinity: tuple[AffinityConstraint, ...]) -> TagPolicy:
    return TagPolicy(
        tag=tag,
        blocks=(Block(workers=None, strategy=ANY, affinity=affinity),),
        followup=FAIL,
        followup_explicit=True,
    )


def colocation_script() -> AappScript:
    """Imperas ride along with their divide; everyone avoids heavy workers."""
    return AappScript(
        (
            _policy("d", (AffinityConstraint("h", anti=True),)),
            _policy(
                "i",
                (AffinityConstraint("h", anti=True), AffinityConstraint("d")),
            ),
            _policy(
                "h",
                (
                    AffinityConstraint("d", anti=True),
                    AffinityConstraint("i", anti=True),
                ),
            ),
        )
    )


def anti_affinity_script() -> AappScript:
    """Only the heavy anti-affinities; no co-location."""
    return AappScript(
        (
            _policy("d", (AffinityConstraint("h", anti=True),)),
            _policy("i", (AffinityConstraint("h", anti=True),)),
            _policy(
                "h",
                (
                    AffinityConstraint("d", anti=True),
                    AffinityConstraint("i", anti=True),
                ),
            ),
        )
    )


def unconstrained_script() -> AappScript:
    """No affinity constraints at all: any worker, uniformly."""
    return AappScript((_policy("d", ()), _policy("i", ()), _policy("h", ())))


def reference_scripts() -> list[tuple[str, AappScript]]:
    return [
        ("colocation", colocation_script()),
        ("anti-only", anti_affinity_script()),
        ("unconstrained", unconstrained_script()),
    ]


def experiment_config(
    seed: int = 0,
    runs: int = 5,
    divides_per_run: int = 10,
    script: AappScript | None = None,
    replication_delay_ms: int = 3000,
) -> SimConfig:
    """Timed benchmark setup: real service times and replication lag."""
    return SimConfig(
        cluster=two_zone_cluster(),
        script=script if script is not None else colocation_script(),
        registry=demo_registry(),
        storage=StorageModel(
            replication_delay_ms=replication_delay_ms,
            backoff_initial_ms=1000,
            backoff_factor=2.0,
            backoff_max_attempts=8,
        ),
        workload=WorkloadSpec(
            runs=runs,
            divides_per_run=divides_per_run,
            imperas_per_divide=2,
            heavy=(
                HeavyFunction("heavy_eu", worker="eu_w3"),
                HeavyFunction("heavy_us", worker="us_w3"),
            ),
        ),
        zone_latency=zone_latencies(),
        gateway_zone=EU,
        service_times_ms={"divide": 150, "impera": 300},
        seed=seed,
        heavy_slowdown=3.0,
    )


def placement_probability_config(
    seed: int = 0,
    divides: int = 20000,
    script: AappScript | None = None,
) -> SimConfig:
    """Placement-statistics setup: zeroed service times, no replication lag."""
    cfg = experiment_config(
        seed=seed, runs=1, divides_per_run=divides, script=script,
        replication_delay_ms=0,
    )
    cfg.service_times_ms = {}
    return cfg
