"""Brute-force reference scheduler, written independently of the real one.

Enumerates blocks x workers and applies the six validity clauses directly on
plain data; used to cross-check schedule() on randomized small instances.
Deliberately naive: clarity over speed.
"""

from __future__ import annotations

from aapp.cluster import ClusterConfig, ClusterSnapshot, Registry
from aapp.dsl import AappScript, Block, CapacityUsed, MaxConcurrentInvocations


def oracle_valid(
    function: str,
    worker: str,
    snapshot: ClusterSnapshot,
    registry: Registry,
    config: ClusterConfig,
    block: Block,
) -> bool:
    meta = registry[function]
    if worker not in config:
        return False
    spec = config[worker]
    instances = snapshot.instances[worker]
    used = sum(registry[fn].memory_mb for (_a, fn, _t) in instances)
    if used + meta.memory_mb > spec.max_memory_mb:
        return False
    for rule in block.invalidate:
        if isinstance(rule, CapacityUsed):
            if (used / spec.max_memory_mb) * 100 >= rule.threshold:
                return False
        elif isinstance(rule, MaxConcurrentInvocations):
            if len(instances) >= rule.limit:
                return False
    present = {t for (_a, _fn, t) in instances}
    for constraint in block.affinity:
        if constraint.anti and constraint.tag in present:
            return False
        if not constraint.anti and constraint.tag not in present:
            return False
    return True


def oracle_candidates(
    function: str,
    snapshot: ClusterSnapshot,
    script: AappScript,
    registry: Registry,
    config: ClusterConfig,
) -> tuple[int, list[str]] | None:
    """First block with any valid worker: (1-based index, valid workers).

    Returns None when nothing is schedulable.  Mirrors the documented block
    iteration: the tag's own blocks, then the default policy's blocks unless
    followup is 'fail'; functions whose tag has no policy use only the
    default policy's blocks.
    """
    tag = registry[function].tag
    policy = script.policy(tag)
    default = script.policy("default")
    if policy is None:
        blocks = list(default.blocks) if default is not None else []
    else:
        blocks = list(policy.blocks)
        if policy.followup != "fail" and default is not None and tag != "default":
            blocks.extend(default.blocks)
    for index, block in enumerate(blocks, 1):
        pool = config.worker_ids if block.workers is None else block.workers
        valid_workers = [
            w
            for w in pool
            if oracle_valid(function, w, snapshot, registry, config, block)
        ]
        if valid_workers:
            return index, valid_workers
    return None
