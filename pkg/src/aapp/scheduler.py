"""Worker selection over a cluster snapshot, driven by an aAPP script.

A decision iterates the tag's blocks in order (appending the default
policy's blocks unless followup is 'fail'), filters each block's workers
through the validity predicate, and picks the first valid worker
(best_first) or a uniformly random one (any).  The caller must serialize
decision -> record_allocation sequences; scheduling itself is a pure
function of its snapshot.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .cluster import ClusterConfig, ClusterSnapshot, Registry, UnknownFunction
from .dsl import ANY, DEFAULT_TAG, FAIL, AappScript, Block


class SchedulingError(Exception):
    pass


class UnknownTag(SchedulingError):
    """The function's tag has no policy and no default policy exists."""


class NotSchedulable(SchedulingError):
    """No block produced a valid worker for this request."""

    def __init__(self, function: str, reasons: list[dict]):
        super().__init__(f"function {function!r} is not schedulable")
        self.function = function
        #: Per-block rejection reasons: [{"block": i, "rejected": {worker: why}}]
        self.reasons = reasons


@dataclass
class ScheduleDecision:
    worker: str
    #: 1-based, tag-relative; default-tag blocks are numbered after own blocks.
    block_index: int
    #: Count of (worker, block) validity evaluations performed.
    considered: int


def _candidate_blocks(
    script: AappScript, tag: str, function: str
) -> tuple[Block, ...]:
    policy = script.policy(tag)
    default_policy = script.policy(DEFAULT_TAG)
    if policy is None:
        if default_policy is None:
            raise UnknownTag(
                f"function {function!r} has tag {tag!r}, which has no policy, "
                "and no default policy exists"
            )
        return default_policy.blocks
    blocks = policy.blocks
    # Any non-fail followup appends the default blocks, exactly once.
    if (
        policy.followup != FAIL
        and default_policy is not None
        and policy.tag != DEFAULT_TAG
    ):
        blocks = blocks + default_policy.blocks
    return blocks


def valid(
    function: str,
    worker: str,
    snapshot: ClusterSnapshot,
    registry: Registry,
    config: ClusterConfig,
    block: Block,
) -> bool:
    """The six-clause validity predicate for one (function, worker, block)."""
    return _reject_reason(function, worker, snapshot, registry, config, block) is None


def _reject_reason(
    function: str,
    worker: str,
    snapshot: ClusterSnapshot,
    registry: Registry,
    config: ClusterConfig,
    block: Block,
) -> str | None:
    meta = registry[function]
    if worker not in config or worker not in snapshot:
        return "unknown-worker"
    used = snapshot.memory_used[worker]
    max_memory = snapshot.max_memory[worker]
    if used + meta.memory_mb > max_memory:
        return "memory"
    threshold = block.capacity_threshold()
    # Threshold is a percentage of max_memory; occupancy >= threshold
    # invalidates (the boundary itself is invalid).
    if threshold is not None and 100 * used >= threshold * max_memory:
        return "capacity_used"
    limit = block.concurrency_limit()
    if limit is not None and snapshot.counts[worker] >= limit:
        return "max_concurrent_invocations"
    tags = snapshot.tags[worker]
    for c in block.affinity:
        if c.anti:
            if c.tag in tags:
                return f"anti-affinity:{c.tag}"
        elif c.tag not in tags:
            return f"affinity:{c.tag}"
    return None


def schedule(
    function: str,
    snapshot: ClusterSnapshot,
    script: AappScript,
    registry: Registry,
    config: ClusterConfig,
    rng: random.Random | None = None,
) -> ScheduleDecision:
    """Pick a worker for one invocation of ``function``.

    Raises UnknownFunction, UnknownTag, or NotSchedulable.  ``rng`` feeds the
    'any' strategy; pass a seeded random.Random for reproducible choices.
    """
    meta = registry[function]
    blocks = _candidate_blocks(script, meta.tag, function)

    all_workers = config.worker_ids
    mem = snapshot.memory_used
    mx = snapshot.max_memory
    counts = snapshot.counts
    tag_sets = snapshot.tags
    need = meta.memory_mb
    considered = 0

    for block_index, block in enumerate(blocks, 1):
        workers = all_workers if block.workers is None else block.workers
        threshold = block.capacity_threshold()
        limit = block.concurrency_limit()
        affine = tuple(c.tag for c in block.affinity if not c.anti)
        anti = tuple(c.tag for c in block.affinity if c.anti)
        candidates: list[str] = []
        append = candidates.append
        for w in workers:
            considered += 1
            used = mem.get(w)
            if used is None:
                continue
            max_memory = mx[w]
            if used + need > max_memory:
                continue
            if threshold is not None and 100 * used >= threshold * max_memory:
                continue
            if limit is not None and counts[w] >= limit:
                continue
            if affine or anti:
                tags = tag_sets[w]
                rejected = False
                for t in affine:
                    if t not in tags:
                        rejected = True
                        break
                if rejected:
                    continue
                for t in anti:
                    if t in tags:
                        rejected = True
                        break
                if rejected:
                    continue
            append(w)
        if candidates:
            if block.strategy == ANY:
                chooser = rng if rng is not None else random
                chosen = chooser.choice(candidates)
            else:
                chosen = candidates[0]
            return ScheduleDecision(
                worker=chosen, block_index=block_index, considered=considered
            )
    raise NotSchedulable(
        function, explain_rejection(function, snapshot, script, registry, config)
    )


def explain_rejection(
    function: str,
    snapshot: ClusterSnapshot,
    script: AappScript,
    registry: Registry,
    config: ClusterConfig,
) -> list[dict]:
    """Per-block rejection reasons, as a diagnostic aid for callers."""
    meta = registry[function]
    blocks = _candidate_blocks(script, meta.tag, function)
    report = []
    for block_index, block in enumerate(blocks, 1):
        workers = config.worker_ids if block.workers is None else block.workers
        rejected = {}
        for w in workers:
            reason = _reject_reason(function, w, snapshot, registry, config, block)
            if reason is not None:
                rejected[w] = reason
        report.append(
            {"block": block_index, "strategy": block.strategy, "rejected": rejected}
        )
    return report
