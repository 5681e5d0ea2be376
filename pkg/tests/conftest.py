"""Shared fixtures: reference script texts and a random-script generator."""

from __future__ import annotations

import random

import pytest

from aapp.dsl import (
    ANY,
    BEST_FIRST,
    DEFAULT,
    FAIL,
    AappScript,
    AffinityConstraint,
    Block,
    CapacityUsed,
    MaxConcurrentInvocations,
    TagPolicy,
)

# Single-tag script: two blocks, explicit strategy/invalidate/affinity,
# inline comma-separated affinity form, explicit fail followup.
TWO_BLOCK_TEXT = """\
- f_tag:
 - workers:
    - local_w1
    - local_w2
   strategy: best_first
   invalidate:
    - capacity_used 80%
   affinity: g_tag,!h_tag
 - workers:
    - public_w1
  followup: fail
"""

# Three-tag script: universal worker option, list-form affinity,
# omitted strategy and followup.
THREE_TAG_TEXT = """\
- d:
  - workers: *
    affinity:
      - !h
- i:
  - workers: *
    affinity:
      - !h
      - d
- h:
  - workers: *
    affinity:
      - !d
      - !i
"""

TWO_BLOCK_AST = AappScript(
    (
        TagPolicy(
            tag="f_tag",
            blocks=(
                Block(
                    workers=("local_w1", "local_w2"),
                    strategy=BEST_FIRST,
                    invalidate=(CapacityUsed(80),),
                    affinity=(
                        AffinityConstraint("g_tag"),
                        AffinityConstraint("h_tag", anti=True),
                    ),
                ),
                Block(workers=("public_w1",)),
            ),
            followup=FAIL,
        ),
    )
)

THREE_TAG_AST = AappScript(
    (
        TagPolicy(
            tag="d",
            blocks=(Block(workers=None, affinity=(AffinityConstraint("h", anti=True),)),),
        ),
        TagPolicy(
            tag="i",
            blocks=(
                Block(
                    workers=None,
                    affinity=(
                        AffinityConstraint("h", anti=True),
                        AffinityConstraint("d"),
                    ),
                ),
            ),
        ),
        TagPolicy(
            tag="h",
            blocks=(
                Block(
                    workers=None,
                    affinity=(
                        AffinityConstraint("d", anti=True),
                        AffinityConstraint("i", anti=True),
                    ),
                ),
            ),
        ),
    )
)


@pytest.fixture
def two_block_text() -> str:
    return TWO_BLOCK_TEXT


@pytest.fixture
def three_tag_text() -> str:
    return THREE_TAG_TEXT


def random_script(rng: random.Random) -> AappScript:
    """Generate a random valid script AST (for round-trip / oracle tests)."""
    tag_pool = [f"t{i}" for i in range(rng.randint(1, 5))]
    worker_pool = [f"w{i}" for i in range(rng.randint(1, 6))]
    policies = []
    tags = rng.sample(tag_pool, rng.randint(1, len(tag_pool)))
    if rng.random() < 0.2:
        tags.append("default")
    for tag in tags:
        blocks = []
        for _ in range(rng.randint(1, 3)):
            if rng.random() < 0.3:
                workers = None
            else:
                workers = tuple(
                    rng.sample(worker_pool, rng.randint(1, len(worker_pool)))
                )
            invalidate = []
            if rng.random() < 0.4:
                invalidate.append(CapacityUsed(rng.randint(1, 100)))
            if rng.random() < 0.4:
                invalidate.append(MaxConcurrentInvocations(rng.randint(1, 8)))
            rng.shuffle(invalidate)
            affine_pool = rng.sample(tag_pool, rng.randint(0, len(tag_pool)))
            affinity = tuple(
                AffinityConstraint(t, anti=rng.random() < 0.5) for t in affine_pool
            )
            blocks.append(
                Block(
                    workers=workers,
                    strategy=rng.choice([ANY, BEST_FIRST]),
                    invalidate=tuple(invalidate),
                    affinity=affinity,
                )
            )
        policies.append(
            TagPolicy(
                tag=tag,
                blocks=tuple(blocks),
                followup=rng.choice([DEFAULT, FAIL]),
            )
        )
    return AappScript(tuple(policies))
