"""End-to-end acceptance suite.

One test per acceptance criterion; each prints a single PASS/FAIL line with
the measured values so the whole gate can be read off the pytest -s output.
"""

import random
import statistics
import threading
import time

import pytest

from aapp.cluster import (
    ActivityState,
    ClusterConfig,
    FunctionMeta,
    Registry,
    WorkerSpec,
)
from aapp.dsl import parse_script, serialize_script
from aapp.presets import (
    EU,
    anti_affinity_script,
    colocation_script,
    experiment_config,
    placement_probability_config,
    unconstrained_script,
)
from aapp.scheduler import NotSchedulable, UnknownTag, schedule, valid
from aapp.service import SchedulerService, replay_decision_log
from aapp.simulator import run_simulation

from .conftest import THREE_TAG_AST, TWO_BLOCK_AST, random_script
from .oracle import oracle_candidates


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


# -- 1: placement probabilities ----------------------------------------------


def test_criterion_1_placement_probabilities():
    eu_fast = {"eu_w1", "eu_w2"}

    def fast(rec):
        return (
            rec.divide_worker in eu_fast
            and all(w in eu_fast for w in rec.impera_workers)
        )

    started = time.perf_counter()
    results = {}
    for name, script in [
        ("unconstrained", unconstrained_script()),
        ("anti-only", anti_affinity_script()),
        ("colocation", colocation_script()),
    ]:
        cfg = placement_probability_config(seed=0, divides=20000, script=script)
        _, metrics = run_simulation(cfg, collect_events=False)
        results[name] = metrics
    elapsed = time.perf_counter() - started

    p_unconstrained = results["unconstrained"].fraction(fast)
    p_anti = results["anti-only"].fraction(fast)
    coloc = results["colocation"].colocation_fraction
    p_eu = results["colocation"].zone_fraction(EU)

    ok = (
        abs(p_unconstrained - 0.037) <= 0.005
        and abs(p_anti - 0.125) <= 0.008
        and coloc == 1.0
        and abs(p_eu - 0.50) <= 0.012
        and elapsed < 60.0
    )
    _report(
        "criterion-1 placement probabilities",
        ok,
        f"fast(unconstrained)={p_unconstrained:.4f} (0.037±0.005), "
        f"fast(anti-only)={p_anti:.4f} (0.125±0.008), "
        f"colocation={coloc} (=1.0), eu={p_eu:.4f} (0.50±0.012), "
        f"runtime={elapsed:.1f}s (<60s)",
    )


# -- 2: retry elimination ------------------------------------------------------


def test_criterion_2_retry_elimination():
    rows = []
    for seed in range(5):
        retries = {}
        for name, script in [
            ("colocation", colocation_script()),
            ("anti-only", anti_affinity_script()),
            ("unconstrained", unconstrained_script()),
        ]:
            cfg = experiment_config(
                seed=seed, runs=5, divides_per_run=40, script=script
            )
            _, metrics = run_simulation(cfg, collect_events=False)
            retries[name] = metrics.total_retries
        rows.append(retries)
    ok = all(
        r["colocation"] == 0
        and r["colocation"] <= r["anti-only"] <= r["unconstrained"]
        and r["anti-only"] < r["unconstrained"]
        for r in rows
    )
    summary = "; ".join(
        f"seed{i}: aAPP={r['colocation']} anti={r['anti-only']} "
        f"plain={r['unconstrained']}"
        for i, r in enumerate(rows)
    )
    _report("criterion-2 retry elimination", ok, summary)


# -- 3: latency ordering -------------------------------------------------------


def test_criterion_3_latency_ordering():
    ok = True
    details = []
    for seed in range(5):
        stats = {}
        for name, script in [
            ("colocation", colocation_script()),
            ("anti-only", anti_affinity_script()),
            ("unconstrained", unconstrained_script()),
        ]:
            cfg = experiment_config(
                seed=seed, runs=5, divides_per_run=40, script=script
            )
            _, metrics = run_simulation(cfg, collect_events=False)
            stats[name] = (
                metrics.mean_latency,
                metrics.median_latency,
                metrics.p95_latency,
                metrics.colocation_fraction,
            )
        for axis in range(3):
            ordered = (
                stats["colocation"][axis]
                < stats["anti-only"][axis]
                < stats["unconstrained"][axis]
            )
            ok = ok and ordered
        ok = ok and stats["colocation"][3] == 1.0
        details.append(
            f"seed{seed} mean: {stats['colocation'][0]:.0f} < "
            f"{stats['anti-only'][0]:.0f} < {stats['unconstrained'][0]:.0f}"
        )
    _report(
        "criterion-3 latency ordering (mean/median/p95, 5 seeds)",
        ok,
        "; ".join(details),
    )


# -- 4: oracle equivalence -----------------------------------------------------


def _random_instance(rng: random.Random):
    script = random_script(rng)
    tag_pool = sorted({p.tag for p in script.policies} | {"t0", "zz"})
    config = ClusterConfig(
        [
            WorkerSpec(f"w{i}", "z", rng.choice([256, 512, 1024]))
            for i in range(rng.randint(1, 5))
        ]
    )
    functions = [
        FunctionMeta(f"fn{i}", rng.choice([64, 128, 256]), rng.choice(tag_pool))
        for i in range(rng.randint(1, 4))
    ]
    registry = Registry(functions)
    state = ActivityState(config, registry)
    for k in range(rng.randint(0, 10)):
        try:
            state.record_allocation(
                rng.choice(config.worker_ids), f"a{k}",
                rng.choice(functions).name,
            )
        except Exception:
            pass
    return script, config, registry, state, rng.choice(functions).name


def test_criterion_4_oracle_equivalence():
    rng = random.Random(20260823)
    mismatches = 0
    total = 10000
    for _ in range(total):
        script, config, registry, state, function = _random_instance(rng)
        snap = state.snapshot()
        oracle = None
        oracle_unknown = False
        tag = registry[function].tag
        if script.policy(tag) is None and script.policy("default") is None:
            oracle_unknown = True
        else:
            oracle = oracle_candidates(function, snap, script, registry, config)
        try:
            decision = schedule(
                function, snap, script, registry, config, random.Random(0)
            )
        except UnknownTag:
            if not oracle_unknown:
                mismatches += 1
            continue
        except NotSchedulable:
            if oracle_unknown or oracle is not None:
                mismatches += 1
            continue
        if oracle_unknown or oracle is None:
            mismatches += 1
            continue
        index, candidates = oracle
        if decision.block_index != index:
            mismatches += 1
            continue
        from aapp.scheduler import _candidate_blocks

        block = _candidate_blocks(script, tag, function)[index - 1]
        if block.strategy == "best_first":
            if decision.worker != candidates[0]:
                mismatches += 1
        elif decision.worker not in candidates:
            mismatches += 1
    _report(
        "criterion-4 oracle equivalence",
        mismatches == 0,
        f"{total} random instances, {mismatches} mismatches",
    )


# -- 5: constraint soundness ---------------------------------------------------


def test_criterion_5_constraint_soundness():
    rng = random.Random(77)
    script = parse_script(
        "- a:\n  - workers: *\n    strategy: any\n    invalidate:\n"
        "     - capacity_used 85%\n    affinity:\n     - !b\n"
        "- b:\n  - workers: *\n    strategy: any\n    invalidate:\n"
        "     - max_concurrent_invocations 4\n  followup: fail\n"
        "- c:\n  - workers: *\n    strategy: any\n    affinity:\n     - a\n"
    )
    registry = Registry(
        [
            FunctionMeta("fa", 128, "a"),
            FunctionMeta("fb", 256, "b"),
            FunctionMeta("fc", 64, "c"),
        ]
    )
    config = ClusterConfig(
        [WorkerSpec(f"w{i}", "z", rng.choice([512, 1024])) for i in range(4)]
    )
    from aapp.scheduler import _candidate_blocks

    violations = 0
    traces = 0
    ops = 0
    while ops < 10000:
        state = ActivityState(config, registry)
        live = []
        traces += 1
        for k in range(rng.randint(5, 40)):
            ops += 1
            if live and rng.random() < 0.45:
                state.record_completion(live.pop(rng.randrange(len(live))))
            else:
                fn = rng.choice(["fa", "fb", "fc"])
                snap = state.snapshot()
                try:
                    decision = schedule(fn, snap, script, registry, config, rng)
                except (NotSchedulable, UnknownTag):
                    continue
                block = _candidate_blocks(script, registry[fn].tag, fn)[
                    decision.block_index - 1
                ]
                if not valid(fn, decision.worker, snap, registry, config, block):
                    violations += 1
                act = f"t{traces}-a{k}"
                state.record_allocation(decision.worker, act, fn)
                live.append(act)
            try:
                state.check_integrity()
            except AssertionError:
                violations += 1
    _report(
        "criterion-5 constraint soundness",
        violations == 0,
        f"{traces} traces / {ops} operations, {violations} violations",
    )


# -- 6: directional affinity ---------------------------------------------------


def test_criterion_6_directional_affinity():
    script = parse_script(
        "- init:\n  - workers: *\n    affinity:\n     - !query\n     - !init\n"
        "  followup: fail\n"
        "- query:\n  - workers: *\n    affinity:\n     - init\n"
        "  followup: fail\n"
    )
    registry = Registry(
        [FunctionMeta("init", 100, "init"), FunctionMeta("query", 100, "query")]
    )
    config = ClusterConfig([WorkerSpec("w1", "z", 1000)])
    state = ActivityState(config, registry)

    outcomes = []
    outcomes.append(
        schedule("init", state.snapshot(), script, registry, config).worker == "w1"
    )
    try:
        schedule("query", state.snapshot(), script, registry, config)
        outcomes.append(False)
    except NotSchedulable:
        outcomes.append(True)
    state.record_allocation("w1", "init-1", "init")
    outcomes.append(
        schedule("query", state.snapshot(), script, registry, config).worker
        == "w1"
    )
    try:
        schedule("init", state.snapshot(), script, registry, config)
        outcomes.append(False)
    except NotSchedulable:
        outcomes.append(True)
    _report(
        "criterion-6 directional affinity",
        all(outcomes),
        f"four outcomes: {outcomes}",
    )


# -- 7: linear-time scheduling -------------------------------------------------


def test_criterion_7_linear_time():
    script = parse_script(
        "- t:\n  - workers: *\n    invalidate:\n     - capacity_used 90%\n"
        "    affinity:\n     - !u\n"
    )
    registry = Registry(
        [FunctionMeta("f", 64, "t"), FunctionMeta("g", 64, "u")]
    )
    sizes = [10, 100, 1000, 10000]
    means = []
    timings_1000 = []
    for n in sizes:
        config = ClusterConfig([WorkerSpec(f"w{i}", "z", 4096) for i in range(n)])
        state = ActivityState(config, registry)
        rng = random.Random(n)
        for k in range(min(n, 200)):
            state.record_allocation(
                f"w{rng.randrange(n)}", f"a{k}", rng.choice(["f", "g"])
            )
        snap = state.snapshot()
        considered = []
        for rep in range(30):
            t0 = time.perf_counter()
            try:
                decision = schedule(
                    "f", snap, script, registry, config, random.Random(rep)
                )
                considered.append(decision.considered)
            except NotSchedulable:
                considered.append(n)
            if n == 1000:
                timings_1000.append(time.perf_counter() - t0)
        means.append(statistics.fmean(considered))

    # Least-squares fit of mean considered against worker count.
    n_pts = len(sizes)
    sx = sum(sizes)
    sy = sum(means)
    sxx = sum(x * x for x in sizes)
    sxy = sum(x * y for x, y in zip(sizes, means))
    slope = (n_pts * sxy - sx * sy) / (n_pts * sxx - sx * sx)
    intercept = (sy - slope * sx) / n_pts
    ss_res = sum(
        (y - (slope * x + intercept)) ** 2 for x, y in zip(sizes, means)
    )
    ss_tot = sum((y - sy / n_pts) ** 2 for y in means)
    r_squared = 1.0 - ss_res / ss_tot

    median_ms = statistics.median(timings_1000) * 1000.0
    ok = r_squared >= 0.999 and median_ms < 1.0
    _report(
        "criterion-7 linear-time scheduling",
        ok,
        f"considered means {dict(zip(sizes, [round(m, 1) for m in means]))}, "
        f"R²={r_squared:.6f} (>=0.999), median decision at 1000 workers "
        f"{median_ms:.3f}ms (<1ms)",
    )


# -- 8: parser round-trip ------------------------------------------------------


def test_criterion_8_parser_round_trip(two_block_text, three_tag_text):
    rng = random.Random(4242)
    failures = 0
    total = 1000
    for _ in range(total):
        script = random_script(rng)
        if parse_script(serialize_script(script)) != script:
            failures += 1
    asts_ok = (
        parse_script(two_block_text) == TWO_BLOCK_AST
        and parse_script(three_tag_text) == THREE_TAG_AST
    )
    _report(
        "criterion-8 parser round-trip",
        failures == 0 and asts_ok,
        f"{total} random scripts, {failures} round-trip failures, "
        f"reference ASTs {'match' if asts_ok else 'mismatch'}",
    )


# -- 9: service serializability ------------------------------------------------


def test_criterion_9_service_serializability():
    script = parse_script(
        "- d:\n  - workers: *\n    strategy: any\n    affinity:\n     - !h\n"
        "- i:\n  - workers: *\n    strategy: any\n    affinity:\n     - d\n"
        "  followup: fail\n"
        "- h:\n  - workers: *\n    invalidate:\n"
        "     - max_concurrent_invocations 2\n  followup: fail\n"
    )
    registry = Registry(
        [
            FunctionMeta("divide", 256, "d"),
            FunctionMeta("impera", 256, "i"),
            FunctionMeta("heavy", 512, "h"),
        ]
    )
    config = ClusterConfig(
        [
            WorkerSpec("w1", "z1", 2048),
            WorkerSpec("w2", "z1", 2048),
            WorkerSpec("w3", "z2", 1536),
            WorkerSpec("w4", "z2", 1024),
        ]
    )
    service = SchedulerService(script, registry, config, seed=0)

    requests_done = []
    errors = []

    def client(tid: int):
        rng = random.Random(tid)
        live = []
        count = 0
        for k in range(700):
            act = f"c{tid}-{k}"
            status, _ = service.handle_schedule(
                rng.choice(["divide", "impera", "heavy"]), act
            )
            count += 1
            if status == 200:
                live.append(act)
            elif status != 409:
                errors.append(status)
            if live and rng.random() < 0.55:
                status, _ = service.handle_complete(
                    live.pop(rng.randrange(len(live)))
                )
                count += 1
                if status != 200:
                    errors.append(status)
        requests_done.append(count)

    threads = [threading.Thread(target=client, args=(t,)) for t in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    total_requests = sum(requests_done)
    replay_ok = True
    try:
        replayed = replay_decision_log(
            service.decision_log, script, registry, config
        )
        replay_ok = replayed == service.state
    except AssertionError:
        replay_ok = False

    ok = total_requests >= 5000 and not errors and replay_ok
    _report(
        "criterion-9 service serializability",
        ok,
        f"{total_requests} interleaved requests, "
        f"{len(errors)} unexpected statuses, replay "
        f"{'matches final state' if replay_ok else 'DIVERGED'}",
    )
