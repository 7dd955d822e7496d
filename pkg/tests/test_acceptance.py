"""Acceptance criteria, one test per criterion.

Each test attaches a short ``detail`` string; the conftest summary hook
prints one PASS/FAIL line per criterion at the end of the session.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from npg_search import cli
from npg_search.algorithms import AdcConfig, run_adc
from npg_search.metrics import NormalizationSpec, dominated_area_2d, hypervolume
from npg_search.objectives import ObjectiveSpec, extract_pareto_front
from npg_search.policy import PolicyParams, grad_log_prob, log_prob
from npg_search.rewards import AdcSpec, DesirabilitySpec, adc_reward, desirability
from npg_search.objectives import ParetoArchive
from npg_search.schedule import ADC_SCHEDULE, ADF_SCHEDULE, target_at, temperature_at, zigzag_traversal
from npg_search.search_space import Evaluator, make_benchmark

ROOT = Path(__file__).parent.parent
CONFIGS = ROOT / "configs"
FIXTURE = Path(__file__).parent / "fixtures" / "seed0_L8_K4"
SEEDS = [0, 1, 2, 3, 4]
ORACLE_FRACTION = 0.90
DECILE_FLOOR = 0.02


def oracle_area() -> float:
    return json.loads((FIXTURE / "oracle_metrics.json").read_text())["dominated_area"]


def run_shipped(name: str, seeds, block_update: dict | None = None):
    raw = cli.load_config(CONFIGS / name)
    if block_update:
        raw[raw["algorithm"]] = {**raw[raw["algorithm"]], **block_update}
    cfg = cli.parse_config(raw, CONFIGS, {"seeds": list(seeds)})
    return [cli.execute(cfg, s) for s in seeds]


def area(record) -> float:
    return dominated_area_2d(record.final_front, NormalizationSpec.from_spec(record.spec))


@pytest.fixture(scope="module")
def benchmark_runs():
    t0 = time.perf_counter()
    runs = {name: run_shipped(f"{name}.toml", SEEDS) for name in ("adf", "adc", "rs")}
    return runs, time.perf_counter() - t0


def test_criterion_01_gradient_matches_finite_differences(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        arities = tuple(int(k) for k in rng.integers(2, 6, size=int(rng.integers(1, 6))))
        p = PolicyParams.uniform(arities)
        p.logits = np.where(p.mask, rng.normal(0.0, 3.0, p.logits.shape), 0.0)
        T = float(rng.uniform(1.0, 25.0))
        e = tuple(int(rng.integers(0, k)) for k in arities)
        numeric = np.zeros_like(p.logits)
        for t, k in enumerate(arities):
            for j in range(k):
                up, dn = p.copy(), p.copy()
                up.logits[t, j] += h
                dn.logits[t, j] -= h
                numeric[t, j] = (log_prob(up, e, T) - log_prob(dn, e, T)) / (2 * h)
        analytic = grad_log_prob(p, e, T)
        rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max relative error {worst:.2e} (limit 1e-6), {elapsed:.1f}s")
    assert worst <= 1e-6
    assert elapsed < 5


def test_criterion_02_adc_archive_equals_prefix_front(record_property):
    t0 = time.perf_counter()
    mismatches = 0
    checks = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        L = int(rng.integers(2, 6))
        space = make_benchmark(1000 + seed, L=L, arities=[int(k) for k in rng.integers(2, 5, size=L)])
        ev = Evaluator.calibrated(space)
        points: list = []

        def check(step, archive, samples):
            nonlocal mismatches, checks
            points.append((samples[-1].encoding, samples[-1].objectives))
            checks += 1
            if archive != extract_pareto_front(points, archive.spec):
                mismatches += 1

        run_adc(space, ev, None, AdcConfig(n_steps=500), rng, on_step=check)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{checks} steps checked, {mismatches} mismatches, {elapsed:.1f}s")
    assert checks == 50 * 500 and mismatches == 0
    assert elapsed < 30


def all_pairs_front(points: np.ndarray, signs: np.ndarray) -> set[int]:
    s = points * signs
    ge = np.all(s[None, :, :] >= s[:, None, :], axis=2)
    gt = np.any(s[None, :, :] > s[:, None, :], axis=2)
    dominated = (ge & gt).any(axis=1)
    return set(np.flatnonzero(~dominated).tolist())


def test_criterion_03_front_extraction_vs_all_pairs(record_property):
    t0 = time.perf_counter()
    disagreements = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        m = 2 if seed % 2 == 0 else 3
        spec = ObjectiveSpec(("max", "min", "min")[:m], ("q", "p", "f")[:m], ((0, 1),) * m)
        pts = rng.random((1000, m))
        if seed % 4 < 2:
            pts = np.round(pts * 50) / 50  # force ties
        front = extract_pareto_front([((i,), p) for i, p in enumerate(pts)], spec)
        if {e[0] for e, _ in front} != all_pairs_front(pts, spec.signs):
            disagreements += 1
    elapsed = time.perf_counter() - t0
    record_property("detail", f"20 clouds of 1000 points, {disagreements} disagreements, {elapsed:.1f}s")
    assert disagreements == 0
    assert elapsed < 5


def test_criterion_04_schedule_exactness(record_property):
    worst = 0.0
    for s in (ADF_SCHEDULE, ADC_SCHEDULE):
        nu = s.nu
        for step in (0, nu // 2, nu, nu + 1, 7 * (nu + 1)):
            phase = step % (nu + 1)
            expected = s.t_min + (s.t_max - s.t_min) / 2 * (1 + math.cos(math.pi * phase / nu))
            worst = max(worst, abs(temperature_at(s, step) - expected))
    hits = all(target_at(0.1, 2.0, n, n) == 2.0 for n in (1, 7, 6000, 11990))
    record_property("detail", f"max temperature error {worst:.1e}, target endpoint exact={hits}")
    assert worst <= 1e-12 and hits
    assert temperature_at(ADF_SCHEDULE, 0) == 10.0 and temperature_at(ADF_SCHEDULE, 50) == 5.0
    assert temperature_at(ADC_SCHEDULE, 1200) == 1.0 and temperature_at(ADC_SCHEDULE, 1201) == 25.0


def test_criterion_05_reward_closed_forms(record_property):
    d = DesirabilitySpec(1.05, 0.95)
    shape_ok = desirability(1.05, d) == 1.0 and desirability(0.1, d) == 0.0 and desirability(2.0, d) == 0.0
    mid = desirability(1.525, d)
    unit = ObjectiveSpec(("max", "min"), ("q", "p"), ((0, 1), (0, 1)))
    four = ParetoArchive(unit, [((0,), (0.5, 0.5)), ((1,), (0.4, 0.4)), ((2,), (0.9, 0.95)), ((3,), (0.2, 0.1))])
    pos = adc_reward((0.6, 0.35), four, AdcSpec((0.01, 0.01), c=10))
    three = ParetoArchive(unit, [((0,), (0.5, 0.5)), ((1,), (0.6, 0.6)), ((2,), (0.7, 0.7))])
    neg = adc_reward((0.41, 0.8), three, AdcSpec((0.3, 0.15), c=10))
    record_property("detail", f"midpoint {mid!r}, tanh(0.6)->{pos:.6f}, -tanh(0.4)->{neg:.6f}")
    assert shape_ok
    assert mid == pytest.approx(0.5, abs=1e-15)
    assert abs(pos - 0.537050) <= 1e-6
    assert abs(neg + 0.379949) <= 1e-6


def test_criterion_06_metric_exactness(record_property):
    t0 = time.perf_counter()
    unit = NormalizationSpec(((0, 1), (0, 1)), ("max", "min"))
    rects = [
        dominated_area_2d(np.array([(1.0, 0.0)]), unit),
        dominated_area_2d(np.array([(0.5, 0.5)]), unit),
        dominated_area_2d(np.array([(0.4, 0.2), (0.9, 0.6)]), unit),
    ]
    spec = ObjectiveSpec(("max",) * 3, ("a", "b", "c"), ((0, 1),) * 3)
    norm = NormalizationSpec.from_spec(spec)
    rng = np.random.default_rng(6)
    worst_z = 0.0
    for _ in range(10):
        cloud = rng.random((60, 3))
        front = extract_pareto_front([((i,), p) for i, p in enumerate(cloud)], spec).values
        hits = 0
        n, chunk = 1_000_000, 250_000
        for _ in range(n // chunk):
            u = rng.random((chunk, 3))
            covered = np.zeros(chunk, dtype=bool)
            for p in front:
                covered |= np.all(u <= p, axis=1)
            hits += int(covered.sum())
        p_hat = hits / n
        se = math.sqrt(p_hat * (1 - p_hat) / n)
        worst_z = max(worst_z, abs(hypervolume(front, norm) - p_hat) / se)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"rectangles {rects}, worst Monte-Carlo z {worst_z:.2f} (limit 3), {elapsed:.1f}s")
    assert rects[0] == 1.0 and rects[1] == 0.25 and rects[2] == pytest.approx(0.52, abs=1e-15)
    assert worst_z <= 3
    assert elapsed < 60


def test_criterion_07_area_ordering(benchmark_runs, record_property):
    runs, elapsed = benchmark_runs
    oracle = oracle_area()
    means = {k: statistics.fmean(area(r) for r in v) for k, v in runs.items()}
    ratio = {k: v / oracle for k, v in means.items()}
    record_property(
        "detail",
        "area/oracle " + ", ".join(f"{k}={ratio[k]:.4f}" for k in ("adf", "adc", "rs")) + f", {elapsed:.1f}s",
    )
    assert means["adf"] >= means["rs"]
    assert means["adc"] >= means["rs"]
    assert ratio["adf"] >= ORACLE_FRACTION and ratio["adc"] >= ORACLE_FRACTION
    assert all(area(r) <= oracle + 1e-12 for v in runs.values() for r in v)
    assert elapsed < 180


def test_criterion_08_cosine_schedule_reduces_spread(record_property):
    t0 = time.perf_counter()
    fixed = {"schedule": {"t_min": 5.0, "t_max": 5.0, "nu": 1}}
    outcomes = []
    parts = []
    for block in (range(0, 5), range(5, 10), range(10, 15)):
        sd_cos = statistics.stdev(area(r) for r in run_shipped("adc.toml", block))
        sd_fix = statistics.stdev(area(r) for r in run_shipped("adc.toml", block, fixed))
        outcomes.append(sd_cos <= sd_fix)
        parts.append(f"{sd_cos:.4f}<={sd_fix:.4f}")
        if sum(outcomes) >= 2 or len(outcomes) - sum(outcomes) >= 2:
            break
    elapsed = time.perf_counter() - t0
    record_property("detail", f"SD cosine vs fixed: {', '.join(parts)} ({sum(outcomes)}/{len(outcomes)}), {elapsed:.1f}s")
    assert sum(outcomes) >= 2
    assert elapsed < 360


def test_criterion_09_adf_cost_deciles(benchmark_runs, record_property):
    runs, _ = benchmark_runs
    lo, hi = runs["adf"][0].spec.ranges[1]
    fractions = []
    for r in runs["adf"]:
        cost = np.array([s.objectives[1] for s in r.samples if s.phase == "anneal"])
        assert len(cost) == len(r.samples) == 6000
        idx = np.clip(np.floor((cost - lo) / (hi - lo) * 10).astype(int), 0, 9)
        fractions.append(np.bincount(idx, minlength=10).min() / len(cost))
    record_property("detail", "min decile share per seed " + ", ".join(f"{f:.3f}" for f in fractions))
    assert min(fractions) >= DECILE_FLOOR


def test_criterion_10_cli_outputs_byte_identical(tmp_path, record_property):
    names = ("samples.csv", "front.json", "metrics.json")
    identical = []
    for algo in ("adf", "adc", "rs", "mdf"):
        outs = []
        for rep in range(2):
            out = tmp_path / f"{algo}{rep}"
            code = cli.main(["run", "--config", str(CONFIGS / f"{algo}.toml"), "--seed", "3", "--out", str(out)])
            assert code == 0
            outs.append([(out / algo / "3" / n).read_bytes() for n in names])
        identical.append(outs[0] == outs[1])
    record_property("detail", f"adf/adc/rs/mdf identical: {identical}")
    assert all(identical)


def test_criterion_11_zigzag_locality(record_property):
    bad = 0
    for rows in range(1, 21):
        for cols in range(1, 21):
            order = zigzag_traversal(rows, cols)
            ok = len(order) == rows * cols and set(order) == {(i, j) for i in range(rows) for j in range(cols)}
            ok = ok and all(max(abs(a[0] - b[0]), abs(a[1] - b[1])) <= 1 for a, b in zip(order, order[1:]))
            bad += not ok
    big = zigzag_traversal(110, 109)
    big_ok = len(big) == len(set(big)) == 11990 and all(
        max(abs(a[0] - b[0]), abs(a[1] - b[1])) <= 1 for a, b in zip(big, big[1:])
    )
    record_property("detail", f"400 grids, {bad} failures; 110x109 -> {len(big)} points, locality {big_ok}")
    assert bad == 0 and big_ok
