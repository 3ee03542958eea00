"""Acceptance gate.

Every criterion of the build contract runs here at its stated size and
tolerance and prints one PASS/FAIL line; run them verbosely with

    pytest tests/test_acceptance.py -v -s

The exactness grid (criteria 1 and 2) is computed once and shared.
"""

import math

import numpy as np
import pytest

from helpers import decisions_batch, randmat, random_angles
from mpskmax import arrangement, core, sims, solver

GRID_M = (2, 4, 8)
GRID_D = (1, 2, 3)
GRID_TRIALS = 200
WORKERS = 2


def _report(num, name, ok, detail):
    print(f"\ncriterion {num} ({name}): {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


@pytest.fixture(scope="module")
def exactness_grid():
    """Solve-vs-oracle agreement and candidate-count exactness over the
    full (M, D, N) grid, 200 random circular-Gaussian instances per cell."""
    rng = np.random.default_rng(20260811)
    cells = {}
    for m in GRID_M:
        for d in GRID_D:
            for n in range(max(d, 2), 9):
                agree = card_ok = 0
                logs = []
                for t in range(GRID_TRIALS):
                    V = randmat(rng, n, d)
                    res = solver.solve(V, m, workers=WORKERS)
                    ref = solver.exhaustive_oracle(V, m)
                    if math.isclose(res.value, ref.value,
                                    rel_tol=1e-9, abs_tol=1e-15):
                        agree += 1
                    expected = arrangement.cardinality_formula(n, d, m)
                    if res.candidates_examined == expected:
                        card_ok += 1
                    else:
                        logs.append((m, d, n, t, res.candidates_examined,
                                     expected))
                cells[(m, d, n)] = (agree, card_ok, GRID_TRIALS, logs)
    return cells


def test_criterion_1_oracle_equivalence(exactness_grid):
    bad = {cell: (agree, total)
           for cell, (agree, _, total, _) in exactness_grid.items()
           if agree != total}
    total = sum(t for _, _, t, _ in exactness_grid.values())
    _report(1, "oracle equivalence", not bad,
            f"solve == exhaustive oracle on {total}/{total} instances"
            if not bad else f"disagreements in cells {bad}")


def test_criterion_2_cardinality_exactness(exactness_grid):
    failures = {}
    mismatch_logs = []
    for cell, (_, card_ok, total, logs) in exactness_grid.items():
        mismatch_logs.extend(logs)
        if card_ok < math.ceil(0.99 * total):
            failures[cell] = card_ok
    for log in mismatch_logs:
        print(f"  cardinality mismatch logged: M={log[0]} D={log[1]} "
              f"N={log[2]} trial={log[3]}: got {log[4]}, formula {log[5]}")
    total_ok = sum(c for _, c, _, _ in exactness_grid.values())
    total = sum(t for _, _, t, _ in exactness_grid.values())
    _report(2, "cardinality exactness", not failures,
            f"|S(V)| == formula on {total_ok}/{total} instances "
            f"({len(mismatch_logs)} degenerate draws logged)"
            if not failures else f"cells below 99%: {failures}")


def test_criterion_3_named_counts():
    checks = [
        arrangement.cardinality_formula(16, 2, 8) == 9696,
        arrangement.cardinality_formula(20, 2, 8) == 19400,
    ]
    checks += [arrangement.cardinality_formula(n, 1, m) == n
               for n in (2, 5, 9, 33) for m in (2, 4, 8, 16)]
    for n, m in [(2, 2), (2, 4), (3, 2), (3, 4)]:
        direct = arrangement.cardinality_formula(n, n, m)
        # independent binomial-identity evaluation in exact integers
        half = m // 2
        identity = sum(math.comb(n, i) * (half - 1) ** i
                       * (half + 1) ** (n - i) for i in range(n + 1)) // m
        checks.append(direct == m ** (n - 1) == identity)
    _report(3, "named counts", all(checks),
            "9696 / 19400 / N / M^(N-1) all reproduced exactly")


def test_criterion_4_sampling_containment():
    rng = np.random.default_rng(4)
    n, d = 6, 2
    samples = checked = 0
    for m in (4, 8):
        for _ in range(10):
            V = randmat(rng, n, d)
            members = arrangement.enumerate_candidates(V, m, workers=WORKERS)
            exps, tie_free = decisions_batch(
                V, random_angles(rng, 10_000, d, m), m)
            for e in exps[tie_free]:
                samples += 1
                if core.canonicalize(e, m) in members:
                    checked += 1
    _report(4, "sampling containment", checked == samples,
            f"{checked}/{samples} tie-free decision samples found in S(V)")


def _prop2_suite(n, d, m, count, rng):
    V = randmat(rng, n, d)
    ok = {"i": 0, "ii": 0, "iii": 0, "iv": 0}
    for _ in range(count):
        # (i): the -pi/M face duplicates the +pi/M face up to one rotation
        phi = np.empty(2 * d - 1)
        phi[:-1] = rng.uniform(-math.pi / 2, math.pi / 2, 2 * d - 2)
        phi[-1] = -math.pi / m
        left = core.sequence_decision(V, phi, m)
        target = np.exp(2j * math.pi / m) * core.c_complex(phi)
        phi_hat = core.spherical_coords(core.tilde_from_complex(target),
                                        math.pi / m)
        right = core.sequence_decision(V, phi_hat, m)
        ok["i"] += np.array_equal(left, (right - 1) % m)

        # (ii): second-to-last angle at +pi/2 drops the last column
        phi = random_angles(rng, 1, d, m)[0]
        phi[2 * d - 3] = math.pi / 2
        left = core.sequence_decision(V, phi, m)
        right = core.sequence_decision(V[:, :d - 1], phi[:2 * d - 3], m)
        ok["ii"] += np.array_equal(left, right)

        # (iii): -pi/2 negates the decisions of the mirrored +pi/2 point
        phi = random_angles(rng, 1, d, m)[0]
        phi[2 * d - 3] = -math.pi / 2
        left = core.sequence_decision(V, phi, m)
        mirrored = phi.copy()
        mirrored[:2 * d - 3] = -phi[:2 * d - 3]
        mirrored[2 * d - 3] = math.pi / 2
        mirrored[-1] = rng.uniform(-math.pi / m, math.pi / m)
        right = core.sequence_decision(V, mirrored, m)
        ok["iii"] += np.array_equal(left, (right + m // 2) % m)

        # (iv): with the second-to-last angle at +/- pi/2 the last angle
        # is irrelevant
        phi = random_angles(rng, 1, d, m)[0]
        phi[2 * d - 3] = rng.choice([-math.pi / 2, math.pi / 2])
        other = phi.copy()
        other[-1] = rng.uniform(-math.pi / m, math.pi / m)
        ok["iv"] += np.array_equal(core.sequence_decision(V, phi, m),
                                   core.sequence_decision(V, other, m))
    return ok


def test_criterion_5_decision_function_properties():
    rng = np.random.default_rng(5)
    count = 1000
    results = {}
    for n, d, m in [(5, 2, 8), (4, 3, 4)]:
        results[(n, d, m)] = _prop2_suite(n, d, m, count, rng)
    ok = all(v == count for res in results.values() for v in res.values())
    _report(5, "decision-function identities", ok,
            f"parts (i)-(iv) exact on {count} samples for each of "
            f"{list(results)}" if ok else f"failures: {results}")


def test_criterion_6_geometry_invariants():
    rng = np.random.default_rng(6)
    rank2_ok = 0
    for _ in range(50):
        n = int(rng.integers(3, 8))
        d = int(rng.integers(2, 4))
        V = randmat(rng, n, min(n, d))
        L = arrangement.lift(V, 8)
        good = all(
            np.sum((s := np.linalg.svd(L.data[L.surfaces_of_row(row)],
                                       compute_uv=False)) > 1e-9 * s[0]) == 2
            for row in range(n))
        rank2_ok += good
    resid_ok = resid_total = 0
    for _ in range(20):
        V = randmat(rng, 5, 2)
        L = arrangement.lift(V, 8)
        for combo in arrangement.combination_stream(5, 2, 8):
            phi = arrangement.intersection_point(L, combo)
            if phi is core.REJECTED or phi is core.DEGENERATE:
                continue
            sub = L.data[list(combo)]
            resid_total += 1
            if np.max(np.abs(sub @ core.c_tilde(phi))) <= \
                    1e-9 * np.linalg.norm(sub):
                resid_ok += 1
    ok = rank2_ok == 50 and resid_ok == resid_total
    _report(6, "geometry invariants", ok,
            f"rank-2 common axis on 50/50 instances; residuals within "
            f"1e-9 on {resid_ok}/{resid_total} accepted intersections")


def test_criterion_7_growth_law():
    rng = np.random.default_rng(7)
    sizes = []
    grid = (8, 12, 16, 24, 32)
    for n in grid:
        V = randmat(rng, n, 2)
        cs = arrangement.enumerate_candidates(V, 4, workers=WORKERS)
        sizes.append(len(cs))
    slope = np.polyfit(np.log(grid), np.log(sizes), 1)[0]
    ok = 1.7 <= slope <= 3.3
    _report(7, "growth law", ok,
            f"|S(V)| = {sizes} over N = {list(grid)}; "
            f"log-log slope {slope:.3f} (theory 3)")


def _nonincreasing_within_noise(table, observations):
    rates = table.rates()
    ses = [sims.mc_standard_error(r, observations) for r in rates]
    return all(rates[i + 1] <= rates[i]
               + 3 * math.hypot(ses[i], ses[i + 1])
               for i in range(len(rates) - 1))


def test_criterion_8_simulation_properties(tmp_path):
    grid = [0.0, 5.0, 10.0, 15.0, 20.0]
    cfg = sims.MlsdConfig(n=8, d=2, m=4, snr_db_grid=grid,
                          channel_trials=200, seed=42)
    mlsd, mrc = sims.simulate_mlsd(cfg, workers=WORKERS)
    obs_mlsd = 200 * 7
    obs_mrc = 200 * 8
    a_ok = (_nonincreasing_within_noise(mlsd, obs_mlsd)
            and _nonincreasing_within_noise(mrc, obs_mrc))

    b_ok = True
    for (_, r_mlsd, _, _), (_, r_mrc, _, _) in zip(mlsd.rows, mrc.rows):
        slack = 3 * math.hypot(sims.mc_standard_error(r_mlsd, obs_mlsd),
                               sims.mc_standard_error(r_mrc, obs_mrc))
        b_ok &= r_mrc <= r_mlsd + slack

    beam_rates = []
    for n in (4, 6, 8):
        bcfg = sims.BeamformingConfig(n=n, d=2, m=4, snr_db_grid=[-10.0],
                                      channel_trials=400,
                                      symbols_per_channel=2, seed=7)
        beam_rates.append(sims.simulate_beamforming(
            bcfg, workers=WORKERS).rates()[0])
    obs_beam = 400 * 2
    c_ok = all(beam_rates[i + 1] <= beam_rates[i]
               + 3 * math.hypot(sims.mc_standard_error(beam_rates[i], obs_beam),
                                sims.mc_standard_error(beam_rates[i + 1], obs_beam))
               for i in range(2))

    rerun, _ = sims.simulate_mlsd(cfg, workers=WORKERS)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    mlsd.to_csv(p1)
    rerun.to_csv(p2)
    d_ok = p1.read_bytes() == p2.read_bytes()

    ok = a_ok and b_ok and c_ok and d_ok
    _report(8, "simulation properties", ok,
            f"(a) monotone-in-SNR {a_ok}; (b) MRC<=MLSD {b_ok} "
            f"[MLSD {list(np.round(mlsd.rates(), 4))}, "
            f"MRC {list(np.round(mrc.rates(), 4))}]; "
            f"(c) BER falls with N {c_ok} {beam_rates}; "
            f"(d) byte-identical rerun {d_ok}")


def test_criterion_9_parallel_determinism():
    rng = np.random.default_rng(9)
    mismatches = 0
    for _ in range(50):
        V = randmat(rng, 6, 2)
        base = solver.solve(V, 8, workers=1)
        for w in (2, 8):
            if solver.solve(V, 8, workers=w) != base:
                mismatches += 1
    _report(9, "parallel determinism", mismatches == 0,
            "identical SolveResult for 1/2/8 workers on 50/50 instances"
            if mismatches == 0 else f"{mismatches} worker-dependent results")
