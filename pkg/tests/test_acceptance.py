"""End-to-end acceptance gate.

Each test prints one ``CRITERION n: PASS|FAIL`` line (visible with ``-v``)
before asserting, so a run log doubles as the gate report.
"""

import time

import numpy as np
import pytest
import scipy.linalg

from conftest import random_operator
from oracles import sector_ground_energies
from swrrst import (
    FermionOperator,
    RunConfig,
    Sector,
    SolverOptions,
    build_G,
    check_noncommutation,
    commutator,
    decompose_hamiltonian,
    hamiltonian_from_tensors,
    jw_map,
    locality_report,
    perturbative_B,
    project,
    run_pipeline,
    schedule_number_exponential,
    solve_swrrst,
    split_h0_w,
    to_dense,
    to_number_polynomial,
)
from swrrst.io import write_tensor_text
from swrrst.models import toy_hamiltonian

pytestmark = pytest.mark.acceptance

FULL = SolverOptions(l=4, body_rank=4, bch_rank_cap=None)


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def toy():
    tensors, part = toy_hamiltonian(2, 1, ratio=0.1, seed=0, constant=0.3)
    return hamiltonian_from_tensors(tensors), part


def eig_gap(A, B, n):
    return float(np.abs(np.linalg.eigvalsh(to_dense(A, n)) - np.linalg.eigvalsh(to_dense(B, n))).max())


def test_criterion_1_operator_algebra(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        a, b = random_operator(rng, n, 6), random_operator(rng, n, 6)
        da, db = to_dense(a, n), to_dense(b, n)
        for lhs, rhs in ((a + b, da + db), (a * b, da @ db), (commutator(a, b), da @ db - db @ da),
                         (a.adjoint(), da.conj().T)):
            worst = max(worst, np.abs(to_dense(lhs, n) - rhs).max())
    car = 0.0
    for n in range(1, 7):
        eye = np.eye(1 << n)
        lows = [to_dense(FermionOperator.annihilation(p), n) for p in range(n)]
        for p, ap in enumerate(lows):
            for q, aq in enumerate(lows):
                car = max(car, np.abs(ap @ aq.conj().T + aq.conj().T @ ap - (p == q) * eye).max(),
                          np.abs(ap @ aq + aq @ ap).max())
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and car <= 1e-12 and elapsed < 60
    verdict(capsys, 1, ok, f"homomorphism {worst:.1e}, anticommutation {car:.1e}, {elapsed:.1f}s")


def test_criterion_2_projector_completeness(capsys):
    failures = 0
    count = 0
    for seed in range(50):
        n = 1 + seed % 4
        k = 1 + seed % n
        tensors, part = toy_hamiltonian(n, k, seed=seed, complex_valued=bool(seed % 2))
        H = hamiltonian_from_tensors(tensors)
        parts = decompose_hamiltonian(H, part)
        merged = {}
        for piece in parts:
            if set(piece.terms) & set(merged):
                failures += 1
            merged.update(piece.terms)
        failures += merged != H.terms
        diag = parts.diagonal
        failures += to_number_polynomial(diag, part).to_operator().terms != diag.terms
        count += 1
    verdict(capsys, 2, failures == 0, f"{count} Hamiltonians, {failures} mismatches")


def test_criterion_3_eod_solve(capsys):
    start = time.perf_counter()
    H, part = toy()
    ratio = split_h0_w(H, part).W.norm() / 2.0
    B, report = solve_swrrst(H, part, domain="eod")
    g = build_G(H, B, part)
    err = eig_gap(H, g.G, 4)
    # the same equations with untruncated commutators and generator rank
    Bc, rc = solve_swrrst(H, part, options=FULL)
    gc = build_G(H, Bc, part)
    err_c = eig_gap(H, gc.G, 4)
    elapsed = time.perf_counter() - start
    ok = (abs(ratio - 0.1) < 0.01 and report.final_residual <= 1e-10 and report.iterations <= 100
          and err <= 10 * g.discarded_norm and rc.final_residual <= 1e-10 and err_c <= 1e-8 and elapsed < 10)
    verdict(capsys, 3, ok,
            f"|W|/gap {ratio:.3f}; l=2: {report.iterations} sweeps, residual {report.final_residual:.1e}, "
            f"eig err {err:.1e} vs 10x discarded {10 * g.discarded_norm:.1e}; "
            f"l=4 full rank: eig err {err_c:.1e}; {elapsed:.1f}s")


def test_criterion_4_perturbative_orders(capsys):
    tensors, part = toy_hamiltonian(3, 2, ratio=0.1, seed=3)
    H = hamiltonian_from_tensors(tensors)
    b0, b1, b2 = perturbative_B(H, part, order=2)
    ranks1 = {max(c.bit_count(), a.bit_count()) for c, a in b1.amplitudes}
    rank3 = sum(max(c.bit_count(), a.bit_count()) == 3 for c, a in b2.amplitudes)
    lams = np.geomspace(0.01, 0.1, 5)
    norms = []
    for lam in lams:
        t, p = toy_hamiltonian(2, 1, ratio=lam, seed=0)
        B, _ = solve_swrrst(hamiltonian_from_tensors(t), p)
        norms.append(B.norm())
    slope = float(np.polyfit(np.log(lams), np.log(norms), 1)[0])
    ok = len(b0) == 0 and b0.op.norm() == 0 and max(ranks1) <= 2 and rank3 > 0 and abs(slope - 1) <= 0.05
    verdict(capsys, 4, ok, f"B0 terms {len(b0)}, B1 ranks {sorted(ranks1)}, B2 rank-3 terms {rank3}, "
                           f"slope {slope:.4f}")


@pytest.mark.parametrize("n, k, seed", [(2, 1, 0), (3, 1, 5)])
def test_criterion_5_locality(capsys, n, k, seed):
    tensors, part = toy_hamiltonian(n, k, ratio=0.1, seed=seed)
    H = hamiltonian_from_tensors(tensors)
    B, report = solve_swrrst(H, part)
    G = build_G(H, B, part).G
    rep = locality_report(G, part)
    # independent check of (a): internal strings on the first 2(n-k) qubits only
    internal = jw_map(project(G, Sector.INTERNAL, part), part.n_modes)
    top = max(((s.x | s.z).bit_length() for s, _ in internal), default=0)
    ok = report.converged and rep.ok and top <= 2 * (n - k)
    counts = {name: s["strings"] for name, s in rep.sectors.items()}
    verdict(capsys, 5, ok, f"n={n} k={k}: strings {counts}, violations {rep.violations}, "
                           f"internal support <= qubit {top - 1}")


def test_criterion_6_external_rotation_schedule(capsys):
    tensors, part = toy_hamiltonian(2, 1, ratio=0.1, seed=0, splits=(0.2, 0.5), constant=0.3)
    H = hamiltonian_from_tensors(tensors)
    B, report = solve_swrrst(H, part, domain="od", options=SolverOptions(l=12, body_rank=4, bch_rank_cap=None))
    G = build_G(H, B, part, domain="od").G
    external = project(G, [Sector.DIAGONAL, Sector.ISOENERGETIC, Sector.DISTINCT], part)
    poly = to_number_polynomial(external, part)
    dense = to_dense(external, 4)
    worst = 0.0
    for t in (0.1, 0.5, 1.0, 2.7, 10.0):
        sched = schedule_number_exponential(poly, t, 4)
        worst = max(worst, np.abs(sched.to_dense() - scipy.linalg.expm(-1j * t * dense)).max())
    ok = report.converged and worst <= 1e-12
    verdict(capsys, 6, ok, f"degeneracy-broken H0, {len(poly)} monomials, schedule error {worst:.1e}")


def pipeline_config(tmp_path, **evolution):
    tensors, _ = toy_hamiltonian(2, 1, ratio=0.1, seed=0, splits=(0.2, 0.5), constant=0.3)
    path = tmp_path / "toy.tns"
    path.write_text(write_tensor_text(tensors))
    return RunConfig.from_dict({
        "input": {"path": str(path), "format": "tensor-text"},
        "partition": {"k": 1},
        "solver": {"domain": "od", "l": 12, "body_rank": 4, "bch_rank_cap": None},
        "evolution": {"m": 6, "r": 64, "trotter_r": [8, 16, 32], **evolution},
        "seed": 7,
    })


def test_criterion_7_trotter_qpe(capsys, tmp_path):
    start = time.perf_counter()
    bundle = run_pipeline(pipeline_config(tmp_path), tmp_path / "out")
    M = 2**6
    peak_ok, diffs = True, []
    for ne, entry in bundle.histograms["sectors"].items():
        pe, ps = entry["peaks_exact"], entry["peaks_swrrst"]
        peak_ok &= len(pe) == len(ps) and all(min(abs(a - b), M - abs(a - b)) <= 1 for a, b in zip(pe, ps))
        diffs.append(entry["max_prob_diff"])
    errs = [row["error"] for row in bundle.trotter["rows"]]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    elapsed = time.perf_counter() - start
    ok = peak_ok and max(diffs) <= 1e-3 and all(1.5 <= q <= 2.5 for q in ratios) and elapsed < 120
    verdict(capsys, 7, ok, f"sectors {sorted(bundle.histograms['sectors'])}, peaks match {peak_ok}, "
                           f"max prob diff {max(diffs):.1e}, Trotter ratios {np.round(ratios, 3).tolist()}, "
                           f"{elapsed:.1f}s")


def test_criterion_8_fock_space_universality(capsys):
    H, part = toy()
    B, _ = solve_swrrst(H, part, options=FULL)
    G = build_G(H, B, part).G
    ref = sector_ground_energies(to_dense(H, 4), 4)
    got = sector_ground_energies(to_dense(G, 4), 4)
    errs = {ne: abs(ref[ne] - got[ne]) for ne in (1, 2, 3)}
    verdict(capsys, 8, max(errs.values()) <= 1e-8,
            "n_e 2 and 2+-1: " + ", ".join(f"{ne}: {e:.1e}" for ne, e in errs.items()))


def test_criterion_9_noncommutation(capsys):
    flagged, total = 0, 0
    for n, k, seed in [(2, 1, s) for s in range(6)] + [(3, 1, 11), (3, 2, 3)]:
        tensors, part = toy_hamiltonian(n, k, ratio=0.1, seed=seed)
        H = hamiltonian_from_tensors(tensors)
        if not project(H, Sector.DISTINCT, part):
            continue
        B, _ = solve_swrrst(H, part)
        check = check_noncommutation(H, B, part)
        total += 1
        flagged += bool(check.noncommuting) and check.norm > 1e-8 * H.norm() * B.norm()
    verdict(capsys, 9, total > 0 and flagged == total, f"{flagged}/{total} instances noncommuting")


def test_criterion_10_determinism(capsys, tmp_path):
    cfg = pipeline_config(tmp_path, m=4, shots=1000, trotter_r=[8, 16])
    run_pipeline(cfg, tmp_path / "a")
    run_pipeline(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "bundle.json").read_bytes()
    b = (tmp_path / "b" / "bundle.json").read_bytes()
    verdict(capsys, 10, a == b, f"bundle.json {len(a)} bytes, identical {a == b}")
