"""End-to-end acceptance checks; each test records one PASS/FAIL line."""

import math
import subprocess
import sys
import time

import mpmath
import numpy as np
import pytest

from anchorfim.config import RunConfig
from anchorfim.derivs import GAIN_BLOCKS, ParamBlock, jacobian_stack
from anchorfim.fisher import assemble_fim, crb, efim, fim_spectrum, identifiability
from anchorfim.harness import (
    TABLE_ROWS,
    CaseId,
    appendix_check,
    build_scenario,
    build_table,
    derivative_errors,
    run_case,
    scenario_fim,
    sweep_nu,
)
from anchorfim.signal import Regime
from helpers import random_config, record
from test_harness import COLUMNS, TABLE_1

P = ParamBlock
REFERENCE = RunConfig()


def full_rank_cases():
    """(FIM, interest blocks) for every positive definite EFIM met in criteria 1 to 3."""
    settings = [(regime, "dft") for regime in Regime] + [(regime, "identity") for regime in Regime]
    for regime, plan in settings:
        scenario = build_scenario(REFERENCE, regime=regime, plan=plan)
        for _, unknown in TABLE_ROWS:
            fim = scenario_fim(scenario, tuple(unknown) + GAIN_BLOCKS)
            interests = [list(unknown)] + ([[b] for b in unknown] if len(unknown) > 1 else [])
            for interest in interests:
                if identifiability(efim(fim, interest)).positive_definite:
                    yield f"{regime.value}/{plan}/{'+'.join(b.value for b in interest)}", fim, interest
        fim = scenario_fim(scenario, CaseId.II.unknown_blocks)
        if identifiability(efim(fim, CaseId.II.location_blocks)).positive_definite:
            yield f"{regime.value}/{plan}/case II", fim, list(CaseId.II.location_blocks)


def test_criterion_1_table():
    start = time.perf_counter()
    rows = build_table(REFERENCE, compare_identity=False)
    elapsed = time.perf_counter() - start
    got = {(r.label, r.regime): tuple(r.verdicts[c] for c in COLUMNS) for r in rows}
    mismatches = [key for key in TABLE_1 if got.get(key) != TABLE_1[key]]
    passed = not mismatches and len(rows) == 14 and elapsed < 60
    record(1, passed, f"{14 - len(mismatches)}/14 rows match, {elapsed:.2f} s")
    assert passed, mismatches


def test_criterion_2_source_orientation_without_beamforming():
    start = time.perf_counter()
    ident = appendix_check(REFERENCE.updated(regime="far", plan="identity"))
    beamformed = appendix_check(REFERENCE.updated(regime="far"))
    elapsed = time.perf_counter() - start
    passed = ident.passed and beamformed.rank == 2 and elapsed < 30
    record(2, passed, f"ratio {ident.ratio:.2e} <= 1e-8, DFT rank {beamformed.rank}, {elapsed:.2f} s")
    assert passed


def test_criterion_3_near_field_identity_plan():
    rep = run_case(REFERENCE, case=CaseId.II, regime=Regime.NEAR, plan="identity")
    passed = rep.efim.matrix.shape == (6, 6) and rep.ident.rank == 6 and rep.ident.positive_definite
    record(3, passed, f"EFIM rank {rep.ident.rank} of 6")
    assert passed


def test_criterion_4_derivatives():
    worst, where = 0.0, ""
    configs = [("reference", REFERENCE)]
    configs += [(f"seed {s}", random_config(np.random.default_rng(s))) for s in range(20)]
    for name, cfg in configs:
        for regime in Regime:
            errs = derivative_errors(build_scenario(cfg, regime=regime))
            for blk, err in errs.items():
                if not err <= worst:
                    worst, where = err, f"{name}/{regime.value}/{blk.value}"
    passed = worst < 1e-6
    record(4, passed, f"worst relative error {worst:.2e} at {where}, 21 scenarios x 2 regimes x 6 blocks")
    assert passed


def test_criterion_5_schur_identity():
    worst, count = 0.0, 0
    for _, fim, interest in full_rank_cases():
        with mpmath.workdps(40):
            full_inv = np.array((mpmath.matrix(fim.matrix.tolist()) ** -1).tolist(), dtype=float)
        idx = fim.indices([b for b in fim.blocks if b in interest])
        expected = full_inv[np.ix_(idx, idx)]
        got = crb(efim(fim, interest))
        worst = max(worst, float(np.linalg.norm(got - expected) / np.linalg.norm(expected)))
        count += 1
    passed = count > 0 and worst < 1e-10
    record(5, passed, f"{count} full-rank cases, worst relative error {worst:.2e}")
    assert passed


def test_criterion_6_fim_structure():
    failures = []
    all_blocks = tuple(ParamBlock)
    for regime in Regime:
        for plan in ("dft", "identity"):
            stack = jacobian_stack(build_scenario(REFERENCE, regime=regime, plan=plan), all_blocks)
            m = assemble_fim(stack, REFERENCE.snr_linear).matrix
            tag = f"{regime.value}/{plan}"
            scale = np.max(np.abs(m))
            if np.max(np.abs(m - m.T)) > 1e-10 * scale:
                failures.append(f"{tag} symmetry")
            w = np.linalg.eigvalsh(m)
            if w[0] < -1e-10 * w[-1]:
                failures.append(f"{tag} psd")
            m3 = assemble_fim(stack, 3.0 * REFERENCE.snr_linear).matrix
            if np.max(np.abs(m3 - 3.0 * m)) > 1e-12 * 3.0 * scale:
                failures.append(f"{tag} snr scaling")
            prev = None
            for t in range(1, stack.shape[0] + 1):
                ev = fim_spectrum(stack[:t], REFERENCE.snr_linear)
                if prev is not None and np.any(ev < prev - 1e-12):
                    failures.append(f"{tag} monotonicity at T={t}")
                    break
                prev = ev
    passed = not failures
    record(6, passed, "symmetry, PSD, SNR scaling, monotonicity in T" if passed else ", ".join(failures))
    assert passed, failures


def test_criterion_7_sweep_trends():
    records = sweep_nu(REFERENCE)
    problems = []
    for regime in ("near", "far"):
        sel = [r for r in records if r.regime == regime]
        for a, b in zip(sel, sel[1:]):
            if b.peb_m > a.peb_m or b.oeb_rad > a.oeb_rad:
                problems.append(f"{regime} increases at N_U={b.n_u}")
    near = {r.n_u: r.oeb_rad for r in records if r.regime == "near"}
    far = {r.n_u: r.oeb_rad for r in records if r.regime == "far"}
    problems += [f"OEB ordering at N_U={n}" for n in near if not near[n] < far[n]]
    passed = not problems and all(math.isfinite(v) for v in near.values())
    detail = f"near OEB {near[min(near)]:.3g} -> {near[max(near)]:.3g} rad, far-model OEB unbounded"
    record(7, passed, detail if passed else "; ".join(problems))
    assert passed, problems


@pytest.mark.slow
def test_criterion_8_cli_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# reference link\n", encoding="utf-8")
    commands = {
        "table": ["table", "--config", str(cfg), "--out", "{out}"],
        "sweep": ["sweep", "--config", str(cfg), "--out", "{out}"],
        "verify": ["verify", "--config", str(cfg)],
        "appendix": ["appendix", "--config", str(cfg)],
        "info": ["info", "--config", str(cfg)],
    }
    differing = []
    for name, argv in commands.items():
        outputs = []
        for run in range(2):
            out = tmp_path / f"{name}{run}.out"
            args = [a.replace("{out}", str(out)) for a in argv]
            proc = subprocess.run([sys.executable, "-m", "anchorfim", *args], capture_output=True)
            assert proc.returncode == 0, proc.stderr
            outputs.append(proc.stdout + (out.read_bytes() if out.exists() else b""))
        if outputs[0] != outputs[1]:
            differing.append(name)
    passed = not differing
    record(8, passed, f"{len(commands)} commands byte-identical across runs" if passed else ", ".join(differing))
    assert passed, differing
