"""Acceptance criteria, one test (or parametrized group) per criterion.

Each test records a PASS/FAIL line through the `report` fixture; the lines
are repeated in the terminal summary. Criteria that the implementation
cannot meet are left failing rather than relaxed.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qswitch.bloch import OpenSystemSpec, build_system, lindblad_rhs
from qswitch.certificates import (
    FtcsCertificate,
    FtsCertificate,
    eta_bound,
    ftcs_condition,
    fts_check,
    max_error_on_window,
    verify_fts_trajectory,
    verify_ftcs_trajectory,
)
from qswitch.engine import Trigger
from qswitch.errors import NonPhysicalState
from qswitch.lyapunov import (
    ErrorState,
    FeedbackLaw,
    GammaSchedule,
    Mode,
    bangbang_channel,
    fractional_channel,
    vdot,
)
from qswitch.pauli import bloch_to_density, check_density, density_to_bloch
from qswitch.scenarios import PRESETS, decode_matrix, load_preset

from .oracles import SX, SY, SZ, bracket_mp, eta_mp, fts_horizon_mp, replay

PRESET_NAMES = ("amplitude", "dephasing", "polarization")
K1_GOLD = np.array([[0, 0, 0], [0, 0, -2], [0, 2, 0]], dtype=float)
K2_GOLD = np.array([[0, 0, 2], [0, 0, 0], [-2, 0, 0]], dtype=float)
A_GOLD = {
    "amplitude": np.array([[-0.05, -10, 0], [10, -0.05, 0], [0, 0, -0.1]]),
    "dephasing": np.array([[-0.2, -10, 0], [10, -0.2, 0], [0, 0, 0]]),
    "polarization": np.array([[-0.04, -10, 0], [10, -0.04, 0], [0, 0, -0.04]]),
}
G_GOLD = {
    "amplitude": np.array([0, 0, -0.1]),
    "dephasing": np.zeros(3),
    "polarization": np.zeros(3),
}


def _ended(run):
    if run.error is None:
        return f"ran to t = {run.traj.t[-1]:.6g} ({run.summary.reason})"
    return f"stopped at t = {run.traj.t[-1]:.6g} by {type(run.error).__name__}"


# 1 -----------------------------------------------------------------------


def test_c1_model_golden(report):
    t0 = time.perf_counter()
    worst = 0.0
    for name in PRESET_NAMES:
        cfg = load_preset(name)
        m = build_system(cfg.system)
        worst = max(worst,
                    np.abs(m.A - A_GOLD[name]).max(), np.abs(m.g - G_GOLD[name]).max(),
                    np.abs(m.K1 - K1_GOLD).max(), np.abs(m.K2 - K2_GOLD).max())
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    report(1, ok, f"max entry error {worst:.2e} (tol 1e-12), {elapsed * 1e3:.1f} ms")
    assert ok


# 2 -----------------------------------------------------------------------


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_c2_density_matrix_oracle(name, runs, report):
    run = runs(name)
    spec = run.cfg.system
    ref = replay(run.cfg.rho0, spec.H0, spec.controls, [(c.L, c.gamma) for c in spec.channels],
                 run.traj.step_h, run.traj.stage_u)
    err = float(np.abs(ref - run.traj.s).max())
    ok = err <= 1e-6 and run.complete
    report(2, ok, f"{name}: max |s_bloch - s_rho| = {err:.2e} (tol 1e-6); {_ended(run)} "
                  f"of horizon {run.cfg.simulation.T_f}; {run.seconds:.1f} s")
    assert err <= 1e-6
    assert run.complete, f"trajectory does not cover the horizon: {run.error}"


# 3 -----------------------------------------------------------------------


def test_c3_fidelity(runs, report):
    ref_rho = decode_matrix(PRESETS["amplitude"]["meta"]["reference"]["rho_final"], "ref")
    ref_fid = PRESETS["amplitude"]["meta"]["reference"]["fidelity"]
    tried = []
    best = None
    for xi in (1.0, 2.0, 5.0, 0.5):
        run = runs("amplitude", xi=xi)
        fid = run.summary.fidelity if run.error is None else float("nan")
        tried.append(f"xi={xi:g}: F={fid:.5f}")
        if run.error is None and (best is None or fid > best[1]):
            best = (xi, fid, run)
        if fid >= 0.99:
            break
    baseline = runs("amplitude", policy="none").summary.fidelity
    xi, fid, run = best
    delta = run.summary.final_rho - ref_rho
    print(f"final rho (xi = {xi:g}):\n{np.round(run.summary.final_rho, 4)}")
    print(f"reference rho (F = {ref_fid}):\n{ref_rho}")
    print(f"elementwise delta:\n{np.round(delta, 4)}")
    ok = fid >= 0.99 or (fid >= 0.95 and fid - baseline >= 0.05)
    report(3, ok, f"{'; '.join(tried)}; best F = {fid:.5f} at xi = {xi:g} vs reference {ref_fid}; "
                  f"max |rho - rho_ref| = {np.abs(delta).max():.3f}; no-switching baseline F = {baseline:.4f}")
    assert ok


# 4 -----------------------------------------------------------------------


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_c4_descent_standard_family(name, runs, report):
    run = runs(name, family="standard")
    cfg, traj = run.cfg, run.traj
    model, ctrl = cfg.model(), cfg.controller
    P, xi = ctrl.P, ctrl.xi
    worst_rel = 0.0
    for i in range(len(traj)):
        s, mode = traj.s[i], Mode(int(traj.mode[i]))
        err = ErrorState(s, cfg.s_d)
        e = err.e
        u = traj.u[i]
        measured = vdot(err, model, P, u)
        b = bangbang_channel(ctrl.family, mode)
        expected = -2.0 * xi * abs(e @ P @ model.K[b] @ s)
        Pe = P @ e
        scale = 2 * np.linalg.norm(Pe) * (np.linalg.norm(model.A @ s + model.g)
                                          + sum(abs(u[r]) * np.linalg.norm(model.K[r] @ s) for r in (0, 1)))
        worst_rel = max(worst_rel, abs(measured - expected) / max(abs(expected), scale))
    # V non-increasing between consecutive events (within one mode segment)
    tol = 1e-6 * traj.V[0]
    event_t = set(run.log.times.tolist())
    rises = [traj.V[i + 1] - traj.V[i] for i in range(len(traj) - 1) if traj.t[i + 1] not in event_t]
    worst_rise = max(rises) if rises else 0.0
    ok = worst_rel <= 1e-9 and worst_rise <= tol
    report(4, ok, f"{name}: max rel |Vdot + 2 xi Delta_b| = {worst_rel:.1e} (tol 1e-9), "
                  f"max step rise of V = {worst_rise:.2e} (tol {tol:.2e}); {len(run.log)} switches; {_ended(run)}")
    assert ok


# 5 -----------------------------------------------------------------------


def _switch_audit(run):
    """(worst event excess over slack, inter-event violations) for one run."""
    cfg, traj, log = run.cfg, run.traj, run.log
    law = FeedbackLaw(cfg.model(), cfg.controller, cfg.s_d)
    pol = cfg.policy

    def margins(s, mode, t):
        ev = law.raw(s, mode, t)
        thr_s, thr_i = pol.thresholds(mode, ev[5])
        gap = ev[7 + fractional_channel(cfg.controller.family, mode)]
        return abs(gap) - thr_s, abs(ev[6]) - thr_i

    idx = {t: i for i, t in enumerate(traj.t)}
    tol = cfg.simulation.event_tol
    worst_excess = -math.inf
    for ev in log.events:
        i = idx[ev.tau]
        ms, mi = margins(traj.s[i], ev.from_mode, ev.tau)
        m = ms if ev.trigger is Trigger.SINGULAR else mi
        j = max(i - 1, 0)
        ps, pi = margins(traj.s[j], ev.from_mode, traj.t[j])
        prev = ps if ev.trigger is Trigger.SINGULAR else pi
        slope = abs(m - prev) / max(traj.t[i] - traj.t[j], 1e-300)
        worst_excess = max(worst_excess, m - 10 * tol * slope)
    violations = 0
    taus = log.times
    event_t = set(taus.tolist())
    # the last row of a run stopped by AssumptionViolation is the failure itself
    n = len(traj) - (run.error is not None)
    for i in range(n):
        t = traj.t[i]
        if t in event_t:
            continue
        mode = Mode(int(traj.mode[i]))
        ms, mi = margins(traj.s[i], mode, t)
        if ms <= 0:
            violations += 1
            continue
        # an invariant-band sample is only a miss when a switch was admissible there
        if mi <= 0:
            k = np.searchsorted(taus, t)
            last = taus[k - 1] if k else None
            dwell_ok = last is None or t - last >= pol.min_dwell
            if dwell_ok and margins(traj.s[i], mode.other, t)[0] > 0:
                violations += 1
    return worst_excess, violations


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_c5_switching_correctness(name, runs, report):
    run = runs(name)
    excess, violations = _switch_audit(run)
    no_violation = run.error is None
    ok = excess <= 0 and violations == 0 and no_violation
    report(5, ok, f"{name}: {len(run.log)} events, worst trigger excess over slack {excess:.2e}, "
                  f"{violations} inter-event threshold violations, "
                  f"assumption violation: {'none' if no_violation else run.error}")
    assert excess <= 0 and violations == 0
    assert no_violation, str(run.error)


# 6 -----------------------------------------------------------------------


def test_c6_dephasing_terminal_value(runs, report):
    run = runs("dephasing")
    V = run.summary.final_V
    ok = run.complete and V <= 5e-4
    report(6, ok, f"dephasing final V = {V:.3e} (bound 5e-4, reference order 1e-4); {_ended(run)}")
    assert ok


# 7 -----------------------------------------------------------------------


def test_c7_certificate_arithmetic(report):
    cert = FtsCertificate(P=np.eye(3), alpha=0.1, c1=1.0, c2=4.0, T_f=1.0, W=np.eye(3))
    res = fts_check(cert, np.zeros(3))
    horizon_err = abs(res[0].bound - 10 * math.log(4))
    oracle_err = abs(res[0].bound - float(fts_horizon_mp(1, 1, 1, 1, 4, 0, 0.1)))

    worst = 0.0
    cases = [(-1.5, 0.0, -0.001, 0.08, math.sqrt(2.96), 7.0, 10.0, 0.078),
             (-0.5, -0.2, 0.01, 0.3, 1.2, 0.5, 3.0, 0.2),
             (-2.0, 0.0, 0.05, 1.0, 0.7, 0.0, 1.0, 0.5),
             (-0.1, -0.05, 0.0, 2.0, 1.9, 1.0, 8.0, 1.5)]
    for off, sl, th, a2, b1, rho_, t, l2 in cases:
        c = FtcsCertificate(GammaSchedule(off, sl), th, alpha1=l2, alpha2=a2, b1=b1, varrho=rho_, T_f=t,
                            eta=0.5 * b1)
        for tt in np.linspace(rho_, t, 7):
            e_ref = float(eta_mp(off, sl, th, a2, b1, rho_, tt, l2))
            worst = max(worst, abs(eta_bound(c, l2, float(tt)) - e_ref) / max(1.0, e_ref))
            f_ref = float(bracket_mp(off, sl, th, a2, b1, rho_, tt) - l2 * (0.5 * b1) ** 2)
            worst = max(worst, abs(ftcs_condition(c, float(tt)) - f_ref) / max(1.0, abs(f_ref)))

    amp = load_preset("amplitude")
    fc = amp.certificates.ftcs
    c51 = FtcsCertificate(amp.controller.gamma, amp.controller.theta_hat, fc["alpha1"], fc["alpha2"],
                          fc["b1"], fc["varrho"], amp.simulation.T_f)
    eta51 = eta_bound(c51, 0.078, 10.0)
    ok = horizon_err <= 1e-12 and oracle_err <= 1e-12 and worst <= 1e-10
    report(7, ok, f"10 ln 4 bound error {horizon_err:.1e}; eta/ftcs max error vs 50-digit oracle {worst:.1e}; "
                  f"amplitude eta at T_f = {eta51:.4f} (reference value approx 0.06, not forced)")
    assert ok


# 8 -----------------------------------------------------------------------


def test_c8_trajectory_verifiers(runs, report):
    amp = runs("amplitude")
    sd = amp.cfg.s_d
    e_max = max_error_on_window(amp.traj, sd, 7.0, 10.0)
    ftcs_ok = amp.complete and verify_ftcs_trajectory(amp.traj, sd, 0.159, 7.0, 10.0)
    fts = {}
    for name in PRESET_NAMES:
        r = runs(name)
        fts[name] = (verify_fts_trajectory(r.traj, r.cfg.s_d, 3.0, 4.0), r.traj.t[-1], r.cfg.simulation.T_f)
    fts_ok = all(v[0] for v in fts.values())
    detail = ", ".join(f"{n} {'holds' if v[0] else 'fails'} to t = {v[1]:.4g}/{v[2]:g}" for n, v in fts.items())
    ok = ftcs_ok and fts_ok
    report(8, ok, f"FTCS on [7, 10] with eta = 0.159: max |e| = {e_max:.4f}, "
                  f"{'holds' if ftcs_ok else 'fails'}; FTS c2 = 4: {detail}")
    assert ok


# 9 -----------------------------------------------------------------------

N_CASES = 1000
finite = st.floats(-1.0, 1.0, allow_nan=False)


@st.composite
def bloch_vectors(draw, max_radius=1.0):
    v = np.array([draw(finite), draw(finite), draw(finite)])
    n = np.linalg.norm(v)
    r = draw(st.floats(0.0, max_radius))
    return v / n * r if n > 1e-9 else np.zeros(3)


@st.composite
def complex_matrices(draw):
    vals = [complex(draw(finite), draw(finite)) for _ in range(4)]
    return np.array(vals).reshape(2, 2)


@st.composite
def hermitian(draw):
    m = draw(complex_matrices())
    return 0.5 * (m + m.conj().T)


def _suite(prop, strategy):
    count = [0]

    @settings(max_examples=N_CASES, deadline=None, database=None)
    @given(strategy)
    def inner(x):
        count[0] += 1
        prop(x)

    inner()
    return count[0]


def test_c9_property_suites(report):
    counts = {}

    def roundtrip(s):
        rho = bloch_to_density(s)
        assert np.abs(density_to_bloch(rho) - s).max() <= 1e-14
        assert np.abs(bloch_to_density(density_to_bloch(rho)) - rho).max() <= 1e-12
    counts["round trip"] = _suite(roundtrip, bloch_vectors())

    def positivity(v):
        r = np.linalg.norm(v)
        rho = 0.5 * (np.eye(2) + v[0] * SX + v[1] * SY + v[2] * SZ)
        psd = np.linalg.eigvalsh(rho).min() >= -1e-12
        assert psd == (r <= 1 + 2e-12)
        if r <= 1.0:
            check_density(rho)
        elif r > 1 + 1e-9:
            with pytest.raises(NonPhysicalState):
                check_density(rho)
    counts["positivity"] = _suite(positivity, bloch_vectors(max_radius=1.5))

    def lindblad_props(args):
        H0, Ls, rates, s, u = args
        spec = OpenSystemSpec(H0, (SX, SY), tuple(zip(Ls, rates)))
        d = lindblad_rhs(bloch_to_density(s), spec, u)
        assert abs(np.trace(d)) <= 1e-12
        assert np.abs(d - d.conj().T).max() <= 1e-12
        m = build_system(spec)
        for K in m.K:
            assert np.abs(K + K.T).max() <= 1e-14
    counts["lindblad rhs"] = _suite(lindblad_props, st.tuples(
        hermitian(), st.lists(complex_matrices(), min_size=1, max_size=3),
        st.lists(st.floats(0.001, 1.0), min_size=3, max_size=3), bloch_vectors(),
        st.tuples(st.floats(-5, 5), st.floats(-5, 5))))

    def hermitian_channels(args):
        H0, Ls, rates = args
        spec = OpenSystemSpec(H0, (SX, SY), tuple(zip(Ls, rates)))
        assert np.abs(build_system(spec).g).max() <= 1e-14
    counts["g = 0"] = _suite(hermitian_channels, st.tuples(
        hermitian(), st.lists(hermitian(), min_size=1, max_size=3),
        st.lists(st.floats(0.001, 1.0), min_size=3, max_size=3)))

    ok = all(n >= N_CASES for n in counts.values())
    report(9, ok, ", ".join(f"{k}: {n} cases" for k, n in counts.items()))
    assert ok


# 10 ----------------------------------------------------------------------


def test_c10_determinism(tmp_path, report):
    outs = []
    codes = []
    for k in (1, 2):
        d = tmp_path / f"run{k}"
        proc = subprocess.run([sys.executable, "-m", "qswitch", "run", "--preset", "polarization", "--out", str(d)],
                              capture_output=True, text=True)
        codes.append(proc.returncode)
        outs.append({f: (d / f).read_bytes() for f in ("trajectory.csv", "switches.csv")})
    same = outs[0] == outs[1]
    rows = outs[0]["trajectory.csv"].count(b"\n") - 1
    report(10, same, f"two `run --preset polarization` invocations byte-identical: {same} "
                     f"({rows} trajectory rows, exit codes {codes})")
    assert same
