"""Self-contained oracle and invariant checks behind the `validate` command.

Each check compares two independent routes to the same quantity (closed
form vs simulation, expansion vs exact field, repeated vs parallel runs),
so an error injected into any one route makes its check fail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis as analysis_mod
from . import dynamics as dyn
from . import ensemble as ens
from . import field as field_mod
from .constants import CONSTANTS


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _square_spec(bias=0.0, n_stripes=math.inf):
    # 1:1 duty, layer thickness a/pi (kb = 2): even harmonics vanish and the
    # neglected n=5 term is small, so expansion and exact field agree closely
    a = 2e-6
    return field_mod.MirrorSpec(period_a=a, stripe_width_c=a / 2,
                                layer_thickness_b=a / math.pi,
                                magnetization_M0=8e5, n_stripes=n_stripes,
                                bias_field_Bz=bias)


def check_coefficient_reference():
    spec = field_mod.MirrorSpec(period_a=3e-6, stripe_width_c=1e-6,
                                layer_thickness_b=30e-9, magnetization_M0=9.48e6)
    co = field_mod.harmonic_coefficients(spec)
    k = 2.0 * math.pi / spec.period_a
    kb = k * spec.layer_thickness_b
    duty = spec.stripe_width_c / spec.period_a
    ref_b1 = abs(CONSTANTS.mu0 * spec.magnetization_M0 * (1.0 - math.exp(-kb))
                 / math.pi * math.sin(math.pi * duty))
    ref_b3 = abs(CONSTANTS.mu0 * spec.magnetization_M0 * (1.0 - math.exp(-3.0 * kb))
                 / (3.0 * math.pi) * math.sin(3.0 * math.pi * duty))
    err = abs(co.B1 - ref_b1) / ref_b1 + abs(co.B3 - ref_b3) / max(ref_b3, 1e-30)
    return err < 1e-12, f"coefficient deviation {err:.3e}"


def check_duty_cycle_third():
    spec = field_mod.MirrorSpec(period_a=3e-6, stripe_width_c=1e-6,
                                layer_thickness_b=30e-9, magnetization_M0=9.48e6)
    co = field_mod.harmonic_coefficients(spec)
    ok = abs(co.duty_b1 - math.sin(math.pi / 3.0)) < 1e-12 and abs(co.duty_b3) < 1e-12
    return ok, f"duty_b1={co.duty_b1:.7f}, |duty_b3|={abs(co.duty_b3):.2e}"


def check_b3_b1_ratio_band():
    for kb in (0.01, 0.1, 1.0, 5.0, 30.0):
        a = 2e-6
        spec = field_mod.MirrorSpec(period_a=a, stripe_width_c=a / 2,
                                    layer_thickness_b=kb / (2 * math.pi / a),
                                    magnetization_M0=1e6)
        co = field_mod.harmonic_coefficients(spec)
        r = co.B3 / co.B1
        if not (1.0 / 3.0 < r < 1.0):
            return False, f"ratio {r:.4f} outside (1/3, 1) at kb={kb}"
    return True, "B3/B1 in (1/3, 1) across layer thicknesses"


def check_field_oracle():
    # operating configuration: 100 mG bias along z, as in every field op
    spec = _square_spec(bias=1e-5, n_stripes=2001)
    a = spec.period_a
    worst = 0.0
    for x in (0.0, a / 8, a / 4):
        for y in (a / 4, a / 2, a, 3 * a):
            exact = field_mod.field_exact(spec, x, y).magnitude
            expansion = field_mod.field_full_expansion(spec, x, y)
            worst = max(worst, abs(exact / expansion - 1.0))
    return worst < 1e-3, f"max |exact/expansion - 1| = {worst:.2e}"


def check_two_term_vs_full_far():
    spec = _square_spec()
    y = 10.0 / spec.k
    worst = max(abs(field_mod.field_two_term(spec, x, y)
                    / field_mod.field_full_expansion(spec, x, y) - 1.0)
                for x in (0.0, spec.period_a / 3))
    return worst < 1e-8, f"relative difference {worst:.2e} at ky=10"


def check_periodicity():
    spec = _square_spec()
    a = spec.period_a
    worst = 0.0
    for x in (0.1e-6, 0.77e-6):
        for y in (a / 4, a):
            b0 = field_mod.field_full_expansion(spec, x, y)
            b1 = field_mod.field_full_expansion(spec, x + a, y)
            worst = max(worst, abs(b1 / b0 - 1.0))
    return worst < 1e-12, f"max periodicity violation {worst:.2e}"


def check_free_fall():
    model = dyn.PureExponential(U0=0.0, k=1e6)
    h = 1.0
    traj = dyn.propagate(dyn.CESIUM, model, dyn.State(0, h, 0, 0, 0.0),
                         t_end=0.2, tol=1e-10)
    ts = np.linspace(0.0, 0.2, 41)
    ys = traj.sample(ts)[:, 1]
    ref = h - 0.5 * CONSTANTS.g_grav * ts ** 2
    worst = float(np.max(np.abs(ys - ref)))
    return worst < 1e-12 * h, f"max position error {worst:.2e} m"


def check_analytic_bounce():
    species = dyn.CESIUM
    k = 2 * math.pi / 1e-6
    e_kin = 0.5 * species.mass * 0.6 ** 2
    model = dyn.PureExponential(U0=200.0 * e_kin, k=k)
    y0 = 12.0 / k
    # total energy includes the (small) launch-point potential energy
    e_tot = e_kin + model.U0 * math.exp(-k * y0)
    traj = dyn.propagate(species, model, dyn.State(0.0, y0, 0.0, -0.6, 0.0),
                         t_end=2.2 * y0 / 0.6, tol=1e-10, gravity=False)
    bt = traj.bounce_times
    if len(bt) != 1:
        return False, f"expected 1 bounce, got {len(bt)}"
    ts = np.linspace(traj.t0, traj.t_final, 1001)
    ys = traj.sample(ts)[:, 1]
    ref = np.array([dyn.analytic_exp_bounce(species, model.U0, k, e_tot,
                                            t, t0=bt[0]).y for t in ts])
    worst = float(np.max(np.abs(ys - ref)))
    return worst < 1e-9, f"max |y - analytic| = {worst:.2e} m"


def check_energy_drift():
    species = dyn.CESIUM
    model = dyn.PureExponential(U0=species.moment_mu * 0.2, k=2 * math.pi / 1e-6)
    traj = dyn.propagate(species, model, dyn.State(0.0, 0.02, 0.0, 0.0, 0.0),
                         t_end=0.125, tol=1e-10)
    drift = traj.energy_drift()
    return drift < 1e-9, f"relative energy drift {drift:.2e}"


def check_turning_point():
    species = dyn.CESIUM
    b1, a, h = 0.1, 1e-6, 0.002
    k = 2 * math.pi / a
    model = dyn.PureExponential(U0=species.moment_mu * b1, k=k)
    traj = dyn.propagate(species, model, dyn.State(0.0, h, 0.0, 0.0, 0.0),
                         t_end=1.2 * math.sqrt(2 * h / CONSTANTS.g_grav), tol=1e-10)
    y_sim = traj.state_at(traj.bounce_times[0]).y
    y_formula = dyn.turning_point(species, b1, k, h)
    err = abs(y_sim - y_formula)
    return err < 1e-9, f"|simulated - formula| = {err:.2e} m"


def check_max_drop_height():
    h = dyn.max_reflect_height(dyn.CESIUM, 0.1)
    return 0.40 <= h <= 0.45 and abs(h - 0.4283) < 5e-4, f"h_max = {h:.4f} m"


def check_reflection_dichotomy():
    species = dyn.CESIUM
    model = dyn.PureExponential(U0=species.moment_mu * 0.05, k=2 * math.pi / 1e-6)
    h_max = model.U0 / (species.mass * CONSTANTS.g_grav)
    for rel, expect_bounce in ((-1e-6, True), (1e-6, False)):
        h = h_max * (1.0 + rel)
        traj = dyn.propagate(species, model, dyn.State(0.0, h, 0.0, 0.0, 0.0),
                             t_end=2.5 * math.sqrt(2 * h / CONSTANTS.g_grav),
                             tol=1e-10)
        bounced = len(traj.bounce_times) > 0 and not traj.penetrated
        if bounced != expect_bounce:
            return False, f"drop at h_max*(1{rel:+.0e}) gave bounced={bounced}"
    return True, "bounce/penetration flips exactly at h_max (+-1e-6)"


def check_thread_determinism():
    species = dyn.CESIUM
    model = dyn.TwoTerm(_square_spec(bias=1e-5))
    spec = ens.EnsembleSpec(n_atoms=16, temperature=11e-6, release_height=2e-3,
                            sigma_x=1e-5, sigma_y=1e-5, seed=7,
                            snapshot_times=(0.005, 0.015, 0.028))
    s1 = ens.run_ensemble(spec, species, model, tol=1e-8, threads=1)
    s2 = ens.run_ensemble(spec, species, model, tol=1e-8, threads=2)
    same = (np.array_equal(s1.mean_y, s2.mean_y)
            and np.array_equal(s1.rms_x, s2.rms_x)
            and np.array_equal(s1.n_survivors, s2.n_survivors))
    return same, "threads=1 and threads=2 give identical statistics"


def check_sampler():
    spec = ens.EnsembleSpec(n_atoms=4, temperature=11e-6, release_height=3e-3,
                            seed=123, snapshot_times=(0.01,))
    a = ens.sample_initial(spec, dyn.CESIUM, 2)
    b = ens.sample_initial(spec, dyn.CESIUM, 2)
    c = ens.sample_initial(spec, dyn.CESIUM, 3)
    sv = ens.thermal_sigma_v(spec, dyn.CESIUM)
    ok = a == b and a != c and abs(sv - 0.026233) < 1e-4
    return ok, f"sigma_v(11 uK) = {sv:.6f} m/s; streams keyed by (seed, index)"


CHECKS = (
    ("coefficient-reference", check_coefficient_reference),
    ("duty-cycle-third", check_duty_cycle_third),
    ("b3-b1-ratio-band", check_b3_b1_ratio_band),
    ("field-oracle-equivalence", check_field_oracle),
    ("two-term-vs-full-far-field", check_two_term_vs_full_far),
    ("expansion-periodicity", check_periodicity),
    ("free-fall-exactness", check_free_fall),
    ("analytic-bounce-oracle", check_analytic_bounce),
    ("energy-drift", check_energy_drift),
    ("turning-point-formula", check_turning_point),
    ("max-drop-height", check_max_drop_height),
    ("reflection-dichotomy", check_reflection_dichotomy),
    ("thread-determinism", check_thread_determinism),
    ("initial-sampler", check_sampler),
)


def run_checks() -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail))
    return results
