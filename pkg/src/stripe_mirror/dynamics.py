"""Spin-polarized atom dynamics above the stripe mirror.

An adiabatically following weak-field seeker sees the Zeeman potential
U = mu * |B(x, y)| on top of gravity.  Four potential variants are
supported: the two-term harmonic approximation, the three-term squared
expansion, the exact finite-stripe field, and an idealized pure
exponential wall U0 * e^(-ky) (the textbook mirror model, which also has
a closed-form bounce used as the integrator oracle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import integrate as _int
from .constants import CONSTANTS
from .errors import (DomainError, IntegrationError, PenetrationError,
                     ValidationError)
from .field import (MirrorSpec, exact_field_arrays, expansion_field_vector,
                    harmonic_coefficients, _stripe_faces)


@dataclass(frozen=True)
class AtomSpecies:
    """An atom in a single weak-field-seeking Zeeman state.

    ``moment_mu`` is the effective moment g_F * m_F * mu_B entering
    U = moment_mu * |B|.
    """

    name: str
    mass: float       # [kg]
    moment_mu: float  # [J/T]

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValidationError(f"invariant violated: mass > 0 (got {self.mass!r})")
        if self.moment_mu <= 0.0:
            raise ValidationError(
                f"invariant violated: moment_mu > 0, weak-field seeker only (got {self.moment_mu!r})"
            )


# Cs ground state F=4, m_F=4: g_F = 1/4, so the effective moment is one Bohr magneton.
CESIUM = AtomSpecies(name="Cs", mass=2.2069e-25, moment_mu=1.0 * CONSTANTS.mu_B)


@dataclass(frozen=True)
class State:
    """Instantaneous phase-space point of one atom."""

    x: float
    y: float
    vx: float
    vy: float
    t: float = 0.0


@dataclass(frozen=True)
class BounceEvent:
    """Summary of one surface reflection (or the penetration that ended a run)."""

    t_turn: float
    y_turn: float
    x_at_turn: float
    interaction_time: float
    penetrated: bool = False


@dataclass(frozen=True)
class PureExponential:
    """Idealized mirror potential U0 * e^(-k y), no corrugation, no bias."""

    U0: float  # [J]
    k: float   # [1/m]

    def __post_init__(self):
        if self.U0 < 0.0 or self.k <= 0.0:
            raise ValidationError("PureExponential needs U0 >= 0 and k > 0")


@dataclass(frozen=True)
class TwoTerm:
    """Two-term harmonic field magnitude B1 e^(-ky) + B3 e^(-3ky) cos 2kx."""

    spec: MirrorSpec


@dataclass(frozen=True)
class FullExpansion:
    """Three-term squared expansion with the printed decay exponents."""

    spec: MirrorSpec


@dataclass(frozen=True)
class ExactStripes:
    """Charge-sheet field of the finite stripe array (forces by central differences)."""

    spec: MirrorSpec

    def __post_init__(self):
        if math.isinf(self.spec.n_stripes):
            raise ValidationError("ExactStripes requires a finite (odd) n_stripes")


PotentialModel = Union[PureExponential, TwoTerm, FullExpansion, ExactStripes]

_EMPTY = np.empty(0)


def _kernel_params(model: PotentialModel, species: AtomSpecies):
    """(kind, p1..p4, face_x, face_sign) for the integration kernel."""
    if isinstance(model, PureExponential):
        return _int.KIND_PURE_EXP, model.U0, model.k, 0.0, 0.0, _EMPTY, _EMPTY
    if isinstance(model, TwoTerm):
        co = harmonic_coefficients(model.spec)
        return (_int.KIND_TWO_TERM, co.B1, co.k, co.b3_signed,
                model.spec.bias_field_Bz, _EMPTY, _EMPTY)
    if isinstance(model, FullExpansion):
        co = harmonic_coefficients(model.spec)
        return (_int.KIND_FULL_EXPANSION, co.B1, co.k, co.b3_signed,
                model.spec.bias_field_Bz, _EMPTY, _EMPTY)
    if isinstance(model, ExactStripes):
        face_x, face_sign = _stripe_faces(model.spec)
        pref = CONSTANTS.mu0 * model.spec.magnetization_M0 / (2.0 * math.pi)
        return (_int.KIND_EXACT_STRIPES, pref, model.spec.k,
                model.spec.bias_field_Bz, model.spec.layer_thickness_b,
                face_x, face_sign)
    raise ValidationError(f"unknown potential model {model!r}")


def decay_wavenumber(model: PotentialModel) -> float:
    """Decay constant k of the mirror potential [1/m]."""
    if isinstance(model, PureExponential):
        return model.k
    return model.spec.k


def magnetic_energy(species: AtomSpecies, model: PotentialModel, x, y):
    """Magnetic potential energy mu*|B| (or U0 e^(-ky)) [J], vectorized."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if np.any(yv <= 0.0):
        raise DomainError("potential is defined only above the surface (y > 0)")
    if isinstance(model, PureExponential):
        out = model.U0 * np.exp(-model.k * yv) * np.ones_like(xv)
    elif isinstance(model, TwoTerm):
        co = harmonic_coefficients(model.spec)
        e1 = np.exp(-co.k * yv)
        bm = co.B1 * e1 + co.b3_signed * e1 ** 3 * np.cos(2.0 * co.k * xv)
        out = species.moment_mu * np.sqrt(bm * bm + model.spec.bias_field_Bz ** 2)
    elif isinstance(model, FullExpansion):
        co = harmonic_coefficients(model.spec)
        e1 = np.exp(-co.k * yv)
        bsq = (co.B1 ** 2 * e1 ** 2
               + 2.0 * co.B1 * co.b3_signed * np.cos(2.0 * co.k * xv) * e1 ** 4
               + co.B3 ** 2 * e1 ** 9)
        if np.any(bsq < 0.0):
            raise DomainError("three-term expansion gives negative B^2 here")
        out = species.moment_mu * np.sqrt(bsq + model.spec.bias_field_Bz ** 2)
    else:
        bx, by = exact_field_arrays(model.spec, xv, yv)
        out = species.moment_mu * np.sqrt(bx ** 2 + by ** 2 + model.spec.bias_field_Bz ** 2)
    if np.isscalar(x) and np.isscalar(y):
        return float(out)
    return out


def magnetic_energy_floor(species: AtomSpecies, model: PotentialModel) -> float:
    """Magnetic energy far above the mirror (the uniform-bias floor)."""
    if isinstance(model, PureExponential):
        return 0.0
    return species.moment_mu * abs(model.spec.bias_field_Bz)


def potential_energy(species: AtomSpecies, model: PotentialModel, x, y,
                     gravity: bool = True):
    """Total potential energy mu*|B| + m g y [J]."""
    g = CONSTANTS.g_grav if gravity else 0.0
    return magnetic_energy(species, model, x, y) + species.mass * g * np.asarray(y, dtype=float)


def force(species: AtomSpecies, model: PotentialModel, x: float, y: float,
          gravity: bool = True):
    """(Fx, Fy) = -grad U [N]; analytic except for ExactStripes (central differences)."""
    if y <= 0.0:
        raise DomainError("force is defined only above the surface (y > 0)")
    kind, p1, p2, p3, p4, fx_, fs_ = _kernel_params(model, species)
    g = CONSTANTS.g_grav if gravity else 0.0
    ax, ay, ok = _int._accel(kind, species.mass, species.moment_mu, g,
                             p1, p2, p3, p4, fx_, fs_, x, y)
    if not ok:
        raise DomainError("potential model invalid at this point (negative B^2)")
    return species.mass * ax, species.mass * ay


def total_energy(species: AtomSpecies, model: PotentialModel, state: State,
                 gravity: bool = True) -> float:
    """Kinetic plus potential energy of a state [J]."""
    ke = 0.5 * species.mass * (state.vx ** 2 + state.vy ** 2)
    return ke + float(potential_energy(species, model, state.x, state.y, gravity=gravity))


_EV_NAMES = {_int.EV_APEX: "apex", _int.EV_BOUNCE: "bounce",
             _int.EV_PENETRATION: "penetration", _int.EV_LATERAL: "lateral_exit"}
_STATUS_NAMES = {_int.STATUS_COMPLETED: "completed",
                 _int.STATUS_PENETRATED: "penetrated",
                 _int.STATUS_LATERAL_EXIT: "lateral_exit"}


class Trajectory:
    """Dense-output trajectory of one atom.

    Stores the accepted steps' interpolation polynomials, so the state can
    be evaluated at any time in [t0, t_final] without re-integration, plus
    the refined event list (bounces, apexes, penetration, lateral exit).
    """

    def __init__(self, species, model, gravity, ts, cont, ev_times, ev_kinds,
                 t_final, status):
        self.species = species
        self.model = model
        self.gravity = gravity
        self._ts = ts          # (n_steps+1,) step boundary times
        self._cont = cont      # (n_steps, 20) dense coefficients
        self._hs = np.diff(ts)
        self.events = [(float(t), _EV_NAMES[int(k)]) for t, k in zip(ev_times, ev_kinds)]
        self.t_final = float(t_final)
        self.status = status

    @property
    def t0(self) -> float:
        return float(self._ts[0])

    @property
    def n_steps(self) -> int:
        return self._cont.shape[0]

    @property
    def penetrated(self) -> bool:
        return self.status == "penetrated"

    @property
    def bounce_times(self):
        return [t for t, k in self.events if k == "bounce"]

    @property
    def apex_times(self):
        return [t for t, k in self.events if k == "apex"]

    def clip(self, t: float) -> None:
        """Truncate the trajectory at time t (events past t are dropped)."""
        if t < self.t0:
            raise ValidationError("cannot clip before the trajectory start")
        if t < self.t_final:
            self.t_final = float(t)
            self.events = [(te, ke) for te, ke in self.events if te <= t]
            self.status = "clipped"

    def sample(self, times) -> np.ndarray:
        """States at the query times, shape (n, 4): columns x, y, vx, vy."""
        tq = np.asarray(times, dtype=float)
        if np.any(tq < self.t0 - 1e-9) or np.any(tq > self.t_final + 1e-9):
            raise DomainError("sample time outside the trajectory's span")
        tqc = np.clip(tq, self._ts[0], self.t_final)
        idx = np.searchsorted(self._ts, tqc, side="right") - 1
        idx = np.clip(idx, 0, self.n_steps - 1)
        theta = np.clip((tqc - self._ts[idx]) / self._hs[idx], 0.0, 1.0)
        out = np.empty(tq.shape + (4,))
        om = 1.0 - theta
        c = self._cont
        for j in range(4):
            out[..., j] = c[idx, j] + theta * (c[idx, 4 + j] + om * (
                c[idx, 8 + j] + theta * (c[idx, 12 + j] + om * c[idx, 16 + j])))
        return out

    def state_at(self, t: float) -> State:
        s = self.sample(np.asarray([t]))[0]
        return State(x=float(s[0]), y=float(s[1]), vx=float(s[2]), vy=float(s[3]),
                     t=float(min(max(t, self.t0), self.t_final)))

    def sample_times(self) -> np.ndarray:
        """Step-boundary and event times in [t0, t_final], sorted and unique."""
        ts = self._ts[self._ts <= self.t_final + 1e-15]
        ev = np.asarray([t for t, _ in self.events if t <= self.t_final + 1e-15])
        allt = np.concatenate([ts, ev, [self.t_final]])
        return np.unique(allt)

    def states_array(self) -> np.ndarray:
        """(n, 5) array of t, x, y, vx, vy at sample_times()."""
        ts = self.sample_times()
        st = self.sample(ts)
        return np.column_stack([ts, st])

    def energy_drift(self) -> float:
        """Max relative drift of the total energy over the sampled trajectory."""
        arr = self.states_array()
        ke = 0.5 * self.species.mass * (arr[:, 3] ** 2 + arr[:, 4] ** 2)
        g = CONSTANTS.g_grav if self.gravity else 0.0
        u = magnetic_energy(self.species, self.model, arr[:, 1],
                            np.maximum(arr[:, 2], 1e-300))
        e = ke + u + self.species.mass * g * arr[:, 2]
        e0 = e[0]
        if e0 == 0.0:
            return float(np.max(np.abs(e - e0)))
        return float(np.max(np.abs(e - e0) / abs(e0)))


def propagate(species: AtomSpecies, model: PotentialModel, s0: State,
              t_end: float, tol: float = 1e-9, *, gravity: bool = True,
              x_limit: Optional[float] = None, h_max: Optional[float] = None,
              max_steps: int = 2_000_000) -> Trajectory:
    """Propagate one atom to t_end (or until penetration / lateral exit).

    Uses an adaptive embedded Runge-Kutta 5(4) pair with per-step error
    <= tol relative to the problem scale; inside the mirror interaction
    zone (mu|B| > 1e-3 of the kinetic energy) the step is additionally
    capped at 0.05/(k |vy|) so the exponential wall is resolved.  The
    returned trajectory carries dense output and event-refined samples at
    every vy sign change.
    """
    if s0.y <= 0.0:
        raise ValidationError(f"initial state must be above the surface (y={s0.y!r})")
    if tol <= 0.0:
        raise ValidationError("tol must be positive")
    if t_end <= s0.t:
        raise ValidationError("t_end must exceed the initial time")
    kind, p1, p2, p3, p4, face_x, face_sign = _kernel_params(model, species)
    g = CONSTANTS.g_grav if gravity else 0.0
    span = t_end - s0.t
    hm = span / 8.0 if h_max is None else float(h_max)
    ref_pos = max(abs(s0.x), abs(s0.y), 1e-9)
    ref_vel = max(abs(s0.vx), abs(s0.vy), math.sqrt(2.0 * max(g, 1e-12) * ref_pos), 1e-9)
    xl = 0.0 if x_limit is None else float(x_limit)
    if xl > 0.0 and abs(s0.x) >= xl:
        raise ValidationError("initial state lies outside the lateral boundary")

    (status, n, ts, cont, ev_t, ev_k, nev, t_final,
     xf, yf, vxf, vyf) = _int._integrate(
        kind, species.mass, species.moment_mu, g, p1, p2, p3, p4,
        face_x, face_sign, s0.x, s0.y, s0.vx, s0.vy, s0.t, t_end,
        tol, tol * ref_pos, tol * ref_vel, hm, xl, max_steps)

    if status == _int.STATUS_UNDERFLOW:
        raise IntegrationError(f"step size underflow at t={t_final!r}")
    if status == _int.STATUS_MAX_STEPS:
        raise IntegrationError(f"step budget ({max_steps}) exhausted at t={t_final!r}")
    if status == _int.STATUS_DOMAIN:
        raise DomainError("potential model invalid along the trajectory (negative B^2)")
    if n == 0:
        raise IntegrationError("integrator made no progress")
    return Trajectory(species, model, gravity,
                      np.array(ts[:n + 1]), np.array(cont[:n]),
                      np.array(ev_t[:nev]), np.array(ev_k[:nev]),
                      t_final, _STATUS_NAMES[status])


def analytic_exp_bounce(species: AtomSpecies, U0: float, k: float, E: float,
                        t, t0: float = 0.0) -> State:
    """Closed-form 1D bounce off U0 e^(-ky), no gravity.

    y(t) = y_t + (2/k) ln cosh(k v (t - t0)/2),  v = sqrt(2E/m),
    y_t = (1/k) ln(U0/E); exact solution of m y'' = k U0 e^(-ky) with the
    turning point at t0.  Total energy is conserved identically.
    """
    if E <= 0.0 or U0 <= 0.0 or k <= 0.0:
        raise ValidationError("analytic bounce needs E > 0, U0 > 0, k > 0")
    v = math.sqrt(2.0 * E / species.mass)
    y_t = math.log(U0 / E) / k
    u = 0.5 * k * v * (t - t0)
    # ln cosh(u) without overflow for large |u|
    au = abs(u)
    lncosh = au + math.log1p(math.exp(-2.0 * au)) - math.log(2.0)
    y = y_t + (2.0 / k) * lncosh
    vy = v * math.tanh(u)
    return State(x=0.0, y=y, vx=0.0, vy=vy, t=t)


def max_reflect_height(species: AtomSpecies, B_surface: float) -> float:
    """Largest drop height reflected by a surface field B_surface [m]."""
    if B_surface <= 0.0:
        raise ValidationError("B_surface must be positive")
    return species.moment_mu * B_surface / (species.mass * CONSTANTS.g_grav)


def turning_point(species: AtomSpecies, B1: float, k: float, drop_h: float) -> float:
    """Turning height y_t = (1/k) ln(mu B1 / (m g h)) for a drop from h [m]."""
    if B1 <= 0.0 or k <= 0.0 or drop_h <= 0.0:
        raise ValidationError("turning_point needs B1 > 0, k > 0, drop_h > 0")
    e_drop = species.mass * CONSTANTS.g_grav * drop_h
    if species.moment_mu * B1 <= e_drop:
        raise PenetrationError(
            f"drop energy exceeds the mirror barrier; needs B1 > {e_drop / species.moment_mu:.6g} T",
            required_b1=e_drop / species.moment_mu)
    return math.log(species.moment_mu * B1 / e_drop) / k


def harmonic_ratio_at_turning(spec: MirrorSpec, species: AtomSpecies,
                              drop_h: float) -> float:
    """Corrugation-to-exponential term ratio (B3/B1) e^(-2 k y_t) at the turning point."""
    co = harmonic_coefficients(spec)
    y_t = turning_point(species, co.B1, co.k, drop_h)
    return (co.B3 / co.B1) * math.exp(-2.0 * co.k * y_t)


def _interaction_brackets(traj: Trajectory, threshold: float):
    """Time intervals where the mirror magnetic energy exceeds `threshold`.

    Scans step boundaries and midpoints (the wall cap guarantees dense
    steps wherever the magnetic energy is non-negligible), then refines
    each crossing by bisection to 1e-12 s.
    """
    species, model = traj.species, traj.model
    floor = magnetic_energy_floor(species, model)

    ts = traj._ts[traj._ts <= traj.t_final]
    if ts[-1] < traj.t_final:
        ts = np.concatenate([ts, [traj.t_final]])
    mids = 0.5 * (ts[:-1] + ts[1:])
    grid = np.unique(np.concatenate([ts, mids]))
    st = traj.sample(grid)
    u = magnetic_energy(species, model, st[:, 0], np.maximum(st[:, 1], 1e-300)) - floor
    above = u > threshold

    def refine(lo, hi):
        # u is above the threshold on exactly one side of [lo, hi]
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            s = traj.sample(np.asarray([mid]))[0]
            um = float(magnetic_energy(species, model, s[0], max(s[1], 1e-300))) - floor
            if (um > threshold) == above_lo:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    intervals = []
    start = grid[0] if above[0] else None
    for i in range(1, grid.size):
        if above[i] != above[i - 1]:
            above_lo = above[i - 1]
            tc = refine(grid[i - 1], grid[i])
            if above[i]:
                start = tc
            else:
                intervals.append((grid[0] if start is None else start, tc))
                start = None
    if start is not None:
        intervals.append((start, grid[-1]))
    return intervals


def find_bounces(traj: Trajectory, epsilon: float = 0.01) -> list[BounceEvent]:
    """Bounce events with per-bounce interaction times.

    The interaction time of a bounce is the duration for which the mirror
    magnetic energy (above the uniform-bias floor) exceeds epsilon times
    the total mechanical energy at release.
    """
    s0 = traj.state_at(traj.t0)
    e_tot = total_energy(traj.species, traj.model, s0, gravity=traj.gravity)
    intervals = _interaction_brackets(traj, epsilon * e_tot)

    def interval_for(t):
        for lo, hi in intervals:
            if lo <= t <= hi:
                return hi - lo
        return 0.0

    out = []
    for t, kind in traj.events:
        if kind == "bounce":
            s = traj.state_at(t)
            out.append(BounceEvent(t_turn=t, y_turn=s.y, x_at_turn=s.x,
                                   interaction_time=interval_for(t)))
        elif kind == "penetration":
            s = traj.state_at(t)
            out.append(BounceEvent(t_turn=t, y_turn=max(s.y, 0.0), x_at_turn=s.x,
                                   interaction_time=interval_for(t), penetrated=True))
    return out


def interaction_time(traj: Trajectory, epsilon: float = 0.01) -> float:
    """Total duration with mirror magnetic energy > epsilon * total energy [s]."""
    if not any(k == "bounce" for _, k in traj.events):
        raise DomainError("trajectory contains no bounce")
    s0 = traj.state_at(traj.t0)
    e_tot = total_energy(traj.species, traj.model, s0, gravity=traj.gravity)
    intervals = _interaction_brackets(traj, epsilon * e_tot)
    return float(sum(hi - lo for lo, hi in intervals))


def adiabaticity_margin(traj: Trajectory, spec: MirrorSpec,
                        n_samples: int = 4001, cap: float = 1e12) -> float:
    """Minimum of (Larmor frequency) / |d(theta)/dt| along the trajectory.

    theta is the in-plane field direction; the Larmor rate uses the full
    field magnitude including bias, omega_L = mu |B| / hbar.  Values much
    greater than one mean the spin follows the local field.  The result is
    capped (static field directions would give infinity).
    """
    species = traj.species
    ts = np.linspace(traj.t0, traj.t_final, n_samples)
    st = traj.sample(ts)
    x, y = st[:, 0], np.maximum(st[:, 1], 1e-300)
    bx, by = expansion_field_vector(spec, x, y)
    bz = spec.bias_field_Bz
    bmag = np.sqrt(bx ** 2 + by ** 2 + bz ** 2)
    if np.any(bmag < 1e-300):
        raise DomainError("field vanishes on the trajectory; spin direction undefined")
    inplane = np.hypot(bx, by)
    if np.all(inplane < 1e-300) and bz == 0.0:
        raise DomainError("zero field with zero bias; direction undefined")
    theta = np.unwrap(np.arctan2(by, bx))
    dtheta = np.gradient(theta, ts)
    omega = species.moment_mu * bmag / CONSTANTS.hbar
    with np.errstate(divide="ignore"):
        margin = np.where(np.abs(dtheta) > 0.0, omega / np.abs(dtheta), np.inf)
    return float(min(np.min(margin), cap))
