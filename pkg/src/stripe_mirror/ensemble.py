"""Deterministic Monte Carlo simulation of a released cold-atom cloud.

Every atom draws its initial state from its own counter-based random
stream keyed by (seed, atom_index), so results are a pure function of the
configuration and independent of how the atoms are scheduled across
workers.  Statistics are folded in fixed atom-index order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Optional

import multiprocessing as mp
import numpy as np

from .constants import CONSTANTS
from .dynamics import (AtomSpecies, PotentialModel, State, Trajectory,
                       propagate)
from .errors import DomainError, IntegrationError, ValidationError

MIRROR_HALF_EXTENT = 0.005  # half-width of the 1 cm^2 etched region [m]


@dataclass(frozen=True)
class EnsembleSpec:
    """Release conditions and snapshot schedule for a cloud run."""

    n_atoms: int
    temperature: float            # [K]
    release_height: float         # [m]
    sigma_x: float = 2e-4         # initial rms cloud radius, lateral [m]
    sigma_y: float = 2e-4         # initial rms cloud radius, vertical [m]
    mean_velocity: tuple = (0.0, 0.0)  # (vx, vy) [m/s]
    seed: int = 0
    snapshot_times: tuple = ()    # strictly increasing, all >= 0 [s]

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValidationError(f"invariant violated: n_atoms >= 1 (got {self.n_atoms!r})")
        if self.temperature < 0.0:
            raise ValidationError(f"invariant violated: temperature >= 0 (got {self.temperature!r})")
        if self.release_height <= 0.0:
            raise ValidationError(
                f"invariant violated: release_height > 0 (got {self.release_height!r})")
        if self.sigma_x < 0.0 or self.sigma_y < 0.0:
            raise ValidationError("invariant violated: cloud sigmas must be >= 0")
        st = np.asarray(self.snapshot_times, dtype=float)
        if st.size == 0:
            raise ValidationError("at least one snapshot time is required")
        if np.any(st < 0.0) or np.any(np.diff(st) <= 0.0):
            raise ValidationError(
                "invariant violated: snapshot_times strictly increasing and >= 0")

    @property
    def sigma_v(self) -> float:
        """Per-axis thermal velocity spread sqrt(kB T / m) -- needs the species mass."""
        raise AttributeError("use thermal_sigma_v(spec, species)")


def thermal_sigma_v(spec: EnsembleSpec, species: AtomSpecies) -> float:
    """Per-axis Maxwell-Boltzmann velocity spread sqrt(kB T / m) [m/s]."""
    return math.sqrt(CONSTANTS.k_B * spec.temperature / species.mass)


def sample_initial(spec: EnsembleSpec, species: AtomSpecies, atom_index: int) -> State:
    """Initial state of atom ``atom_index``: Gaussian cloud, thermal velocities.

    The stream is keyed by (seed, atom_index) through a counter-based
    generator, so the draw is independent of evaluation order and of how
    atoms are partitioned across workers.  The draw order (x, y, vx, vy)
    is part of the reproducibility contract.
    """
    if atom_index < 0 or atom_index >= spec.n_atoms:
        raise ValidationError(f"atom_index {atom_index} outside 0..{spec.n_atoms - 1}")
    key = np.array([np.uint64(spec.seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(atom_index)], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    n = rng.standard_normal(4)
    sv = thermal_sigma_v(spec, species)
    return State(x=spec.sigma_x * n[0],
                 y=spec.release_height + spec.sigma_y * n[1],
                 vx=spec.mean_velocity[0] + sv * n[2],
                 vy=spec.mean_velocity[1] + sv * n[3],
                 t=0.0)


@dataclass
class CloudTimeSeries:
    """Cloud statistics over the survivor population at each snapshot."""

    t: np.ndarray
    mean_y: np.ndarray
    rms_x: np.ndarray
    rms_y: np.ndarray
    mean_vx: np.ndarray
    rms_vx: np.ndarray
    n_survivors: np.ndarray
    n_atoms: int = 0
    bounce_records: list = dc_field(default_factory=list)
    # per record: (atom_index, t_turn, y_turn, x_at_turn, penetrated)


def survival_fraction(series: CloudTimeSeries, t: float) -> float:
    """Surviving fraction at time t (latest snapshot at or before t)."""
    if t < series.t[0] - 1e-12 or t > series.t[-1] + 1e-12:
        raise DomainError(f"t={t!r} outside the series range "
                          f"[{series.t[0]!r}, {series.t[-1]!r}]")
    if series.n_atoms <= 0:
        raise ValidationError("series does not carry the total atom count")
    idx = int(np.searchsorted(series.t, t + 1e-15, side="right") - 1)
    idx = max(idx, 0)
    return float(series.n_survivors[idx]) / float(series.n_atoms)


def _propagate_atom(spec, species, model, tol, atom_index, t_end,
                    kick_factor, x_limit, h_max):
    """Propagate one atom, restarting at bounces when a velocity kick is injected.

    Returns (segments, t_lost, records).
    """
    state = sample_initial(spec, species, atom_index)
    segments = []
    records = []
    t_lost = math.inf
    while True:
        try:
            traj = propagate(species, model, state, t_end, tol,
                             x_limit=x_limit, h_max=h_max)
        except (IntegrationError, DomainError) as exc:
            raise IntegrationError(
                f"atom {atom_index} (seed {spec.seed}) failed: {exc}") from exc
        segments.append(traj)
        for t_ev, kind in traj.events:
            if kind == "bounce":
                s = traj.state_at(t_ev)
                records.append((atom_index, t_ev, s.y, s.x, False))
            elif kind == "penetration":
                s = traj.state_at(t_ev)
                records.append((atom_index, t_ev, max(s.y, 0.0), s.x, True))
        if traj.status in ("penetrated", "lateral_exit"):
            t_lost = traj.t_final
            break
        if kick_factor != 1.0:
            tb = next((t for t, k in traj.events
                       if k == "bounce" and t > traj.t0 + 1e-7), None)
            if tb is not None and tb < t_end - 1e-9:
                s = traj.state_at(tb)
                traj.clip(tb)
                state = State(x=s.x, y=s.y, vx=kick_factor * s.vx, vy=s.vy, t=tb)
                continue
        break
    return segments, t_lost, records


def _snapshot_states(segments, t_lost, snapshot_times):
    """(n_snap, 4) states and an alive mask for one atom."""
    n_snap = len(snapshot_times)
    out = np.full((n_snap, 4), np.nan)
    alive = np.zeros(n_snap, dtype=bool)
    for j, t in enumerate(snapshot_times):
        if t >= t_lost:
            continue
        seg = None
        for cand in segments:
            if cand.t0 - 1e-12 <= t <= cand.t_final + 1e-12:
                seg = cand
        if seg is None:
            continue
        s = seg.state_at(t)
        out[j] = (s.x, s.y, s.vx, s.vy)
        alive[j] = True
    return out, alive


def _run_chunk(payload):
    (spec, species, model, tol, indices, t_end, kick_factor, x_limit, h_max) = payload
    snap = np.asarray(spec.snapshot_times, dtype=float)
    states = np.empty((len(indices), snap.size, 4))
    alive = np.empty((len(indices), snap.size), dtype=bool)
    records = []
    for i, idx in enumerate(indices):
        segs, t_lost, recs = _propagate_atom(spec, species, model, tol, int(idx),
                                             t_end, kick_factor, x_limit, h_max)
        states[i], alive[i] = _snapshot_states(segs, t_lost, snap)
        records.extend(recs)
    return indices, states, alive, records


def run_ensemble(spec: EnsembleSpec, species: AtomSpecies, model: PotentialModel,
                 tol: float = 1e-9, threads: int = 1, kick_factor: float = 1.0,
                 x_limit: Optional[float] = MIRROR_HALF_EXTENT,
                 h_max: Optional[float] = None) -> CloudTimeSeries:
    """Propagate the cloud and reduce survivor statistics at each snapshot.

    Atoms are lost on surface penetration or when |x| crosses the lateral
    mirror boundary.  Statistics are computed by exact dense-output
    interpolation at the snapshot times.  The result is bit-identical for
    any ``threads`` value.
    """
    snap = np.asarray(spec.snapshot_times, dtype=float)
    t_end = float(snap[-1])
    indices = np.arange(spec.n_atoms)
    threads = max(1, int(threads))
    n_chunks = min(spec.n_atoms, threads * 4) if threads > 1 else 1
    chunks = np.array_split(indices, n_chunks)
    payloads = [(spec, species, model, tol, ch, t_end, kick_factor, x_limit, h_max)
                for ch in chunks if ch.size]

    states = np.empty((spec.n_atoms, snap.size, 4))
    alive = np.empty((spec.n_atoms, snap.size), dtype=bool)
    records = []
    if threads == 1 or len(payloads) == 1:
        results = [_run_chunk(p) for p in payloads]
    else:
        ctx = mp.get_context("fork") if hasattr(os, "fork") else None
        with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
            results = list(pool.map(_run_chunk, payloads))
    for idx, st, al, recs in results:
        states[idx] = st
        alive[idx] = al
        records.extend(recs)
    records.sort(key=lambda r: (r[0], r[1]))

    n_snap = snap.size
    mean_y = np.full(n_snap, np.nan)
    rms_x = np.full(n_snap, np.nan)
    rms_y = np.full(n_snap, np.nan)
    mean_vx = np.full(n_snap, np.nan)
    rms_vx = np.full(n_snap, np.nan)
    n_surv = np.zeros(n_snap, dtype=np.int64)
    for j in range(n_snap):
        mask = alive[:, j]
        n_surv[j] = int(mask.sum())
        if n_surv[j] == 0:
            continue
        xs = states[mask, j, 0]
        ys = states[mask, j, 1]
        vxs = states[mask, j, 2]
        mean_y[j] = ys.mean()
        rms_x[j] = xs.std()
        rms_y[j] = ys.std()
        mean_vx[j] = vxs.mean()
        rms_vx[j] = vxs.std()
    return CloudTimeSeries(t=snap.copy(), mean_y=mean_y, rms_x=rms_x, rms_y=rms_y,
                           mean_vx=mean_vx, rms_vx=rms_vx, n_survivors=n_surv,
                           n_atoms=spec.n_atoms, bounce_records=records)
