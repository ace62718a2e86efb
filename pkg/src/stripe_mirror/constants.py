"""Physical constants: the single authoritative table used everywhere.

All internal arithmetic is strictly SI (T, m, kg, s, J); other units exist
only at the CLI boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    mu0: float = 4.0e-7 * math.pi  # vacuum permeability [T*m/A]
    g_grav: float = 9.81           # gravitational acceleration [m/s^2]
    mu_B: float = 9.2740e-24       # Bohr magneton [J/T]
    k_B: float = 1.3807e-23        # Boltzmann constant [J/K]
    hbar: float = 1.0546e-34       # reduced Planck constant [J*s]


CONSTANTS = PhysicalConstants()
