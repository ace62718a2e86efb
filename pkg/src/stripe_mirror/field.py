"""Magnetic field above a periodic array of in-plane-magnetized stripes.

Two complementary descriptions are provided:

* the infinite-array harmonic expansion (first and third spatial harmonics,
  with duty-cycle factors sin(n*pi*c/a) for stripe width c != a/2), and
* an exact finite-array model in which every stripe contributes two
  magnetic-charge line-sheets of surface charge +-M0 on its x-faces.

The exact model is the oracle the expansion is validated against.

Geometry: stripes run along z, are periodic along x with period ``a``, have
width ``c`` and thickness ``b``; the magnetic layer occupies -b <= y <= 0 and
all evaluations happen in the vacuum above it (y > 0).  The center stripe is
centered on x = 0.  A uniform bias field may be applied along z; the stripe
array itself produces no z-component.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .constants import CONSTANTS
from .errors import DomainError, ValidationError

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MirrorSpec:
    """Geometry and magnetization of the stripe array.

    Parameters
    ----------
    period_a : float
        Spatial period of the magnetization pattern [m].
    stripe_width_c : float
        Width of each magnetized stripe [m]; 0 < c < a.
    layer_thickness_b : float
        Thickness of the magnetic layer [m].
    magnetization_M0 : float
        In-plane magnetization of the stripes [A/m].
    n_stripes : float
        Number of stripes; ``math.inf`` selects the infinite-array
        expansion, a finite value must be an odd integer so a center
        stripe exists and x = 0 sits on the symmetry axis.
    bias_field_Bz : float
        Uniform bias field along the stripe axis z [T].
    """

    period_a: float
    stripe_width_c: float
    layer_thickness_b: float
    magnetization_M0: float
    n_stripes: float = math.inf
    bias_field_Bz: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.stripe_width_c < self.period_a):
            raise ValidationError(
                "invariant violated: 0 < stripe_width_c < period_a "
                f"(got c={self.stripe_width_c!r}, a={self.period_a!r})"
            )
        if self.layer_thickness_b <= 0.0:
            raise ValidationError(
                f"invariant violated: layer_thickness_b > 0 (got {self.layer_thickness_b!r})"
            )
        if self.magnetization_M0 <= 0.0:
            raise ValidationError(
                f"invariant violated: magnetization_M0 > 0 (got {self.magnetization_M0!r})"
            )
        if not math.isinf(self.n_stripes):
            n = self.n_stripes
            if n != int(n) or int(n) < 1 or int(n) % 2 == 0:
                raise ValidationError(
                    f"invariant violated: n_stripes odd positive integer or inf (got {n!r})"
                )

    @property
    def k(self) -> float:
        """Wavenumber 2*pi/a of the magnetization pattern [1/m]."""
        return _TWO_PI / self.period_a

    @property
    def duty(self) -> float:
        """Duty cycle c/a of the stripe pattern."""
        return self.stripe_width_c / self.period_a

    @classmethod
    def from_surface_field(cls, b1_target, period_a, stripe_width_c,
                           layer_thickness_b, n_stripes=math.inf,
                           bias_field_Bz=0.0) -> "MirrorSpec":
        """Back-solve the magnetization that gives first-harmonic amplitude ``b1_target``."""
        m0 = m0_for_surface_field(b1_target, period_a, stripe_width_c, layer_thickness_b)
        return cls(period_a, stripe_width_c, layer_thickness_b, m0,
                   n_stripes=n_stripes, bias_field_Bz=bias_field_Bz)


def m0_for_surface_field(b1_target, period_a, stripe_width_c, layer_thickness_b) -> float:
    """Magnetization [A/m] whose first harmonic equals ``b1_target`` [T]."""
    if b1_target <= 0.0:
        raise ValidationError(f"target surface field must be positive (got {b1_target!r})")
    k = _TWO_PI / period_a
    duty1 = math.sin(math.pi * stripe_width_c / period_a)
    denom = CONSTANTS.mu0 * (1.0 - math.exp(-k * layer_thickness_b)) * duty1 / math.pi
    if denom <= 0.0:
        raise ValidationError("geometry gives a vanishing first harmonic; cannot back-solve M0")
    return b1_target / denom


@dataclass(frozen=True)
class HarmonicCoefficients:
    """First/third harmonic amplitudes of the stripe-array field.

    ``B1`` and ``B3`` are magnitudes; the sign of the third harmonic's
    duty factor (the corrugation phase) is kept in ``duty_b3``.
    """

    B1: float        # first-harmonic amplitude [T], >= 0
    B3: float        # third-harmonic amplitude [T], >= 0
    k: float         # wavenumber [1/m]
    duty_b1: float   # sin(pi c/a), applied to B1
    duty_b3: float   # sin(3 pi c/a), signed; |.| applied to B3

    @property
    def b3_signed(self) -> float:
        """Third-harmonic amplitude with its corrugation sign restored."""
        return self.B3 if self.duty_b3 >= 0.0 else -self.B3


def harmonic_coefficients(spec: MirrorSpec) -> HarmonicCoefficients:
    """Duty-corrected harmonic amplitudes of the field above the array.

    B1 = [mu0*M0*(1 - e^(-kb))/pi]   * sin(pi c/a)
    B3 = [mu0*M0*(1 - e^(-3kb))/3pi] * sin(3 pi c/a)
    """
    k = spec.k
    kb = k * spec.layer_thickness_b
    pref = CONSTANTS.mu0 * spec.magnetization_M0 / math.pi
    duty_b1 = math.sin(math.pi * spec.duty)
    duty_b3 = math.sin(3.0 * math.pi * spec.duty)
    b1 = pref * (1.0 - math.exp(-kb)) * duty_b1
    b3 = pref * (1.0 - math.exp(-3.0 * kb)) / 3.0 * duty_b3
    return HarmonicCoefficients(B1=abs(b1), B3=abs(b3), k=k,
                                duty_b1=duty_b1, duty_b3=duty_b3)


@dataclass(frozen=True)
class FieldVector:
    """Magnetic field vector with precomputed magnitude [T]."""

    Bx: float
    By: float
    Bz: float
    magnitude: float = dc_field(default=0.0)

    @classmethod
    def of(cls, bx, by, bz) -> "FieldVector":
        return cls(bx, by, bz, math.sqrt(bx * bx + by * by + bz * bz))


def _require_above_surface(y):
    if np.any(np.asarray(y) <= 0.0):
        raise DomainError("field model is valid only above the surface (y > 0)")


def field_two_term(spec: MirrorSpec, x, y) -> float:
    """|B| from the two-term approximation, bias added in quadrature.

    B_mirror = B1 e^(-ky) + B3 e^(-3ky) cos(2kx), |B| = sqrt(B_mirror^2 + Bz^2).
    """
    _require_above_surface(y)
    co = harmonic_coefficients(spec)
    e1 = np.exp(-co.k * np.asarray(y, dtype=float))
    bm = co.B1 * e1 + co.b3_signed * e1 ** 3 * np.cos(2.0 * co.k * np.asarray(x, dtype=float))
    out = np.sqrt(bm * bm + spec.bias_field_Bz ** 2)
    return float(out) if np.isscalar(x) and np.isscalar(y) else out


def field_full_expansion(spec: MirrorSpec, x, y) -> float:
    """|B| from the three-term squared expansion, bias added in quadrature.

    B^2 = B1^2 e^(-2ky) + 2 B1 B3 cos(2kx) e^(-4ky) + B3^2 e^(-9ky).

    The third term's decay exponent is kept as 9k rather than the 6k a
    squared two-harmonic sum would carry; the term is negligible at every
    height where the expansion itself is trustworthy, see README.
    """
    _require_above_surface(y)
    co = harmonic_coefficients(spec)
    e1 = np.exp(-co.k * np.asarray(y, dtype=float))
    c2x = np.cos(2.0 * co.k * np.asarray(x, dtype=float))
    b3s = co.b3_signed
    bsq = (co.B1 ** 2 * e1 ** 2
           + 2.0 * co.B1 * b3s * c2x * e1 ** 4
           + co.B3 ** 2 * e1 ** 9)
    if np.any(bsq < 0.0):
        raise DomainError(
            "three-term expansion gives negative B^2 here; the printed-exponent "
            "form has broken down (evaluate further above the surface)"
        )
    out = np.sqrt(bsq + spec.bias_field_Bz ** 2)
    return float(out) if np.isscalar(x) and np.isscalar(y) else out


def expansion_field_vector(spec: MirrorSpec, x, y):
    """(Bx, By) of the two-harmonic expansion in vector form.

    Bx = -(B1 cos(kx) e^(-ky) + B3s cos(3kx) e^(-3ky))
    By =   B1 sin(kx) e^(-ky) + B3s sin(3kx) e^(-3ky)

    The phase convention matches the charge-sheet model with the center
    stripe magnetized along +x and centered on x = 0.
    """
    _require_above_surface(y)
    co = harmonic_coefficients(spec)
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    e1 = np.exp(-co.k * yv)
    e3 = e1 ** 3
    b3s = co.b3_signed
    bx = -(co.B1 * np.cos(co.k * xv) * e1 + b3s * np.cos(3.0 * co.k * xv) * e3)
    by = co.B1 * np.sin(co.k * xv) * e1 + b3s * np.sin(3.0 * co.k * xv) * e3
    return bx, by


def _stripe_faces(spec: MirrorSpec):
    """Positions and weights (units of M0) of all charge sheets.

    Models the zero-mean, alternating-equivalent magnetization pattern:
    stripes at +M0(1 - c/a), gaps at -M0 c/a.  Every interior stripe
    boundary then carries the same +-M0 sheet as the raw stripe array
    (+M0 on +x faces, -M0 on -x faces), and the window terminates with
    two compensation sheets of weight -+c/a at the mid-gap cut +-n a/2.
    Without the mean removal a finite window of same-sign stripes keeps a
    net dipole moment per period, whose non-decaying background field
    scales as 1/n and swamps the exponentially small field at y >~ a.
    The mid-gap cut makes each unit cell symmetric (zero dipole and
    quadrupole), leaving a residual that falls off as 1/n^3.
    """
    if math.isinf(spec.n_stripes):
        raise ValidationError("exact field requires a finite (odd) n_stripes")
    n = int(spec.n_stripes)
    half = (n - 1) // 2
    centers = (np.arange(-half, half + 1, dtype=float)) * spec.period_a
    duty = spec.duty
    face_x = np.concatenate([centers + 0.5 * spec.stripe_width_c,
                             centers - 0.5 * spec.stripe_width_c,
                             [0.5 * n * spec.period_a, -0.5 * n * spec.period_a]])
    face_weight = np.concatenate([np.ones(n), -np.ones(n), [-duty, duty]])
    return face_x, face_weight


def exact_field_arrays(spec: MirrorSpec, x, y):
    """(Bx, By) of the stripe array at points (x, y), vectorized.

    Finite arrays sum the charge sheets of `_stripe_faces`; each sheet
    spans -b <= y' <= 0 at fixed x' with surface charge sigma:

        Bx = mu0 sigma/(2 pi) * [atan((y+b)/dx) - atan(y/dx)]
        By = mu0 sigma/(4 pi) * ln[(dx^2 + (y+b)^2) / (dx^2 + y^2)]

    The arctan difference is evaluated through the identity
    atan(u) - atan(v) = atan((u-v)/(1+uv)) (valid here since u*v > 0),
    which avoids cancellation for thin layers; the log uses log1p.
    An infinite n_stripes selects the closed-form periodic sum instead.
    """
    _require_above_surface(y)
    if math.isinf(spec.n_stripes):
        return periodic_field_arrays(spec, x, y)
    face_x, face_weight = _stripe_faces(spec)
    xv, yv = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = xv.shape
    xf = xv.ravel()
    yf = yv.ravel()
    b = spec.layer_thickness_b
    pref = CONSTANTS.mu0 * spec.magnetization_M0 / _TWO_PI
    bx = np.zeros(xf.shape)
    by = np.zeros(xf.shape)
    # chunk evaluation points so the (points x faces) temporaries stay small
    chunk = max(1, int(4e6 // max(1, face_x.size)))
    for i0 in range(0, xf.size, chunk):
        sl = slice(i0, i0 + chunk)
        dx = xf[sl, None] - face_x[None, :]
        yy = yf[sl, None]
        d2 = dx * dx
        bx_terms = np.arctan2(b * dx, d2 + yy * (yy + b))
        by_terms = 0.5 * np.log1p((2.0 * yy * b + b * b) / (d2 + yy * yy))
        bx[sl] = (bx_terms * face_weight).sum(axis=1)
        by[sl] = (by_terms * face_weight).sum(axis=1)
    bx *= pref
    by *= pref
    return bx.reshape(shape), by.reshape(shape)


def periodic_field_arrays(spec: MirrorSpec, x, y):
    """(Bx, By) of the infinite periodic array in closed form.

    Summing the charge-sheet kernel over all periods gives the complex
    field (Bx - i By) as a log of a ratio of four sines,

        B* = (i mu0 M0 / 2 pi) ln[ sin(q(z - c/2)) sin(q(z + c/2 + ib))
                                 / (sin(q(z - c/2 + ib)) sin(q(z + c/2))) ],

    with q = pi/a and z = x + iy.  Expanding for large y reproduces every
    harmonic B_n = mu0 M0 (1 - e^(-nkb)) sin(n pi c/a)/(n pi) exactly, so
    this is an all-harmonic reference independent of the truncated
    three-term expansion.  Valid above the surface (the total in-plane
    field stays below mu0 M0 / 2, so the single principal log suffices).
    """
    _require_above_surface(y)
    z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    q = math.pi / spec.period_a
    c2 = 0.5 * spec.stripe_width_c
    ib = 1j * spec.layer_thickness_b
    ratio = (np.sin(q * (z - c2)) * np.sin(q * (z + c2 + ib))
             / (np.sin(q * (z - c2 + ib)) * np.sin(q * (z + c2))))
    bstar = (1j * CONSTANTS.mu0 * spec.magnetization_M0 / _TWO_PI) * np.log(ratio)
    return np.real(bstar), -np.imag(bstar)


def field_exact_periodic(spec: MirrorSpec, x: float, y: float) -> FieldVector:
    """Exact infinite-array field vector (all harmonics, closed form)."""
    if y <= 0.0:
        raise DomainError(
            "evaluation point is inside or below the magnetic layer (need y > 0)"
        )
    bx, by = periodic_field_arrays(spec, x, y)
    return FieldVector.of(float(bx), float(by), spec.bias_field_Bz)


def field_exact(spec: MirrorSpec, x: float, y: float) -> FieldVector:
    """Exact field vector of the finite stripe array at a single point.

    Bz is the bias field alone; the stripes contribute no z-component.
    """
    if y <= 0.0:
        raise DomainError(
            "evaluation point is inside or below the magnetic layer (need y > 0)"
        )
    bx, by = exact_field_arrays(spec, x, y)
    return FieldVector.of(float(bx), float(by), spec.bias_field_Bz)


def field_direction_angle(spec: MirrorSpec, x, y, method: str = "expansion"):
    """In-plane field direction atan2(By, Bx) [rad].

    The direction advances by 2*pi as x advances by one period at fixed
    height; in the single-harmonic regime it does not depend on y.
    """
    if method == "expansion":
        bx, by = expansion_field_vector(spec, x, y)
    elif method == "exact":
        bx, by = exact_field_arrays(spec, x, y)
    else:
        raise ValidationError(f"unknown direction method {method!r}")
    mag = np.hypot(bx, by)
    if np.any(mag < 1e-300):
        raise DomainError("in-plane field vanishes here; direction angle undefined")
    ang = np.arctan2(by, bx)
    return float(ang) if np.isscalar(x) and np.isscalar(y) else ang
