"""Electrostatic interaction of two induced dipoles in the cavity.

An external static field E0 induces dipoles alpha_A(0) E0 and
alpha_B(0) E0; their interaction is expressed through three dimensionless
modified-Bessel sums

    V00 = 4 sum_n n^2 K0(2 pi r n / d),
    Vpp = -(1/2) sum_{odd n} [n^2 K0(pi r n/d) + (2d/(pi r)) n K1(pi r n/d)],
    Vpm = -(1/2) sum_{odd n} n^2 K0(pi r n/d),

which converge to the free-space values d^3/(4 pi^2 r^3),
-3 d^3/(8 pi^2 r^3) and -d^3/(8 pi^2 r^3) as r/d -> 0.  The potentials of
both atoms coincide with the phase-shift rate (no factor 1/2 here: the
calculation is first order in the coupling of each atom).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .atoms import TwoAtomConfig
from .bessel import bessel_k
from .errors import ConfigError, DegenerateError
from .green import CavityGeometry
from .quadrature import SeriesSpec, sum_until_converged
from .vdw import ChannelContribution, EnergyResult

__all__ = [
    "StaticField",
    "StaticPotentialTensor",
    "v_static_dimensionless",
    "v_static_free",
    "w_static_full",
    "static_interaction_from_tensor",
]

PI = math.pi

#: below this r/d the Bessel sums need ~10^4+ terms; the free-space forms
#: are accurate to well under 0.1% there (they are the r/d -> 0 limit)
FREE_SPACE_SWITCH = 0.005


@dataclass(frozen=True)
class StaticField:
    """Static field in spherical components (E0, E+, E-), V/m.

    Only fields equivalent to a real Cartesian vector are accepted: the
    quadratic field pairings in the interaction are unambiguous only in
    that case.
    """

    e0_spherical: tuple[complex, complex, complex]

    def __post_init__(self):
        e0, ep, em = self.e0_spherical
        if not all(np.isfinite([abs(e0), abs(ep), abs(em)])):
            raise ConfigError("static field components must be finite")
        if abs(complex(e0).imag) > 1e-12 * abs(e0) or \
                abs(np.conj(ep) - em) > 1e-12 * max(abs(ep), abs(em), 1e-300):
            raise ConfigError(
                "complex static fields are rejected: need real E0_z and "
                "E- = conj(E+)")

    @classmethod
    def from_cartesian(cls, ex: float, ey: float, ez: float) -> "StaticField":
        for name, v in (("ex", ex), ("ey", ey), ("ez", ez)):
            if isinstance(v, complex) and v.imag != 0:
                raise ConfigError(f"{name}: complex static fields are "
                                  "rejected")
        ex, ey, ez = float(ex), float(ey), float(ez)
        return cls((ez, (ex + 1j * ey) / math.sqrt(2),
                    (ex - 1j * ey) / math.sqrt(2)))


@dataclass(frozen=True)
class StaticPotentialTensor:
    v00: float
    vpp: float
    vpm: float
    n_used: tuple[int, int, int]
    note: str = ""

    def as_array(self):
        return np.array([self.v00, self.vpp, self.vpm])


def v_static_free(geom: CavityGeometry) -> StaticPotentialTensor:
    """Free-space (r/d -> 0) closed forms of the three components."""
    r, d = geom.r, geom.d
    pref = d**3 / (PI * PI * r**3)
    return StaticPotentialTensor(v00=pref / 4, vpp=-3 * pref / 8,
                                 vpm=-pref / 8, n_used=(0, 0, 0),
                                 note="free-space closed form")


def v_static_dimensionless(geom: CavityGeometry,
                           spec: SeriesSpec = SeriesSpec(),
                           ) -> StaticPotentialTensor:
    """Dimensionless electrostatic tensor from the Bessel-K mode sums.

    The (+-) and (++) sums run over odd n with weight -1/2 each; for
    r/d below ``FREE_SPACE_SWITCH`` the free-space limits are returned
    directly (documented in ``note``).
    """
    r, d = geom.r, geom.d
    if r / d < FREE_SPACE_SWITCH:
        free = v_static_free(geom)
        return StaticPotentialTensor(
            free.v00, free.vpp, free.vpm, (0, 0, 0),
            note=f"r/d = {r / d:.2e} < {FREE_SPACE_SWITCH}: free-space "
                 "limit used")
    x = PI * r / d

    v00, n00 = sum_until_converged(
        lambda n: 4.0 * n * n * bessel_k(0, 2 * x * n), spec)

    def vpp_term(m):
        n = 2 * m - 1
        return -0.5 * (n * n * bessel_k(0, x * n)
                       + (2 * d / (PI * r)) * n * bessel_k(1, x * n))

    vpp, npp = sum_until_converged(vpp_term, spec)

    def vpm_term(m):
        n = 2 * m - 1
        return -0.5 * n * n * bessel_k(0, x * n)

    vpm, npm = sum_until_converged(vpm_term, spec)
    return StaticPotentialTensor(v00, vpp, vpm, (n00, npp, npm))


def static_interaction_from_tensor(config: TwoAtomConfig, field: StaticField,
                                   tensor: StaticPotentialTensor,
                                   ) -> EnergyResult:
    """Assemble the dimensional interaction from a given tensor.

    V_AB = 4 pi/(eps0 hbar^2 d^3) sum_ij [ ... ] / (w_ia w_jb)

    with the spherical pairings of |<i|d|a>|^2, |<j|d|b>|^2 and the field
    quadratics; both potentials and the phase shift coincide.
    """
    cn = config.constants
    geom = config.geometry
    a, b = config.state_a, config.state_b
    A, B = config.atom_a, config.atom_b
    e0, ep, em = field.e0_spherical
    e2_0 = abs(e0) ** 2
    e2_p = abs(ep) ** 2
    e2_m = abs(em) ** 2
    e2_x = abs(ep) * abs(em)
    pref = 4 * PI / (cn.epsilon0 * cn.hbar**2 * geom.d**3)
    total = 0.0
    breakdown = []
    for i in A.coupled_to(a):
        omega_ia = A.omega(i) - A.omega(a)
        if omega_ia == 0.0:
            raise DegenerateError(f"omega_ia = 0 for channel i={i}")
        pa = np.abs(A.dipole(i, a)) ** 2          # |<i|d^p|a>|^2, (0,+,-)
        for j in B.coupled_to(b):
            omega_jb = B.omega(j) - B.omega(b)
            if omega_jb == 0.0:
                raise DegenerateError(f"omega_jb = 0 for channel j={j}")
            pb = np.abs(B.dipole(j, b)) ** 2
            phi = ((pa[1] * pb[1] * e2_p + pa[2] * pb[2] * e2_m) * tensor.vpp
                   + pa[0] * pb[0] * e2_0 * tensor.v00
                   + (pa[1] * pb[2] + pa[2] * pb[1]) * e2_x * tensor.vpm)
            w = pref * phi / (omega_ia * omega_jb)
            total += w
            breakdown.append(ChannelContribution(i, j, "static", 0.0,
                                                 w, w, w))
    return EnergyResult(total, total, total, total / cn.hbar, "static",
                        breakdown)


def w_static_full(config: TwoAtomConfig, field: StaticField,
                  spec: SeriesSpec = SeriesSpec()) -> EnergyResult:
    """Full dimensional electrostatic potential under a static field."""
    tensor = v_static_dimensionless(config.geometry, spec)
    return static_interaction_from_tensor(config, field, tensor)
