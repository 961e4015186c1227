"""Reduced ground-state observables from frequency moments.

Everything here is a function of three moments of pi(omega):
M1 = <<omega>>, Minv = <<1/omega>>, M2 = <<omega^2>>.  The reduced state
is Gaussian with zero means, var_x = hbar Minv / 2m and
var_p = hbar m M1 / 2; the pair (omega_c, n_bar_c) re-expresses it as a
thermal state at the effective frequency omega_c = sqrt(M1/Minv), which
reproduces both variances identically.

Works on any solution object exposing the moment surface: either a
fano.SpectralSolution or anything with a ``power_moment(k)`` method
(the oracle's normal-mode decomposition does this).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .errors import InternalConsistencyError
from .fano import frequency_moment
from .spectra import UnitSystem

# Below this, a negative occupation is round-off; at or beyond it, the
# Cauchy-Schwarz invariant M1*Minv >= 1 is genuinely broken.
OCCUPATION_CLAMP = -1e-12

IDENTITY_TOL = 1e-9
SUM_RULE_TOL = 1e-6


def _power_moment(sol, k: int) -> float:
    pm = getattr(sol, "power_moment", None)
    if pm is not None:
        return float(pm(k))
    return frequency_moment(sol, k)


@dataclass(frozen=True)
class GroundStateSummary:
    """All scalar observables of the reduced oscillator state."""

    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    sym_xp: float
    quad_x_unc: float
    quad_p_unc: float
    omega_c: float
    n_bar_c: float
    T_eff: float
    entropy: float
    mutual_info: float
    mean_energy: float

    def to_json_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def report_block(self) -> str:
        """Human-readable summary, one observable per line."""
        lines = [
            "ground state of the damped oscillator",
            f"  var_x        = {self.var_x:.12g}",
            f"  var_p        = {self.var_p:.12g}",
            f"  quad unc     = {self.quad_x_unc:.9g} (x), {self.quad_p_unc:.9g} (p)",
            f"  omega_c      = {self.omega_c:.12g}",
            f"  n_bar_c      = {self.n_bar_c:.12g}",
            f"  T_eff        = {self.T_eff:.12g}",
            f"  entropy      = {self.entropy:.12g} nats",
            f"  mutual info  = {self.mutual_info:.12g} nats",
            f"  mean energy  = {self.mean_energy:.12g}",
        ]
        return "\n".join(lines)


def effective_frequency(sol) -> float:
    """omega_c = sqrt(<<omega>> / <<1/omega>>)."""
    return math.sqrt(_power_moment(sol, 1) / _power_moment(sol, -1))


def thermal_occupation(sol) -> float:
    """n_bar_c = (sqrt(<<omega>> <<1/omega>>) - 1)/2, clamped at round-off."""
    n = 0.5 * (math.sqrt(_power_moment(sol, 1) * _power_moment(sol, -1)) - 1.0)
    if n < 0.0:
        if n > OCCUPATION_CLAMP:
            return 0.0
        raise InternalConsistencyError(
            f"thermal occupation {n} is negative beyond round-off; "
            "the moment inequality <<omega>><<1/omega>> >= 1 is broken"
        )
    return n


def effective_temperature(sol, units: UnitSystem) -> float:
    """T_eff = hbar omega_c / ln(1 + 1/n_bar_c), with k_B = 1; zero when n_bar_c = 0."""
    n = thermal_occupation(sol)
    if n == 0.0:
        return 0.0
    return units.hbar * effective_frequency(sol) / math.log1p(1.0 / n)


def entanglement_entropy(sol) -> float:
    """S = (n+1) ln(n+1) - n ln n in nats; 0 at n = 0."""
    n = thermal_occupation(sol)
    if n == 0.0:
        return 0.0
    return (n + 1.0) * math.log1p(n) - n * math.log(n)


def mean_energy(sol, units: UnitSystem) -> float:
    """E = (hbar omega0 / 4)(<<omega>>/omega0 + omega0 <<1/omega>>)."""
    w0 = units.omega0
    return 0.25 * units.hbar * w0 * (_power_moment(sol, 1) / w0 + w0 * _power_moment(sol, -1))


def characteristic_function(sol, xi_r: float, xi_i: float, units: UnitSystem | None = None) -> float:
    """chi(xi) = exp(-(<<omega>>/omega0 xi_r^2 + omega0 <<1/omega>> xi_i^2)/2)."""
    w0 = units.omega0 if units is not None else 1.0
    m1 = _power_moment(sol, 1)
    minv = _power_moment(sol, -1)
    return math.exp(-0.5 * (m1 / w0 * xi_r * xi_r + w0 * minv * xi_i * xi_i))


def ground_state_moments(sol, units: UnitSystem) -> GroundStateSummary:
    """Full observable bundle; means and sym_xp vanish by construction."""
    hbar, m, w0 = units.hbar, units.mass, units.omega0
    m1 = _power_moment(sol, 1)
    minv = _power_moment(sol, -1)
    var_x = hbar * minv / (2.0 * m)
    var_p = hbar * m * m1 / 2.0
    n = thermal_occupation(sol)
    wc = effective_frequency(sol)
    return GroundStateSummary(
        mean_x=0.0,
        mean_p=0.0,
        var_x=var_x,
        var_p=var_p,
        sym_xp=0.0,
        quad_x_unc=math.sqrt(0.5 * w0 * minv),
        quad_p_unc=math.sqrt(0.5 * m1 / w0),
        omega_c=wc,
        n_bar_c=n,
        T_eff=effective_temperature(sol, units),
        entropy=entanglement_entropy(sol),
        mutual_info=2.0 * entanglement_entropy(sol),
        mean_energy=mean_energy(sol, units),
    )


def uncoupled_summary(units: UnitSystem) -> GroundStateSummary:
    """Closed-form textbook values for V identically zero."""
    hbar, m, w0 = units.hbar, units.mass, units.omega0
    return GroundStateSummary(
        mean_x=0.0, mean_p=0.0,
        var_x=hbar / (2.0 * m * w0),
        var_p=hbar * m * w0 / 2.0,
        sym_xp=0.0,
        quad_x_unc=math.sqrt(0.5),
        quad_p_unc=math.sqrt(0.5),
        omega_c=w0, n_bar_c=0.0, T_eff=0.0,
        entropy=0.0, mutual_info=0.0,
        mean_energy=0.5 * hbar * w0,
    )


@dataclass(frozen=True)
class IdentityReport:
    """Defects of the algebraic identities tying the two representations."""

    thermal_frequency_defect: float   # (n+1/2) omega_c - <<omega>>/2
    var_x_mixture_defect: float       # var_x vs (2n+1) hbar / (2 m omega_c), relative
    var_p_mixture_defect: float       # var_p vs (2n+1) hbar m omega_c / 2, relative
    mutual_info_defect: float         # mutual_info - 2 entropy
    sum_rule_defect: float            # |<<omega^2>> - omega0^2| / omega0^2
    ok: bool


def interpretation_identities(sol, units: UnitSystem | None = None) -> IdentityReport:
    """Check the thermal reinterpretation against the direct moments.

    The first four identities are algebraic consequences of the
    definitions; a defect above 1e-9 means an implementation bug and
    raises.  The last is the omega^2 sum rule at its physics tolerance.
    """
    units = units or UnitSystem()
    hbar, m, w0 = units.hbar, units.mass, units.omega0
    s = ground_state_moments(sol, units)
    m1 = _power_moment(sol, 1)
    m2 = _power_moment(sol, 2)

    d_freq = abs((s.n_bar_c + 0.5) * s.omega_c - 0.5 * m1) / (0.5 * m1)
    vx_ref = (2.0 * s.n_bar_c + 1.0) * hbar / (2.0 * m * s.omega_c)
    vp_ref = (2.0 * s.n_bar_c + 1.0) * hbar * m * s.omega_c / 2.0
    d_vx = abs(s.var_x - vx_ref) / vx_ref
    d_vp = abs(s.var_p - vp_ref) / vp_ref
    d_mi = abs(s.mutual_info - 2.0 * s.entropy)
    d_sum = abs(m2 - w0 * w0) / (w0 * w0)

    algebraic = {
        "thermal_frequency": d_freq,
        "var_x_mixture": d_vx,
        "var_p_mixture": d_vp,
        "mutual_info": d_mi,
    }
    for name, defect in algebraic.items():
        if defect > IDENTITY_TOL:
            raise InternalConsistencyError(
                f"identity '{name}' broken: defect {defect:.3e} > {IDENTITY_TOL}"
            )
    ok = d_sum <= SUM_RULE_TOL
    if not ok:
        raise InternalConsistencyError(
            f"potential coefficient <<omega^2>> deviates from omega0^2 by {d_sum:.3e}"
        )
    return IdentityReport(
        thermal_frequency_defect=d_freq,
        var_x_mixture_defect=d_vx,
        var_p_mixture_defect=d_vp,
        mutual_info_defect=d_mi,
        sum_rule_defect=d_sum,
        ok=ok,
    )
