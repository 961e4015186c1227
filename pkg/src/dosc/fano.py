"""Continuum diagonalisation core.

For an admissible coupling spectrum the dressed-mode expansion of the
oscillator annihilation operator has coefficients alpha(omega),
beta(omega) fixed, up to phase, by the function

    Y(omega) = [ 2(omega^2 - omega0^2)/omega0 - I(omega) ] / |V(omega)|^2,

    I(omega) = PV int |V(w')|^2/(omega - w') dw'
             -    int |V(w')|^2/(omega + w') dw',

both integrals over the coupling support.  From Y the oscillator weight
per dressed mode follows:

    |alpha(omega)|^2 = (omega + omega0)^2 / (omega0^2 |V|^2 (Y^2 + pi^2)),
    beta/alpha       = (omega - omega0) / (omega + omega0),

and the ground-state frequency density is

    pi(omega) = |alpha(omega)|^2 * 4 omega0 omega / (omega0 + omega)^2,

normalised to one.  This module computes all of these on an adaptively
refined grid and exposes the moment functional << f(omega) >>.

Numerical form: everything is built from N(omega) = Y * |V|^2, which
stays finite in the far tails where Y itself overflows;
|alpha|^2 = (omega+omega0)^2 |V|^2 / (omega0^2 (N^2 + pi^2 |V|^4)).

Grid strategy: a logarithmic base grid over (omega_max * 1e-6, omega_max]
inside the support, geometric ladders into any sharp support edge, seed
clusters around each resonance (zero of N, located by bisection scan),
then interval bisection wherever pi jumps by more than 1% of its peak or
the local curvature indicator says the normalisation error budget is
threatened.  Refinement stops when the norm defect and the omega^2 sum
rule are both within tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .errors import (AliasingError, ConvergenceError, OutsideSupportError,
                     UsageError)
from .quadrature import PrincipalValueSpec, cauchy_pv, integrate
from .spectra import CouplingSpectrum, UnitSystem, require_admissible

NORM_TOL = 1e-6
SUM_TOL = 1e-6

BASE_POINTS = 320
SCAN_POINTS = 160
MAX_NODES = 30000
MAX_ROUNDS = 24

# Relative distance kept clear of a sharp support edge; Y diverges
# logarithmically there, so pi -> 0 and the skipped sliver carries
# no weight at the tolerances in use.
EDGE_MARGIN = 1e-7


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Sorted frequency nodes in (0, omega_max], with build metadata."""

    nodes: np.ndarray
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 4:
            raise UsageError("grid needs a 1-d array of at least 4 nodes")
        if not np.all(np.diff(nodes) > 0):
            raise UsageError("grid nodes must be strictly increasing")
        if nodes[0] <= 0:
            raise UsageError("grid nodes must be strictly positive")
        object.__setattr__(self, "nodes", nodes)

    def __len__(self):
        return self.nodes.size


@dataclass(frozen=True, eq=False)
class SpectralSolution:
    """Y, |alpha|^2, beta/alpha and pi on a grid, plus provenance.

    ``spec`` and ``units`` are carried so that dynamics and diagnostics
    can evaluate the dispersion integrals at new frequencies without
    re-supplying context.  Instances are immutable.
    """

    grid: SpectralGrid
    Y: np.ndarray
    alpha_sq: np.ndarray
    beta_ratio: np.ndarray
    pi: np.ndarray
    norm_defect: float
    spec: CouplingSpectrum
    units: UnitSystem
    meta: dict = field(default_factory=dict, repr=False)
    _moment_cache: dict = field(default_factory=dict, repr=False)

    @property
    def omegas(self) -> np.ndarray:
        return self.grid.nodes

    def to_csv(self, path) -> None:
        """Write columns omega, Y, alpha_sq, beta_ratio, pi at full precision."""
        data = np.column_stack([self.omegas, self.Y, self.alpha_sq, self.beta_ratio, self.pi])
        np.savetxt(path, data, fmt="%.17g", delimiter=",",
                   header="omega,Y,alpha_sq,beta_ratio,pi", comments="")


def _dispersion_parts(spec: CouplingSpectrum, omega: float) -> float:
    """I(omega): principal-value part minus the regular 1/(omega+w') part."""
    lo = spec.support_lower
    hi = spec.support_upper if math.isfinite(spec.support_upper) else math.inf
    vsq = spec.v_sq_scalar
    pv = cauchy_pv(vsq, PrincipalValueSpec(omega), lo, hi).value
    reg = integrate(lambda x: vsq(x) / (omega + x), lo, hi).value
    return pv - reg


def _n_value(spec: CouplingSpectrum, units: UnitSystem, omega: float) -> float:
    w0 = units.omega0
    return 2.0 * (omega * omega - w0 * w0) / w0 - _dispersion_parts(spec, omega)


def _n_values(spec, units, omegas) -> np.ndarray:
    return np.array([_n_value(spec, units, float(w)) for w in omegas])


def _inside_support(spec: CouplingSpectrum, omega: float) -> bool:
    return spec.support_lower < omega < spec.support_upper and spec.v_sq(omega) > 0.0


def _require_inside(spec: CouplingSpectrum, omega: float) -> None:
    if not (isinstance(omega, (int, float)) and math.isfinite(omega) and omega > 0):
        raise UsageError(f"omega must be a positive finite number, got {omega!r}")
    if not _inside_support(spec, omega):
        raise OutsideSupportError(
            f"omega = {omega} is outside the open coupling support "
            f"({spec.support_lower}, {spec.support_upper}); Y is undefined there"
        )


def compute_Y(spec: CouplingSpectrum, units: UnitSystem, omega: float) -> float:
    """Y(omega) at a single frequency strictly inside the support."""
    require_admissible(spec, units)
    _require_inside(spec, omega)
    return _n_value(spec, units, omega) / float(spec.v_sq(omega))


def compute_alpha_sq(spec: CouplingSpectrum, units: UnitSystem, omega: float) -> float:
    """|alpha(omega)|^2 at a single frequency strictly inside the support."""
    require_admissible(spec, units)
    _require_inside(spec, omega)
    w0 = units.omega0
    n = _n_value(spec, units, omega)
    vsq = float(spec.v_sq(omega))
    return (omega + w0) ** 2 * vsq / (w0 * w0 * (n * n + math.pi**2 * vsq * vsq))


def compute_beta_ratio(omega: float, omega0: float) -> float:
    """beta(omega)/alpha(omega) = (omega - omega0)/(omega + omega0)."""
    if not (omega > 0 and omega0 > 0):
        raise UsageError(f"need omega, omega0 > 0, got {omega}, {omega0}")
    return (omega - omega0) / (omega + omega0)


# ---------------------------------------------------------------------------
# grid construction

def _grid_bounds(spec: CouplingSpectrum) -> tuple[float, float, float]:
    """Open-interval node bounds (lo, hi) and the edge-ladder span."""
    lo_edge = max(spec.support_lower, 0.0)
    hi_edge = min(spec.omega_max, spec.support_upper)
    span = hi_edge - lo_edge
    if not span > 0:
        raise UsageError("empty effective support")
    lo = max(spec.omega_max * 1e-6, lo_edge + EDGE_MARGIN * span if lo_edge > 0 else 0.0)
    if math.isfinite(spec.support_upper) and spec.omega_max >= spec.support_upper:
        hi = spec.support_upper - EDGE_MARGIN * span
    else:
        hi = spec.omega_max
    if not lo < hi:
        raise UsageError(f"degenerate grid range [{lo}, {hi}]")
    return lo, hi, span


def _edge_ladders(spec: CouplingSpectrum, lo: float, hi: float, span: float) -> list[float]:
    pts: list[float] = []
    if spec.support_lower > 0:
        pts.extend(spec.support_lower + span * 10.0 ** (-k) for k in range(1, 8))
    if math.isfinite(spec.support_upper):
        pts.extend(spec.support_upper - span * 10.0 ** (-k) for k in range(1, 8))
    return [p for p in pts if lo <= p <= hi]


def _find_peaks(spec, units, lo, hi) -> list[tuple[float, float]]:
    """Zeros of N(omega) with local Lorentzian half-widths pi |V|^2 / |N'|."""
    lattice = np.geomspace(lo, hi, SCAN_POINTS)
    nvals = _n_values(spec, units, lattice)
    peaks: list[tuple[float, float]] = []
    for i in range(len(lattice) - 1):
        a, b = nvals[i], nvals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a * b >= 0:
            continue
        try:
            pk = brentq(lambda x: _n_value(spec, units, x), lattice[i], lattice[i + 1],
                        xtol=1e-14, rtol=1e-14)
        except ValueError:
            continue
        d = max(1e-6 * pk, 1e-9)
        d = min(d, 0.5 * (pk - lo), 0.5 * (hi - pk)) or d
        nprime = (_n_value(spec, units, pk + d) - _n_value(spec, units, pk - d)) / (2 * d)
        vsq = float(spec.v_sq(pk))
        if abs(nprime) > 0 and vsq > 0:
            width = math.pi * vsq / abs(nprime)
        else:
            width = 1e-3 * pk
        width = max(width, 1e-9 * units.omega0)
        width = min(width, 0.25 * min(pk - lo, hi - pk)) or width
        peaks.append((pk, width))
    return peaks


def _peak_cluster(pk: float, w: float, lo: float, hi: float) -> np.ndarray:
    core = pk + w * np.linspace(-8.0, 8.0, 97)
    pieces = [core]
    left_reach = 0.9 * (pk - lo)
    if left_reach > 8 * w:
        pieces.append(pk - w * np.geomspace(8.0, left_reach / w, 25))
    right_reach = 0.9 * (hi - pk)
    if right_reach > 8 * w:
        pieces.append(pk + w * np.geomspace(8.0, right_reach / w, 25))
    pts = np.concatenate(pieces)
    return pts[(pts > lo) & (pts < hi)]


def build_grid(spec: CouplingSpectrum, units: UnitSystem,
               base_points: int = BASE_POINTS) -> SpectralGrid:
    """Initial grid: log base + coarse linear comb + edge ladders + peak
    clusters.  Refinement to tolerance happens inside compute_pi."""
    if spec.is_zero():
        raise ConvergenceError(
            "coupling is identically zero: the frequency density is a point mass "
            "at omega0 and cannot be represented on a grid; ground-state "
            "observables reduce to the textbook closed forms",
            detail={"guidance": "use the closed-form path for V = 0"},
        )
    lo, hi, span = _grid_bounds(spec)
    parts = [
        np.geomspace(lo, hi, base_points),
        np.linspace(lo, hi, 64),
        np.array(_edge_ladders(spec, lo, hi, span)),
    ]
    peaks = _find_peaks(spec, units, lo, hi)
    for pk, w in peaks:
        parts.append(_peak_cluster(pk, w, lo, hi))
    nodes = np.unique(np.concatenate([p for p in parts if p.size]))
    nodes = nodes[(nodes >= lo) & (nodes <= hi)]
    return SpectralGrid(nodes, meta={"peaks": peaks, "base_points": base_points})


# ---------------------------------------------------------------------------
# solution assembly and refinement

def _assemble(spec, units, nodes, nvals):
    w0 = units.omega0
    w = nodes
    vsq = np.asarray(spec.v_sq(w), dtype=float)
    denom = nvals * nvals + (math.pi**2) * vsq * vsq
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha_sq = np.where(vsq > 0, (w + w0) ** 2 * vsq / (w0 * w0 * denom), 0.0)
        Y = np.where(vsq > 0, nvals / vsq, np.nan)
    pi = alpha_sq * (4.0 * w0 * w / (w0 + w) ** 2)
    beta = (w - w0) / (w + w0)
    return Y, alpha_sq, beta, pi


def _interval_error_indicator(w, pi, units):
    """Per-interval estimate of the normalisation/sum-rule error, from a
    three-point curvature proxy weighted towards high frequencies."""
    h = np.diff(w)
    slopes = np.diff(pi) / h
    curv = np.zeros_like(h)
    interior = np.abs(np.diff(slopes))
    curv[:-1] += 0.5 * interior
    curv[1:] += 0.5 * interior
    mid = 0.5 * (w[:-1] + w[1:])
    weight = 1.0 + (mid / units.omega0) ** 2
    return curv * h * h * weight


def compute_pi(spec: CouplingSpectrum, units: UnitSystem, grid: SpectralGrid, *,
               norm_tol: float = NORM_TOL, sum_tol: float = SUM_TOL,
               max_nodes: int = MAX_NODES, max_rounds: int = MAX_ROUNDS) -> SpectralSolution:
    """Evaluate pi on the grid and refine until the normalisation and the
    omega^2 sum rule both hold to tolerance.

    Raises ConvergenceError with diagnostics if the node budget runs out;
    a defect that stalls once the grid is dense usually means omega_max
    truncates real spectral weight.
    """
    if spec.is_zero():
        raise ConvergenceError(
            "coupling is identically zero: the frequency density is a point mass "
            "at omega0; use the closed-form path for V = 0",
        )
    require_admissible(spec, units)
    w0 = units.omega0

    nodes = grid.nodes.copy()
    nvals = _n_values(spec, units, nodes)

    defect = math.inf
    sum_defect = math.inf
    for round_no in range(max_rounds):
        Y, alpha_sq, beta, pi = _assemble(spec, units, nodes, nvals)
        norm = float(simpson(pi, x=nodes))
        m2 = float(simpson(pi * nodes * nodes, x=nodes))
        defect = abs(norm - 1.0)
        sum_defect = abs(m2 - w0 * w0) / (w0 * w0)

        jumps = np.abs(np.diff(pi)) > 0.01 * pi.max()
        converged = defect <= norm_tol and sum_defect <= sum_tol and not jumps.any()
        if converged:
            sol_grid = SpectralGrid(nodes, meta=dict(grid.meta))
            return SpectralSolution(
                grid=sol_grid, Y=Y, alpha_sq=alpha_sq, beta_ratio=beta, pi=pi,
                norm_defect=defect, spec=spec, units=units,
                meta={"rounds": round_no, "nodes": int(nodes.size),
                      "sum_defect": sum_defect},
            )

        err = _interval_error_indicator(nodes, pi, units)
        budget_per_interval = 0.25 * min(norm_tol, sum_tol) / err.size
        marked = jumps | (err > budget_per_interval)
        if not marked.any():
            order = np.argsort(err)[::-1]
            marked[order[:256]] = True
        # Largest offenders first if the budget cannot take them all.
        room = max_nodes - nodes.size
        idx = np.flatnonzero(marked)
        if idx.size > room:
            if room <= 0:
                break
            keep = np.argsort(err[idx])[::-1][:room]
            idx = idx[keep]
        mids = 0.5 * (nodes[idx] + nodes[idx + 1])
        new_n = _n_values(spec, units, mids)
        nodes = np.concatenate([nodes, mids])
        nvals = np.concatenate([nvals, new_n])
        order = np.argsort(nodes)
        nodes, nvals = nodes[order], nvals[order]

    raise ConvergenceError(
        "grid refinement exhausted its budget before reaching tolerance",
        detail={
            "norm_defect": defect, "sum_defect": sum_defect,
            "nodes": int(nodes.size), "rounds": max_rounds,
            "guidance": "if the defect has stalled, omega_max is probably "
                        "truncating spectral weight; raise it and rerun",
        },
    )


def solve(spec: CouplingSpectrum, units: UnitSystem, **kwargs) -> SpectralSolution:
    """build_grid + compute_pi in one call."""
    return compute_pi(spec, units, build_grid(spec, units), **kwargs)


# ---------------------------------------------------------------------------
# moments

def moment(sol: SpectralSolution, f: Callable) -> float:
    """<< f(omega) >> = int f(omega) pi(omega) d omega on the solution grid."""
    w = sol.omegas
    try:
        vals = np.asarray(f(w), dtype=float)
        if vals.shape != w.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(f(x)) for x in w])
    bad = ~np.isfinite(vals)
    if bad.any():
        if np.any(sol.pi[bad] > 0):
            raise UsageError("moment integrand is not finite where the density is positive")
        vals = np.where(bad, 0.0, vals)
    return float(simpson(vals * sol.pi, x=w))


def frequency_moment(sol: SpectralSolution, k: int) -> float:
    """Cached << omega^k >>."""
    key = ("pow", k)
    if key not in sol._moment_cache:
        sol._moment_cache[key] = moment(sol, lambda w: w**k)
    return sol._moment_cache[key]


# ---------------------------------------------------------------------------
# dressing kernels

@dataclass(frozen=True)
class DressingKernels:
    """Kernel values at one frequency pair (omega, omega_prime).

    ``gamma_regular`` is the principal-value part of gamma with the pole
    1/(omega - omega_prime) factored out; ``gamma_singular_coeff`` is the
    coefficient of the delta(omega - omega_prime) term.  Phases follow
    alpha(omega) real positive with V real.
    """

    delta: float
    gamma_regular: float
    gamma_singular_coeff: float


def compute_kernels(spec: CouplingSpectrum, units: UnitSystem, sol: SpectralSolution | None,
                    omega: float, omega_prime: float) -> DressingKernels:
    """Evaluate delta, gamma_regular, gamma_singular_coeff at (omega, omega_prime)."""
    require_admissible(spec, units)
    _require_inside(spec, omega)
    if not (isinstance(omega_prime, (int, float)) and math.isfinite(omega_prime) and omega_prime > 0):
        raise UsageError(f"omega_prime must be a positive finite number, got {omega_prime!r}")
    w0 = units.omega0
    n = _n_value(spec, units, omega)
    vsq = float(spec.v_sq(omega))
    alpha = math.sqrt((omega + w0) ** 2 * vsq / (w0 * w0 * (n * n + math.pi**2 * vsq * vsq)))
    y = n / vsq
    v_prime = float(spec.v(omega_prime))
    v_here = math.sqrt(vsq)
    common = w0 * alpha / (omega + w0)
    return DressingKernels(
        delta=v_prime * common / (omega + omega_prime),
        gamma_regular=v_prime * common,
        gamma_singular_coeff=y * v_here * common,
    )


# ---------------------------------------------------------------------------
# time-domain grid support

def refine_for_times(sol: SpectralSolution, t_max: float, *,
                     alias_limit: float = 0.1, mass_tol: float = 1e-6,
                     max_new_nodes: int = 120000) -> SpectralSolution:
    """Return a solution whose grid resolves oscillations up to t_max.

    Requirement: intervals violating  (spacing) * t_max <= alias_limit
    may carry at most mass_tol of total spectral weight.  Violating
    intervals are split into equal parts; the dispersion integrals are
    evaluated only at the new nodes.
    """
    if t_max <= 0:
        return sol
    spec, units = sol.spec, sol.units
    h_max = alias_limit / t_max
    nodes = sol.omegas.copy()
    pi = sol.pi.copy()
    # _assemble recomputes pi from N, so keep N alongside the nodes.
    nvals = np.where(np.isnan(sol.Y), 0.0, sol.Y) * np.asarray(spec.v_sq(nodes))

    added = 0
    for _ in range(40):
        h = np.diff(nodes)
        masses = 0.5 * (pi[:-1] + pi[1:]) * h
        total = masses.sum()
        violating = h > h_max
        if not violating.any() or masses[violating].sum() <= mass_tol * total:
            break
        # Exempt the lightest violating intervals up to the mass budget.
        idx = np.flatnonzero(violating)
        order = idx[np.argsort(masses[idx])]
        cum = np.cumsum(masses[order])
        exempt = order[cum <= mass_tol * total * 0.5]
        to_split = np.setdiff1d(idx, exempt)
        new_pts: list[np.ndarray] = []
        for i in to_split:
            k = min(int(math.ceil(h[i] / h_max)), 4096)
            if k > 1:
                new_pts.append(np.linspace(nodes[i], nodes[i + 1], k + 1)[1:-1])
        if not new_pts:
            break
        new_nodes = np.unique(np.concatenate(new_pts))
        added += new_nodes.size
        if added > max_new_nodes:
            raise ConvergenceError(
                "time-grid refinement budget exceeded",
                detail={"t_max": t_max, "new_nodes": added,
                        "guidance": "shorten the time span or relax alias_limit"},
            )
        new_n = _n_values(spec, units, new_nodes)
        nodes = np.concatenate([nodes, new_nodes])
        nvals = np.concatenate([nvals, new_n])
        order = np.argsort(nodes)
        nodes, nvals = nodes[order], nvals[order]
        _, _, _, pi = _assemble(spec, units, nodes, nvals)

    Y, alpha_sq, beta, pi = _assemble(spec, units, nodes, nvals)
    norm = float(simpson(pi, x=nodes))
    meta = dict(sol.meta)
    meta.update({"refined_for_t_max": t_max, "nodes": int(nodes.size)})
    return SpectralSolution(
        grid=SpectralGrid(nodes, meta=dict(sol.grid.meta)),
        Y=Y, alpha_sq=alpha_sq, beta_ratio=beta, pi=pi,
        norm_defect=abs(norm - 1.0), spec=spec, units=units, meta=meta,
    )


def alias_bound_satisfied(sol: SpectralSolution, t_max: float, *,
                          alias_limit: float = 0.1, mass_tol: float = 1e-6) -> bool:
    """Check the mass-windowed anti-aliasing condition for a time span."""
    if t_max <= 0:
        return True
    h = np.diff(sol.omegas)
    masses = 0.5 * (sol.pi[:-1] + sol.pi[1:]) * h
    violating = h > alias_limit / t_max
    if not violating.any():
        return True
    return masses[violating].sum() <= mass_tol * masses.sum()


def require_alias_bound(sol: SpectralSolution, t_max: float, *,
                        alias_limit: float = 0.1, mass_tol: float = 1e-6) -> None:
    """Raise AliasingError when the grid undersamples oscillations at t_max."""
    if not alias_bound_satisfied(sol, t_max, alias_limit=alias_limit,
                                 mass_tol=mass_tol):
        raise AliasingError(
            f"grid spacing violates spacing * t <= {alias_limit} for "
            f"t = {t_max:.6g} on intervals carrying more than "
            f"{mass_tol:.1e} of the spectral mass; refine with "
            f"refine_for_times(sol, {t_max:.6g}) first",
            detail={"t_max": t_max, "alias_limit": alias_limit,
                    "mass_tol": mass_tol},
        )
