"""Eigenmodes of a closed 1D cavity containing a stack of delta planes.

The relative permittivity is 1 + eta * sum_i delta(z - z_i), planes at
z_i = i * plane_spacing, cavity walls at z = 0 and z = L with u(0) = u(L) = 0.
Between planes the field obeys u'' + q^2 u = 0 with q = Omega / c; crossing a
plane leaves u continuous and jumps the derivative:

    u'(z_i+) - u'(z_i-) = -q^2 * eta * u(z_i)

Eigenfrequencies are found by shooting from z = 0 and bracketing sign changes
of a normalized boundary mismatch. The working pair is (u, w) with
w = u' / q, so free propagation is a pure rotation by q*d and a plane
crossing is the shear w -> w - q*eta*u; the pair stays O(1) up to the
accumulated shear factors, which fit comfortably in double precision for all
supported plane strengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .constants import SPEED_OF_LIGHT as C
from .params import PhysicalParams

# Scan resolution: fraction of the empty-cavity mode spacing pi*c/L.
SCAN_SPACING_FACTOR = 0.3
# Relative tolerance for eigenfrequency refinement.
ROOT_RTOL = 1e-12


@dataclass
class ModeTable:
    """Solved eigenmode set below omega_max, sorted by frequency.

    gamma_conf is the confinement factor: the fraction of the plain field
    energy integral int u^2 dz that falls inside the plane stack [0, L_c].
    Delta-plane terms enter the mode normalization but not this ratio.
    init_slope is the normalized field's w(0) = u'(0)/q, which together with
    omega fully determines the field.
    """

    omega: np.ndarray
    gamma_conf: np.ndarray
    m_peak: np.ndarray
    k_assigned: np.ndarray
    is_crystal: np.ndarray
    init_slope: np.ndarray

    # geometry the table depends on
    plane_strength: float
    cavity_length: float
    crystal_length: float
    plane_spacing: float
    n_planes: int
    omega_max: float

    @property
    def n_modes(self) -> int:
        return self.omega.size

    def save(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            omega=self.omega,
            gamma_conf=self.gamma_conf,
            m_peak=self.m_peak,
            k_assigned=self.k_assigned,
            is_crystal=self.is_crystal,
            init_slope=self.init_slope,
            geometry=np.array(
                [
                    self.plane_strength,
                    self.cavity_length,
                    self.crystal_length,
                    self.plane_spacing,
                    float(self.n_planes),
                    self.omega_max,
                ]
            ),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ModeTable":
        data = np.load(path)
        geo = data["geometry"]
        return cls(
            omega=data["omega"],
            gamma_conf=data["gamma_conf"],
            m_peak=data["m_peak"],
            k_assigned=data["k_assigned"],
            is_crystal=data["is_crystal"],
            init_slope=data["init_slope"],
            plane_strength=float(geo[0]),
            cavity_length=float(geo[1]),
            crystal_length=float(geo[2]),
            plane_spacing=float(geo[3]),
            n_planes=int(geo[4]),
            omega_max=float(geo[5]),
        )

    def matches(self, params: PhysicalParams) -> bool:
        return (
            self.plane_strength == params.plane_strength
            and self.cavity_length == params.cavity_length
            and self.crystal_length == params.crystal_length
            and self.plane_spacing == params.plane_spacing
            and self.omega_max == params.omega_max
        )


# ----------------------------------------------------------------------
# shooting
# ----------------------------------------------------------------------


def mismatch(omega: float, params: PhysicalParams) -> float:
    """Normalized boundary defect u(L)/|(u, w)(L)| for a single frequency."""
    q = omega / C
    eta = params.plane_strength
    u, w = 0.0, 1.0
    prev = 0.0
    for z in params.plane_positions:
        phi = q * (z - prev)
        cp, sp = math.cos(phi), math.sin(phi)
        u, w = u * cp + w * sp, -u * sp + w * cp
        w -= q * eta * u
        prev = z
    phi = q * (params.cavity_length - prev)
    cp, sp = math.cos(phi), math.sin(phi)
    u, w = u * cp + w * sp, -u * sp + w * cp
    return u / math.hypot(u, w)


def mismatch_grid(omega: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Vectorized `mismatch` over an array of frequencies."""
    q = np.asarray(omega, dtype=float) / C
    eta = params.plane_strength
    u = np.zeros_like(q)
    w = np.ones_like(q)
    prev = 0.0
    for z in params.plane_positions:
        phi = q * (z - prev)
        cp, sp = np.cos(phi), np.sin(phi)
        u, w = u * cp + w * sp, -u * sp + w * cp
        w = w - q * eta * u
        prev = z
    phi = q * (params.cavity_length - prev)
    cp, sp = np.cos(phi), np.sin(phi)
    u, w = u * cp + w * sp, -u * sp + w * cp
    return u / np.hypot(u, w)


def count_below(omega, params: PhysicalParams) -> np.ndarray:
    """Exact number of eigenfrequencies in (0, omega], vectorized.

    Oscillation-theorem count: with u = R sin(Theta), w = R cos(Theta) the
    phase advances rigidly by q*d across a free region, and a plane shear
    (u fixed, w reduced) cannot move Theta across a multiple of pi, so the
    number of zeros of u on (0, L] - which equals the number of
    eigenfrequencies below - is floor(Theta(L)/pi).

    Theta is carried as m*pi + rho with integer m and residual rho in
    [0, pi), keeping the plane-shear branch exact even at the Bragg
    frequencies m*pi*c/l_p where every plane sits at a phase multiple of pi
    and a plain accumulated phase loses the branch to rounding.
    """
    q = np.atleast_1d(np.asarray(omega, dtype=float)) / C
    eta = params.plane_strength
    m = np.zeros(q.shape, dtype=np.int64)
    rho = np.zeros_like(q)
    prev = 0.0
    for z in params.plane_positions:
        adv = rho + q * (z - prev)
        m += np.floor(adv / np.pi).astype(np.int64)
        rho = np.mod(adv, np.pi)
        if eta != 0.0:
            s, c = np.sin(rho), np.cos(rho)  # s >= 0 since rho in [0, pi)
            rho = np.mod(np.arctan2(s, c - q * eta * s), np.pi)
        prev = z
    adv = rho + q * (params.cavity_length - prev)
    m += np.floor(adv / np.pi).astype(np.int64)
    return m


def scan_eigenfrequencies(
    params: PhysicalParams,
    omega_max: float | None = None,
    spacing_factor: float = SCAN_SPACING_FACTOR,
) -> np.ndarray:
    """All eigenfrequencies in (0, omega_max], refined to ROOT_RTOL.

    The scan grid spacing is `spacing_factor` times the empty-cavity mode
    spacing pi*c/L. Completeness does not rest on the grid: the exact
    oscillation count assigns each cell its number of roots, cells holding
    several (near-degenerate pairs at band edges) are bisected until each
    root is isolated, and every isolated root is refined by bracketing.
    """
    if omega_max is None:
        omega_max = params.omega_max
    step = spacing_factor * math.pi * C / params.cavity_length
    edges = np.arange(0.0, omega_max + step, step)
    edges[-1] = omega_max
    if edges.size < 2:
        return np.empty(0)
    counts = count_below(edges, params)

    f = lambda om: mismatch(om, params)
    roots = []
    # cells pending isolation: (lo, hi, n_roots_inside)
    stack = [
        (edges[i], edges[i + 1], int(counts[i + 1] - counts[i]))
        for i in np.nonzero(np.diff(counts) > 0)[0]
    ]
    while stack:
        lo, hi, n = stack.pop()
        if n == 1:
            flo, fhi = f(lo), f(hi)
            if flo == 0.0 or fhi == 0.0 or flo * fhi > 0.0:
                # root pinned at (or within fp noise of) a cell edge
                roots.append(lo if abs(flo) <= abs(fhi) else hi)
            else:
                roots.append(brentq(f, lo, hi, rtol=ROOT_RTOL, xtol=1e-3))
            continue
        mid = 0.5 * (lo + hi)
        # a pair split more finely than fp resolution is degenerate for all
        # downstream purposes: report the midpoint with multiplicity
        if hi - lo < max(1e-3, 16.0 * np.finfo(float).eps * hi) or not lo < mid < hi:
            roots.extend([mid] * n)
            continue
        n_lo = int(count_below(mid, params)[0] - count_below(lo, params)[0])
        if n_lo > 0:
            stack.append((lo, mid, n_lo))
        if n - n_lo > 0:
            stack.append((mid, hi, n - n_lo))
    return np.array(sorted(roots))


# ----------------------------------------------------------------------
# reconstruction: normalization, confinement, peak count
# ----------------------------------------------------------------------


def _region_states(omega: np.ndarray, params: PhysicalParams):
    """Propagate (u, w) and record the state entering each region.

    Returns (z_edges, U, W) where z_edges has length n_regions + 1
    (0, z_1, ..., z_n, L) and U, W have shape (n_modes, n_regions) holding
    the unnormalized field state at each region's left edge.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    q = omega / C
    eta = params.plane_strength
    z_edges = np.concatenate(([0.0], params.plane_positions, [params.cavity_length]))
    n_regions = z_edges.size - 1
    U = np.empty((omega.size, n_regions))
    W = np.empty((omega.size, n_regions))
    u = np.zeros_like(q)
    w = np.ones_like(q)
    for r in range(n_regions):
        U[:, r] = u
        W[:, r] = w
        phi = q * (z_edges[r + 1] - z_edges[r])
        cp, sp = np.cos(phi), np.sin(phi)
        u, w = u * cp + w * sp, -u * sp + w * cp
        if r + 1 < n_regions:  # interior edge: a plane
            w = w - q * eta * u
    return z_edges, U, W


def _region_integrals(omega: np.ndarray, z_edges: np.ndarray, U, W):
    """Closed-form integral of u^2 over each region.

    For u(s) = u0 cos(q s) + w0 sin(q s) on [0, d]:
    int u^2 ds = d (u0^2 + w0^2)/2 + sin(2qd) (u0^2 - w0^2)/(4q)
                 + u0 w0 (1 - cos(2qd))/(2q)
    """
    q = (np.atleast_1d(omega) / C)[:, None]
    d = np.diff(z_edges)[None, :]
    s2 = np.sin(2.0 * q * d)
    c2 = np.cos(2.0 * q * d)
    return (
        0.5 * d * (U**2 + W**2)
        + s2 / (4.0 * q) * (U**2 - W**2)
        + U * W * (1.0 - c2) / (2.0 * q)
    )


def normalize_modes(omega: np.ndarray, params: PhysicalParams):
    """Scale factors making int eps(z) u^2 dz / eps0 = 1 for each mode.

    Returns (scale, z_edges, U, W, segment_integrals) with U, W, and the
    integrals already scaled. The delta-plane terms eta * u(z_i)^2 enter the
    norm (they are part of eps) but are reported separately from the segment
    integrals.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    z_edges, U, W = _region_states(omega, params)
    seg = _region_integrals(omega, z_edges, U, W)
    # u at plane i is the entering state of region i+1 (continuity)
    u_planes = U[:, 1:]
    delta_part = params.plane_strength * np.sum(u_planes**2, axis=1)
    total = seg.sum(axis=1) + delta_part
    scale = 1.0 / np.sqrt(total)
    U = U * scale[:, None]
    W = W * scale[:, None]
    seg = seg * (scale**2)[:, None]
    return scale, z_edges, U, W, seg


def norm_residuals(omega: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """|int eps u^2 / eps0 - 1| for normalized modes (test hook)."""
    scale, z_edges, U, W, seg = normalize_modes(omega, params)
    delta_part = params.plane_strength * np.sum(U[:, 1:] ** 2, axis=1)
    return np.abs(seg.sum(axis=1) + delta_part - 1.0)


def field_samples(
    omega: float,
    params: PhysicalParams,
    z: np.ndarray,
    init_slope: float | None = None,
) -> np.ndarray:
    """Normalized field u(z) of the mode at `omega` on arbitrary points."""
    z = np.asarray(z, dtype=float)
    scale, z_edges, U, W, _ = normalize_modes(np.array([omega]), params)
    if init_slope is not None:
        # honor a stored sign/scale convention exactly
        factor = init_slope / W[0, 0]
        U = U * factor
        W = W * factor
    q = omega / C
    idx = np.clip(np.searchsorted(z_edges, z, side="right") - 1, 0, U.shape[1] - 1)
    s = z - z_edges[idx]
    return U[0, idx] * np.cos(q * s) + W[0, idx] * np.sin(q * s)


def _count_positive_peaks(u: np.ndarray) -> np.ndarray:
    """Rows' counts of strict interior maxima with positive value.

    A real standing wave has one positive hump per full wavelength, so this
    count reads off the spatial order of the mode inside the sampled window
    independent of the field's overall sign.
    """
    interior = u[:, 1:-1]
    peaks = (interior > u[:, :-2]) & (interior > u[:, 2:]) & (interior > 0.0)
    return peaks.sum(axis=1)


def count_peaks(
    omega: np.ndarray,
    params: PhysicalParams,
    points_per_wavelength: int = 20,
) -> np.ndarray:
    """Number of positive field maxima inside the plane stack (0, L_c).

    Sampling resolution satisfies `points_per_wavelength` for the shortest
    wavelength present (2 pi c / max omega), shared across all modes.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    L_c = params.crystal_length
    lam_min = 2.0 * math.pi * C / float(np.max(omega))
    n = max(64, int(math.ceil(points_per_wavelength * L_c / lam_min))) + 1
    z = np.linspace(0.0, L_c, n)
    scale, z_edges, U, W, _ = normalize_modes(omega, params)
    q = (omega / C)[:, None]
    idx = np.clip(np.searchsorted(z_edges, z, side="right") - 1, 0, U.shape[1] - 1)
    s = (z - z_edges[idx])[None, :]
    u = np.take(U, idx, axis=1) * np.cos(q * s) + np.take(W, idx, axis=1) * np.sin(q * s)
    return _count_positive_peaks(u)


def solve_modes(params: PhysicalParams, omega_max: float | None = None) -> ModeTable:
    """Find, normalize, and classify every eigenmode up to omega_max."""
    if omega_max is None:
        omega_max = params.omega_max
    omega = scan_eigenfrequencies(params, omega_max)
    if omega.size == 0:
        raise ValueError("no eigenmodes found below omega_max")

    scale, z_edges, U, W, seg = normalize_modes(omega, params)
    n_inside = params.n_planes  # regions [0, z_1], ..., [z_{n-1}, L_c]
    gamma_conf = seg[:, :n_inside].sum(axis=1) / seg.sum(axis=1)
    m_peak = count_peaks(omega, params)
    k_assigned = 2.0 * math.pi * m_peak / params.crystal_length
    is_crystal = gamma_conf > params.crystal_length / params.cavity_length

    return ModeTable(
        omega=omega,
        gamma_conf=gamma_conf,
        m_peak=m_peak.astype(np.int64),
        k_assigned=k_assigned,
        is_crystal=is_crystal,
        init_slope=W[:, 0],
        plane_strength=params.plane_strength,
        cavity_length=params.cavity_length,
        crystal_length=params.crystal_length,
        plane_spacing=params.plane_spacing,
        n_planes=params.n_planes,
        omega_max=float(omega_max),
    )
