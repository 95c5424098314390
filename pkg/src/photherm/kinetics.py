"""Coupled rate equations for atom populations and cavity photon numbers.

State: n_e (one averaged upper-level population per atom frequency) and N_k
(one photon number per cavity mode). With W_nk = Omega_k * Gamma_k * L_nk and
the Lorentzian overlap L_nk = [1 + (omega_n - Omega_k)^2/gamma^2]^-1:

    dn_e/dt = -g_a * sum_k W_nk [(2 n_e - 1) N_k + n_e]
              - gamma_r (n_e - f_n) + Lambda_n (1 - n_e)
    dN_k/dt = +g_p * sum_n W_nk [(2 n_e - 1) N_k + n_e] - gamma_c N_k

g_p = N_j g_a exactly, which makes the interaction part of
sum_k N_k + N_j sum_n n_e a conserved quantity.

All reductions go through einsum's fixed-order single-thread path so results
are bit-identical across BLAS thread settings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import atoms
from .params import PhysicalParams


def _matvec(matrix: np.ndarray, vec: np.ndarray) -> np.ndarray:
    # deterministic reduction order regardless of BLAS threading
    return np.einsum("nk,k->n", matrix, vec, optimize=False)


@dataclass
class CouplingTables:
    """Precomputed atom-mode coupling weights plus the bath functions.

    W has shape (n_atom_freqs, n_modes); WT is a contiguous transpose so both
    reduction directions stream memory linearly. fermi and pump are the
    equilibrium and pumping rates on the atom grid; rates and coupling
    constants are copied out of params so the rhs needs no other context.
    """

    omega_atoms: np.ndarray
    omega_modes: np.ndarray
    gamma_conf: np.ndarray
    L: np.ndarray
    W: np.ndarray
    WT: np.ndarray = field(repr=False)
    W_rowsum: np.ndarray = field(repr=False)
    W_colsum: np.ndarray = field(repr=False)
    fermi: np.ndarray = field(repr=False)
    pump: np.ndarray = field(repr=False)
    g_atom: float = 0.0
    g_photon: float = 0.0
    gamma_r: float = 0.0
    gamma_c: float = 0.0
    atoms_per_site: int = 1

    @property
    def n_freqs(self) -> int:
        return self.omega_atoms.size

    @property
    def n_modes(self) -> int:
        return self.omega_modes.size

    def split(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return y[: self.n_freqs], y[self.n_freqs :]

    def pack(self, n_e: np.ndarray, photons: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(n_e, float), np.asarray(photons, float)])


def build_tables(
    omega_modes: np.ndarray,
    gamma_modes: np.ndarray,
    omega_atoms: np.ndarray,
    params: PhysicalParams,
    cutoff: float = 0.0,
) -> CouplingTables:
    """Dense Lorentzian overlap tables; entries below `cutoff` zeroed exactly."""
    if not 0.0 <= cutoff < 1.0:
        raise ValueError("cutoff must lie in [0, 1)")
    om_a = np.asarray(omega_atoms, dtype=float)
    om_m = np.asarray(omega_modes, dtype=float)
    gam = np.asarray(gamma_modes, dtype=float)
    if om_m.size == 0 or om_a.size == 0:
        raise ValueError("empty mode set or atom grid")

    detune = (om_a[:, None] - om_m[None, :]) / params.dephasing_rate
    L = 1.0 / (1.0 + detune**2)
    if cutoff > 0.0:
        L[L < cutoff] = 0.0
    W = L * (om_m * gam)[None, :]
    return CouplingTables(
        omega_atoms=om_a,
        omega_modes=om_m,
        gamma_conf=gam,
        L=L,
        W=W,
        WT=np.ascontiguousarray(W.T),
        W_rowsum=np.einsum("nk->n", W, optimize=False),
        W_colsum=np.einsum("nk->k", W, optimize=False),
        fermi=atoms.fermi_dirac(om_a, params.temperature),
        pump=atoms.pump_rate(om_a, params.temperature, params),
        g_atom=params.g_atom,
        g_photon=params.g_photon,
        gamma_r=params.relaxation_rate,
        gamma_c=params.photon_loss_rate,
        atoms_per_site=params.atoms_per_site,
    )


def rhs(y: np.ndarray, tables: CouplingTables) -> np.ndarray:
    """Time derivative of the packed state [n_e, N_k]."""
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("non-finite state passed to rhs")
    n, N = tables.split(y)
    shared = _matvec(tables.W, N)  # sum_k W_nk N_k
    emit = (2.0 * n - 1.0) * shared + n * tables.W_rowsum
    dn = (
        -tables.g_atom * emit
        - tables.gamma_r * (n - tables.fermi)
        + tables.pump * (1.0 - n)
    )
    proj = _matvec(tables.WT, n)  # sum_n W_nk n_e
    gain = 2.0 * proj - tables.W_colsum  # sum_n W_nk (2 n_e - 1)
    dN = tables.g_photon * (N * gain + proj) - tables.gamma_c * N
    return np.concatenate([dn, dN])


def affine_coefficients(
    y: np.ndarray, tables: CouplingTables
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Exact per-variable split rhs_i = a_i * y_i + b_i at frozen cross terms.

    Each block of the rhs is affine in its own variable once the other block
    is held fixed, so (a, b) reproduce the rhs exactly and a is the exact
    diagonal of the Jacobian.
    """
    n, N = tables.split(y)
    shared = _matvec(tables.W, N)
    a_e = (
        -tables.g_atom * (2.0 * shared + tables.W_rowsum)
        - tables.gamma_r
        - tables.pump
    )
    b_e = tables.g_atom * shared + tables.gamma_r * tables.fermi + tables.pump
    proj = _matvec(tables.WT, n)
    a_p = tables.g_photon * (2.0 * proj - tables.W_colsum) - tables.gamma_c
    b_p = tables.g_photon * proj
    return a_e, b_e, a_p, b_p


def jacobian_diagonal(y: np.ndarray, tables: CouplingTables) -> np.ndarray:
    a_e, _, a_p, _ = affine_coefficients(y, tables)
    return np.concatenate([a_e, a_p])


def total_excitation(y: np.ndarray, tables: CouplingTables) -> float:
    """Conserved count sum_k N_k + N_j sum_n n_e (exact when loss-free)."""
    n, N = tables.split(y)
    return float(np.sum(N) + tables.atoms_per_site * np.sum(n))


def quasi_steady_photon(
    n_e: np.ndarray, tables: CouplingTables, gamma_c: float | None = None
) -> np.ndarray:
    """Photon fixed point at frozen populations.

    N_k = g_p (W^T n)_k / (gamma_c + g_p (W^T (1 - 2n))_k); the denominator
    must stay positive - otherwise stimulated gain beats the losses and that
    mode has no steady state at these populations.
    """
    if gamma_c is None:
        gamma_c = tables.gamma_c
    proj = _matvec(tables.WT, np.asarray(n_e, dtype=float))
    denom = gamma_c + tables.g_photon * (tables.W_colsum - 2.0 * proj)
    if np.any(denom <= 0.0):
        raise ValueError("non-positive denominator: inverted gain, no fixed point")
    return tables.g_photon * proj / denom
