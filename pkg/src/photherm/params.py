"""Model parameters: geometry, rates, grids, presets, serialization.

All quantities are SI. A `PhysicalParams` instance describes one full problem
setup; named presets provide the four standard operating points, and
`apply_scale` produces the shrunk variant used for fast runs (cavity length
divided by 10, atomic frequency grid cut to 100 points).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import ELEMENTARY_CHARGE, HBAR, VACUUM_PERMITTIVITY

# Default transition dipole moment: elementary charge times 1.3 nm.
DEFAULT_DIPOLE = ELEMENTARY_CHARGE * 1.3e-9

SCALES = ("full", "reduced")


@dataclass(frozen=True)
class PhysicalParams:
    """Complete parameter set for one simulation.

    Geometry: a closed cavity [0, L] whose left end holds `n_planes`
    semitransparent planes spaced `plane_spacing` apart (plane i at
    z = i * plane_spacing), each of dimensionless strength
    `plane_strength` * (Omega/c); `plane_strength` carries units of meters.
    """

    # geometry
    cavity_length: float = 1.2e-2  # L [m]
    plane_spacing: float = 1.0e-5  # l_p [m]
    n_planes: int = 12
    plane_strength: float = 2.1e-5  # eta [m]

    # two-level atoms
    atom_density: float = 5.0e24  # n_atom [m^-3]
    atoms_per_site: int = 600  # N_j
    dipole_moment: float = DEFAULT_DIPOLE  # mu [C m]
    dephasing_rate: float = 1.0e14  # gamma [s^-1]
    relaxation_rate: float = 1.0e13  # gamma_r [s^-1]

    # pumping and losses
    pump_amplitude: float = 1.0e10  # Lambda_0 [s^-1]
    pump_center: float = 1.6e14  # omega_0 [rad/s]
    photon_loss_rate: float = 1.0e9  # gamma_c [s^-1]
    detector_width: float = 5.0e11  # gamma_d [rad/s]

    # environment
    temperature: float = 400.0  # T [K]

    # frequency grids
    omega_max: float = 5.0e14  # [rad/s]
    n_atom_freqs: int = 500  # N_omega

    # bookkeeping
    scale: str = "full"

    def __post_init__(self) -> None:
        positive = (
            "cavity_length",
            "plane_spacing",
            "dephasing_rate",
            "temperature",
            "omega_max",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        # zero dipole moment or atom density decouples the atoms from the
        # field, a useful probe limit; zero rates turn individual channels off
        nonnegative = (
            "plane_strength",
            "atom_density",
            "dipole_moment",
            "relaxation_rate",
            "pump_amplitude",
            "photon_loss_rate",
            "detector_width",
        )
        for name in nonnegative:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.n_planes < 1 or self.atoms_per_site < 1 or self.n_atom_freqs < 1:
            raise ValueError("n_planes, atoms_per_site, n_atom_freqs must be >= 1")
        if self.crystal_length >= self.cavity_length:
            raise ValueError("plane stack must fit strictly inside the cavity")
        if self.scale not in SCALES:
            raise ValueError(f"scale must be one of {SCALES}")

    # ------------------------------------------------------------------
    # derived quantities
    # ------------------------------------------------------------------

    @property
    def crystal_length(self) -> float:
        """Length of the plane stack, L_c = n_planes * plane_spacing."""
        return self.n_planes * self.plane_spacing

    @property
    def plane_positions(self) -> np.ndarray:
        return self.plane_spacing * np.arange(1, self.n_planes + 1)

    @property
    def g_photon(self) -> float:
        """Dimensionless photon-side coupling, 2 mu^2 n_atom / (hbar eps0 gamma)."""
        return (
            2.0
            * self.dipole_moment**2
            * self.atom_density
            / (HBAR * VACUUM_PERMITTIVITY * self.dephasing_rate)
        )

    @property
    def g_atom(self) -> float:
        """Electron-side coupling: g_photon / atoms_per_site.

        Equals 2 mu^2 n_V / (hbar eps0 gamma) with n_V = atom_density /
        atoms_per_site, the volume density associated with one site's atoms.
        The ratio g_photon = atoms_per_site * g_atom is what makes the total
        excitation count a conserved quantity when all loss/pump rates vanish.
        """
        return self.g_photon / self.atoms_per_site

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PhysicalParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter(s): {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)

    def digest(self) -> str:
        """Short stable hash of the full parameter set."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def mode_cache_key(self) -> str:
        """Hash of the quantities the eigenmode table depends on."""
        key = (
            self.plane_strength,
            self.cavity_length,
            self.crystal_length,
            self.plane_spacing,
            self.omega_max,
        )
        blob = json.dumps(key).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PhysicalParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ----------------------------------------------------------------------
# presets and scaling
# ----------------------------------------------------------------------

PRESETS: dict[str, dict] = {
    # strong coupling, negligible photon loss
    "eq-strong": dict(
        relaxation_rate=1e13,
        pump_amplitude=1e10,
        atom_density=5e24,
        photon_loss_rate=1e9,
    ),
    # coupling reduced to 1%
    "eq-weak": dict(
        relaxation_rate=1e13,
        pump_amplitude=1e10,
        atom_density=5e22,
        photon_loss_rate=1e9,
    ),
    # strong coupling against strong photon loss
    "eq-lossy": dict(
        relaxation_rate=1e13,
        pump_amplitude=1e10,
        atom_density=5e24,
        photon_loss_rate=5e12,
    ),
    # pumping comparable to thermal relaxation
    "noneq": dict(
        relaxation_rate=1e10,
        pump_amplitude=1e10,
        atom_density=5e24,
        photon_loss_rate=1e9,
    ),
}


def preset(name: str, **overrides) -> PhysicalParams:
    """Build full-scale parameters for a named operating point."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    merged = dict(PRESETS[name])
    merged.update(overrides)
    return PhysicalParams(**merged)


def apply_scale(params: PhysicalParams, scale: str) -> PhysicalParams:
    """Return `params` at the requested scale.

    "reduced" shrinks the cavity length by 10x and the atomic frequency grid
    to 100 points, leaving the plane stack untouched. Scaling is one-way: a
    reduced instance cannot be scaled back up (the full-scale values are no
    longer known).
    """
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")
    if scale == params.scale:
        return params
    if params.scale == "reduced":
        raise ValueError("cannot rescale reduced parameters back to full")
    return params.replace(
        cavity_length=params.cavity_length / 10.0,
        n_atom_freqs=100,
        scale="reduced",
    )


def parse_override(text: str) -> tuple[str, object]:
    """Parse one 'name=value' override, coercing to the field's type."""
    if "=" not in text:
        raise ValueError(f"override {text!r} is not of the form name=value")
    name, raw = text.split("=", 1)
    name = name.strip()
    fields = {f.name: f for f in dataclasses.fields(PhysicalParams)}
    if name not in fields:
        raise ValueError(f"unknown parameter {name!r}")
    ftype = fields[name].type
    if ftype == "int":
        return name, int(raw)
    if ftype == "float":
        return name, float(raw)
    return name, raw.strip()


def build_params(
    config_path: str | Path | None = None,
    preset_name: str | None = None,
    overrides: list[str] | None = None,
    scale: str = "full",
) -> PhysicalParams:
    """Assemble parameters from preset, config file, and overrides (in that
    order of increasing precedence), then apply the scale."""
    base: dict = {}
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise KeyError(f"unknown preset {preset_name!r}; choose from {sorted(PRESETS)}")
        base.update(PRESETS[preset_name])
    if config_path is not None:
        file_data = json.loads(Path(config_path).read_text())
        if not isinstance(file_data, dict):
            raise ValueError("config file must hold a JSON object")
        base.update(file_data)
    for text in overrides or ():
        name, value = parse_override(text)
        base[name] = value
    base.pop("scale", None)
    params = PhysicalParams.from_dict(base)
    return apply_scale(params, scale)
