#!/usr/bin/env python3
"""
Reflecting Materials and Molecular Absorption Tables
====================================================

Input data for the THz channel model: the surface materials NLoS clusters
bounce off, and precomputed molecular absorption coefficients k_abs(f).

Material files are JSON:
    {"materials": [{"name": "Plaster s1", "sigma_mm": 0.05, "varsigma_per_cm": 10, "n": 2.0}]}

Absorption tables are two-column CSV with header `frequency_hz,k_abs_per_m`.
Lines starting with '#' are treated as comments.

Usage:
    from src.channel.materials import load_materials, AbsorptionTable

    materials = load_materials("data/materials.json")
    table = AbsorptionTable.from_csv("data/absorption_indoor_office.csv")
    print(table.k_abs(0.3e12))
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.errors import ConfigError, OutOfRangeError

logger = logging.getLogger(__name__)

project_root = os.path.join(os.path.dirname(__file__), '..', '..')
DATA_DIR = os.path.join(project_root, 'data')
DEFAULT_MATERIALS_PATH = os.path.join(DATA_DIR, 'materials.json')
DEFAULT_ABSORPTION_PATH = os.path.join(DATA_DIR, 'absorption_indoor_office.csv')

ABSORPTION_COLUMNS = ('frequency_hz', 'k_abs_per_m')


@dataclass(frozen=True)
class Material:
    """A reflecting surface, stored in SI units"""
    name: str
    sigma_roughness: float      # m
    varsigma_absorption: float  # 1/m
    refractive_index: float

    def __post_init__(self):
        problems = []
        if self.sigma_roughness < 0:
            problems.append(f"{self.name}: roughness must be >= 0")
        if self.varsigma_absorption < 0:
            problems.append(f"{self.name}: absorption coefficient must be >= 0")
        if self.refractive_index < 1:
            problems.append(f"{self.name}: refractive index must be >= 1")
        if problems:
            raise ConfigError("; ".join(problems), problems)

    @classmethod
    def from_table_units(cls, name: str, sigma_mm: float, varsigma_per_cm: float,
                         n: float) -> "Material":
        """Build from the mm / cm⁻¹ units material tables are usually printed in."""
        return cls(
            name=name,
            sigma_roughness=sigma_mm * 1e-3,
            varsigma_absorption=varsigma_per_cm * 1e2,
            refractive_index=n,
        )

    def to_table_units(self) -> dict:
        return {
            "name": self.name,
            "sigma_mm": self.sigma_roughness * 1e3,
            "varsigma_per_cm": self.varsigma_absorption * 1e-2,
            "n": self.refractive_index,
        }


# Indoor office scatterers
DEFAULT_MATERIALS: Tuple[Material, ...] = (
    Material.from_table_units("Plaster s1", sigma_mm=0.05, varsigma_per_cm=10.0, n=2.0),
    Material.from_table_units("Gypsum plaster", sigma_mm=0.13, varsigma_per_cm=38.0, n=1.4),
    Material.from_table_units("Plaster s2", sigma_mm=0.15, varsigma_per_cm=10.0, n=2.0),
)


def load_materials(path: str = DEFAULT_MATERIALS_PATH) -> List[Material]:
    """Load materials from a JSON file, falling back to the built-in set."""
    if not os.path.exists(path):
        logger.warning(f"Materials file {path} not found, using built-in defaults")
        return list(DEFAULT_MATERIALS)

    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)

    entries = data.get('materials', [])
    if not entries:
        raise ConfigError(f"{path} lists no materials")

    materials = []
    for entry in entries:
        try:
            materials.append(Material.from_table_units(
                name=entry['name'],
                sigma_mm=float(entry['sigma_mm']),
                varsigma_per_cm=float(entry['varsigma_per_cm']),
                n=float(entry['n']),
            ))
        except KeyError as e:
            raise ConfigError(f"material entry in {path} is missing field {e}") from e
    logger.debug(f"Loaded {len(materials)} materials from {path}")
    return materials


@dataclass(frozen=True)
class AbsorptionTable:
    """Tabulated molecular absorption coefficient k_abs(f) in 1/m.

    An empty table means a transparent medium (k_abs = 0 everywhere).
    """
    frequencies: np.ndarray = field(default_factory=lambda: np.zeros(0))
    coefficients: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        coeffs = np.asarray(self.coefficients, dtype=float)
        object.__setattr__(self, 'frequencies', freqs)
        object.__setattr__(self, 'coefficients', coeffs)
        if freqs.shape != coeffs.shape or freqs.ndim != 1:
            raise ConfigError("absorption table columns must be 1-D and equally long")
        if freqs.size > 1 and np.any(np.diff(freqs) <= 0):
            raise ConfigError("absorption table frequencies must be strictly increasing")
        if np.any(coeffs < 0):
            raise ConfigError("absorption coefficients must be nonnegative")

    @classmethod
    def from_points(cls, points: Sequence[Tuple[float, float]]) -> "AbsorptionTable":
        if not points:
            return cls()
        freqs, coeffs = zip(*points)
        return cls(np.array(freqs, dtype=float), np.array(coeffs, dtype=float))

    @classmethod
    def from_csv(cls, path: str = DEFAULT_ABSORPTION_PATH) -> "AbsorptionTable":
        frame = pd.read_csv(path, comment='#', skipinitialspace=True)
        if tuple(frame.columns) != ABSORPTION_COLUMNS:
            raise ConfigError(
                f"{path}: expected header {','.join(ABSORPTION_COLUMNS)}, "
                f"got {','.join(map(str, frame.columns))}"
            )
        logger.debug(f"Loaded {len(frame)} absorption points from {path}")
        return cls(frame['frequency_hz'].to_numpy(dtype=float),
                   frame['k_abs_per_m'].to_numpy(dtype=float))

    @property
    def is_empty(self) -> bool:
        return self.frequencies.size == 0

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.frequencies.tolist(), self.coefficients.tolist()))

    def k_abs(self, f: float) -> float:
        """Linearly interpolated coefficient; no extrapolation."""
        if self.is_empty:
            return 0.0
        lo, hi = self.frequencies[0], self.frequencies[-1]
        if not lo <= f <= hi:
            raise OutOfRangeError(
                f"frequency {f:.4e} Hz outside absorption table range [{lo:.4e}, {hi:.4e}]"
            )
        return float(np.interp(f, self.frequencies, self.coefficients))
