"""Nuclear coordinates for planar H3+.

Atoms 1 and 2 sit at (R, 0) and (-R, 0); atom 3 sits at polar position
(rho, theta).  All lengths are bohr and all angles radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MolecularGeometry:
    R: float
    rho: float
    theta: float

    def __post_init__(self):
        if self.R < 0 or self.rho < 0:
            raise ValueError(f"R and rho must be non-negative, got R={self.R}, rho={self.rho}")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")
        theta = self.theta % TWO_PI
        if theta >= TWO_PI:  # float wrap of tiny negative angles
            theta = 0.0
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_cartesian_third(cls, R: float, x: float, y: float) -> "MolecularGeometry":
        """Build a geometry from the Cartesian position of atom 3."""
        return cls(R, math.hypot(x, y), math.atan2(y, x))

    @classmethod
    def equilateral(cls, side: float) -> "MolecularGeometry":
        R = 0.5 * side
        return cls(R, math.sqrt(3.0) * R, 0.5 * math.pi)

    @property
    def cartesian(self) -> np.ndarray:
        return to_cartesian(self)

    def distances(self) -> tuple[float, float, float]:
        """Pair distances (r12, r13, r23)."""
        xyz = self.cartesian
        return (
            float(np.linalg.norm(xyz[0] - xyz[1])),
            float(np.linalg.norm(xyz[0] - xyz[2])),
            float(np.linalg.norm(xyz[1] - xyz[2])),
        )

    def with_params(self, **kw) -> "MolecularGeometry":
        vals = {"R": self.R, "rho": self.rho, "theta": self.theta}
        vals.update(kw)
        return MolecularGeometry(**vals)


def to_cartesian(g: MolecularGeometry) -> np.ndarray:
    """Return a (3, 2) array of atom positions in bohr."""
    return np.array(
        [
            [g.R, 0.0],
            [-g.R, 0.0],
            [g.rho * math.cos(g.theta), g.rho * math.sin(g.theta)],
        ]
    )


def classify_symmetry(g: MolecularGeometry, tol: float = 1e-8) -> str:
    """Point-group label: ``"D3h"``, ``"C2v"`` or ``"Cs"``.

    C2v here means isosceles with the mirror axis through atom 3, i.e.
    theta at pi/2 or 3pi/2; the angular test is ``|sin(theta) -+ 1| < tol/rho``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r12, r13, r23 = g.distances()
    if abs(r12 - r13) < tol and abs(r12 - r23) < tol and abs(r13 - r23) < tol:
        return "D3h"
    if g.rho > 0:
        s = math.sin(g.theta)
        if abs(s - 1.0) < tol / g.rho or abs(s + 1.0) < tol / g.rho:
            return "C2v"
    return "Cs"


def parse_geometry(text: str) -> MolecularGeometry:
    """Parse ``"R=<bohr> rho=<bohr> theta_deg=<degrees>"``."""
    fields = {}
    for token in text.replace(",", " ").split():
        if "=" not in token:
            raise ValueError(f"expected key=value, got {token!r}")
        key, value = token.split("=", 1)
        fields[key.strip()] = float(value)
    missing = {"R", "rho", "theta_deg"} - fields.keys()
    if missing:
        raise ValueError(f"geometry is missing {sorted(missing)}")
    extra = fields.keys() - {"R", "rho", "theta_deg"}
    if extra:
        raise ValueError(f"unknown geometry keys {sorted(extra)}")
    return MolecularGeometry(fields["R"], fields["rho"], math.radians(fields["theta_deg"]))
