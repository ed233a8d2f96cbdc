"""Uniform planar array (UPA) geometry and array response vectors.

Conventions shared by the whole package:

* An array is a regular nx-by-ny grid with spacing ``spacing_m`` along the two
  local axes ``ex`` and ``ey``.  The element with grid index (p, q) sits at
  ``origin - p*spacing*ex - q*spacing*ey`` and occupies flat index
  ``p*ny + q`` (row-major over the x index, then the y index).  The origin is
  therefore itself the first element and serves as the phase reference point.
* An arrival direction is described by an azimuth/elevation pair (theta, phi)
  such that the unit vector toward the source, expressed in the local basis
  (ex, ey, n), equals (cos phi cos theta, cos phi sin theta, sin phi).
* With those two conventions the plane-wave phase ``exp(-2j*pi*d/lambda)``
  accumulated at element (p, q) relative to the origin is exactly the
  steering-vector phase ``exp(-1j*pi*(2*spacing/lambda)*cos(phi)*
  (p*cos(theta) + q*sin(theta)))``, which is why the far-field and
  element-wise channel models in :mod:`leoirs.channels` agree to first order
  without any spurious common phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .geometry import AoAPair

_ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class ArrayGeometry:
    """Placement and orientation of one UPA.

    Attributes:
        nx: element count along the local x axis (>= 1).
        ny: element count along the local y axis (>= 1).
        spacing_m: inter-element spacing in meters.
        origin: position of the reference (first) element, meters.
        basis: 3x3 matrix whose rows are the local x axis, local y axis and
            the outward normal; must be orthonormal and right-handed.
    """

    nx: int
    ny: int
    spacing_m: float
    origin: NDArray[np.float64]
    basis: NDArray[np.float64] = field(
        default_factory=lambda: np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "basis", np.asarray(self.basis, dtype=float).reshape(3, 3))
        if self.nx < 1 or self.ny < 1:
            raise ValueError("array must have nx >= 1 and ny >= 1 elements")
        if self.spacing_m <= 0:
            raise ValueError("element spacing must be positive")
        gram = self.basis @ self.basis.T
        if not np.allclose(gram, np.eye(3), atol=_ORTHO_TOL):
            raise ValueError("array basis is not orthonormal")

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def element_positions(self) -> NDArray[np.float64]:
        """All element positions, shape (nx*ny, 3), flat index p*ny + q."""
        p = np.arange(self.nx)
        q = np.arange(self.ny)
        ex, ey = self.basis[0], self.basis[1]
        offsets = (
            -self.spacing_m * p[:, None, None] * ex[None, None, :]
            - self.spacing_m * q[None, :, None] * ey[None, None, :]
        )
        return (self.origin[None, None, :] + offsets).reshape(self.size, 3)


def steering_vector(phi: float, n: int) -> NDArray[np.complex128]:
    """Length-n steering vector [1, e^{-j pi phi}, ..., e^{-j pi (n-1) phi}].

    ``phi`` is the normalized phase rate per element (already including the
    spacing-to-wavelength factor), not a geometric angle.
    """
    if n < 1:
        raise ValueError("steering vector needs n >= 1")
    return np.exp(-1j * np.pi * phi * np.arange(n))


def upa_response(geom: ArrayGeometry, aoa: "AoAPair", wavelength: float) -> NDArray[np.complex128]:
    """Far-field response of a UPA for the given arrival angle pair.

    The response is the Kronecker product of the x-axis steering vector with
    phase rate (2 spacing / wavelength) cos(phi) cos(theta) and the y-axis
    steering vector with rate (2 spacing / wavelength) cos(phi) sin(theta).
    Every entry has unit modulus, so the squared norm equals nx*ny.
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    scale = 2.0 * geom.spacing_m / wavelength
    rate_x = scale * np.cos(aoa.phi_rad) * np.cos(aoa.theta_rad)
    rate_y = scale * np.cos(aoa.phi_rad) * np.sin(aoa.theta_rad)
    return np.kron(steering_vector(rate_x, geom.nx), steering_vector(rate_y, geom.ny))
