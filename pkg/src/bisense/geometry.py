"""Planar bistatic geometry: ranges, bearing angles, delay, position Jacobian.

All positions are 2-D in meters. Angles are global bearings, counterclockwise
from the +x axis, in (-pi, pi]. The single propagation path is
transmitter -> scatterer -> receiver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class Position2D:
    """A point in the scene plane, meters."""

    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class GeometryState:
    """Derived geometry for one transmitter/receiver/scatterer placement.

    Attributes:
        d_ts: transmitter-to-scatterer range, m.
        d_sr: scatterer-to-receiver range, m.
        theta_t: bearing transmitter -> scatterer, rad.
        theta_r: bearing receiver -> scatterer, rad.
        tau: bistatic propagation delay (d_ts + d_sr) / c, s.
        jacobian: 2x3 matrix mapping (delay, bearing_t, bearing_r) gradients
            to scatterer position; columns are d(tau)/d(p_s),
            d(theta_t)/d(p_s), d(theta_r)/d(p_s).
    """

    d_ts: float
    d_sr: float
    theta_t: float
    theta_r: float
    tau: float
    jacobian: np.ndarray

    def __post_init__(self):
        self.jacobian.flags.writeable = False


def polar_units(phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Radial and tangential unit vectors at bearing phi.

    Returns (e_r, e_phi) with e_r = (cos phi, sin phi) and
    e_phi = (-sin phi, cos phi) = d(e_r)/d(phi).
    """
    c, s = np.cos(phi), np.sin(phi)
    return np.array([c, s]), np.array([-s, c])


def derive_geometry(
    p_t: Position2D,
    p_r: Position2D,
    p_s: Position2D,
    min_range: float = 1e-9,
) -> GeometryState:
    """Compute ranges, bearings, delay and the position Jacobian.

    The Jacobian columns are exact gradients of the three observables with
    respect to the scatterer position:

        d(tau)/d(p_s)     = (e_r(theta_t) + e_r(theta_r)) / c
        d(theta_t)/d(p_s) = e_phi(theta_t) / d_ts
        d(theta_r)/d(p_s) = e_phi(theta_r) / d_sr

    Raises:
        DegenerateGeometry: if the scatterer is within min_range (m) of the
            transmitter or the receiver.
    """
    vec_ts = p_s.as_array() - p_t.as_array()
    vec_rs = p_s.as_array() - p_r.as_array()
    d_ts = float(np.hypot(*vec_ts))
    d_sr = float(np.hypot(*vec_rs))
    if d_ts < min_range or d_sr < min_range:
        raise DegenerateGeometry(
            f"scatterer within {min_range} m of a terminal "
            f"(d_ts={d_ts:.3e} m, d_sr={d_sr:.3e} m)"
        )

    theta_t = float(np.arctan2(vec_ts[1], vec_ts[0]))
    theta_r = float(np.arctan2(vec_rs[1], vec_rs[0]))
    tau = (d_ts + d_sr) / SPEED_OF_LIGHT

    er_t, ephi_t = polar_units(theta_t)
    er_r, ephi_r = polar_units(theta_r)
    jacobian = np.column_stack(
        [
            (er_t + er_r) / SPEED_OF_LIGHT,
            ephi_t / d_ts,
            ephi_r / d_sr,
        ]
    )
    return GeometryState(
        d_ts=d_ts,
        d_sr=d_sr,
        theta_t=theta_t,
        theta_r=theta_r,
        tau=tau,
        jacobian=jacobian,
    )
