"""High-level interface to the fiberwise Legendre transform of a scenario.

Wraps a :class:`~legendre_dual.geometry.Geometry` with the operations the
checks and the public API need most often:

* map points between the velocity side and the momentum side;
* evaluate whichever potential was supplied, and the materialized one;
* the involution (round-trip) residual of the two fiber maps;
* the fiber-Hessian duality residual (the two Hessians are mutually
  inverse along the coordinate change).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import SolvedFiberMap
from .geometry import Geometry, SIDE_E
from .linalg import invert
from .scenario import ScenarioModel

__all__ = [
    "LegendrePair",
    "phi_L",
    "phi_H",
    "hamiltonian_from_lagrangian",
    "lagrangian_from_hamiltonian",
]


@dataclass
class LegendrePair:
    """Both sides of the fiberwise Legendre transform for one scenario."""

    geom: Geometry

    @classmethod
    def from_model(cls, model: ScenarioModel) -> "LegendrePair":
        return cls(Geometry(model))

    # -- point transport ------------------------------------------------ #

    def to_momenta(self, u: np.ndarray) -> np.ndarray:
        """(x, y) -> (x, p) along the fiber gradient of the velocity-side
        potential."""
        return self.geom.phi_L_map().image(self.geom.session, np.asarray(u, float))

    def to_velocities(self, w: np.ndarray) -> np.ndarray:
        """(x, p) -> (x, y) along the fiber gradient of the momentum-side
        potential."""
        return self.geom.phi_H_map().image(self.geom.session, np.asarray(w, float))

    # -- potential values ------------------------------------------------ #

    def lagrangian_value(self, u: np.ndarray) -> float:
        return self.geom.lagrangian_field().value(
            self.geom.session, np.asarray(u, float)
        )

    def hamiltonian_value(self, w: np.ndarray) -> float:
        return self.geom.hamiltonian_field().value(
            self.geom.session, np.asarray(w, float)
        )

    # -- residuals ------------------------------------------------------- #

    def round_trip_residual(self, point: np.ndarray, side: str = SIDE_E) -> float:
        """Sup-norm defect of mapping to the other side and back."""
        point = np.asarray(point, float)
        if side == SIDE_E:
            back = self.to_momenta(point)
            there = self.to_velocities(back)
        else:
            back = self.to_velocities(point)
            there = self.to_momenta(back)
        return float(np.max(np.abs(there - point)))

    def hessian_duality_residual(self, w: np.ndarray) -> float:
        """Sup-norm of  inv(fiber Hessian of H at w) − (fiber Hessian of L
        at the mapped point):  the two fiber Hessians must be mutually
        inverse along the coordinate change."""
        geom = self.geom
        w = np.asarray(w, float)
        r = geom.r
        u = self.to_velocities(w)
        hess_h = np.array(
            [
                [geom.H_fiber2(a, b).value(geom.session, w) for b in range(r)]
                for a in range(r)
            ]
        )
        hess_l = np.array(
            [
                [geom.L_fiber2(a, b).value(geom.session, u) for b in range(r)]
                for a in range(r)
            ]
        )
        return float(np.max(np.abs(invert(hess_h) - hess_l)))

    def conjugate_defect(self, u: np.ndarray) -> float:
        """|L(u) + H(phi_L(u)) − <p, y>| — the defining relation of the
        transform, evaluated pointwise."""
        geom = self.geom
        u = np.asarray(u, float)
        w = self.to_momenta(u)
        pairing = float(np.dot(w[geom.m :], u[geom.m :]))
        return abs(
            self.lagrangian_value(u) + self.hamiltonian_value(w) - pairing
        )


# ---------------------------------------------------------------------- #
# functional interface


def phi_L(pair: LegendrePair, u: np.ndarray) -> np.ndarray:
    """Velocity point -> momentum point along the fiber gradient of the
    velocity-side potential."""
    return pair.to_momenta(u)


def phi_H(pair: LegendrePair, w: np.ndarray) -> np.ndarray:
    """Momentum point -> velocity point along the fiber gradient of the
    momentum-side potential."""
    return pair.to_velocities(w)


def _inverse_gradient_map(geom: Geometry, from_l: bool) -> SolvedFiberMap:
    """Newton-backed inverse of one potential's fiber gradient, built from
    that potential alone (ignores the other side even when supplied)."""
    if from_l:
        key = ("conjugate-inverse", "L")
        build = lambda: SolvedFiberMap(
            geom.Estar, geom.E, geom.lagrangian_field(), geom.m, geom.r,
            "conjugate-from-L",
        )
    else:
        key = ("conjugate-inverse", "H")
        build = lambda: SolvedFiberMap(
            geom.E, geom.Estar, geom.hamiltonian_field(), geom.m, geom.r,
            "conjugate-from-H",
        )
    return geom._get(key, build)


def hamiltonian_from_lagrangian(pair: LegendrePair, at: np.ndarray) -> float:
    """Conjugate value <p, y*> − L(x, y*) at a momentum point, where y*
    solves the stationarity condition of the velocity-side potential.
    Computed from that potential alone."""
    geom = pair.geom
    at = np.asarray(at, float)
    if geom.model.hamiltonian is None:
        return pair.hamiltonian_value(at)
    u = _inverse_gradient_map(geom, from_l=True).image(geom.session, at)
    pairing = float(np.dot(at[geom.m :], u[geom.m :]))
    return pairing - pair.lagrangian_value(u)


def lagrangian_from_hamiltonian(pair: LegendrePair, at: np.ndarray) -> float:
    """Conjugate value <p*, y> − H(x, p*) at a velocity point, where p*
    solves the stationarity condition of the momentum-side potential.
    Computed from that potential alone."""
    geom = pair.geom
    at = np.asarray(at, float)
    if geom.model.lagrangian is None:
        return pair.lagrangian_value(at)
    w = _inverse_gradient_map(geom, from_l=False).image(geom.session, at)
    pairing = float(np.dot(w[geom.m :], at[geom.m :]))
    return pairing - pair.hamiltonian_value(w)
