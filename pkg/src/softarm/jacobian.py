"""Differential kinematics: the stacked 6x9 Jacobian and pseudoinverse tools.

Columns are computed by central finite differences on the forward
kinematics, which keeps the FK as the single source of truth for the
geometry. The angular part is the spatial angular velocity
(dR/dq_m R^T)^vee expressed in the base frame.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import N_ACTUATORS, RobotGeometry, as_actuator_vector
from .kinematics import STRAIGHT_S_THRESHOLD, _fk_rp, actuator_to_config
from .rotations import vee

#: Central-difference step (m) for the Jacobian columns.
FD_STEP = 1e-7

#: Default relative singular-value cutoff for pseudoinverses.
SV_TOL = 1e-8


class FullyStraightConfiguration(Exception):
    """Raised when every section is exactly straight; perturb and retry."""


@dataclass(frozen=True)
class Jacobian6x9:
    Jv: np.ndarray  # 3x9 linear part, m/m
    Jw: np.ndarray  # 3x9 angular part, rad/m

    @property
    def J(self) -> np.ndarray:
        return np.vstack([self.Jv, self.Jw])


def jacobian(q, geom: RobotGeometry, h: float = FD_STEP) -> Jacobian6x9:
    """6x9 end-effector Jacobian at q via central finite differences.

    Raises FullyStraightConfiguration when all three sections sit exactly
    on the straight sentinel, mirroring the perturbation rule the
    controller applies to its initial state.
    """
    q = as_actuator_vector(q)
    if all(
        actuator_to_config(q[3 * i:3 * i + 3], sec).s < STRAIGHT_S_THRESHOLD
        for i, sec in enumerate(geom.sections)
    ):
        raise FullyStraightConfiguration(
            "Jacobian undefined at the fully straight configuration")
    _, R0 = _fk_rp(q, geom)
    Jv = np.empty((3, N_ACTUATORS))
    Jw = np.empty((3, N_ACTUATORS))
    dq = np.zeros(N_ACTUATORS)
    for m in range(N_ACTUATORS):
        dq[m] = h
        p_plus, R_plus = _fk_rp(q + dq, geom)
        p_minus, R_minus = _fk_rp(q - dq, geom)
        dq[m] = 0.0
        Jv[:, m] = (p_plus - p_minus) / (2.0 * h)
        Jw[:, m] = vee(((R_plus - R_minus) / (2.0 * h)) @ R0.T)
    return Jacobian6x9(Jv=Jv, Jw=Jw)


def pinv(M, sv_tol: float = SV_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse; singular values below sv_tol * sigma_max
    are treated as zero."""
    return np.linalg.pinv(np.asarray(M, dtype=float), rcond=sv_tol)


def null_projector(M, sv_tol: float = SV_TOL) -> np.ndarray:
    """Projector I - M^+ M onto the null space of M."""
    M = np.asarray(M, dtype=float)
    return np.eye(M.shape[1]) - pinv(M, sv_tol) @ M
