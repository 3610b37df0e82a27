from .controller import (
    AdmittanceState,
    ComplianceGains,
    admittance_update,
    base_command,
    body_twist,
    gains_from_preset,
    project_outside_sphere,
    separate_end_effectors,
    virtual_force,
    wheel_speeds,
)
from .kinematics import KinematicChain, default_so101_chain, dls_ik, integrate_joint_command, solve_ik

__all__ = [
    "AdmittanceState",
    "ComplianceGains",
    "KinematicChain",
    "admittance_update",
    "base_command",
    "body_twist",
    "default_so101_chain",
    "dls_ik",
    "gains_from_preset",
    "integrate_joint_command",
    "project_outside_sphere",
    "separate_end_effectors",
    "solve_ik",
    "virtual_force",
    "wheel_speeds",
]
