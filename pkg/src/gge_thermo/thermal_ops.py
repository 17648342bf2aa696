"""Thermal Operations with several conserved charges.

A channel rho -> tr_{R'}[U (rho (x) gamma_R) U^dag] belongs to the class
when U commutes with every total charge C_i (x) 1 + 1 (x) C_i^R and gamma_R
is a free bath state.  Membership is reported as residuals, not a boolean.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ChargeSet,
    DensityMatrix,
    _as_matrix,
    expectation,
    gibbs_state,
    gge_state,
    is_unitary,
    operator_from_json,
    partial_trace_matrix,
    trace_distance,
)
from .errors import DimensionError, NonUnitaryError
from .maxent import maxent_project
from .passivity import commutant_intersection, in_operator_span

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class ThermalOpSpec:
    """Dilation data for a (multi-charge) Thermal Operation.

    ``factor_dims`` splits the joint space system (x) bath into tensor
    factors (default: one factor each); ``traced_out`` lists the factors
    discarded at the end, which need not be the bath.
    """

    system_charges: ChargeSet
    bath_charges: ChargeSet
    unitary: np.ndarray
    traced_out: tuple[int, ...] = (1,)
    factor_dims: tuple[int, ...] | None = None

    def __post_init__(self):
        if len(self.system_charges) != len(self.bath_charges):
            raise ValueError("system and bath need the same number of charges")
        joint = self.system_charges.dim * self.bath_charges.dim
        u = np.array(self.unitary, dtype=complex)
        if u.shape != (joint, joint):
            raise DimensionError(f"unitary has shape {u.shape}, expected {(joint, joint)}")
        if not is_unitary(u):
            raise NonUnitaryError("dilation unitary is not unitary within 1e-10")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)
        fdims = self.factor_dims
        if fdims is None:
            fdims = (self.system_charges.dim, self.bath_charges.dim)
        fdims = tuple(int(x) for x in fdims)
        if int(np.prod(fdims)) != joint:
            raise DimensionError(f"factor dims {fdims} do not multiply to {joint}")
        object.__setattr__(self, "factor_dims", fdims)
        traced = tuple(sorted(set(int(i) for i in self.traced_out)))
        if any(i < 0 or i >= len(fdims) for i in traced):
            raise DimensionError(f"traced_out {traced} out of range for {len(fdims)} factors")
        object.__setattr__(self, "traced_out", traced)

    @property
    def kept(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.factor_dims)) if i not in self.traced_out)

    def total_charges(self) -> list[np.ndarray]:
        ds, dr = self.system_charges.dim, self.bath_charges.dim
        return [
            np.kron(cs.matrix, np.eye(dr)) + np.kron(np.eye(ds), cr.matrix)
            for cs, cr in zip(self.system_charges.charges, self.bath_charges.charges)
        ]


def conservation_residuals(spec: ThermalOpSpec) -> list[float]:
    """Spectral norms of [U, C_i (x) 1 + 1 (x) C_i^R], one per charge."""
    u = spec.unitary
    return [float(np.linalg.norm(u @ c - c @ u, 2)) for c in spec.total_charges()]


def is_member(spec: ThermalOpSpec, tol: float = MEMBERSHIP_TOL) -> bool:
    return all(r <= tol for r in conservation_residuals(spec))


def apply_thermal_operation(spec: ThermalOpSpec, rho) -> DensityMatrix:
    r = _as_matrix(rho)
    if r.shape[0] != spec.system_charges.dim:
        raise DimensionError(
            f"state has dim {r.shape[0]}, system charges have dim {spec.system_charges.dim}"
        )
    gamma = gge_state(spec.bath_charges).matrix
    u = spec.unitary
    joint = u @ np.kron(r, gamma) @ u.conj().T
    out = partial_trace_matrix(joint, spec.factor_dims, spec.kept)
    return DensityMatrix(0.5 * (out + out.conj().T), check=False)


def joint_charge_drift(spec: ThermalOpSpec, rho) -> list[float]:
    """|<C_tot>_after - <C_tot>_before| on the joint state, per charge."""
    r = _as_matrix(rho)
    joint = np.kron(r, gge_state(spec.bath_charges).matrix)
    after = spec.unitary @ joint @ spec.unitary.conj().T
    return [abs(expectation(after, c) - expectation(joint, c)) for c in spec.total_charges()]


@dataclass(frozen=True)
class MomentReport:
    k: tuple[int, ...]
    residuals: tuple[float, ...]

    def to_json(self) -> dict:
        return {"k": list(self.k), "residuals": list(self.residuals)}


def average_preservation_check(unitary, rho, c, k_max: int = 4) -> MomentReport:
    """|tr(U rho U^dag C^k) - tr(rho C^k)| for k = 1..k_max."""
    u = np.asarray(unitary, dtype=complex)
    r = _as_matrix(rho)
    m = _as_matrix(c)
    out = u @ r @ u.conj().T
    res, ck = [], np.eye(m.shape[0], dtype=complex)
    for _ in range(k_max):
        ck = ck @ m
        res.append(abs(expectation(out, ck) - expectation(r, ck)))
    return MomentReport(tuple(range(1, k_max + 1)), tuple(res))


# --------------------------------------------------------------------------
# coherence injection under average-energy conservation


QUTRIT_H = np.diag([0.0, 1.0, 2.0]).astype(complex)


def qutrit_injection_unitary() -> np.ndarray:
    """Unitary with |1> -> (|0> + |2>)/sqrt 2, |0> -> (|0> - |2>)/sqrt 2, |2> -> |1>.

    Every image vector has energy expectation 1 under H = |1><1| + 2|2><2|.
    """
    s = 1 / np.sqrt(2)
    u = np.zeros((3, 3), dtype=complex)
    u[:, 0] = [s, 0, -s]
    u[:, 1] = [s, 0, s]
    u[:, 2] = [0, 1, 0]
    return u


def _max_offdiag(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - np.diag(np.diag(m)))))


def coherent_gibbs_vector(h, beta: float) -> np.ndarray:
    """sum_k sqrt(e^{-beta E_k}/Z) |E_k>; its populations are the Gibbs weights."""
    w, v = np.linalg.eigh(_as_matrix(h))
    p = np.exp(-beta * (w - w[0]))
    p /= p.sum()
    return v @ np.sqrt(p)


def coherence_injection_demo(beta: float = 1.0) -> dict:
    """Both coherence-generating examples for average-energy conservation."""
    h = QUTRIT_H
    u = qutrit_injection_unitary()
    one = np.diag([0.0, 1.0, 0.0]).astype(complex)
    gamma = gibbs_state(h, beta).matrix
    mixed = np.eye(3, dtype=complex) / 3

    out_one = u @ one @ u.conj().T
    out_gamma = u @ gamma @ u.conj().T
    out_mixed = u @ mixed @ u.conj().T

    psi = coherent_gibbs_vector(h, beta)
    pure = np.outer(psi, psi.conj())
    return {
        "beta": beta,
        "conservation_residual": float(np.linalg.norm(u @ h - h @ u, 2)),
        "energy_residual_excited_input": abs(expectation(out_one, h) - expectation(one, h)),
        "offdiag_from_excited": abs(out_one[0, 2]),
        "energy_residual_gibbs_input": abs(expectation(out_gamma, h) - expectation(gamma, h)),
        "offdiag_from_gibbs": _max_offdiag(out_gamma),
        "maximally_mixed_change": trace_distance(out_mixed, mixed),
        "gibbs_to_pure": {
            "moment_residuals": [
                abs(expectation(pure, np.linalg.matrix_power(h, k))
                    - expectation(gamma, np.linalg.matrix_power(h, k)))
                for k in range(1, 5)
            ],
            "purity_before": float(np.trace(gamma @ gamma).real),
            "purity_after": float(np.trace(pure @ pure).real),
            "offdiag_after": _max_offdiag(pure),
        },
    }


# --------------------------------------------------------------------------
# candidate free-state sets


def is_commutant_free(state, charges, atol: float = 1e-9) -> bool:
    """State lies in the span of operators commuting with every charge."""
    return in_operator_span(state, commutant_intersection(charges), atol)


def is_gge_free(state, charges, atol: float = 1e-8) -> bool:
    """State is its own maximum-entropy projection for these charges."""
    return trace_distance(maxent_project(state, charges), state) <= atol


# --------------------------------------------------------------------------
# JSON bundle


def load_thermal_op_bundle(obj: dict) -> tuple[ThermalOpSpec, np.ndarray | None]:
    """Build a spec (and optional input state) from the JSON bundle format.

    Keys: system_charges, bath_charges (lists of operators), optional
    system_multipliers, bath_multipliers, unitary (operator), optional
    factor_dims, traced_out (default [1]), state.
    """
    if not isinstance(obj, dict):
        raise ValueError("bundle: expected a JSON object")
    for key in ("system_charges", "bath_charges", "unitary"):
        if key not in obj:
            raise ValueError(f"bundle: missing key {key!r}")

    def charges(key):
        items = obj[key]
        if not isinstance(items, list) or not items:
            raise ValueError(f"{key}: expected a non-empty list of operators")
        return [operator_from_json(x, f"{key}[{i}]") for i, x in enumerate(items)]

    sc, bc = charges("system_charges"), charges("bath_charges")
    sm = obj.get("system_multipliers", [0.0] * len(sc))
    bm = obj.get("bath_multipliers", [0.0] * len(bc))
    spec = ThermalOpSpec(
        system_charges=ChargeSet(sc, sm),
        bath_charges=ChargeSet(bc, bm),
        unitary=operator_from_json(obj["unitary"], "unitary"),
        traced_out=tuple(obj.get("traced_out", [1])),
        factor_dims=tuple(obj["factor_dims"]) if "factor_dims" in obj else None,
    )
    state = operator_from_json(obj["state"], "state") if "state" in obj else None
    return spec, state
