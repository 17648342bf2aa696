"""Landauer erasure with several conserved charges.

* ``verify_landauer`` evaluates every term of the multi-charge Landauer
  bound for an explicit system + GGE-bath + unitary instance.
* ``analytic_erasure_costs`` / ``tradeoff_curve`` give the closed-form
  energy and charge costs of the two-bath qubit erasure protocol, which
  saturates beta dH + alpha dQ = ln 2 for every swap energy.
* ``simulate_erasure_protocol`` runs that protocol with finitely many
  level-raising steps.
* ``discrete_spin_bath_cost`` sums the erasure cost when charge levels can
  only move in quanta of hbar.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (
    ChargeSet,
    DensityMatrix,
    _as_matrix,
    entropy,
    expectation,
    gge_state,
    is_unitary,
    mutual_information,
    partial_trace_matrix,
    random_density_matrix,
    random_unitary,
    relative_entropy,
)
from .errors import DimensionError, NonUnitaryError
from .parallel import pmap

LN2 = math.log(2.0)


@dataclass(frozen=True)
class LandauerReport:
    """Terms of the bound  sum_i mu_i dC_i >= -dS_S  for one instance.

    ``dC[i]`` is the change of the i-th bath charge (index 0 is the heat
    dH).  ``identity_residual`` measures the exact relation
    -dS_S + I(S':R') = sum_i mu_i dC_i - S(rho'_R || rho_R).
    """

    dS_S: float
    dC: tuple[float, ...]
    mutual_info: float
    rel_entropy_bath: float
    lhs: float
    slack: float
    identity_residual: float

    @property
    def bound_holds(self) -> bool:
        return self.slack >= -1e-9

    def to_json(self) -> dict:
        return {
            "dS_S": self.dS_S,
            "dC": list(self.dC),
            "mutual_info": self.mutual_info,
            "rel_entropy_bath": self.rel_entropy_bath,
            "lhs": self.lhs,
            "slack": self.slack,
            "identity_residual": self.identity_residual,
            "bound_holds": self.bound_holds,
        }


def verify_landauer(rho_s, bath_cs: ChargeSet, unitary, dims=None) -> LandauerReport:
    """Evolve rho_S (x) GGE(bath_cs) under ``unitary`` and evaluate the bound."""
    rs = _as_matrix(rho_s)
    d_s, d_r = rs.shape[0], bath_cs.dim
    if dims is not None and tuple(dims) != (d_s, d_r):
        raise DimensionError(f"dims {tuple(dims)} do not match system {d_s} and bath {d_r}")
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (d_s * d_r, d_s * d_r):
        raise DimensionError(f"unitary has shape {u.shape}, expected {(d_s * d_r,) * 2}")
    if not is_unitary(u):
        raise NonUnitaryError("evolution operator is not unitary within 1e-10")

    gamma = gge_state(bath_cs)
    joint = u @ np.kron(rs, gamma.matrix) @ u.conj().T
    joint = 0.5 * (joint + joint.conj().T)
    rs_out = partial_trace_matrix(joint, (d_s, d_r), [0])
    rr_out = partial_trace_matrix(joint, (d_s, d_r), [1])

    dc = tuple(expectation(rr_out, c) - expectation(gamma, c) for c in bath_cs.charges)
    ds_s = entropy(rs_out) - entropy(rs)
    info = mutual_information(joint, (d_s, d_r))
    rel = relative_entropy(rr_out, gamma)
    lhs = math.fsum(mu * x for mu, x in zip(bath_cs.multipliers, dc))
    resid = abs((-ds_s + info) - (lhs - rel))
    return LandauerReport(ds_s, dc, info, rel, lhs, lhs + ds_s, resid)


def random_landauer_instance(rng: np.random.Generator, d_s: int = 2, d_r: int = 4, levels: int = 3):
    """Random (rho_S, bath ChargeSet, U) with [U, X (x) 1 + 1 (x) X_R] = 0 for X = H, Q.

    Charges have small integer spectra so that the joint (H, Q) eigenspaces
    are degenerate and U mixes within them; system and bath bases are then
    rotated by random local unitaries.  Bath charges commute.
    """
    hs = rng.integers(0, levels, d_s).astype(float)
    qs = rng.integers(0, levels, d_s).astype(float)
    hr = rng.integers(0, levels, d_r).astype(float)
    qr = rng.integers(0, levels, d_r).astype(float)
    h_tot = np.add.outer(hs, hr).ravel()
    q_tot = np.add.outer(qs, qr).ravel()
    u = np.zeros((d_s * d_r, d_s * d_r), dtype=complex)
    for key in set(zip(h_tot, q_tot)):
        idx = np.flatnonzero((h_tot == key[0]) & (q_tot == key[1]))
        u[np.ix_(idx, idx)] = random_unitary(len(idx), rng)
    vs = random_unitary(d_s, rng)
    vr = random_unitary(d_r, rng)
    local = np.kron(vs, vr)
    u = local @ u @ local.conj().T
    h_r = vr @ np.diag(hr) @ vr.conj().T
    q_r = vr @ np.diag(qr) @ vr.conj().T
    beta = rng.uniform(0.1, 3.0)
    alpha = rng.uniform(-2.0, 2.0)
    bath = ChargeSet([h_r, q_r], [beta, alpha])
    sys_charges = (vs @ np.diag(hs) @ vs.conj().T, vs @ np.diag(qs) @ vs.conj().T)
    return random_density_matrix(d_s, rng), bath, u, sys_charges


def landauer_property_check(
    n_trials: int = 1000, seed: int = 0, d_s: int = 2, d_r: int = 4, workers=None
) -> dict:
    """Worst identity residual and slack over seeded random instances.

    Trial ``i`` draws from its own child of ``SeedSequence(seed)``, so the
    result does not depend on the number of worker threads.
    """
    children = np.random.SeedSequence(seed).spawn(n_trials)

    def trial(ss):
        rho, bath, u, _ = random_landauer_instance(np.random.default_rng(ss), d_s, d_r)
        rep = verify_landauer(rho, bath, u)
        return rep.identity_residual, rep.slack

    results = pmap(trial, children, workers)
    return {
        "trials": n_trials,
        "seed": seed,
        "max_identity_residual": max(r[0] for r in results),
        "min_slack": min(r[1] for r in results),
    }


# --------------------------------------------------------------------------
# closed-form two-bath protocol


def _check_rates(beta, alpha):
    if not (beta > 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be positive and finite, got {beta!r}")
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be positive and finite, got {alpha!r}")


def _swap_terms(eps, beta):
    """log(1 + e^{-beta eps}) and eps * e^{-beta eps} / (1 + e^{-beta eps})."""
    eps = np.asarray(eps, dtype=float)
    if np.any(np.isnan(eps)) or np.any(eps < 0):
        raise ValueError("swap energy must be >= 0 (inf allowed)")
    x = beta * eps
    soft = np.log1p(np.exp(-x))
    with np.errstate(invalid="ignore", over="ignore"):
        p = np.exp(-np.logaddexp(0.0, x))
        eps_p = np.where(np.isinf(eps), 0.0, eps * p)
    return soft, eps_p


def analytic_erasure_costs(eps, beta: float, alpha: float):
    """Total energy and charge cost (dH_tot, dQ_tot) of the protocol swapping at ``eps``.

    ``eps`` may be an array and may contain ``inf``.
    """
    _check_rates(beta, alpha)
    soft, eps_p = _swap_terms(eps, beta)
    dh = (LN2 - soft) / beta - eps_p
    dq = soft / alpha + (beta / alpha) * eps_p
    if np.ndim(dh) == 0:
        return float(dh), float(dq)
    return dh, dq


@dataclass(frozen=True)
class TradeoffCurve:
    beta: float
    alpha: float
    epsilon: np.ndarray
    dH: np.ndarray
    dQ: np.ndarray
    identity_residual: np.ndarray

    def rows(self):
        return zip(self.epsilon, self.dH, self.dQ, self.identity_residual)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("epsilon,dH,dQ,identity_residual\n")
        for row in self.rows():
            buf.write(",".join(f"{float(v):.17g}" for v in row) + "\n")
        return buf.getvalue()


def tradeoff_curve(beta: float, alpha: float, eps_grid) -> TradeoffCurve:
    eps = np.asarray(eps_grid, dtype=float).ravel()
    dh, dq = analytic_erasure_costs(eps, beta, alpha)
    dh, dq = np.atleast_1d(dh), np.atleast_1d(dq)
    resid = np.abs(beta * dh + alpha * dq - LN2)
    return TradeoffCurve(beta, alpha, eps, dh, dq, resid)


# --------------------------------------------------------------------------
# finite-step protocol


@dataclass(frozen=True)
class ProtocolStep:
    label: str
    level_value: float
    population_moved: float
    dH: float
    dQ: float
    dS_S: float
    increments: int = 0

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "level_value": _json_float(self.level_value),
            "population_moved": self.population_moved,
            "dH": self.dH,
            "dQ": self.dQ,
            "dS_S": self.dS_S,
            "increments": self.increments,
        }


def _json_float(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


@dataclass(frozen=True)
class ProtocolTrace:
    """Ledger of one erasure run on the four levels |00>, |01>, |10>, |11>
    (first label energy, second label charge)."""

    steps: tuple[ProtocolStep, ...]
    dH_tot: float
    dQ_tot: float
    final_state: DensityMatrix
    parameters: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "steps": [s.to_json() for s in self.steps],
            "totals": {"dH_tot": self.dH_tot, "dQ_tot": self.dQ_tot},
            "final_populations": self.final_state.populations().tolist(),
            "parameters": self.parameters,
        }


def _binary_entropy(p: float) -> float:
    return -sum(x * math.log(x) for x in (p, 1.0 - p) if x > 0.0)


def simulate_erasure_protocol(
    eps_swap: float,
    beta: float,
    alpha: float,
    n_steps: int,
    tail_tol: float = 1e-8,
) -> ProtocolTrace:
    """Erase a maximally mixed bit with a heat bath, then a charge bath.

    1. start from 1/2 (|00><00| + |10><10|);
    2. raise the energy of |10> from 0 to ``eps_swap`` in ``n_steps`` equal
       increments, each costing p * d_eps and followed by full
       rethermalization (the Riemann sum over-estimates the reversible cost);
    3. raise the charge of the empty level |01> to q = beta eps_swap / alpha
       for free;
    4. swap |01> <-> |10>;
    5. raise |01> further against the charge bath with the same
       dimensionless increment until its population is below ``tail_tol``,
       then add the reversible cost of the remaining raise to infinity.

    The dimensionless increment is beta * eps_swap / n_steps, or 1 / n_steps
    when eps_swap is zero.
    """
    _check_rates(beta, alpha)
    if not (eps_swap >= 0 and math.isfinite(eps_swap)):
        raise ValueError("eps_swap must be finite and >= 0")
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError("n_steps must be a positive integer")
    if not 0 < tail_tol < 0.5:
        raise ValueError("tail_tol must lie in (0, 0.5)")
    n_steps = int(n_steps)

    x_swap = beta * eps_swap
    dx = x_swap / n_steps if x_swap > 0 else 1.0 / n_steps
    steps = [ProtocolStep("1-initial", 0.0, 0.0, 0.0, 0.0, 0.0)]

    # step 2: energy raising of |10> against the heat bath
    if x_swap > 0:
        work, k, _, p = kernels.raise_level(0.0, dx, n_steps, 0.0)
        steps.append(ProtocolStep(
            "2-raise-energy", eps_swap, 0.5 - p, work / beta, 0.0,
            _binary_entropy(p) - LN2, k,
        ))
    else:
        p = 0.5
        steps.append(ProtocolStep("2-raise-energy", 0.0, 0.0, 0.0, 0.0, 0.0, 0))

    # step 3: empty charge level, no cost
    q = x_swap / alpha
    steps.append(ProtocolStep("3-raise-charge-empty", q, 0.0, 0.0, 0.0, 0.0, 0))

    # step 4: |01> <-> |10>
    steps.append(ProtocolStep("4-swap", eps_swap, p, -eps_swap * p, q * p, 0.0, 0))

    # step 5: charge raising against the charge bath
    s_before = _binary_entropy(p)
    work, k, x_f, p_f = kernels.raise_level(x_swap, dx, -1, tail_tol)
    steps.append(ProtocolStep(
        "5-raise-charge", x_f / alpha, p - p_f, 0.0, work / alpha,
        _binary_entropy(p_f) - s_before, k,
    ))
    steps.append(ProtocolStep(
        "5-tail", math.inf, 0.0, 0.0, math.log1p(math.exp(-x_f)) / alpha, 0.0, 0,
    ))

    final = np.diag([1.0 - p_f, p_f, 0.0, 0.0]).astype(complex)
    return ProtocolTrace(
        steps=tuple(steps),
        dH_tot=math.fsum(s.dH for s in steps),
        dQ_tot=math.fsum(s.dQ for s in steps),
        final_state=DensityMatrix(final, check=False),
        parameters={
            "beta": beta,
            "alpha": alpha,
            "eps_swap": eps_swap,
            "n_steps": n_steps,
            "truncation": tail_tol,
            "dimensionless_step": dx,
            "kernel_backend": kernels.BACKEND,
        },
    )


# --------------------------------------------------------------------------
# discrete spin bath


def discrete_spin_bath_cost(alpha: float, hbar: float = 1.0, tail_tol: float = 1e-13) -> float:
    """Charge cost of erasure when the charge level rises in steps of ``hbar``.

    Sums hbar e^{-alpha n} / (1 + e^{-alpha n}) from n = 0, so the cost tends
    to hbar / 2 at large alpha (one unavoidable step) and to ln 2 / alpha at
    small alpha.  Truncation error is below ``tail_tol``.
    """
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError("alpha must be positive and finite")
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    if not tail_tol > 0:
        raise ValueError("tail_tol must be positive")
    return kernels.spin_bath_series(alpha, hbar, tail_tol)[0]
