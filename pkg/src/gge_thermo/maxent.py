"""Maximum-entropy (GGE) inference for possibly non-commuting charges.

The constrained problem "maximize S(rho) subject to tr(rho C_i) = t_i" is
solved through its convex dual

    f(mu) = log tr exp(-sum_i mu_i C_i) + sum_i mu_i t_i,

whose gradient ``t_i - tr(rho_mu C_i)`` is exact for non-commuting charges
as well.  The dual is minimized with BFGS and a backtracking line search.

The module also analyzes qubit maps given in Bloch form (the MaxEnt
projection onto {X, Y} is one of them) through their Choi matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import (
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    _as_matrix,
    _exp_neg_normalized,
    expectation,
    partial_trace_matrix,
)
from .errors import (
    DegenerateChargesError,
    DimensionError,
    InfeasibleTargetsError,
    MaxIterationsError,
)

DEFAULT_TOL = 1e-9
DEFAULT_MU_BOUND = 1e3
# relative singular-value threshold for linear dependence of charges
DEGENERACY_RTOL = 1e-10
_MAX_STEP = 50.0


@dataclass(frozen=True)
class GGESolution:
    multipliers: np.ndarray
    state: DensityMatrix
    log_partition: float
    achieved: np.ndarray
    targets: np.ndarray
    residual: float
    iterations: int
    converged: bool
    message: str = ""
    objective_history: tuple[float, ...] = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "multipliers": [float(x) for x in self.multipliers],
            "achieved": [float(x) for x in self.achieved],
            "targets": [float(x) for x in self.targets],
            "residual": float(self.residual),
            "log_partition": float(self.log_partition),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "message": self.message,
        }


def _traceless_gram(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Covariance of the charges in the maximally mixed state.

    This is the dual Hessian at mu = 0; it is singular exactly when some
    combination of charges is proportional to the identity.
    """
    d = mats[0].shape[0]
    tl = [m - np.trace(m) / d * np.eye(d) for m in mats]
    g = np.array([[np.einsum("ij,ji->", a, b).real / d for b in tl] for a in tl])
    return 0.5 * (g + g.T)


def independent_charges(charges, rtol: float = DEGENERACY_RTOL) -> list[int]:
    """Indices of a maximal subset of charges that is independent modulo identity.

    Greedy in the given order, so earlier charges are preferred.
    """
    mats = [_as_matrix(c) for c in charges]
    keep: list[int] = []
    scale = max(np.max(np.linalg.eigvalsh(_traceless_gram(mats))), 0.0)
    for i in range(len(mats)):
        trial = keep + [i]
        w = np.linalg.eigvalsh(_traceless_gram([mats[k] for k in trial]))
        if w[0] > rtol * max(scale, 1e-300):
            keep = trial
    return keep


def solve_gge(
    charges,
    targets,
    tol: float = DEFAULT_TOL,
    max_iter: int = 500,
    *,
    mu_bound: float = DEFAULT_MU_BOUND,
    initial=None,
    strict: bool = True,
) -> GGESolution:
    """Find multipliers mu with tr(rho_mu C_i) = targets_i.

    Parameters
    ----------
    charges : sequence of square matrices or HermitianOperator
    targets : sequence of float
        Must lie inside the joint range of the charge expectations.
    tol : float
        Convergence threshold on ``max_i |achieved_i - targets_i|``.
    max_iter : int
    mu_bound : float
        Targets are declared infeasible once ``||mu||`` exceeds this while the
        residual is still above ``tol``.
    initial : sequence of float, optional
        Starting multipliers; defaults to zero (maximally mixed start).
    strict : bool
        When False, hitting ``max_iter`` returns an unconverged solution
        instead of raising ``MaxIterationsError``.

    Raises
    ------
    InfeasibleTargetsError, DegenerateChargesError, MaxIterationsError
    """
    mats = [_as_matrix(c) for c in charges]
    t = np.asarray(targets, dtype=float).ravel()
    if not mats:
        raise ValueError("need at least one charge")
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise DimensionError("charges must share one dimension")
    if t.shape != (len(mats),):
        raise ValueError(f"{len(mats)} charges but {t.size} targets")
    if not np.all(np.isfinite(t)):
        raise ValueError("targets must be finite")
    n = len(mats)

    for i, m in enumerate(mats):
        w = np.linalg.eigvalsh(m)
        if t[i] < w[0] - tol or t[i] > w[-1] + tol:
            raise InfeasibleTargetsError(
                f"infeasible targets: target {float(t[i])!r} for charge {i} lies "
                f"outside its spectral range [{float(w[0])!r}, {float(w[-1])!r}]"
            )

    gram = _traceless_gram(mats)
    gw = np.linalg.eigvalsh(gram)
    if gw[0] <= DEGENERACY_RTOL * max(gw[-1], 1e-300):
        raise DegenerateChargesError(
            "charges are linearly dependent modulo the identity; the dual Hessian "
            f"is singular (eigenvalues {gw[0]:.3e} .. {gw[-1]:.3e})"
        )
    h0 = np.linalg.inv(gram)

    stack = np.array(mats)

    def evaluate(mu):
        rho, log_z, *_ = _exp_neg_normalized(np.tensordot(mu, stack, axes=1))
        achieved = np.einsum("ij,kji->k", rho, stack).real
        return log_z + mu @ t, t - achieved, rho, log_z, achieved

    mu = np.zeros(n) if initial is None else np.asarray(initial, dtype=float).copy()
    f, g, rho, log_z, achieved = evaluate(mu)
    hinv = h0.copy()
    history = [f]
    it = 0
    message = ""

    def build(converged, msg):
        return GGESolution(
            multipliers=mu.copy(),
            state=DensityMatrix(rho, check=False),
            log_partition=log_z,
            achieved=achieved.copy(),
            targets=t.copy(),
            residual=float(np.max(np.abs(g))),
            iterations=it,
            converged=converged,
            message=msg,
            objective_history=tuple(history),
        )

    while True:
        resid = float(np.max(np.abs(g)))
        if resid <= tol:
            return build(True, "converged")
        if np.linalg.norm(mu) > mu_bound:
            raise InfeasibleTargetsError(
                f"infeasible targets: multipliers diverged past {mu_bound:g} "
                f"with residual {resid:.3e}",
                build(False, "diverged"),
            )
        if it >= max_iter:
            sol = build(False, "max_iter reached")
            if strict:
                raise MaxIterationsError(
                    f"no convergence after {max_iter} iterations (residual {resid:.3e})", sol
                )
            return sol
        it += 1

        p = -hinv @ g
        slope = g @ p
        if slope >= 0:
            hinv = h0.copy()
            p = -hinv @ g
            slope = g @ p
        step_norm = np.linalg.norm(p)
        if step_norm > _MAX_STEP:
            p *= _MAX_STEP / step_norm
            slope = g @ p

        # Armijo backtracking; once decreases drop to rounding level the
        # residual decides instead
        noise = 64 * np.finfo(float).eps * max(1.0, abs(f))
        step = 1.0
        accepted = False
        while step > 1e-12:
            mu_new = mu + step * p
            f_new, g_new, rho_new, lz_new, ach_new = evaluate(mu_new)
            if f_new <= f + 1e-4 * step * slope:
                accepted = True
                break
            if f_new <= f + noise and np.max(np.abs(g_new)) < resid:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            message = "line search failed"
            if not np.allclose(hinv, h0):
                hinv = h0.copy()
                continue
            sol = build(False, message)
            if strict:
                raise MaxIterationsError(
                    f"line search stalled at residual {resid:.3e}", sol
                )
            return sol

        s = mu_new - mu
        y = g_new - g
        sy = s @ y
        if sy > 1e-14 * np.linalg.norm(s) * np.linalg.norm(y):
            rho_k = 1.0 / sy
            eye = np.eye(n)
            v = eye - rho_k * np.outer(s, y)
            hinv = v @ hinv @ v.T + rho_k * np.outer(s, s)

        mu, f, g, rho, log_z, achieved = mu_new, f_new, g_new, rho_new, lz_new, ach_new
        history.append(f)


def maxent_project(rho, charges, tol: float = DEFAULT_TOL, max_iter: int = 500) -> DensityMatrix:
    """Maximum-entropy state with the same charge expectations as ``rho``.

    Charges that are linearly dependent on earlier ones (modulo the identity)
    are dropped first; their expectations follow automatically.
    """
    mats = [_as_matrix(c) for c in charges]
    r = _as_matrix(rho)
    keep = independent_charges(mats)
    if not keep:
        d = r.shape[0]
        return DensityMatrix(np.eye(d) / d)
    sub = [mats[i] for i in keep]
    targets = [expectation(r, m) for m in sub]
    return solve_gge(sub, targets, tol=tol, max_iter=max_iter).state


# --------------------------------------------------------------------------
# qubit maps in Bloch form

_PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True)
class BlochMapSpec:
    """Qubit map r -> linear @ r + offset on Bloch vectors.

    Extended linearly to all operators, it fixes the identity component and
    so preserves trace and Hermiticity by construction.
    """

    linear: np.ndarray
    offset: np.ndarray

    def __init__(self, linear, offset=(0.0, 0.0, 0.0)):
        lin = np.array(linear, dtype=float).reshape(3, 3)
        off = np.array(offset, dtype=float).reshape(3)
        lin.setflags(write=False)
        off.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "offset", off)

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    @classmethod
    def depolarizing(cls):
        return cls(np.zeros((3, 3)))

    @classmethod
    def pancake(cls, r: float = 1.0, eps: float = 0.0):
        """Squash the Bloch ball onto a disc of radius r at height eps."""
        return cls(np.diag([r, r, 0.0]), (0.0, 0.0, eps))

    def apply(self, op) -> np.ndarray:
        """Action on an arbitrary 2x2 operator (linear extension)."""
        a = _as_matrix(op)
        if a.shape != (2, 2):
            raise DimensionError("Bloch maps act on 2x2 operators")
        a0 = np.trace(a) / 2
        vec = np.array([np.trace(a @ s) / 2 for s in _PAULIS])
        out_vec = self.linear @ vec + a0 * self.offset
        return a0 * PAULI_I + sum(c * s for c, s in zip(out_vec, _PAULIS))

    def image_norm(self, bloch) -> np.ndarray:
        b = np.atleast_2d(np.asarray(bloch, dtype=float))
        return np.linalg.norm(b @ self.linear.T + self.offset, axis=1)

    def to_json(self) -> dict:
        return {"linear": self.linear.tolist(), "offset": self.offset.tolist()}


@dataclass(frozen=True)
class ChoiMatrix:
    """Normalized Choi state (E x id)(|Omega><Omega|), unit trace."""

    entries: np.ndarray
    eigenvalues: np.ndarray
    trace_preservation_residual: float

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


def choi(spec: BlochMapSpec) -> ChoiMatrix:
    """Apply the map to the first factor of |Omega><Omega|, Omega = (|00>+|11>)/sqrt 2."""
    j = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            e_ab = np.zeros((2, 2), dtype=complex)
            e_ab[a, b] = 1.0
            j += np.kron(spec.apply(e_ab), e_ab)
    j /= 2.0
    j = 0.5 * (j + j.conj().T)
    # tracing out the map's output must leave the maximally mixed input marginal
    marginal = partial_trace_matrix(j, (2, 2), [1])
    tp = float(np.max(np.abs(marginal - np.eye(2) / 2)))
    return ChoiMatrix(j, np.linalg.eigvalsh(j), tp)


class CPVerdict(NamedTuple):
    completely_positive: bool
    min_eigenvalue: float


def is_completely_positive(spec: BlochMapSpec, tol: float = 1e-10) -> CPVerdict:
    lo = choi(spec).min_eigenvalue
    return CPVerdict(lo >= -tol, lo)


def cp_boundary_scan(eps: float, grid: int = 1001, tol: float = 1e-10) -> float:
    """Largest disc radius r on a uniform grid over [0, 1] for which the
    approximate pancake map (radius r, height eps) is completely positive.

    Returns ``nan`` when no grid point is completely positive.
    """
    if not -1.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [-1, 1]")
    if grid < 2:
        raise ValueError("grid needs at least two points")
    best = float("nan")
    for r in np.linspace(0.0, 1.0, grid):
        if is_completely_positive(BlochMapSpec.pancake(r, eps), tol).completely_positive:
            best = float(r)
    return best
