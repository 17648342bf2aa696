"""Work extraction, passivity and complete passivity with respect to a charge.

The minimum of tr(U rho U^dag C) over unitaries pairs the eigenvalues of
rho in decreasing order with those of C in increasing order, so ergotropy
is computed exactly from the two spectra.  For n copies the spectra of
rho^{(x)n} and of the total charge are built directly (products and sums of
single-copy eigenvalues), so n-copy checks never form d^n x d^n matrices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ChargeSet,
    HermitianOperator,
    _as_matrix,
    commutator_norm,
    entropy,
    expectation,
    gge_state,
)
from .errors import DimensionError, DimensionGuardError

PASSIVITY_TOL = 1e-10
MAX_NCOPY_DIM = 4096
COMMUTANT_RTOL = 1e-10


@dataclass(frozen=True)
class ErgotropyResult:
    """Maximal decrease of <C> under unitaries.

    ``witness_permutation[j]`` is the index (in ascending eigenvalue order of
    the state) of the state eigenvalue placed on the j-th lowest charge
    eigenvalue by an optimal unitary.  With degenerate spectra other
    pairings are equally optimal; only ``value`` is unique.
    """

    value: float
    initial_expectation: float
    optimal_final_expectation: float
    passive: bool
    witness_permutation: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "passive": self.passive,
            "initial_expectation": self.initial_expectation,
            "optimal_final_expectation": self.optimal_final_expectation,
            "witness_permutation": list(self.witness_permutation),
        }


def _eigvalsh(a) -> np.ndarray:
    if isinstance(a, HermitianOperator):
        return a.spectrum()
    return np.linalg.eigvalsh(_as_matrix(a))


def passive_expectation(state_spectrum, charge_spectrum) -> float:
    """min_U tr(U rho U^dag C) from the two spectra."""
    p = np.sort(np.asarray(state_spectrum, dtype=float))[::-1]
    c = np.sort(np.asarray(charge_spectrum, dtype=float))
    if p.shape != c.shape:
        raise DimensionError("spectra have different lengths")
    return float(p @ c)


def ergotropy(rho, c, tol: float = PASSIVITY_TOL) -> ErgotropyResult:
    r = _as_matrix(rho)
    m = _as_matrix(c)
    if r.shape != m.shape:
        raise DimensionError(f"shape mismatch {r.shape} vs {m.shape}")
    p = _eigvalsh(rho)
    w = _eigvalsh(c)
    initial = expectation(r, m)
    order = np.argsort(-p, kind="stable")
    final = float(p[order] @ np.sort(w))
    value = max(initial - final, 0.0)
    return ErgotropyResult(value, initial, final, value <= tol, tuple(int(i) for i in order))


def _level_groups(w: np.ndarray, atol: float) -> list[np.ndarray]:
    """Split ascending eigenvalues into runs of (numerically) equal values."""
    groups, start = [], 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > atol:
            groups.append(np.arange(start, k))
            start = k
    return groups


@dataclass(frozen=True)
class PassivityReport:
    passive: bool
    ergotropy: float
    commutator_norm: float
    commutes: bool
    ordered: bool
    criteria_agree: bool
    # populations of each distinct charge level, lowest level first
    level_populations: tuple[tuple[float, ...], ...]

    def to_json(self) -> dict:
        return {
            "passive": self.passive,
            "value": self.ergotropy,
            "commutator_norm": self.commutator_norm,
            "commutes": self.commutes,
            "ordered": self.ordered,
            "criteria_agree": self.criteria_agree,
            "level_populations": [list(g) for g in self.level_populations],
        }


def is_passive(rho, c, tol: float = PASSIVITY_TOL) -> PassivityReport:
    """Passivity by zero ergotropy, cross-checked against the structural test.

    The structural test asks that rho commute with C and that, in a joint
    eigenbasis, populations never increase with the charge eigenvalue.
    """
    r = _as_matrix(rho)
    m = _as_matrix(c)
    erg = ergotropy(r, m, tol)
    comm = commutator_norm(r, m)
    commutes = comm <= max(tol, 1e-9)

    w, v = np.linalg.eigh(m)
    groups = _level_groups(w, 1e-9 * (1.0 + np.max(np.abs(w))))
    pops = []
    for g in groups:
        block = v[:, g].conj().T @ r @ v[:, g]
        pops.append(tuple(float(x) for x in np.linalg.eigvalsh(0.5 * (block + block.conj().T))))
    ordered = all(min(lo) >= max(hi) - tol for lo, hi in zip(pops, pops[1:]))
    structural = commutes and ordered
    return PassivityReport(
        passive=erg.passive,
        ergotropy=erg.value,
        commutator_norm=comm,
        commutes=commutes,
        ordered=ordered,
        criteria_agree=erg.passive == structural,
        level_populations=tuple(pops),
    )


def _check_ncopy_dim(d: int, n: int, max_dim: int) -> None:
    if n < 1:
        raise ValueError("n must be at least 1")
    if d**n > max_dim:
        raise DimensionGuardError(f"{d}^{n} = {d**n} exceeds the cap {max_dim}")


def n_copy_spectra(state_spectrum, charge_spectrum, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Spectra of rho^{(x)n} and of sum_k 1 (x)..(x) C_k (x)..(x) 1, in matching order."""
    p = np.asarray(state_spectrum, dtype=float)
    c = np.asarray(charge_spectrum, dtype=float)
    pn, cn = p, c
    for _ in range(n - 1):
        pn = np.multiply.outer(pn, p).ravel()
        cn = np.add.outer(cn, c).ravel()
    return pn, cn


def n_copy_ergotropy_result(
    rho, c, n: int, tol: float = PASSIVITY_TOL, max_dim: int = MAX_NCOPY_DIM
) -> ErgotropyResult:
    """Ergotropy of rho^{(x)n} w.r.t. the n-copy total charge.

    The witness indexes product eigenvectors of rho^{(x)n} in row-major
    order of the single-copy ascending eigenbasis.
    """
    r = _as_matrix(rho)
    m = _as_matrix(c)
    if r.shape != m.shape:
        raise DimensionError(f"shape mismatch {r.shape} vs {m.shape}")
    _check_ncopy_dim(r.shape[0], n, max_dim)
    pn, cn = n_copy_spectra(_eigvalsh(rho), _eigvalsh(c), n)
    initial = n * expectation(r, m)
    order = np.argsort(-pn, kind="stable")
    final = float(pn[order] @ np.sort(cn))
    value = max(initial - final, 0.0)
    return ErgotropyResult(value, initial, final, value <= tol, tuple(int(i) for i in order))


def n_copy_ergotropy(rho, c, n: int, max_dim: int = MAX_NCOPY_DIM) -> float:
    return n_copy_ergotropy_result(rho, c, n, max_dim=max_dim).value


def is_n_copy_passive(rho, c, n: int, tol: float = PASSIVITY_TOL, max_dim: int = MAX_NCOPY_DIM) -> bool:
    return n_copy_ergotropy(rho, c, n, max_dim) <= tol


def n_copy_operators(rho, c, n: int, max_dim: int = MAX_NCOPY_DIM) -> tuple[np.ndarray, np.ndarray]:
    """Explicit rho^{(x)n} and total charge as matrices (for cross-checks)."""
    r = _as_matrix(rho)
    m = _as_matrix(c)
    d = r.shape[0]
    _check_ncopy_dim(d, n, max_dim)
    rn = r
    for _ in range(n - 1):
        rn = np.kron(rn, r)
    total = np.zeros((d**n, d**n), dtype=complex)
    for k in range(n):
        term = np.eye(1)
        for j in range(n):
            term = np.kron(term, m if j == k else np.eye(d))
        total += term
    return rn, total


def free_energy(rho, cs: ChargeSet) -> float:
    """F(rho) = sum_i mu_i tr(rho C_i) - S(rho)  (dimensionless)."""
    r = _as_matrix(rho)
    return float(sum(mu * expectation(r, ch) for mu, ch in zip(cs.multipliers, cs.charges))) - entropy(rho)


@dataclass(frozen=True)
class CompletePassivityReport:
    n_values: tuple[int, ...]
    ergotropies: tuple[float, ...]
    tol: float

    @property
    def passes(self) -> bool:
        return all(e <= self.tol for e in self.ergotropies)

    def to_json(self) -> dict:
        return {
            "n": list(self.n_values),
            "ergotropy": list(self.ergotropies),
            "tol": self.tol,
            "passes": self.passes,
        }


def check_cmu_complete_passivity(
    cs: ChargeSet, n_max: int = 3, tol: float = PASSIVITY_TOL, max_dim: int = MAX_NCOPY_DIM
) -> CompletePassivityReport:
    """Ergotropy of the GGE's n-copy power w.r.t. the n-copy C(mu), n = 1..n_max."""
    rho = gge_state(cs)
    cmu = cs.combined()
    ns = tuple(range(1, n_max + 1))
    vals = tuple(n_copy_ergotropy(rho, cmu, n, max_dim) for n in ns)
    return CompletePassivityReport(ns, vals, tol)


# --------------------------------------------------------------------------
# commutant


def hermitian_basis(d: int) -> np.ndarray:
    """Hilbert-Schmidt orthonormal basis of d x d Hermitian matrices, shape (d*d, d, d)."""
    basis = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    s = 1 / np.sqrt(2)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = s
            basis.append(e)
            f = np.zeros((d, d), dtype=complex)
            f[j, k] = 1j * s
            f[k, j] = -1j * s
            basis.append(f)
    return np.array(basis)


def commutant_intersection(charges, rtol: float = COMMUTANT_RTOL) -> list[np.ndarray]:
    """Orthonormal Hermitian basis of {X : [X, C_i] = 0 for all i}.

    Found as the real null space of the stacked commutator maps on Hermitian
    coefficient vectors; singular values below ``rtol`` times the largest
    count as zero.  The first element is always 1/sqrt(d).
    """
    mats = [_as_matrix(c) for c in charges]
    if not mats:
        raise ValueError("need at least one charge")
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise DimensionError("charges must share one dimension")
    basis = hermitian_basis(d)
    blocks = []
    for m in mats:
        comm = np.einsum("kij,jl->kil", basis, m) - np.einsum("ij,kjl->kil", m, basis)
        cols = comm.reshape(len(basis), -1).T
        blocks += [cols.real, cols.imag]
    a = np.vstack(blocks)
    _, s, vh = np.linalg.svd(a)
    smax = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > rtol * smax))
    null = vh[rank:].T
    ident = np.zeros(len(basis))
    ident[:d] = 1 / np.sqrt(d)
    # the identity always commutes; put it first, then an orthonormal basis
    # of the rest of the null space
    rest = null - np.outer(ident, ident @ null)
    u, sr, _ = np.linalg.svd(rest, full_matrices=False)
    others = u[:, : max(null.shape[1] - 1, 0)]
    q = np.column_stack([ident, others])
    return [np.tensordot(q[:, k], basis, axes=1) for k in range(q.shape[1])]


def in_operator_span(x, basis, atol: float = 1e-9) -> bool:
    """Whether ``x`` lies in the real span of an HS-orthonormal Hermitian basis."""
    m = _as_matrix(x)
    coeffs = [np.einsum("ij,ji->", b.conj().T, m) for b in basis]
    recon = sum(cf * b for cf, b in zip(coeffs, basis)) if basis else np.zeros_like(m)
    return float(np.max(np.abs(m - recon))) <= atol
