"""Dense operator algebra, state functionals and composite-system plumbing.

Everything here works on small dense complex matrices.  Matrix functions
(exp, log) go through a full Hermitian eigendecomposition.  All logarithms
are natural, so entropies are in nats.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionError,
    ExponentOverflowError,
    InvalidStateError,
    KindMismatchError,
    NotHermitianError,
)

HERMITIAN_RTOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-9
# eigenvalues at or below this are treated as zero in entropic functionals
EIG_ZERO = 1e-12


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, HermitianOperator):
        return a.matrix
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermiticity_defect(a) -> float:
    m = np.asarray(a, dtype=complex)
    return float(np.max(np.abs(m - m.conj().T), initial=0.0))


def is_hermitian(a, rtol: float = HERMITIAN_RTOL) -> bool:
    m = np.asarray(a, dtype=complex)
    scale = float(np.max(np.abs(m), initial=0.0))
    return hermiticity_defect(m) <= rtol * (1.0 + scale)


class HermitianOperator:
    """Immutable finite-dimensional observable.

    Wraps a complex ``dim x dim`` matrix that is Hermitian to within
    ``1e-10 * (1 + max|A_ij|)``.  The stored matrix is exactly Hermitian
    (symmetrized on construction) and read-only.  ``spectrum()`` is computed
    lazily and cached.
    """

    __slots__ = ("_m", "_eig")

    def __init__(self, matrix, *, check: bool = True):
        m = np.array(_as_matrix(matrix), dtype=complex, copy=True)
        if check and not is_hermitian(m):
            raise NotHermitianError(
                f"matrix is not Hermitian (defect {hermiticity_defect(m):.3e})"
            )
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self._m = m
        self._eig = None

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and the matching orthonormal eigenvectors."""
        if self._eig is None:
            w, v = np.linalg.eigh(self._m)
            w.setflags(write=False)
            v.setflags(write=False)
            self._eig = (w, v)
        return self._eig

    def spectrum(self) -> np.ndarray:
        return self.eigh()[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._m
        return self._m.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, HermitianOperator):
            return NotImplemented
        return type(self) is type(other) and np.array_equal(self._m, other._m)

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"

    def to_json(self) -> dict:
        return operator_to_json(self._m)

    @classmethod
    def from_json(cls, obj):
        return cls(operator_from_json(obj))


class DensityMatrix(HermitianOperator):
    """Quantum state: Hermitian, unit trace, eigenvalues >= -1e-9."""

    __slots__ = ()

    def __init__(self, matrix, *, check: bool = True):
        super().__init__(matrix, check=check)
        if check:
            tr = np.trace(self._m).real
            if abs(tr - 1.0) > TRACE_ATOL:
                raise InvalidStateError(f"trace is {tr!r}, expected 1")
            lo = self.spectrum()[0]
            if lo < -PSD_ATOL:
                raise InvalidStateError(f"minimum eigenvalue {lo:.3e} is negative")

    def populations(self) -> np.ndarray:
        """Diagonal of the matrix in the computational basis."""
        return self._m.diagonal().real.copy()


def _like(template, m, state: bool):
    """Wrap ``m`` as the same kind as ``template`` (raw arrays stay raw)."""
    if isinstance(template, DensityMatrix) or (state and isinstance(template, HermitianOperator)):
        return DensityMatrix(m, check=False)
    if isinstance(template, HermitianOperator):
        return HermitianOperator(m, check=False)
    return m


# --------------------------------------------------------------------------
# standard operators


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
for _p in (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z):
    _p.setflags(write=False)


def spin_operators(j: float = 0.5) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Angular momentum matrices (L_x, L_y, L_z) for spin ``j`` in units of hbar.

    Basis ordered m = j, j-1, ..., -j.
    """
    d = int(round(2 * j + 1))
    if d < 1 or abs(d - (2 * j + 1)) > 1e-12:
        raise ValueError(f"invalid spin {j!r}")
    m = j - np.arange(d)
    # <m+1|L_+|m> = sqrt(j(j+1) - m(m+1))
    lp = np.zeros((d, d), dtype=complex)
    for k in range(1, d):
        lp[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    lx = 0.5 * (lp + lp.conj().T)
    ly = -0.5j * (lp - lp.conj().T)
    lz = np.diag(m).astype(complex)
    return lx, ly, lz


def bell_state() -> DensityMatrix:
    """|Omega><Omega| with |Omega> = (|00> + |11>)/sqrt(2)."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1 / np.sqrt(2)
    return DensityMatrix(np.outer(psi, psi.conj()))


def pure_state(vector) -> DensityMatrix:
    v = np.asarray(vector, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def maximally_mixed(d: int) -> DensityMatrix:
    return DensityMatrix(np.eye(d, dtype=complex) / d)


# --------------------------------------------------------------------------
# random instances (seeded through numpy Generators)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase fix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random state from the induced (Hilbert-Schmidt for full rank) measure."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianOperator:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return HermitianOperator(scale * 0.5 * (g + g.conj().T) / np.sqrt(d))


def is_unitary(u, atol: float = 1e-10) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])), initial=0.0)) <= atol


# --------------------------------------------------------------------------
# composite systems


def tensor(a, b, *more):
    """Kronecker product of square operators or states.

    The result has the same kind as the operands.  Mixing a ``DensityMatrix``
    with a non-state ``HermitianOperator`` raises ``KindMismatchError``; raw
    arrays are accepted with anything.
    """
    ops = (a, b) + more
    kinds = {type(o) for o in ops if isinstance(o, HermitianOperator)}
    if len(kinds) > 1:
        raise KindMismatchError("cannot tensor a state with a non-state operator")
    mats = [_as_matrix(o) for o in ops]
    out = reduce(np.kron, mats)
    if kinds:
        kind = kinds.pop()
        return kind(out, check=False)
    return out


def _check_dims(dims: Sequence[int], total: int) -> tuple[int, ...]:
    dims = tuple(int(x) for x in dims)
    if any(x < 1 for x in dims) or int(np.prod(dims)) != total:
        raise DimensionError(f"factor dimensions {dims} do not multiply to {total}")
    return dims


def partial_trace_matrix(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor of ``m`` not listed in ``keep``.

    Kept factors stay in their original order.
    """
    m = np.asarray(m)
    dims = _check_dims(dims, m.shape[0])
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} factors")
    t = m.reshape(dims + dims)
    # einsum over row/column index letters; traced factors share a letter
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    rows = letters[:n]
    cols = [letters[n + i] if i in keep else rows[i] for i in range(n)]
    out = [rows[i] for i in keep] + [cols[i] for i in keep]
    spec = "".join(rows) + "".join(cols) + "->" + "".join(out)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.einsum(spec, t).reshape(d, d)


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]):
    """Reduced state on the factors in ``keep``.

    Returns a ``DensityMatrix`` for state input, otherwise the same kind as
    the input.
    """
    m = partial_trace_matrix(_as_matrix(rho), dims, keep)
    return _like(rho, m, state=False)


# --------------------------------------------------------------------------
# charges and generalized Gibbs states


@dataclass(frozen=True)
class ChargeSet:
    """Ordered charges ``C_0..C_n`` with multipliers ``mu_0..mu_n``.

    By convention ``C_0`` is the Hamiltonian and ``mu_0`` is the inverse
    temperature.
    """

    charges: tuple[HermitianOperator, ...]
    multipliers: tuple[float, ...]

    def __init__(self, charges, multipliers):
        charges = tuple(c if isinstance(c, HermitianOperator) else HermitianOperator(c) for c in charges)
        multipliers = tuple(float(x) for x in multipliers)
        if not charges:
            raise ValueError("ChargeSet needs at least one charge")
        if len(charges) != len(multipliers):
            raise ValueError(
                f"{len(charges)} charges but {len(multipliers)} multipliers"
            )
        dims = {c.dim for c in charges}
        if len(dims) != 1:
            raise DimensionError(f"charges have differing dimensions {sorted(dims)}")
        if not all(np.isfinite(multipliers)):
            raise ValueError("multipliers must be finite")
        object.__setattr__(self, "charges", charges)
        object.__setattr__(self, "multipliers", multipliers)

    @property
    def dim(self) -> int:
        return self.charges[0].dim

    @property
    def hamiltonian(self) -> HermitianOperator:
        return self.charges[0]

    @property
    def beta(self) -> float:
        return self.multipliers[0]

    def __len__(self):
        return len(self.charges)

    def combined(self) -> HermitianOperator:
        """C(mu) = sum_i mu_i C_i, the exponent of the GGE up to sign."""
        m = sum(mu * c.matrix for mu, c in zip(self.multipliers, self.charges))
        return HermitianOperator(m, check=False)

    def with_multipliers(self, multipliers) -> "ChargeSet":
        return ChargeSet(self.charges, multipliers)


def _exp_neg_normalized(k: np.ndarray):
    """exp(-K)/tr exp(-K) and log tr exp(-K) for Hermitian K."""
    w, v = np.linalg.eigh(k)
    shift = w[0]
    weights = np.exp(-(w - shift))
    z = weights.sum()
    if not np.isfinite(z) or not np.all(np.isfinite(weights)) or z <= 0:
        raise ExponentOverflowError("non-finite Gibbs weights after spectral shift")
    p = weights / z
    rho = (v * p) @ v.conj().T
    log_z = -shift + np.log(z)
    return rho, float(log_z), w, v, p


def gge_state(cs: ChargeSet) -> DensityMatrix:
    """exp(-sum_i mu_i C_i) / Z, built from the eigendecomposition of the exponent."""
    rho, *_ = _exp_neg_normalized(cs.combined().matrix)
    return DensityMatrix(rho, check=False)


def log_partition(cs: ChargeSet) -> float:
    return _exp_neg_normalized(cs.combined().matrix)[1]


def gibbs_state(h, beta: float) -> DensityMatrix:
    return gge_state(ChargeSet([h], [beta]))


# --------------------------------------------------------------------------
# functionals


def _state_eigvals(rho) -> np.ndarray:
    if isinstance(rho, HermitianOperator):
        w = rho.spectrum()
    else:
        w = np.linalg.eigvalsh(_as_matrix(rho))
    if w[0] < -PSD_ATOL:
        raise InvalidStateError(f"minimum eigenvalue {w[0]:.3e} is negative")
    return np.clip(w, 0.0, None)


def _shannon(p: np.ndarray) -> float:
    p = p[p > EIG_ZERO]
    return float(-np.sum(p * np.log(p)))


def entropy(rho) -> float:
    """Von Neumann entropy -tr(rho log rho) in nats."""
    return _shannon(_state_eigvals(rho))


def relative_entropy(rho, sigma) -> float:
    """S(rho||sigma) = -S(rho) - tr(rho log sigma); ``inf`` off-support."""
    r = _as_matrix(rho)
    s = _as_matrix(sigma)
    if r.shape != s.shape:
        raise DimensionError(f"shape mismatch {r.shape} vs {s.shape}")
    if isinstance(sigma, HermitianOperator):
        ws, vs = sigma.eigh()
    else:
        ws, vs = np.linalg.eigh(s)
    # weight of rho on each eigenvector of sigma
    overlap = np.einsum("ik,ij,jk->k", vs.conj(), r, vs).real
    on_support = ws > EIG_ZERO
    if np.any(overlap[~on_support] > EIG_ZERO):
        return float("inf")
    cross = float(np.sum(overlap[on_support] * np.log(ws[on_support])))
    return max(-entropy(rho) - cross, 0.0)


def mutual_information(rho_ab, dims: Sequence[int]) -> float:
    """I(A:B) = S(A) + S(B) - S(AB) for a bipartite state."""
    m = _as_matrix(rho_ab)
    dims = _check_dims(dims, m.shape[0])
    if len(dims) != 2:
        raise DimensionError("mutual_information needs exactly two factors")
    ra = partial_trace_matrix(m, dims, [0])
    rb = partial_trace_matrix(m, dims, [1])
    return max(entropy(ra) + entropy(rb) - entropy(rho_ab), 0.0)


def expectation(rho, c) -> float:
    r = _as_matrix(rho)
    m = _as_matrix(c)
    if r.shape != m.shape:
        raise DimensionError(f"shape mismatch {r.shape} vs {m.shape}")
    val = np.einsum("ij,ji->", r, m)
    if abs(val.imag) > 1e-10 * (1.0 + abs(val.real)):
        raise NotHermitianError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def commutator_norm(a, b) -> float:
    """Spectral norm of AB - BA."""
    x = _as_matrix(a)
    y = _as_matrix(b)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    return float(np.linalg.norm(x @ y - y @ x, 2))


def trace_distance(rho, sigma) -> float:
    d = _as_matrix(rho) - _as_matrix(sigma)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


# --------------------------------------------------------------------------
# JSON wire format: {"dim": d, "re": [[...]], "im": [[...]]}, row-major


def operator_to_json(a) -> dict:
    m = np.asarray(_as_matrix(a), dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "re": m.real.tolist(),
        "im": m.imag.tolist(),
    }


def operator_from_json(obj, field: str = "operator") -> np.ndarray:
    """Parse the operator wire format, raising ``ValueError`` naming ``field``.

    ``im`` may be omitted for real operators.
    """
    if not isinstance(obj, dict):
        raise ValueError(f"{field}: expected an object with keys dim/re/im")
    for key in ("dim", "re"):
        if key not in obj:
            raise ValueError(f"{field}: missing key {key!r}")
    d = obj["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ValueError(f"{field}.dim: expected a positive integer, got {d!r}")
    parts = []
    for key in ("re", "im"):
        if key not in obj:
            parts.append(np.zeros((d, d)))
            continue
        try:
            a = np.array(obj[key], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{field}.{key}: not a numeric matrix ({exc})") from None
        if a.shape != (d, d):
            raise ValueError(f"{field}.{key}: expected shape ({d}, {d}), got {a.shape}")
        parts.append(a)
    return parts[0] + 1j * parts[1]


def dumps_operator(a) -> str:
    return json.dumps(operator_to_json(a))


def loads_operator(text: str) -> np.ndarray:
    return operator_from_json(json.loads(text))
