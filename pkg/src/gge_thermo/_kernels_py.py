"""Pure-Python reference loops, used when the compiled extension is absent."""
import math


def excited_population(x):
    """Upper-level population of a two-level system with dimensionless gap x."""
    if x >= 0.0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def raise_level(x_start, dx, n_steps, tail_tol, max_steps=100_000_000):
    """Raise the upper level of a two-level system in increments of ``dx``.

    Gaps are dimensionless (level height times the bath's inverse
    temperature).  Each increment costs ``p * dx`` with ``p`` the current
    upper population, after which the pair is fully rethermalized at the new
    gap.  Runs ``n_steps`` increments, or for ``n_steps < 0`` until the upper
    population drops below ``tail_tol``.

    Returns ``(work, steps, x_final, p_final)`` with ``work`` dimensionless.
    """
    if dx <= 0.0:
        raise ValueError("dx must be positive")
    x = x_start
    p = excited_population(x)
    work = 0.0
    k = 0
    if n_steps >= 0:
        while k < n_steps:
            work += p * dx
            k += 1
            x = x_start + k * dx
            p = excited_population(x)
    else:
        while p >= tail_tol and k < max_steps:
            work += p * dx
            k += 1
            x = x_start + k * dx
            p = excited_population(x)
        if p >= tail_tol:
            raise RuntimeError("raise_level hit max_steps before reaching tail_tol")
    return work, k, x, p


def spin_bath_series(alpha, hbar, tail_tol, max_terms=100_000_000):
    """Sum hbar * e^{-alpha n} / (1 + e^{-alpha n}) for n = 0, 1, ...

    Stops once the geometric bound on the remainder,
    hbar e^{-alpha N} / (1 - e^{-alpha}), falls below ``tail_tol``.
    Returns ``(total, terms)``.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    one_minus_r = -math.expm1(-alpha)
    total = 0.0
    n = 0
    while n < max_terms:
        e = math.exp(-alpha * n)
        total += hbar * e / (1.0 + e)
        n += 1
        if hbar * math.exp(-alpha * n) / one_minus_r < tail_tol:
            break
    return total, n
