"""Classical dense reference computations.

Everything the simulator produces is checked against these: Chebyshev
recurrence application, direct linear solve, extreme eigenvalues, and
the truncated Chebyshev approximation of the inverse together with its
per-step success-rate and fidelity theory curves.

All oracles consume the quantized matrix (as reconstructed from the
packed image), so disagreements isolate simulator defects rather than
quantization error.
"""

from __future__ import annotations

import numpy as np

from .errors import SimulationError


def cheb_apply(h: np.ndarray, b: np.ndarray, n_max: int) -> list[np.ndarray]:
    """Chebyshev vectors t_k = T_k(h) b for k = 0..n_max via the
    three-term recurrence. Requires the spectrum of h inside [-1, 1]."""
    t = [np.array(b, dtype=np.float64)]
    if n_max >= 1:
        t.append(h @ b)
    for _ in range(2, n_max + 1):
        t.append(2.0 * (h @ t[-1]) - t[-2])
    return t


def lin_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b by LU elimination with partial pivoting."""
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SimulationError(f"linear solve failed: {exc}") from None
    return x


def min_abs_eigenvalue(h: np.ndarray) -> float:
    """Minimum |eigenvalue| of a symmetric matrix."""
    if not np.allclose(h, h.T, rtol=0.0, atol=0.0):
        raise SimulationError("eigenvalue oracle requires a symmetric matrix")
    return float(np.min(np.abs(np.linalg.eigvalsh(h))))


def f_apply(h: np.ndarray, b: np.ndarray, plan, j: int | None = None):
    """Partial sums of the Chebyshev approximation of the inverse.

    Returns (g, p_theory, f_theory) where g = sum_{k<=j} a_k T_{2k+1}(h) b
    and the two arrays hold, for every step up to j, the flag-zero
    success rate and the fidelity to the normalized solution that an
    exact walk-based accumulation would produce:

        p_k = |g_k|^2 / <T_k|T_k>,   <T_k|T_k> from the walk-state
              inner products <tau_i|tau_j> = b . T_{2|i-j|}(h) b
        f_k = |x . g_k|^2 / |g_k|^2, x = normalized solve of h x = b
    """
    j = plan.j0 if j is None else int(j)
    if j > plan.j0:
        raise SimulationError(f"step {j} beyond the plan horizon {plan.j0}")
    coeffs = plan.coeffs[: j + 1]
    t = cheb_apply(h, b, 2 * j + 1)
    x = lin_solve(h, b)
    x = x / np.linalg.norm(x)
    m2 = np.array([float(b @ t[2 * d]) for d in range(j + 1)])
    g = np.zeros_like(np.asarray(b, dtype=np.float64))
    p = np.empty(j + 1)
    f = np.empty(j + 1)
    denom = 0.0
    for k in range(j + 1):
        a_k = coeffs[k]
        g = g + a_k * t[2 * k + 1]
        cross = 2.0 * a_k * float(np.dot(coeffs[:k], m2[k:0:-1])) if k else 0.0
        denom += cross + a_k * a_k * m2[0]
        gg = float(g @ g)
        p[k] = gg / denom
        f[k] = (float(x @ g) ** 2) / gg if gg > 0 else 0.0
    return g, p, f
