"""Special-function primitives: log-gamma, Pochhammer, Jacobi polynomials,
Gauss-Jacobi quadrature and generalized hypergeometric series.

Everything here is a pure function of its arguments; quadrature rules are
immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "JacobiParams",
    "QuadratureRule",
    "DomainError",
    "UnsupportedError",
    "ConvergenceError",
    "log_gamma",
    "pochhammer",
    "jacobi_eval",
    "jacobi_table",
    "jacobi_reflection_check",
    "connection_check",
    "gauss_jacobi_rule",
    "jacobi_weight_mass",
    "hyper_pfq_at",
]


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedError(ValueError):
    """Requested regime is deliberately unsupported (e.g. p > q series)."""


class ConvergenceError(ArithmeticError):
    """An iteration failed to converge within its budget."""


@dataclass(frozen=True)
class JacobiParams:
    """Exponent pair (alpha, beta) of the Jacobi weight (1-x)^a (1+x)^b.

    Both must be finite and strictly positive so that the weight vanishes
    at the endpoints and the differentiation matrix is skew-symmetric.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
            if v <= 0:
                raise DomainError(f"{name} must be > 0, got {v!r}")


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for the weight (1-x)^alpha (1+x)^beta on (-1, 1).

    ``nodes`` are strictly increasing in the open interval, ``weights``
    strictly positive and summing to the weight's total mass.
    """

    nodes: np.ndarray
    weights: np.ndarray
    alpha: float
    beta: float

    def integrate(self, values: np.ndarray) -> float:
        """Integrate a function given by its values at the nodes."""
        return float(self.weights @ values)


def log_gamma(z: float) -> float:
    """ln Gamma(z) for z > 0."""
    z = float(z)
    if not math.isfinite(z) or z <= 0:
        raise DomainError(f"log_gamma requires finite z > 0, got {z!r}")
    return math.lgamma(z)


def pochhammer(z: float, m: int) -> float:
    """Rising factorial (z)_m = z (z+1) ... (z+m-1); (z)_0 = 1."""
    if m < 0:
        raise DomainError(f"pochhammer requires m >= 0, got {m}")
    out = 1.0
    for k in range(m):
        out *= z + k
    return out


def _p1(alpha: float, beta: float, x):
    return 0.5 * ((alpha + beta + 2.0) * x + alpha - beta)


def jacobi_eval(alpha: float, beta: float, n: int, x):
    """Jacobi polynomial P_n^(alpha,beta)(x) by the three-term recurrence.

    Accepts alpha, beta > -1 (the quadrature oracle needs the shifted
    weights), scalar or array x.
    """
    if alpha <= -1 or beta <= -1:
        raise DomainError("jacobi_eval requires alpha, beta > -1")
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    x = np.asarray(x, dtype=float)
    pm1 = np.ones_like(x)
    if n == 0:
        return pm1 if pm1.ndim else float(pm1)
    # n = 0 step of the recurrence degenerates when alpha + beta = 0;
    # start from the explicit P_1 instead.
    p = _p1(alpha, beta, x)
    s = alpha + beta
    for k in range(1, n):
        a0 = 2.0 * (k + 1) * (k + s + 1) * (2 * k + s)
        a1 = (2 * k + s + 1) * ((2 * k + s) * (2 * k + s + 2) * x + alpha**2 - beta**2)
        a2 = 2.0 * (k + alpha) * (k + beta) * (2 * k + s + 2)
        p, pm1 = (a1 * p - a2 * pm1) / a0, p
    return p if p.ndim else float(p)


def jacobi_table(alpha: float, beta: float, nmax: int, x: np.ndarray) -> np.ndarray:
    """All P_0 .. P_nmax at the points x, as an (nmax+1, len(x)) array."""
    if alpha <= -1 or beta <= -1:
        raise DomainError("jacobi_table requires alpha, beta > -1")
    if nmax < 0:
        raise DomainError(f"nmax must be >= 0, got {nmax}")
    x = np.asarray(x)
    if x.dtype != np.longdouble:
        x = x.astype(float)
    table = np.empty((nmax + 1, x.size), dtype=x.dtype)
    table[0] = 1.0
    if nmax == 0:
        return table
    table[1] = _p1(alpha, beta, x)
    s = alpha + beta
    for k in range(1, nmax):
        a0 = 2.0 * (k + 1) * (k + s + 1) * (2 * k + s)
        a1 = (2 * k + s + 1) * ((2 * k + s) * (2 * k + s + 2) * x + alpha**2 - beta**2)
        a2 = 2.0 * (k + alpha) * (k + beta) * (2 * k + s + 2)
        table[k + 1] = (a1 * table[k] - a2 * table[k - 1]) / a0
    return table


def jacobi_reflection_check(alpha: float, beta: float, n: int, x) -> tuple[float, float]:
    """The pair (P_n^(a,b)(x), (-1)^n P_n^(b,a)(-x)); equal up to roundoff."""
    lhs = jacobi_eval(alpha, beta, n, x)
    rhs = (-1.0) ** n * jacobi_eval(beta, alpha, n, -np.asarray(x, dtype=float))
    return lhs, rhs


def connection_check(alpha: float, beta: float, n: int, x) -> tuple[float, float]:
    """Residuals of the two parameter-lowering connection identities.

    Lowering beta: (2n+a+b) P_n^(a,b-1) = (n+a+b) P_n^(a,b) + (n+a) P_{n-1}^(a,b).
    Lowering alpha: (2n+a+b) P_n^(a-1,b) = (n+a+b) P_n^(a,b) - (n+b) P_{n-1}^(a,b).

    Residuals are reported relative to the largest participating term, so
    a tolerance of a few ulps is meaningful uniformly in n (raw polynomial
    values grow combinatorially with the degree).
    """
    if alpha <= 0 or beta <= 0:
        raise DomainError("connection_check requires alpha, beta > 0")
    s = alpha + beta
    pn = jacobi_eval(alpha, beta, n, x)
    pnm1 = jacobi_eval(alpha, beta, n - 1, x) if n >= 1 else 0.0
    lead_beta = (2 * n + s) * jacobi_eval(alpha, beta - 1, n, x)
    lead_alpha = (2 * n + s) * jacobi_eval(alpha - 1, beta, n, x)
    mid = (n + s) * pn
    tail_beta = (n + alpha) * pnm1
    tail_alpha = (n + beta) * pnm1
    scale_beta = np.maximum(
        np.abs(lead_beta), np.maximum(np.abs(mid), np.abs(tail_beta))
    )
    scale_alpha = np.maximum(
        np.abs(lead_alpha), np.maximum(np.abs(mid), np.abs(tail_alpha))
    )
    res_beta = (lead_beta - mid - tail_beta) / np.maximum(scale_beta, 1.0)
    res_alpha = (lead_alpha - mid + tail_alpha) / np.maximum(scale_alpha, 1.0)
    return res_alpha, res_beta


def jacobi_weight_mass(alpha: float, beta: float) -> float:
    """Total mass of (1-x)^alpha (1+x)^beta on (-1, 1)."""
    return math.exp(
        (alpha + beta + 1) * math.log(2.0)
        + log_gamma(alpha + 1)
        + log_gamma(beta + 1)
        - log_gamma(alpha + beta + 2)
    )


def gauss_jacobi_rule(alpha: float, beta: float, n_nodes: int) -> QuadratureRule:
    """n-point Gauss rule for the Jacobi weight via Golub-Welsch.

    The recurrence coefficients of the orthonormal Jacobi polynomials form
    a symmetric tridiagonal matrix; its eigenvalues are the nodes and the
    squared first eigenvector components, scaled by the weight's mass,
    are the weights.  Exact for polynomials of degree <= 2 n_nodes - 1.
    """
    if alpha <= -1 or beta <= -1:
        raise DomainError("gauss_jacobi_rule requires alpha, beta > -1")
    if n_nodes <= 0:
        raise DomainError(f"n_nodes must be >= 1, got {n_nodes}")
    s = alpha + beta
    diag = np.empty(n_nodes)
    diag[0] = (beta - alpha) / (s + 2.0)
    k = np.arange(1, n_nodes, dtype=float)
    diag[1:] = (beta**2 - alpha**2) / ((2 * k + s) * (2 * k + s + 2))
    off = np.empty(max(n_nodes - 1, 0))
    if n_nodes > 1:
        # k = 1 separately: the generic formula has a removable 0/0 at s = -1.
        off[0] = math.sqrt(4.0 * (1 + alpha) * (1 + beta) / ((2 + s) ** 2 * (3 + s)))
        k = np.arange(2, n_nodes, dtype=float)
        off[1:] = np.sqrt(
            4.0 * k * (k + alpha) * (k + beta) * (k + s)
            / ((2 * k + s) ** 2 * (2 * k + s + 1) * (2 * k + s - 1))
        )
    try:
        nodes, _ = eigh_tridiagonal(diag, off, select="a")
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceError("tridiagonal eigensolver failed") from exc
    # Polish the eigenvalue nodes by Newton iteration in extended
    # precision, then form weights from the Christoffel function
    # 1/sum p_k^2; both steps keep the rule accurate well past double
    # roundoff, which the high-degree Gram cross-checks rely on.
    x = nodes.astype(np.longdouble)
    q = n_nodes
    for _ in range(2):
        table = jacobi_table(alpha, beta, q, x)
        pq, pm = table[q], table[q - 1] if q >= 1 else table[0]
        dpq = (
            q * (alpha - beta - (2 * q + s) * x) * pq
            + 2 * (q + alpha) * (q + beta) * pm
        ) / ((2 * q + s) * (1 - x * x))
        x = x - pq / dpq
    mass = np.longdouble(jacobi_weight_mass(alpha, beta))
    p_prev = np.full(q, 1 / np.sqrt(mass), dtype=np.longdouble)
    ssum = p_prev**2
    if q > 1:
        dld = diag.astype(np.longdouble)
        old = off.astype(np.longdouble)
        k = np.arange(1, q, dtype=np.longdouble)
        # Recompute the recurrence coefficients in extended precision.
        dld[0] = (beta - alpha) / np.longdouble(s + 2)
        dld[1:] = (beta**2 - alpha**2) / ((2 * k + s) * (2 * k + s + 2))
        old[0] = np.sqrt(
            4 * (1 + alpha) * (1 + beta) / (np.longdouble(2 + s) ** 2 * (3 + s))
        )
        k = np.arange(2, q, dtype=np.longdouble)
        old[1:] = np.sqrt(
            4 * k * (k + alpha) * (k + beta) * (k + s)
            / ((2 * k + s) ** 2 * (2 * k + s + 1) * (2 * k + s - 1))
        )
        p_cur = (x - dld[0]) * p_prev / old[0]
        ssum = ssum + p_cur**2
        for j in range(1, q - 1):
            p_next = ((x - dld[j]) * p_cur - old[j - 1] * p_prev) / old[j]
            p_prev, p_cur = p_cur, p_next
            ssum = ssum + p_cur**2
    weights = 1.0 / ssum
    return QuadratureRule(nodes=x, weights=weights, alpha=alpha, beta=beta)


_HYPER_MAX_TERMS = 10_000


def hyper_pfq_at(numerators, denominators, z: float) -> float:
    """pFq(numerators; denominators; z) by direct term summation.

    Requires p <= q, the entire regime; summation stops once the term
    magnitude stays below 1e-16 * (1 + |partial sum|) for three
    consecutive terms.
    """
    nums = [float(a) for a in numerators]
    dens = [float(b) for b in denominators]
    if len(nums) > len(dens):
        raise UnsupportedError("hyper_pfq_at supports only p <= q")
    for b in dens:
        if b <= 0 and b == int(b):
            raise DomainError(f"denominator parameter {b} is a non-positive integer")
    total = 0.0
    term = 1.0
    small = 0
    for k in range(_HYPER_MAX_TERMS):
        total += term
        if abs(term) <= 1e-16 * (1.0 + abs(total)):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
        ratio = z / (k + 1.0)
        for a in nums:
            ratio *= a + k
        for b in dens:
            ratio /= b + k
        term *= ratio
    raise ConvergenceError(
        f"hypergeometric series did not converge in {_HYPER_MAX_TERMS} terms"
    )
