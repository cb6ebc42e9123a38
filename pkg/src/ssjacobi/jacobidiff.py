"""The skew-symmetric differentiation matrix of the weighted Jacobi basis.

Four mutually validating construction routes:

* ``closed_form``       -- per-entry Gamma-ratio formula, log-evaluated;
* ``recurrence``        -- bilateral three-term recurrence marched column
                           by column from the explicit first column;
* ``quadrature_oracle`` -- exact Gauss-Jacobi integration of the defining
                           integrals (polynomial times shifted weight);
* ``generators``        -- the rank-2 semi-separable generator vectors.

The normative orientation is the lower triangle (row index larger), where
the entry is -1/2 times the weighted integral of w' P_m P_n scaled by the
normalization constants; the closed form and the generators are
sign-calibrated against it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .specfun import (
    DomainError,
    JacobiParams,
    gauss_jacobi_rule,
    hyper_pfq_at,
    jacobi_table,
    log_gamma,
)
from .semisep import SkewGeneratorPair, skew_expand

__all__ = [
    "DiffMatrixBuild",
    "InternalConsistencyError",
    "SOURCES",
    "kappa",
    "kappa_vector",
    "t_s_integrals",
    "dtilde_first_column",
    "recurrence_coeffs",
    "dtilde_lower_triangle",
    "d_entry_closed_form",
    "generators",
    "generator_sign_flipped",
    "oracle_entry",
    "oracle_matrix",
    "boundedness_sums",
    "build",
    "write_dense_csv",
]

SOURCES = ("closed_form", "recurrence", "quadrature_oracle", "generators")


class InternalConsistencyError(ArithmeticError):
    """Two routes to the same quantity disagree beyond tolerance."""


def kappa(params: JacobiParams, n: int) -> float:
    """Normalization constant making kappa_n P_n^(a,b) orthonormal."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    a, b = params.alpha, params.beta
    s = a + b
    return math.exp(
        0.5
        * (
            math.log(2 * n + s + 1)
            + log_gamma(n + s + 1)
            + log_gamma(n + 1)
            - (s + 1) * math.log(2.0)
            - log_gamma(n + a + 1)
            - log_gamma(n + b + 1)
        )
    )


def kappa_vector(params: JacobiParams, nmax: int) -> np.ndarray:
    """kappa_0 .. kappa_nmax as an array."""
    a, b = params.alpha, params.beta
    s = a + b
    n = np.arange(nmax + 1, dtype=float)
    return np.exp(
        0.5
        * (
            np.log(2 * n + s + 1)
            + gammaln(n + s + 1)
            + gammaln(n + 1)
            - (s + 1) * math.log(2.0)
            - gammaln(n + a + 1)
            - gammaln(n + b + 1)
        )
    )


def t_s_integrals(params: JacobiParams, m: int) -> tuple[float, float]:
    """Closed forms of the two shifted-weight moments of P_m^(a,b)."""
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    a, b = params.alpha, params.beta
    s = a + b
    t = math.exp(
        s * math.log(2.0) + log_gamma(a) + log_gamma(m + b + 1) - log_gamma(m + s + 1)
    )
    sm = (-1.0) ** m * math.exp(
        s * math.log(2.0) + log_gamma(m + a + 1) + log_gamma(b) - log_gamma(m + s + 1)
    )
    return t, sm


def _first_column_array(params: JacobiParams, mmax: int) -> np.ndarray:
    """Pre-differentiation-matrix first column for m = 0 .. mmax.

    The m = 0 slot is the (zero) diagonal.  Bracket form, log-evaluated:
    2^(a+b-1) [G(a+1) G(m+b+1) - (-1)^m G(b+1) G(m+a+1)] / G(m+a+b+1).
    """
    a, b = params.alpha, params.beta
    s = a + b
    # Build the two Gamma-ratio terms multiplicatively in extended
    # precision: each step multiplies by an exact rational factor, so no
    # roundoff beyond the m = 0 seeds accumulates along the column.
    term1 = np.empty(mmax + 1, dtype=np.longdouble)
    term2 = np.empty(mmax + 1, dtype=np.longdouble)
    term1[0] = math.exp(
        (s - 1) * math.log(2.0) + math.lgamma(a + 1) + math.lgamma(b + 1)
        - math.lgamma(s + 1)
    )
    term2[0] = term1[0]
    m = np.arange(mmax, dtype=np.longdouble)
    r1 = (m + b + 1) / (m + s + 1)
    r2 = (m + a + 1) / (m + s + 1)
    for i in range(mmax):
        term1[i + 1] = term1[i] * r1[i]
        term2[i + 1] = term2[i] * r2[i]
    sign = np.where(np.arange(mmax + 1) % 2 == 0, 1.0, -1.0)
    col = term1 - sign * term2
    col[0] = 0.0
    return col


def dtilde_first_column(params: JacobiParams, m: int) -> float:
    """First-column entry of the pre-differentiation matrix, m >= 1.

    Computed both from the bracketed Gamma form and from the combination
    (a/2) t_m - (b/2) s_m of the moment integrals; the two must agree.
    """
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    a, b = params.alpha, params.beta
    via_bracket = float(_first_column_array(params, m)[m])
    t, sm = t_s_integrals(params, m)
    via_moments = 0.5 * a * t - 0.5 * b * sm
    scale = max(abs(via_bracket), abs(via_moments), 1e-300)
    if abs(via_bracket - via_moments) > 1e-12 * scale:
        raise InternalConsistencyError(
            f"first-column routes disagree at m={m}: "
            f"{via_bracket!r} vs {via_moments!r}"
        )
    return via_bracket


def recurrence_coeffs(params: JacobiParams, n: int) -> tuple[float, float, float]:
    """Coefficients (c_n, d_n, e_n) of the bilateral recurrence."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    c, d, e = _coeff_arrays(params, n)
    return float(c[n]), float(d[n]), float(e[n])


def _coeff_arrays(params: JacobiParams, nmax: int):
    a, b = params.alpha, params.beta
    s = a + b
    n = np.arange(nmax + 1, dtype=float)
    c = (n + a) * (n + b) / ((2 * n + s) * (2 * n + s + 1))
    d = -(a**2 - b**2) / 2.0 / ((2 * n + s) * (2 * n + s + 2))
    e = (n + 1) * (n + s + 1) / ((2 * n + s + 1) * (2 * n + s + 2))
    return c, d, e


def dtilde_lower_triangle(params: JacobiParams, n_size: int) -> np.ndarray:
    """Strict lower triangle of the pre-differentiation matrix by recurrence.

    The bilateral recurrence links an entry's column neighbours to its row
    neighbours.  Solving it for the next-column entry is valid only when
    every referenced entry lies strictly below the diagonal, which holds
    for rows at least two past the column index; marching column by
    column therefore loses one bottom row per step, so the first column
    is seeded on an extended range of about 2N rows.

    Returns an (n_size, n_size) array, zero on and above the diagonal.
    """
    if n_size < 1:
        raise DomainError(f"size must be >= 1, got {n_size}")
    out = np.zeros((n_size, n_size))
    if n_size == 1:
        return out
    mmax = 2 * n_size - 2
    # March in extended precision: errors compound over ~N column steps.
    cc, dd, ee = (v.astype(np.longdouble) for v in _coeff_arrays(params, mmax + 1))
    prev = np.zeros(mmax + 2, dtype=np.longdouble)  # virtual column -1
    cur = np.zeros(mmax + 2, dtype=np.longdouble)
    cur[: mmax + 1] = _first_column_array(params, mmax)
    out[1:, 0] = cur[1:n_size]
    top = mmax  # highest valid row index of `cur`
    for n in range(0, n_size - 2):
        lo, hi = n + 2, top - 1
        if lo > hi:
            break
        m = np.arange(lo, hi + 1)
        nxt = np.zeros(mmax + 2, dtype=np.longdouble)
        nxt[m] = (
            cc[m] * cur[m - 1]
            + (dd[m] - dd[n]) * cur[m]
            + ee[m] * cur[m + 1]
            - cc[n] * prev[m]
        ) / ee[n]
        col = n + 1
        if col < n_size:
            out[col + 1 : n_size, col] = nxt[col + 1 : n_size]
        prev, cur, top = cur, nxt, hi
    return out


@lru_cache(maxsize=None)
def _closed_form_sign(alpha: float, beta: float) -> float:
    """Global sign pinning the closed form to the normative lower triangle."""
    params = JacobiParams(alpha, beta)
    normative = kappa(params, 1) * kappa(params, 0) * dtilde_first_column(params, 1)
    raw = _closed_form_lower(params, np.array([1]), np.array([0]))[0]
    return -1.0 if normative * raw < 0 else 1.0


def _closed_form_lower(params: JacobiParams, m, n) -> np.ndarray:
    """Uncalibrated closed-form values at lower-triangle indices m > n."""
    a, b = params.alpha, params.beta
    s = a + b
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    pref = np.exp(
        -math.log(4.0)
        + 0.5
        * (
            gammaln(m + 1)
            - gammaln(n + 1)
            + gammaln(n + s + 1)
            - gammaln(m + s + 1)
            + np.log(2 * m + s + 1)
            + np.log(2 * n + s + 1)
        )
    )
    half = 0.5 * (
        gammaln(n + a + 1) + gammaln(m + b + 1)
        - gammaln(m + a + 1) - gammaln(n + b + 1)
    )
    sign = np.where(np.asarray(m - n, dtype=int) % 2 == 0, 1.0, -1.0)
    return pref * (np.exp(half) - sign * np.exp(-half))


def d_entry_closed_form(params: JacobiParams, m: int, n: int) -> float:
    """Off-diagonal differentiation-matrix entry in closed form."""
    if m == n:
        raise DomainError("diagonal entries are zero and not covered here")
    if m < 0 or n < 0:
        raise DomainError("indices must be >= 0")
    sgn = _closed_form_sign(params.alpha, params.beta)
    if m > n:
        return float(sgn * _closed_form_lower(params, np.array([m]), np.array([n]))[0])
    return float(-sgn * _closed_form_lower(params, np.array([n]), np.array([m]))[0])


def _closed_form_dense(params: JacobiParams, n_size: int) -> np.ndarray:
    rows, cols = np.tril_indices(n_size, k=-1)
    lower = _closed_form_sign(params.alpha, params.beta) * _closed_form_lower(
        params, rows, cols
    )
    dense = np.zeros((n_size, n_size))
    dense[rows, cols] = lower
    return dense - dense.T


def _generator_vectors(params: JacobiParams, n_size: int):
    """Uncalibrated rank-2 generator vectors of the differentiation matrix."""
    a, b = params.alpha, params.beta
    s = a + b
    m = np.arange(n_size, dtype=float)
    alt = np.where(np.arange(n_size) % 2 == 0, 1.0, -1.0)
    a1 = -alt * 0.5 * np.exp(
        -0.5 * gammaln(m + 1)
        + 0.5 * (np.log(2 * m + s + 1) + gammaln(m + b + 1) + gammaln(m + s + 1) - gammaln(m + a + 1))
    )
    b1 = alt * 0.5 * np.exp(
        0.5 * gammaln(m + 1)
        + 0.5 * (np.log(2 * m + s + 1) + gammaln(m + a + 1) - gammaln(m + b + 1) - gammaln(m + s + 1))
    )
    a2 = 0.5 * np.exp(
        -0.5 * gammaln(m + 1)
        + 0.5 * (np.log(2 * m + s + 1) + gammaln(m + a + 1) + gammaln(m + s + 1) - gammaln(m + b + 1))
    )
    b2 = 0.5 * np.exp(
        0.5 * gammaln(m + 1)
        + 0.5 * (np.log(2 * m + s + 1) + gammaln(m + b + 1) - gammaln(m + a + 1) - gammaln(m + s + 1))
    )
    return np.vstack([a1, a2]), np.vstack([b1, b2])


@lru_cache(maxsize=None)
def generator_sign_flipped(alpha: float, beta: float) -> bool:
    """Whether calibration flips the b-vector pair globally."""
    params = JacobiParams(alpha, beta)
    avec, bvec = _generator_vectors(params, 2)
    # Lower-triangle entry (1, 0) of the skew expansion is b_1 . (-a_0).
    raw = float(bvec[:, 1] @ (-avec[:, 0]))
    normative = kappa(params, 1) * kappa(params, 0) * dtilde_first_column(params, 1)
    return raw * normative < 0


def generators(params: JacobiParams, n_size: int) -> SkewGeneratorPair:
    """Rank-2 skew generator pair of the N x N differentiation matrix.

    The b-vectors carry a global sign calibrated so that the skew
    expansion reproduces the normative lower triangle.
    """
    if n_size < 1:
        raise DomainError(f"size must be >= 1, got {n_size}")
    avec, bvec = _generator_vectors(params, n_size)
    if generator_sign_flipped(params.alpha, params.beta):
        bvec = -bvec
    return SkewGeneratorPair(n=n_size, a=avec, b=bvec)


def oracle_entry(
    params: JacobiParams, m: int, n: int, rule_size: int | None = None
) -> float:
    """Lower-triangle entry from exact Gauss-Jacobi quadrature.

    Splits w' into the two shifted weights and integrates the polynomial
    P_m P_n against each with its own Gauss rule; exact up to roundoff.
    """
    if m < n + 1:
        raise DomainError("oracle_entry covers the lower triangle m >= n + 1")
    if rule_size is None:
        rule_size = m + n + 2
    if rule_size < math.ceil((m + n + 2) / 2):
        raise DomainError(f"rule_size {rule_size} too small for degrees ({m}, {n})")
    a, b = params.alpha, params.beta
    vals = []
    r1 = gauss_jacobi_rule(a - 1, b, rule_size)
    r2 = gauss_jacobi_rule(a, b - 1, rule_size)
    for rule in (r1, r2):
        table = jacobi_table(a, b, m, rule.nodes)
        vals.append(rule.integrate(table[m] * table[n]))
    i1, i2 = vals
    return kappa(params, m) * kappa(params, n) * (0.5 * a * i1 - 0.5 * b * i2)


def oracle_matrix(
    params: JacobiParams, n_size: int, rule_size: int | None = None
) -> np.ndarray:
    """Full N x N differentiation matrix from the quadrature oracle."""
    if n_size < 1:
        raise DomainError(f"size must be >= 1, got {n_size}")
    if rule_size is None:
        rule_size = n_size + 1
    if rule_size < n_size:
        raise DomainError(f"rule_size {rule_size} too small for size {n_size}")
    a, b = params.alpha, params.beta
    grams = []
    # Extended precision for the Gram accumulation: the weighted sums
    # cancel heavily near the diagonal for large indices.
    for pa, pb in ((a - 1, b), (a, b - 1)):
        rule = gauss_jacobi_rule(pa, pb, rule_size)
        table = jacobi_table(a, b, n_size - 1, rule.nodes.astype(np.longdouble))
        grams.append((table * rule.weights.astype(np.longdouble)) @ table.T)
    dtilde = (0.5 * a * grams[0] - 0.5 * b * grams[1]).astype(float)
    kvec = kappa_vector(params, n_size - 1)
    dmat = np.tril(kvec[:, None] * kvec[None, :] * dtilde, k=-1)
    return dmat - dmat.T


_SUM_MAX_TERMS = 10_000


def _direct_series(term_fn) -> float:
    total = 0.0
    small = 0
    for n in range(_SUM_MAX_TERMS):
        t = term_fn(n)
        total += t
        if abs(t) < 1e-14 * (1.0 + abs(total)):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise InternalConsistencyError("generator-sum series failed to converge")


def boundedness_sums(params: JacobiParams) -> tuple[float, float, float]:
    """The three infinite b-generator sums governing boundedness.

    Each is computed both as the hypergeometric combination and by direct
    term summation; the routes must agree to 1e-8 relative.  Returns
    (sum b1^2, sum b1 b2, sum b2^2) from the direct summation.
    """
    a, b = params.alpha, params.beta
    c = a + b + 1.0

    def b1_sq(n):
        return 0.25 * (2 * n + c) * math.exp(
            log_gamma(n + a + 1) - log_gamma(n + b + 1) - log_gamma(n + c)
        )

    def b2_sq(n):
        return 0.25 * (2 * n + c) * math.exp(
            log_gamma(n + b + 1) - log_gamma(n + a + 1) - log_gamma(n + c)
        )

    def b1_b2(n):
        return (-1.0) ** n * 0.25 * (2 * n + c) * math.exp(-log_gamma(n + c))

    direct = (_direct_series(b1_sq), _direct_series(b1_b2), _direct_series(b2_sq))

    def mixed_pair(x, y):
        lead = 0.25 * c * math.exp(log_gamma(x + 1) - log_gamma(y + 1) - log_gamma(c))
        lead *= hyper_pfq_at([1.0, x + 1], [y + 1, c], 1.0)
        tail = 0.5 * math.exp(log_gamma(x + 2) - log_gamma(y + 2) - log_gamma(c + 1))
        tail *= hyper_pfq_at([2.0, x + 2], [y + 2, c + 1], 1.0)
        return lead + tail

    hyp = (
        mixed_pair(a, b),
        0.25 * c * math.exp(-log_gamma(c)) * hyper_pfq_at([1.0], [c], -1.0)
        - 0.5 * math.exp(-log_gamma(c + 1)) * hyper_pfq_at([2.0], [c + 1], -1.0),
        mixed_pair(b, a),
    )
    for name, dv, hv in zip(("b1.b1", "b1.b2", "b2.b2"), direct, hyp):
        scale = max(abs(dv), abs(hv), 1e-300)
        if abs(dv - hv) > 1e-8 * scale:
            raise InternalConsistencyError(
                f"boundedness sum {name}: direct {dv!r} vs hypergeometric {hv!r}"
            )
    return direct


@dataclass(frozen=True)
class DiffMatrixBuild:
    """A constructed N x N differentiation matrix.

    Dense routes store the strict lower triangle packed row-major; the
    generator route stores the rank-2 skew pair.
    """

    params: JacobiParams
    n: int
    source: str
    lower_packed: np.ndarray | None = None
    pair: SkewGeneratorPair | None = None
    metadata: dict = field(default_factory=dict)

    def dense(self) -> np.ndarray:
        if self.pair is not None:
            return skew_expand(self.pair).to_dense()
        dense = np.zeros((self.n, self.n))
        rows, cols = np.tril_indices(self.n, k=-1)
        dense[rows, cols] = self.lower_packed
        return dense - dense.T


def _pack_lower(dense_lower: np.ndarray) -> np.ndarray:
    rows, cols = np.tril_indices(dense_lower.shape[0], k=-1)
    return dense_lower[rows, cols]


def build(params: JacobiParams, n_size: int, source: str) -> DiffMatrixBuild:
    """Construct the differentiation matrix by the requested route."""
    if n_size < 1:
        raise DomainError(f"size must be >= 1, got {n_size}")
    if source not in SOURCES:
        raise ValueError(f"unknown source {source!r}; expected one of {SOURCES}")
    meta: dict = {}
    if source == "generators":
        pair = generators(params, n_size)
        meta["b_sign_flipped"] = generator_sign_flipped(params.alpha, params.beta)
        return DiffMatrixBuild(
            params=params, n=n_size, source=source, pair=pair, metadata=meta
        )
    if source == "closed_form":
        dense = _closed_form_dense(params, n_size)
    elif source == "recurrence":
        kvec = kappa_vector(params, n_size - 1)
        dtilde = dtilde_lower_triangle(params, n_size)
        low = np.tril(kvec[:, None] * kvec[None, :] * dtilde, k=-1)
        dense = low - low.T
    else:
        dense = oracle_matrix(params, n_size)
    return DiffMatrixBuild(
        params=params,
        n=n_size,
        source=source,
        lower_packed=_pack_lower(dense),
        metadata=meta,
    )


def write_dense_csv(build_result: DiffMatrixBuild, path) -> None:
    """Row-major CSV with 17-significant-digit entries."""
    dense = build_result.dense()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in dense:
            writer.writerow([f"{v:.17g}" for v in row])
