"""Generator-form semi-separably generated matrices.

An N x N matrix is stored through rank-r generator vectors: entries
strictly above the diagonal are sum_i a[i][m] * b[i][n], the diagonal is
c, and entries strictly below are sum_i d[i][m] * e[i][n].  Matrix-vector
products run in O(N r) via prefix/suffix sweeps, and shifted linear
systems are solved in O(N r^2) by eliminating the off-diagonal generator
structure down to a banded matrix with 2r+1 diagonals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dgbsv

__all__ = [
    "SemiSepGenerators",
    "SkewGeneratorPair",
    "BandedMatrix",
    "SingularityError",
    "DENSE_CAP",
    "skew_expand",
    "add",
    "scale",
    "product_rank1",
    "product",
    "solve_structured",
    "truncate",
    "to_json",
    "from_json",
]

DENSE_CAP = 4096


class SingularityError(ArithmeticError):
    """Elimination hit a singular or numerically rank-deficient pivot."""

    def __init__(self, message: str, pivot_index: int):
        super().__init__(f"{message} (pivot index {pivot_index})")
        self.pivot_index = pivot_index


def _gen_dtype(arr: np.ndarray):
    # Extended precision is preserved when supplied (products of large
    # generator vectors lose absolute accuracy if rounded to double);
    # everything else is stored as float64.
    return np.longdouble if arr.dtype == np.longdouble else float


def _as_gen_block(vectors, n: int, what: str) -> np.ndarray:
    arr = np.asarray(vectors)
    arr = arr.astype(_gen_dtype(arr), copy=False)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, n)
    if arr.ndim != 2 or (arr.size and arr.shape[1] != n):
        raise ValueError(f"{what} generators must be (rank, {n}) shaped")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} generators contain non-finite entries")
    return arr.reshape(arr.shape[0], n)


@dataclass(frozen=True)
class SemiSepGenerators:
    """Rank-r generator representation of an N x N matrix.

    The rank is a storage bound, not a guarantee: zero or linearly
    dependent generator vectors are allowed.
    """

    n: int
    a: np.ndarray  # (r, n) upper-left
    b: np.ndarray  # (r, n) upper-right
    c: np.ndarray  # (n,)   diagonal
    d: np.ndarray  # (r, n) lower-left
    e: np.ndarray  # (r, n) lower-right

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"size must be >= 1, got {self.n}")
        object.__setattr__(self, "a", _as_gen_block(self.a, self.n, "upper-left"))
        object.__setattr__(self, "b", _as_gen_block(self.b, self.n, "upper-right"))
        object.__setattr__(self, "d", _as_gen_block(self.d, self.n, "lower-left"))
        object.__setattr__(self, "e", _as_gen_block(self.e, self.n, "lower-right"))
        c = np.asarray(self.c)
        c = c.astype(_gen_dtype(c), copy=False)
        if c.shape != (self.n,):
            raise ValueError("diagonal must have length n")
        if not np.all(np.isfinite(c)):
            raise ValueError("diagonal contains non-finite entries")
        object.__setattr__(self, "c", c)
        ranks = {self.a.shape[0], self.b.shape[0], self.d.shape[0], self.e.shape[0]}
        if len(ranks) != 1:
            raise ValueError("generator blocks disagree on rank")

    @property
    def rank(self) -> int:
        return self.a.shape[0]

    @staticmethod
    def diagonal(c) -> "SemiSepGenerators":
        c = np.asarray(c, dtype=float)
        n = c.size
        z = np.zeros((0, n))
        return SemiSepGenerators(n=n, a=z, b=z, c=c, d=z, e=z)

    @staticmethod
    def identity(n: int) -> "SemiSepGenerators":
        return SemiSepGenerators.diagonal(np.ones(n))

    def entry(self, m: int, n: int) -> float:
        if not (0 <= m < self.n and 0 <= n < self.n):
            raise IndexError(f"index ({m}, {n}) out of range for size {self.n}")
        if m < n:
            return float(self.a[:, m] @ self.b[:, n])
        if m == n:
            return float(self.c[n])
        return float(self.d[:, m] @ self.e[:, n])

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """A @ v in O(N r) via suffix sums of b*v and prefix sums of e*v."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"vector length {v.shape} does not match size {self.n}")
        out = self.c * v
        if self.rank:
            bv = self.b * v  # (r, n)
            suffix = np.cumsum(bv[:, ::-1], axis=1)[:, ::-1]
            suffix = np.concatenate([suffix[:, 1:], np.zeros((self.rank, 1))], axis=1)
            ev = self.e * v
            prefix = np.cumsum(ev, axis=1)
            prefix = np.concatenate([np.zeros((self.rank, 1)), prefix[:, :-1]], axis=1)
            out = out + np.einsum("in,in->n", self.a, suffix)
            out = out + np.einsum("in,in->n", self.d, prefix)
        return out

    def to_dense(self) -> np.ndarray:
        if self.n > DENSE_CAP:
            raise ValueError(f"size {self.n} exceeds dense cap {DENSE_CAP}")
        dense = np.diag(self.c)
        if self.rank:
            upper = self.a.T @ self.b
            lower = self.d.T @ self.e
            iu = np.triu_indices(self.n, k=1)
            il = np.tril_indices(self.n, k=-1)
            dense[iu] = upper[iu]
            dense[il] = lower[il]
        return dense

    def diagonals(self, offsets) -> dict[int, np.ndarray]:
        """Full-length diagonals of the matrix, zero-padded outside range.

        Returned arrays are indexed by row: diag[k][m] = A[m, m+k] for
        valid m, zero elsewhere.
        """
        out = {}
        for k in offsets:
            diag = np.zeros(self.n)
            if k == 0:
                diag[:] = self.c
            elif k > 0:
                rows = np.arange(0, self.n - k)
                if rows.size and self.rank:
                    diag[rows] = np.einsum(
                        "im,im->m", self.a[:, rows], self.b[:, rows + k]
                    )
            else:
                rows = np.arange(-k, self.n)
                if rows.size and self.rank:
                    diag[rows] = np.einsum(
                        "im,im->m", self.d[:, rows], self.e[:, rows + k]
                    )
            out[k] = diag
        return out


@dataclass(frozen=True)
class SkewGeneratorPair:
    """Upper-triangle generators (a, b) of a skew-symmetric matrix.

    Expands to the full form with c = 0, d = b, e = -a, so that the dense
    matrix satisfies A + A^T = 0 exactly.
    """

    n: int
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _as_gen_block(self.a, self.n, "skew a"))
        object.__setattr__(self, "b", _as_gen_block(self.b, self.n, "skew b"))
        if self.a.shape != self.b.shape:
            raise ValueError("skew generator blocks must share a shape")

    @property
    def rank(self) -> int:
        return self.a.shape[0]


def skew_expand(pair: SkewGeneratorPair) -> SemiSepGenerators:
    return SemiSepGenerators(
        n=pair.n,
        a=pair.a,
        b=pair.b,
        c=np.zeros(pair.n),
        d=pair.b.copy(),
        e=-pair.a,
    )


def add(ga: SemiSepGenerators, gb: SemiSepGenerators) -> SemiSepGenerators:
    """Generator-level sum; ranks add, dense forms add exactly."""
    if ga.n != gb.n:
        raise ValueError(f"size mismatch: {ga.n} vs {gb.n}")
    return SemiSepGenerators(
        n=ga.n,
        a=np.vstack([ga.a, gb.a]),
        b=np.vstack([ga.b, gb.b]),
        c=ga.c + gb.c,
        d=np.vstack([ga.d, gb.d]),
        e=np.vstack([ga.e, gb.e]),
    )


def scale(g: SemiSepGenerators, s: float) -> SemiSepGenerators:
    """s * A, scaling the row-side generators and the diagonal."""
    return SemiSepGenerators(n=g.n, a=s * g.a, b=g.b, c=s * g.c, d=s * g.d, e=g.e)


def _excl_prefix(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Exclusive prefix sums along the last axis."""
    c = np.cumsum(x, axis=axis)
    out = np.empty_like(c)
    out[..., 0] = 0.0
    out[..., 1:] = c[..., :-1]
    return out


def _suffix(x: np.ndarray) -> np.ndarray:
    """Exclusive suffix sums along the last axis: out[n] = sum_{k>n} x[k]."""
    c = np.cumsum(x[..., ::-1], axis=-1)[..., ::-1]
    out = np.empty_like(c)
    out[..., -1] = 0.0
    out[..., :-1] = c[..., 1:]
    return out


def product_rank1(ga: SemiSepGenerators, gb: SemiSepGenerators) -> SemiSepGenerators:
    """Product of two rank-1 generator forms, as a rank-2 generator form.

    All running sums are finite-horizon: the tail sums over k > n stop at
    N-1, which makes the result exactly the product of the N x N
    truncations.  The n-th upper generator pairs the second factor's
    column vectors with accumulated cross sums; the tail accumulation for
    b[2] runs over b_k * s_k against the second factor's lower row
    generators (the grouping that the dense oracle confirms).
    """
    if ga.n != gb.n:
        raise ValueError(f"size mismatch: {ga.n} vs {gb.n}")
    if ga.rank != 1 or gb.rank != 1:
        raise ValueError("product_rank1 requires two rank-1 operands")
    a, b, d, e = (v[0].astype(np.longdouble) for v in (ga.a, ga.b, ga.d, ga.e))
    f = ga.c.astype(np.longdouble)
    p, q, s, t = (v[0].astype(np.longdouble) for v in (gb.a, gb.b, gb.d, gb.e))
    r = gb.c.astype(np.longdouble)

    pre_ep = _excl_prefix(e * p)          # sum_{k<m} e_k p_k
    pre_bp = _excl_prefix(b * p)          # sum_{k<m} b_k p_k
    pre_bp_inc = pre_bp + b * p           # sum_{k<=m}
    suf_bs = _suffix(b * s)               # sum_{k>m} b_k s_k
    pre_es = _excl_prefix(e * s)          # sum_{k<m} e_k s_k
    pre_es_inc = pre_es + e * s           # sum_{k<=m}

    a1 = d * pre_ep + f * p - a * pre_bp_inc
    b1 = q.copy()
    a2 = a.copy()
    b2 = q * pre_bp + b * r + t * suf_bs
    c = d * q * pre_ep + f * r + a * t * suf_bs
    d1 = d.copy()
    e1 = q * pre_ep + e * r - t * pre_es_inc
    d2 = d * pre_es + f * s + a * suf_bs
    e2 = t.copy()
    return SemiSepGenerators(
        n=ga.n,
        a=np.vstack([a1, a2]),
        b=np.vstack([b1, b2]),
        c=c,
        d=np.vstack([d1, d2]),
        e=np.vstack([e1, e2]),
    )


def product(ga: SemiSepGenerators, gb: SemiSepGenerators) -> SemiSepGenerators:
    """Product of two generator forms, with rank rA + rB per triangle.

    This realizes the rank-additivity grouping: rB upper pairs share the
    second factor's b-vectors, rA upper pairs share the first factor's
    a-vectors (and symmetrically below).  All cross accumulations are
    prefix/suffix sums, O(N rA rB) total.
    """
    if ga.n != gb.n:
        raise ValueError(f"size mismatch: {ga.n} vs {gb.n}")
    n, ra, rb = ga.n, ga.rank, gb.rank
    # Accumulate the running cross sums in extended precision; entries of
    # the product can be large while the dense cross-check tolerances are
    # absolute.
    aA, bA, dA, eA = (v.astype(np.longdouble) for v in (ga.a, ga.b, ga.d, ga.e))
    cA = ga.c.astype(np.longdouble)
    aB, bB, dB, eB = (v.astype(np.longdouble) for v in (gb.a, gb.b, gb.d, gb.e))
    cB = gb.c.astype(np.longdouble)

    # Pairwise cross sums, shape (ra, rb, n).
    pe = _excl_prefix(eA[:, None, :] * aB[None, :, :])    # sum_{k<m} eA_k aB_k
    bp = _excl_prefix(bA[:, None, :] * aB[None, :, :])    # sum_{k<m} bA_k aB_k
    bp_inc = bp + bA[:, None, :] * aB[None, :, :]
    bs = _suffix(bA[:, None, :] * dB[None, :, :])          # sum_{k>m} bA_k dB_k
    es = _excl_prefix(eA[:, None, :] * dB[None, :, :])    # sum_{k<m} eA_k dB_k
    es_inc = es + eA[:, None, :] * dB[None, :, :]

    # Upper triangle: rb pairs (u_j, bB_j) then ra pairs (aA_i, v_i).
    ups_a, ups_b = [], []
    if rb:
        u = cA[None, :] * aB
        if ra:
            u = u + np.einsum("im,ijm->jm", dA, pe)
            u = u - np.einsum("im,ijm->jm", aA, bp_inc)
        ups_a.append(u)
        ups_b.append(bB)
    if ra:
        v = bA * cB[None, :]
        if rb:
            v = v + np.einsum("jm,ijm->im", bB, bp)
            v = v + np.einsum("jm,ijm->im", eB, bs)
        ups_a.append(aA)
        ups_b.append(v)
    a_out = np.vstack(ups_a) if ups_a else np.zeros((0, n))
    b_out = np.vstack(ups_b) if ups_b else np.zeros((0, n))

    # Lower triangle: ra pairs (dA_i, w_i) then rb pairs (z_j, eB_j).
    los_d, los_e = [], []
    if ra:
        w = eA * cB[None, :]
        if rb:
            w = w + np.einsum("jm,ijm->im", bB, pe)
            w = w - np.einsum("jm,ijm->im", eB, es_inc)
        los_d.append(dA)
        los_e.append(w)
    if rb:
        z = cA[None, :] * dB
        if ra:
            z = z + np.einsum("im,ijm->jm", dA, es)
            z = z + np.einsum("im,ijm->jm", aA, bs)
        los_d.append(z)
        los_e.append(eB)
    d_out = np.vstack(los_d) if los_d else np.zeros((0, n))
    e_out = np.vstack(los_e) if los_e else np.zeros((0, n))

    # Diagonal.
    c_out = cA * cB
    if ra and rb:
        c_out = c_out + np.einsum("im,jm,ijm->m", dA, bB, pe)
        c_out = c_out + np.einsum("im,jm,ijm->m", aA, eB, bs)
    return SemiSepGenerators(
        n=n,
        a=a_out,
        b=b_out,
        c=c_out,
        d=d_out,
        e=e_out,
    )


def truncate(g: SemiSepGenerators, n_out: int) -> SemiSepGenerators:
    """Leading n_out x n_out block of the represented matrix.

    Combined with forming a product at a larger horizon, this gives the
    extended-tail approximation of an infinite-operator product.
    """
    if not (1 <= n_out <= g.n):
        raise ValueError(f"n_out must be in [1, {g.n}], got {n_out}")
    return SemiSepGenerators(
        n=n_out,
        a=g.a[:, :n_out],
        b=g.b[:, :n_out],
        c=g.c[:n_out],
        d=g.d[:, :n_out],
        e=g.e[:, :n_out],
    )


@dataclass(frozen=True)
class BandedMatrix:
    """Dense-banded storage with lower bandwidth p and upper bandwidth q.

    ``bands[k]`` holds the diagonal at offset k - q (LAPACK-style band
    layout by columns: bands[q + i - j, j] = A[i, j]).
    """

    n: int
    p: int
    q: int
    bands: np.ndarray  # (p + q + 1, n)

    def __post_init__(self):
        if self.bands.shape != (self.p + self.q + 1, self.n):
            raise ValueError("band storage has the wrong shape")

    @staticmethod
    def from_dense(dense: np.ndarray, p: int, q: int) -> "BandedMatrix":
        n = dense.shape[0]
        bands = np.zeros((p + q + 1, n))
        for i in range(n):
            for j in range(max(0, i - p), min(n, i + q + 1)):
                bands[q + i - j, j] = dense[i, j]
        return BandedMatrix(n=n, p=p, q=q, bands=bands)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n, self.n))
        for j in range(self.n):
            for i in range(max(0, j - self.q), min(self.n, j + self.p + 1)):
                dense[i, j] = self.bands[self.q + i - j, j]
        return dense

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Banded LU with partial pivoting (LAPACK gbsv)."""
        ab = np.zeros((2 * self.p + self.q + 1, self.n))
        ab[self.p:, :] = self.bands
        lu, piv, x, info = dgbsv(self.p, self.q, ab, np.asarray(rhs, dtype=float))
        if info < 0:  # pragma: no cover
            raise ValueError(f"illegal argument {-info} to banded solver")
        if info > 0:
            raise SingularityError("singular banded factor", info - 1)
        return x


def _annihilation_coeffs(gen: np.ndarray, direction: int, n: int, r: int):
    """Coefficients expressing gen[:, m] in the r rows after (or before) m.

    direction +1: x solves gen[:, m] = sum_j x_j gen[:, m+1+j] for
    m = 0 .. n-1-r.  direction -1: for m = r .. n-1 against rows m-1-j.
    Returns an (n, r) array, zero-filled on unprocessed rows.
    """
    gen = np.asarray(gen, dtype=float)  # local solves run in double
    x = np.zeros((n, r))
    if r == 0:
        return x
    if direction > 0:
        rows = np.arange(0, n - r)
        idx = rows[:, None] + 1 + np.arange(r)[None, :]
    else:
        rows = np.arange(r, n)
        idx = rows[:, None] - 1 - np.arange(r)[None, :]
    if rows.size == 0:
        return x
    # Local systems G @ x = rhs with G[i, j] = gen[i, m +- (1+j)].
    G = gen[:, idx].transpose(1, 0, 2)          # (rows, r, r)
    rhs = gen[:, rows].T                         # (rows, r)
    try:
        sol = np.linalg.solve(G, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        sol = np.empty_like(rhs)
        for k, m in enumerate(rows):
            gk = G[k]
            try:
                sol[k] = np.linalg.solve(gk, rhs[k])
            except np.linalg.LinAlgError:
                cand, *_ = np.linalg.lstsq(gk, rhs[k], rcond=None)
                resid = gk @ cand - rhs[k]
                tol = 1e-8 * max(1.0, float(np.abs(rhs[k]).max()))
                if float(np.abs(resid).max()) > tol:
                    raise SingularityError(
                        "rank-deficient local annihilation system", int(m)
                    ) from None
                sol[k] = cand
    x[rows] = sol
    return x


def _shifted(arr: np.ndarray, k: int) -> np.ndarray:
    """arr shifted so that out[m] = arr[m + k], zero-padded."""
    n = arr.shape[-1]
    out = np.zeros_like(arr)
    if k == 0:
        return arr.copy()
    if k > 0:
        if k < n:
            out[..., : n - k] = arr[..., k:]
    else:
        if -k < n:
            out[..., -k:] = arr[..., : n + k]
    return out


def reduce_to_banded(
    g: SemiSepGenerators, shift: float, rhs: np.ndarray
) -> tuple[BandedMatrix, np.ndarray, np.ndarray]:
    """Eliminate the generator structure of M = shift*I + A down to a band.

    Column sweep: column n gets a combination of columns n-1 .. n-r
    subtracted, with coefficients cancelling the b-generators, which
    zeroes the upper triangle beyond offset r; the lower triangle stays
    semi-separable with updated e-vectors.  Row sweep: the mirror image
    with rows m-1 .. m-r cancelling the d-generators.  Eliminating
    against the *preceding* index keeps the coefficients contracting for
    generator sequences that decay along the diagonal (the
    differentiation-matrix case), which bounds element growth.

    Returns the 2r+1-diagonal band B = T M C, the row-transformed right
    side T rhs, and the column coefficients needed to map the banded
    solution z back to x = C z.
    """
    n, r = g.n, g.rank
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (n,):
        raise ValueError(f"rhs length {rhs.shape} does not match size {n}")
    if r == 0:
        bands = (g.c + shift)[None, :].copy()
        return BandedMatrix(n=n, p=0, q=0, bands=bands), rhs.copy(), np.zeros((n, 0))

    diags = g.diagonals(range(-r, r + 1))
    diags[0] = diags[0] + shift

    # Column sweep coefficients and the updated lower-right generators.
    x = _annihilation_coeffs(g.b, -1, n, r)      # (n, r), zero for n < r
    e_new = g.e.copy()
    for j in range(1, r + 1):
        e_new -= x[:, j - 1][None, :] * _shifted(g.e, -j)
    # Upper band of M C, stored per column: U[o][col] = (M C)[col - o, col].
    upper = {}
    for o in range(0, r + 1):
        vals = _shifted(diags[o], -o)            # M[col-o, col]
        for j in range(1, r + 1):
            vals = vals - x[:, j - 1] * _shifted(diags[o - j], -o)
        upper[o] = vals

    def mc_diag(q: int) -> np.ndarray:
        """Diagonal of M C at offset q, indexed by row: out[k] = (MC)[k, k+q]."""
        if q > r:
            return np.zeros(n)
        if q >= 0:
            return _shifted(upper[q], q)         # upper[q][k+q]
        vals = np.zeros(n)
        rows = np.arange(-q, n)
        vals[rows] = np.einsum("im,im->m", g.d[:, rows], e_new[:, rows + q])
        return vals

    # Row sweep.
    y = _annihilation_coeffs(g.d, -1, n, r)      # (n, r), zero for m < r
    rhs2 = rhs.copy()
    for j in range(1, r + 1):
        rhs2 -= y[:, j - 1] * _shifted(rhs, -j)
    mc = {q: mc_diag(q) for q in range(-r, 2 * r + 1)}
    bands = np.zeros((2 * r + 1, n))
    for p in range(-r, r + 1):
        vals = mc[p].copy()
        for j in range(1, r + 1):
            vals -= y[:, j - 1] * _shifted(mc[p + j], -j)
        rows = np.arange(max(0, -p), min(n, n - p))
        cols = rows + p
        bands[r + rows - cols, cols] = vals[rows]
    return BandedMatrix(n=n, p=r, q=r, bands=bands), rhs2, x


def solve_structured(
    g: SemiSepGenerators, shift: float, rhs: np.ndarray
) -> np.ndarray:
    """Solve (shift*I + A) x = rhs in O(N r^2) time and O(N r) memory."""
    banded, rhs2, col_coeffs = reduce_to_banded(g, shift, rhs)
    z = banded.solve(rhs2)
    x = z.copy()
    for j in range(1, g.rank + 1):
        x -= _shifted(col_coeffs[:, j - 1] * z, j)
    return x


def to_json(g: SemiSepGenerators) -> str:
    """Serialize to the shared JSON schema {n, rank, a, b, c, d, e}."""
    payload = {
        "n": g.n,
        "rank": g.rank,
        "a": g.a.tolist(),
        "b": g.b.tolist(),
        "c": g.c.tolist(),
        "d": g.d.tolist(),
        "e": g.e.tolist(),
    }
    return json.dumps(payload)


def from_json(text: str) -> SemiSepGenerators:
    payload = json.loads(text)
    n = int(payload["n"])
    rank = int(payload["rank"])
    blocks = {}
    for key in ("a", "b", "d", "e"):
        arr = np.asarray(payload[key], dtype=float).reshape(rank, n) if rank else np.zeros((0, n))
        blocks[key] = arr
    return SemiSepGenerators(
        n=n, a=blocks["a"], b=blocks["b"],
        c=np.asarray(payload["c"], dtype=float),
        d=blocks["d"], e=blocks["e"],
    )
