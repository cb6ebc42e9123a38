"""Weighted orthonormal basis evaluation, the coefficient map, and two
model time-steppers (implicit-Euler diffusion, Cayley advection).

The basis is phi_n = kappa_n (1-x)^(alpha/2) (1+x)^(beta/2) P_n^(alpha,beta);
it is orthonormal in L2(-1, 1) and vanishes at the endpoints, so the
coefficient map is an isometry and the differentiation matrix acting on
coefficients is skew-symmetric.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import semisep
from .jacobidiff import DiffMatrixBuild, InternalConsistencyError, kappa_vector
from .specfun import DomainError, JacobiParams, gauss_jacobi_rule, jacobi_table

__all__ = [
    "CoeffVector",
    "wfun_eval",
    "wfun_table",
    "expand",
    "reconstruct",
    "differentiate",
    "step_diffusion",
    "step_advection_cayley",
    "write_norm_series_csv",
]


@dataclass(frozen=True)
class CoeffVector:
    """Expansion coefficients of a function in the weighted basis.

    By orthonormality the l2 norm of ``coeffs`` equals the L2 norm of the
    represented truncation.
    """

    params: JacobiParams
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError("coeffs must be a nonempty vector")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coeffs must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def _sqrt_weight(params: JacobiParams, x: np.ndarray) -> np.ndarray:
    return (1.0 - x) ** (params.alpha / 2.0) * (1.0 + x) ** (params.beta / 2.0)


def wfun_table(params: JacobiParams, nmax: int, x) -> np.ndarray:
    """Basis values phi_0 .. phi_nmax at the points x, shape (nmax+1, len(x)).

    Points must lie in [-1, 1]; the endpoint value is 0.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1.0):
        raise DomainError("evaluation points must lie in [-1, 1]")
    table = jacobi_table(params.alpha, params.beta, nmax, x)
    kvec = kappa_vector(params, nmax)
    return kvec[:, None] * table * _sqrt_weight(params, x)[None, :]


def wfun_eval(params: JacobiParams, n: int, x):
    """phi_n(x) = kappa_n (1-x)^(a/2) (1+x)^(b/2) P_n^(a,b)(x); 0 at x = +-1."""
    scalar = np.ndim(x) == 0
    vals = wfun_table(params, n, x)[n]
    return float(vals[0]) if scalar else vals


def expand(params: JacobiParams, f, n_size: int) -> CoeffVector:
    """First N coefficients of f in the weighted basis, by Gauss quadrature.

    Uses Q = max(2N, 64) nodes; the square root of the weight is divided
    out analytically (all nodes are interior, where the weight is
    positive), so f itself need not be evaluable at the endpoints.
    """
    if n_size < 1:
        raise DomainError(f"size must be >= 1, got {n_size}")
    q_nodes = max(2 * n_size, 64)
    rule = gauss_jacobi_rule(params.alpha, params.beta, q_nodes)
    samples = np.asarray([f(x) for x in rule.nodes], dtype=float)
    if not np.all(np.isfinite(samples)):
        raise ValueError("function samples must be finite at the quadrature nodes")
    ratio = samples / _sqrt_weight(params, rule.nodes)
    table = jacobi_table(params.alpha, params.beta, n_size - 1, rule.nodes)
    kvec = kappa_vector(params, n_size - 1)
    coeffs = kvec * (table @ (rule.weights * ratio))
    return CoeffVector(params=params, coeffs=coeffs)


def reconstruct(u: CoeffVector, x) -> np.ndarray:
    """Pointwise values sum_n u_n phi_n(x) of the represented truncation."""
    table = wfun_table(u.params, u.n - 1, x)
    vals = u.coeffs @ table
    return float(vals[0]) if np.ndim(x) == 0 else vals


def _check_match(build: DiffMatrixBuild, u: CoeffVector) -> None:
    if u.n != build.n:
        raise ValueError(f"coefficient length {u.n} does not match matrix size {build.n}")
    if u.params != build.params:
        raise ValueError("coefficient parameters do not match the matrix build")


def differentiate(build: DiffMatrixBuild, u: CoeffVector) -> CoeffVector:
    """Coefficients of the derivative of the function represented by u.

    With D_{m,n} = <phi_m', phi_n> the derivative coefficients are
    D^T u = -D u (each basis derivative phi_m' expands along row m, so
    the coefficient map uses the transpose).  Structured O(N) matvec
    when the build carries generators, dense matvec otherwise.
    """
    _check_match(build, u)
    if build.pair is not None:
        out = -semisep.skew_expand(build.pair).matvec(u.coeffs)
    else:
        out = build.dense().T @ u.coeffs
    return CoeffVector(params=u.params, coeffs=out)


def step_diffusion(build: DiffMatrixBuild, u: CoeffVector, dt: float) -> CoeffVector:
    """One implicit-Euler step of u_t = u_xx: solve (I - dt D^2) u+ = u.

    D^2 is negative semidefinite, so the system matrix is symmetric
    positive definite and the step contracts the l2 norm.
    """
    _check_match(build, u)
    if dt <= 0:
        raise DomainError(f"dt must be > 0, got {dt!r}")
    if build.pair is not None:
        # (I - dt D^2) = (I + sqrt(dt) D)(I - sqrt(dt) D) since the factors
        # commute; two rank-2 solves are better conditioned after banded
        # reduction than one solve on the rank-4 product generators.
        g = semisep.skew_expand(build.pair)
        root = math.sqrt(dt)
        try:
            mid = semisep.solve_structured(semisep.scale(g, root), 1.0, u.coeffs)
            out = semisep.solve_structured(semisep.scale(g, -root), 1.0, mid)
        except semisep.SingularityError as exc:  # pragma: no cover
            raise InternalConsistencyError(
                "diffusion system reported singular; it is positive definite"
            ) from exc
    else:
        dmat = build.dense()
        out = np.linalg.solve(np.eye(build.n) - dt * (dmat @ dmat), u.coeffs)
    return CoeffVector(params=u.params, coeffs=out)


def step_advection_cayley(build: DiffMatrixBuild, u: CoeffVector, dt: float) -> CoeffVector:
    """One Cayley step of u_t = u_x: (I - dt/2 D) u+ = (I + dt/2 D) u.

    The Cayley transform of a skew-symmetric matrix is orthogonal, so the
    step conserves the l2 norm.
    """
    _check_match(build, u)
    if dt <= 0:
        raise DomainError(f"dt must be > 0, got {dt!r}")
    if build.pair is not None:
        g = semisep.skew_expand(build.pair)
        rhs = u.coeffs + (dt / 2.0) * g.matvec(u.coeffs)
        try:
            out = semisep.solve_structured(semisep.scale(g, -dt / 2.0), 1.0, rhs)
        except semisep.SingularityError as exc:  # pragma: no cover
            raise InternalConsistencyError(
                "Cayley system reported singular; its spectrum is 1 + imaginary"
            ) from exc
    else:
        dmat = build.dense()
        eye = np.eye(build.n)
        rhs = (eye + (dt / 2.0) * dmat) @ u.coeffs
        out = np.linalg.solve(eye - (dt / 2.0) * dmat, rhs)
    return CoeffVector(params=u.params, coeffs=out)


def write_norm_series_csv(path, rows) -> None:
    """Time series CSV with columns (step, t, l2_norm)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "t", "l2_norm"])
        for step, t, norm in rows:
            writer.writerow([step, f"{t:.17g}", f"{norm:.17g}"])
