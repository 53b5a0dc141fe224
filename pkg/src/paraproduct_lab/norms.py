"""Spectral-norm engines and the norms ``||A||``, ``||lam||_X``, ``||lam||_X'``, ``||M_lam||``."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .dyadic import DyadicRectangle, interval_containing
from .forms import TruncatedFormOperator
from .sequences import (MATERIALIZE_CAP, CoefficientSequence, ScaleInvariantSequence,
                        SignPattern, abs_seq, apply_signs, unlift)

logger = logging.getLogger(__name__)

DENSE_MAX = 2000
ITERATIVE_MAX = 1 << 18
MLAMBDA_MAX_CELLS = 1 << 22

Method = Literal["auto", "dense", "lanczos", "power", "structured"]


@dataclass
class SpectralResult:
    value: float
    iterations: int
    converged: bool
    residual: float
    history: list[float] = field(default_factory=list, repr=False)


def spectral_norm_dense(A) -> float:
    """Largest singular value of an explicit matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if max(A.shape, default=0) > DENSE_MAX:
        raise ValueError(f"dense path limited to dimension {DENSE_MAX}, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if A.size == 0:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False)[0])


def spectral_norm_apply(op, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0,
                        window: int = 10) -> SpectralResult:
    """Power iteration on ``G^T G`` for an operator with ``apply``/``adjoint_apply``.

    The reported value ``||G v_k||`` is non-decreasing in ``k``.  Convergence
    requires ``window`` consecutive iterations with relative change below
    ``tol`` and relative eigen-residual below ``0.01 * sqrt(tol)``; on
    exhaustion the best value is returned with ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = op.shape[1]
    if n == 0 or op.shape[0] == 0:
        return SpectralResult(0.0, 0, True, 0.0)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    history: list[float] = []
    prev = 0.0
    calm = 0
    change = np.inf
    for it in range(1, max_iter + 1):
        w = op.apply(v)
        value = float(np.linalg.norm(w))
        history.append(value)
        if value == 0.0:
            return SpectralResult(0.0, it, True, 0.0, history)
        change = (value - prev) / value
        prev = value
        z = op.adjoint_apply(w)
        # small value changes alone stop too early when the top gap is tiny;
        # the value error is of order residual**2 / relative gap
        residual = float(np.linalg.norm(z - value ** 2 * v)) / value ** 2
        calm = calm + 1 if abs(change) < tol and residual < 1e-2 * np.sqrt(tol) else 0
        if calm >= window:
            return SpectralResult(value, it, True, residual, history)
        v = z / np.linalg.norm(z)
    logger.warning("power iteration stopped after %d iterations (change %.3g)", max_iter, change)
    return SpectralResult(prev, max_iter, False, abs(change), history)


def spectral_norm_lanczos(op, tol: float = 1e-13, seed: int = 0) -> SpectralResult:
    """Top singular value via implicitly restarted Lanczos (ARPACK) on ``G^T G``."""
    n = op.shape[1]
    if n == 0 or op.shape[0] == 0:
        return SpectralResult(0.0, 0, True, 0.0)
    counter = [0]

    def normal(v):
        counter[0] += 1
        return op.adjoint_apply(op.apply(v))

    if n < 3:
        B = np.column_stack([normal(e) for e in np.eye(n)])
        top = float(np.linalg.eigvalsh((B + B.T) / 2)[-1])
        return SpectralResult(float(np.sqrt(max(top, 0.0))), counter[0], True, 0.0)
    v0 = np.random.default_rng(seed).standard_normal(n)
    B = LinearOperator((n, n), matvec=normal, dtype=float)
    vals, vecs = eigsh(B, k=1, which="LA", tol=tol, v0=v0)
    top = max(float(vals[0]), 0.0)
    if top == 0.0:
        return SpectralResult(0.0, counter[0], True, 0.0)
    vec = vecs[:, 0]
    residual = float(np.linalg.norm(normal(vec) - top * vec) / top)
    return SpectralResult(float(np.sqrt(top)), counter[0], True, residual)


# -- structured path for scale-invariant sequences -------------------------

def scale_invariant_spectrum(lam: ScaleInvariantSequence) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero singular values of the form operator of a scale-invariant sequence.

    Dyadic XOR translations in each variable commute with the operator, so
    it splits over pairs of Walsh characters.  A character pair whose
    levels are ``(p, q)`` sees exactly the scales ``i >= p, j >= q``, and on
    that block the operator is ``W[p:, q:]`` with
    ``W[i, j] = 2**((i+j)/2) * profile[i, j]``.  There are ``max(1, 2**(p-1))``
    characters of level ``p``.  Returns (values, multiplicities).
    """
    W = unlift(lam)
    values, mults = [], []
    for p in range(W.shape[0]):
        for q in range(W.shape[1]):
            sv = np.linalg.svd(W[p:, q:], compute_uv=False)
            sv = sv[sv > 0]
            values.extend(sv)
            mults.extend([(1 << max(p - 1, 0)) * (1 << max(q - 1, 0))] * len(sv))
    order = np.argsort(values)[::-1]
    return np.asarray(values)[order], np.asarray(mults, dtype=np.int64)[order]


def _reduced_dims(lam: ScaleInvariantSequence) -> int:
    rows, cols = lam.profile.shape
    n_u = (1 << rows) - 1
    n_g = (1 << cols) - 1
    return max(n_u << (cols - 1), n_g << (rows - 1))


# -- the paraproduct norms --------------------------------------------------

def form_operator_norm(op: TruncatedFormOperator, method: Method = "auto",
                       seed: int = 0, tol: float | None = None) -> float:
    if min(op.shape) == 0:
        return 0.0
    if method == "auto":
        method = "dense" if max(op.shape) <= DENSE_MAX else "lanczos"
    if method == "dense":
        return spectral_norm_dense(op.to_dense())
    if method == "lanczos":
        res = spectral_norm_lanczos(op, tol=tol or 1e-13, seed=seed)
    elif method == "power":
        res = spectral_norm_apply(op, tol=tol or 1e-10, seed=seed)
        if not res.converged:
            logger.warning("x-norm power iteration did not converge; value is a lower bound")
    else:
        raise ValueError(f"unknown method {method!r}")
    return res.value


def x_norm(lam: CoefficientSequence, depth: int, method: Method = "auto",
           grid: Literal["reduced", "full"] = "reduced", seed: int = 0) -> float:
    """Norm of the averaged form on the depth-``depth`` truncation.

    Requires ``depth >= lam.max_scale``; the value then does not depend on
    ``depth``.  Scale-invariant sequences too large for the grid operator
    go through :func:`scale_invariant_spectrum`.
    """
    if depth < lam.max_scale:
        raise ValueError(f"depth {depth} below the sequence's max scale {lam.max_scale}")
    if lam.support_size == 0:
        return 0.0
    if isinstance(lam, ScaleInvariantSequence):
        too_big = lam.support_size > MATERIALIZE_CAP or _reduced_dims(lam) > ITERATIVE_MAX
        if method == "structured" or (method == "auto" and too_big):
            return float(scale_invariant_spectrum(lam)[0][0])
    elif method == "structured":
        raise ValueError("structured path needs a ScaleInvariantSequence")
    if grid == "full":
        op = TruncatedFormOperator(lam, depth)
    else:
        op = TruncatedFormOperator.reduced(lam, depth)
    if max(op.shape) > ITERATIVE_MAX and grid == "full":
        raise ValueError(f"full grid of shape {op.shape} is too large")
    return form_operator_norm(op, method, seed=seed)


def xprime_norm(lam: CoefficientSequence, depth: int, method: Method = "auto",
                grid: Literal["reduced", "full"] = "reduced") -> float:
    """Unconditional norm, computed as the conditional norm of ``|lam|``.

    Replacing ``g_J, u_I`` by ``|g_J|, |u_I|`` keeps their L2 norms and can
    only enlarge ``|<g_J>_I|`` and ``|<u_I>_J|``, so the supremum of the
    absolute sum equals the conditional norm of the absolute sequence.
    """
    return x_norm(abs_seq(lam), depth, method=method, grid=grid)


def xprime_norm_by_signs(lam: CoefficientSequence, depth: int, max_support: int = 12) -> float:
    """Maximum of ``x_norm(eps * lam)`` over every sign pattern on the support."""
    rects = sorted(lam.sparse().entries)
    if len(rects) > max_support:
        raise ValueError(f"sign enumeration limited to {max_support} rectangles")
    best = 0.0
    # eps and -eps give the same norm, so fix the first sign
    for signs in itertools.product((1, -1), repeat=max(len(rects) - 1, 0)):
        eps = SignPattern(dict(zip(rects, (1,) + signs)))
        best = max(best, x_norm(apply_signs(lam, eps), depth))
    return best


def pointwise_matrix(lam: CoefficientSequence, x: float, y: float, depth: int) -> np.ndarray:
    """``M[i, j] = 2**((i+j)/2) * lam_{I_i(x) J_j(y)}`` for scales 0..depth."""
    M = np.zeros((depth + 1, depth + 1))
    for i in range(depth + 1):
        I = interval_containing(x, i)
        for j in range(depth + 1):
            M[i, j] = 2.0 ** ((i + j) / 2) * lam.get(DyadicRectangle(I, interval_containing(y, j)))
    return M


def pointwise_matrices(lam: CoefficientSequence, depth: int) -> tuple[np.ndarray, int, int]:
    """Pointwise matrices on the coarsest cell grid resolving the truncated support.

    Returns ``(M, dx, dy)`` with ``M`` of shape ``(2**dx, 2**dy, dx+1, dy+1)``;
    rows/columns for scales above ``dx``/``dy`` are identically zero.
    """
    blocks = {k: b for k, b in lam.blocks().items() if k[0] <= depth and k[1] <= depth}
    if not blocks:
        return np.zeros((1, 1, 1, 1)), 0, 0
    dx = max(i for i, _ in blocks)
    dy = max(j for _, j in blocks)
    if (1 << (dx + dy)) > MLAMBDA_MAX_CELLS:
        raise ValueError(f"{1 << (dx + dy)} cells exceed the M_lambda cell limit")
    M = np.zeros((1 << dx, 1 << dy, dx + 1, dy + 1))
    cx = np.arange(1 << dx)
    cy = np.arange(1 << dy)
    for (i, j), b in blocks.items():
        L = np.zeros((1 << i, 1 << j))
        L[b.px, b.py] = b.val
        M[:, :, i, j] = L[np.ix_(cx >> (dx - i), cy >> (dy - j))] * 2.0 ** ((i + j) / 2)
    return M, dx, dy


def mlambda_norm(lam: CoefficientSequence, depth: int) -> float:
    """Norm of the truncated pointwise multiplier: max over cells of ``||M(cell)||``."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if isinstance(lam, ScaleInvariantSequence) and lam.support_size > MATERIALIZE_CAP:
        # the pointwise matrix is the same on every cell of the unit square
        return spectral_norm_dense(unlift(lam)[: depth + 1, : depth + 1])
    M, dx, dy = pointwise_matrices(lam, depth)
    flat = M.reshape(-1, dx + 1, dy + 1)
    return float(np.linalg.svd(flat, compute_uv=False)[:, 0].max())


def multiplier_quadratic_form(lam: CoefficientSequence, depth: int, a0_mass: np.ndarray) -> float:
    """``||M_lam a||^2`` for ``a = (a_0, 0, 0, ...)`` on the depth-``depth`` truncation.

    ``a0_mass[cx, cy]`` is the integral of ``a_0**2`` over the cell; its grid
    must be at least as fine as the one resolving the truncated support.
    """
    M, dx, dy = pointwise_matrices(lam, depth)
    rx = a0_mass.shape[0].bit_length() - 1
    ry = a0_mass.shape[1].bit_length() - 1
    if rx < dx or ry < dy:
        raise ValueError("a0_mass grid is coarser than the multiplier grid")
    row0 = (M[:, :, 0, :] ** 2).sum(axis=-1)
    row0 = np.repeat(np.repeat(row0, 1 << (rx - dx), axis=0), 1 << (ry - dy), axis=1)
    return float((row0 * a0_mass).sum())
