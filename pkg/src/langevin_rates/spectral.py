"""Spectra of the kinetic generator and Poincare constants.

Four independent tools live here:

* the closed-form spectrum of ``-L`` for ``U = m x^2 / 2`` in one dimension,
  ``lambda_ij = gamma (i+j)/2 + sqrt(gamma^2 - 4m) (i-j)/2``; in ``d``
  dimensions the spectrum consists of sums of ``d`` such values;
* a Hermite-Galerkin matrix of ``-L`` for the same potential, built from the
  ladder relations of the orthonormal probabilists' Hermite functions
  ``h_k = He_k / sqrt(k!)``;
* the Hermite-index supremum giving the operator-norm constant ``sqrt 2`` for
  isotropic quadratics;
* a finite-difference solver for the Poincare constant of a 1-D potential.

In the basis ``psi_ij(x, v) = h_i(sqrt(m) x) h_j(v)`` the generator acts as

    L psi_ij = -gamma j psi_ij
               + sqrt(m) (sqrt(i (j+1)) psi_{i-1,j+1} - sqrt((i+1) j) psi_{i+1,j-1})

so it preserves the total degree ``i + j``; the matrix splits into blocks
of fixed degree, each of which is reproduced exactly by any truncation that
contains it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.csgraph import connected_components

from .errors import InvalidParameterError, NumericalFailureError
from .potentials import PotentialSpec

__all__ = [
    "GAP_TOL",
    "SpectrumResult",
    "GeneratorMatrix",
    "PoincareEstimate",
    "PoincareOperator",
    "quadratic_spectrum",
    "quadratic_gap",
    "extract_gap",
    "build_generator_hermite",
    "matrix_gap",
    "rham_supremum_quadratic",
    "poincare_operator",
    "poincare_fd",
]

GAP_TOL = 1e-9
MAX_ORDER = 200
MAX_EIG_ORDER = 60


def _positive(name, value) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise InvalidParameterError(f"{name} must be positive and finite, got {value}")
    return value


def extract_gap(eigenvalues, tol: float = GAP_TOL) -> float:
    """Smallest real part strictly above ``tol``."""
    re = np.real(np.asarray(eigenvalues))
    re = re[re > tol]
    if re.size == 0:
        raise NumericalFailureError("no eigenvalue with positive real part")
    return float(re.min())


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    gap: float
    truncation: int | str
    # (i, j) label per eigenvalue; for Galerkin output the labels of blocks
    # with degree above the truncation order are truncation artefacts
    indices: np.ndarray | None = field(default=None, repr=False)

    def rows(self) -> list[tuple[int, int, float, float]]:
        idx = self.indices if self.indices is not None else np.full((len(self.eigenvalues), 2), -1)
        return [
            (int(i), int(j), float(z.real), float(z.imag))
            for (i, j), z in zip(idx, self.eigenvalues)
        ]


def quadratic_spectrum(m: float, gamma: float, n_max: int) -> SpectrumResult:
    """All ``lambda_ij``, ``0 <= i, j <= n_max``, for ``U = m x^2 / 2`` and ``d = 1``."""
    m = _positive("m", m)
    gamma = _positive("gamma", gamma)
    if isinstance(n_max, bool) or int(n_max) != n_max or n_max < 1:
        raise InvalidParameterError(f"n_max must be an integer >= 1, got {n_max!r}")
    n_max = int(n_max)
    s = cmath.sqrt(gamma * gamma - 4.0 * m)
    i, j = np.meshgrid(np.arange(n_max + 1), np.arange(n_max + 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    lam = 0.5 * gamma * (i + j) + 0.5 * s * (i - j)
    lam = lam.astype(complex)
    lam[(i == 0) & (j == 0)] = 0.0
    return SpectrumResult(
        eigenvalues=lam,
        gap=extract_gap(lam),
        truncation="exact",
        indices=np.stack([i, j], axis=1),
    )


def quadratic_gap(m: float, gamma: float) -> float:
    """``Re(gamma/2 - sqrt(gamma^2 - 4m)/2)``, attained at ``(i, j) = (0, 1)``."""
    m = _positive("m", m)
    gamma = _positive("gamma", gamma)
    disc = gamma * gamma - 4.0 * m
    if disc <= 0:
        return 0.5 * gamma
    # same value as gamma/2 - sqrt(disc)/2 without the cancellation
    return 2.0 * m / (gamma + math.sqrt(disc))


@dataclass(frozen=True)
class GeneratorMatrix:
    """Matrix of ``-L`` on ``span{psi_ij : 0 <= i, j <= order}``.

    Basis function ``psi_ij`` has index ``i * (order + 1) + j``; column ``c``
    holds the coefficients of ``-L psi_c``.
    """

    order: int
    entries: scipy.sparse.csr_matrix = field(repr=False)
    m: float
    gamma: float
    from_hermite: bool = True

    @property
    def size(self) -> int:
        return (self.order + 1) ** 2

    def index(self, i: int, j: int) -> int:
        return i * (self.order + 1) + j

    def labels(self) -> np.ndarray:
        k = np.arange(self.size)
        return np.stack([k // (self.order + 1), k % (self.order + 1)], axis=1)

    def dense(self) -> np.ndarray:
        return self.entries.toarray()


def _column(i: int, j: int, m, gamma, sqrt):
    """Nonzero ``(k, l, value)`` of ``-L psi_ij``; ``sqrt`` selects the number type."""
    out = []
    if j:
        out.append((i, j, gamma * j))
    sm = sqrt(m)
    if i:
        out.append((i - 1, j + 1, -sm * sqrt(i * (j + 1))))
    if j:
        out.append((i + 1, j - 1, sm * sqrt((i + 1) * j)))
    return out


def build_generator_hermite(m: float, gamma: float, N: int) -> GeneratorMatrix:
    """Sparse Galerkin matrix of ``-L`` for ``U = m x^2 / 2``, degrees ``i, j <= N``."""
    m = _positive("m", m)
    gamma = _positive("gamma", gamma)
    if isinstance(N, bool) or int(N) != N or not 4 <= N <= MAX_ORDER:
        raise InvalidParameterError(f"N must be an integer in [4, {MAX_ORDER}], got {N!r}")
    N = int(N)
    rows, cols, vals = [], [], []
    for i in range(N + 1):
        for j in range(N + 1):
            c = i * (N + 1) + j
            for k, l, v in _column(i, j, m, gamma, math.sqrt):
                if k <= N and l <= N:
                    rows.append(k * (N + 1) + l)
                    cols.append(c)
                    vals.append(v)
    size = (N + 1) ** 2
    mat = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
    return GeneratorMatrix(order=N, entries=mat, m=m, gamma=gamma)


def _block_eigs_mp(gen: GeneratorMatrix, block: np.ndarray, dps: int) -> np.ndarray:
    import mpmath

    labels = gen.labels()[block]
    pos = {(int(i), int(j)): p for p, (i, j) in enumerate(labels)}
    with mpmath.workdps(dps):
        M = mpmath.zeros(len(block))
        if gen.from_hermite:
            m, gamma = mpmath.mpf(gen.m), mpmath.mpf(gen.gamma)
            for p, (i, j) in enumerate(labels):
                for k, l, v in _column(int(i), int(j), m, gamma, mpmath.sqrt):
                    if (k, l) in pos:
                        M[pos[(k, l)], p] = v
        else:
            sub = gen.entries[block][:, block].toarray()
            for r in range(len(block)):
                for c in range(len(block)):
                    if sub[r, c]:
                        M[r, c] = mpmath.mpf(sub[r, c])
        if len(block) == 1:
            return np.array([complex(M[0, 0])])
        ev = mpmath.eig(M, left=False, right=False)
        return np.array([complex(z) for z in ev])


def matrix_gap(gen: GeneratorMatrix, dps: int | None = None, dps_max_block: int = 8) -> SpectrumResult:
    """All eigenvalues of the truncated generator and the extracted gap.

    The matrix is split into its irreducible diagonal blocks (connected
    components of the sparsity graph) and each block goes through a dense
    Hessenberg-QR eigensolver. Eigenvalues of a block whose basis functions
    share one total degree ``n`` are labelled ``(i, n - i)`` in order of
    increasing ``Re + Im``.

    At critical damping ``gamma^2 = 4m`` each block is a single Jordan
    block, so double precision only resolves its eigenvalues to about
    ``eps**(1/size)``. Passing ``dps`` recomputes blocks of at most
    ``dps_max_block`` rows with ``mpmath`` at that many digits, rebuilding
    the entries from ``(m, gamma)`` when the matrix came from
    :func:`build_generator_hermite`.
    """
    if gen.order > MAX_EIG_ORDER:
        raise InvalidParameterError(f"eigen extraction is capped at order {MAX_EIG_ORDER}, got {gen.order}")
    A = gen.entries.tocsr()
    pattern = (abs(A) + abs(A).T).tocsr()
    n_comp, comp = connected_components(pattern, directed=False)
    labels = gen.labels()
    blocks = [np.flatnonzero(comp == c) for c in range(n_comp)]
    blocks.sort(key=lambda b: (labels[b].sum(axis=1).min(), b[0]))

    eigs, idx = [], []
    for block in blocks:
        if dps is not None and len(block) <= dps_max_block:
            ev = _block_eigs_mp(gen, block, dps)
        else:
            sub = A[block][:, block].toarray()
            try:
                ev = scipy.linalg.eigvals(sub, overwrite_a=True, check_finite=True)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise NumericalFailureError(
                    f"eigensolver failed on a block of size {len(block)}: {exc}"
                ) from exc
        lab = labels[block]
        degree = lab.sum(axis=1)
        if np.all(degree == degree[0]):
            order = np.lexsort((np.imag(ev), np.real(ev) + np.imag(ev)))
            ev = ev[order]
            i_sorted = np.sort(lab[:, 0])
            lab = np.stack([i_sorted, degree[0] - i_sorted], axis=1)
        else:
            lab = np.full_like(lab, -1)
        eigs.append(ev)
        idx.append(lab)
    eigenvalues = np.concatenate(eigs).astype(complex)
    return SpectrumResult(
        eigenvalues=eigenvalues,
        gap=extract_gap(eigenvalues),
        truncation=gen.order,
        indices=np.concatenate(idx),
    )


def rham_supremum_quadratic(m: float, S_max: int) -> float:
    """``max_{0 <= S <= S_max} sqrt(2 m^2 (S^2 - S)) / (1 + m S)``.

    ``S`` is the total Hermite degree; the maximum tends to ``sqrt 2``
    from below for every ``m``.
    """
    m = _positive("m", m)
    if isinstance(S_max, bool) or int(S_max) != S_max or S_max < 1:
        raise InvalidParameterError(f"S_max must be an integer >= 1, got {S_max!r}")
    S_max = int(S_max)
    best = 0.0
    chunk = 1 << 20
    for start in range(0, S_max + 1, chunk):
        S = np.arange(start, min(start + chunk, S_max + 1), dtype=float)
        vals = math.sqrt(2.0) * m * np.sqrt(S * (S - 1.0)) / (1.0 + m * S)
        best = max(best, float(vals.max()))
    return best


@dataclass(frozen=True)
class PoincareEstimate:
    m_hat: float
    grid: tuple[float, float, int]
    eigen_iterations: int
    tolerance: float
    residual: float

    def to_dict(self) -> dict:
        x_min, x_max, n = self.grid
        return {
            "m_hat": self.m_hat,
            "grid": {"x_min": x_min, "x_max": x_max, "n_points": n},
            "tolerance": self.tolerance,
            "eigen_iterations": self.eigen_iterations,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class PoincareOperator:
    """Weighted finite-difference form of ``-f'' + U' f'`` on a uniform grid.

    ``(A f)_i = (w_{i+1/2} (f_i - f_{i+1}) + w_{i-1/2} (f_i - f_{i-1})) / (h^2 w_i)``
    with ``w = exp(-U)`` and zero flux through both ends. ``A`` is
    self-adjoint in the inner product weighted by ``w_i``.
    """

    x: np.ndarray
    h: float
    w: np.ndarray = field(repr=False)
    w_mid: np.ndarray = field(repr=False)

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        flux = self.w_mid * (f[:-1] - f[1:])  # w_{i+1/2} (f_i - f_{i+1})
        out = np.zeros_like(f)
        out[:-1] += flux
        out[1:] -= flux
        return out / (self.h * self.h * self.w)

    def matrix(self) -> scipy.sparse.csr_matrix:
        scale = 1.0 / (self.h * self.h * self.w)
        upper = -self.w_mid * scale[:-1]
        lower = -self.w_mid * scale[1:]
        diag = np.zeros_like(self.w)
        diag[:-1] += self.w_mid
        diag[1:] += self.w_mid
        return scipy.sparse.diags([lower, diag * scale, upper], [-1, 0, 1], format="csr")

    def inner(self, f, g) -> float:
        return float(np.sum(self.w * f * g))

    def dirichlet(self, f) -> float:
        """``<f, A f>_w`` computed from differences."""
        df = np.diff(f)
        return float(np.sum(self.w_mid * df * df)) / (self.h * self.h)

    def solve_mean_zero(self, g: np.ndarray) -> np.ndarray:
        """Solve ``A f = g`` for ``g`` with zero weighted mean; ``f`` has zero weighted mean.

        Uses the flux form ``J_{i+1/2} = -h^2 sum_{k<=i} w_k g_k``; partial
        sums are taken from whichever end carries less mass to limit
        cancellation in the tails.
        """
        wg = self.w * g
        left = np.cumsum(wg)[:-1]
        right = -np.cumsum(wg[::-1])[::-1][1:]
        mass = np.cumsum(self.w)[:-1]
        partial = np.where(mass <= 0.5 * self.w.sum(), left, right)
        df = -self.h * self.h * partial / self.w_mid  # f_{i+1} - f_i
        f = np.concatenate([[0.0], np.cumsum(df)])
        return f - np.sum(self.w * f) / np.sum(self.w)


def poincare_operator(spec: PotentialSpec, x_min: float, x_max: float, n_points: int) -> PoincareOperator:
    if spec.dimension != 1:
        raise InvalidParameterError("the finite-difference Poincare solver needs d = 1")
    x_min, x_max = float(x_min), float(x_max)
    if not x_max > x_min:
        raise InvalidParameterError("x_max must exceed x_min")
    if isinstance(n_points, bool) or int(n_points) != n_points or n_points < 64:
        raise InvalidParameterError(f"n_points must be an integer >= 64, got {n_points!r}")
    n_points = int(n_points)
    x = np.linspace(x_min, x_max, n_points)
    h = (x_max - x_min) / (n_points - 1)
    U = np.asarray(spec.energy(x[:, None]), dtype=float)
    U_mid = np.asarray(spec.energy((0.5 * (x[:-1] + x[1:]))[:, None]), dtype=float)
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(U_mid))):
        raise InvalidParameterError("potential is not finite on the grid")
    U0 = min(U.min(), U_mid.min())
    if min(U[0], U[-1]) < U0 + 25.0:
        raise InvalidParameterError(
            "interval too small: U at the end points must exceed its grid minimum by 25"
        )
    return PoincareOperator(x=x, h=h, w=np.exp(-(U - U0)), w_mid=np.exp(-(U_mid - U0)))


def _smallest_nonzero(op: PoincareOperator, tol: float, max_iter: int) -> tuple[float, np.ndarray, int]:
    wsum = op.w.sum()
    f = (op.x - op.x.mean()) / (op.x[-1] - op.x[0])
    f = f - op.inner(f, np.ones_like(f)) / wsum
    f /= math.sqrt(op.inner(f, f))
    lam = op.dirichlet(f)
    for it in range(1, max_iter + 1):
        f = op.solve_mean_zero(f)
        f /= math.sqrt(op.inner(f, f))
        new = op.dirichlet(f)
        if abs(new - lam) <= tol * abs(new):
            return new, f, it
        lam = new
    raise NumericalFailureError(
        "inverse iteration for the Poincare constant did not converge",
        iterations=max_iter,
        residual=abs(new - lam) / abs(new),
    )


def poincare_fd(
    spec: PotentialSpec,
    x_min: float,
    x_max: float,
    n_points: int,
    tol: float = 1e-13,
    max_iter: int = 10_000,
) -> PoincareEstimate:
    """Poincare constant of a 1-D potential from its weighted Laplacian.

    The smallest nonzero eigenvalue of the finite-difference operator (see
    :class:`PoincareOperator`) is found by inverse iteration restricted to
    functions with zero weighted mean, which deflates the constants. The
    reported ``tolerance`` is a Richardson estimate of the discretisation
    error from a second grid with about half the points.
    """
    op = poincare_operator(spec, x_min, x_max, n_points)
    lam, f, iters = _smallest_nonzero(op, tol, max_iter)
    r = op.apply(f) - lam * f
    residual = math.sqrt(op.inner(r, r))

    coarse_n = max(64, (int(n_points) + 1) // 2)
    if coarse_n < n_points:
        coarse = poincare_operator(spec, x_min, x_max, coarse_n)
        lam_c, _, _ = _smallest_nonzero(coarse, tol, max_iter)
        ratio = (coarse.h / op.h) ** 2
        tolerance = abs(lam_c - lam) / (ratio - 1.0)
    else:
        tolerance = float("nan")
    return PoincareEstimate(
        m_hat=lam,
        grid=(float(x_min), float(x_max), int(n_points)),
        eigen_iterations=iters,
        tolerance=tolerance,
        residual=residual,
    )
