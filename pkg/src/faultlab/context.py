"""Principal context construction.

Two cooperating selections feed the generative model:

* a statistical context: statements ranked by their summed absolute
  loadings on the leading eigenvectors of the coverage covariance
  (feature selection on the original columns, not a projection), and
* a fused context: the semantic slice set filtered and ordered by the
  statistical ranking, truncated to the model's width.

The symmetric eigensolver is a cyclic Jacobi iteration; no linear-algebra
backend is involved so the selection is reproducible bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateData,
    InsufficientContext,
    NoConvergence,
    NotSymmetric,
)

VARIANCE_COVERAGE = 0.95     # default: smallest m explaining 95% of variance
MIN_WIDTH = 4                # denoiser needs at least 4 columns
SYMMETRY_TOL = 1e-9
JACOBI_OFF_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


@dataclass
class StatisticalContext:
    stm_pca: list[int]           # statement indices, descending contribution
    x_pca: np.ndarray            # M x K'' selected columns of X
    contributions: np.ndarray    # (N,) contribution value per statement
    m: int                       # number of leading eigenvectors used

    def to_json(self) -> str:
        return json.dumps({
            "stm_pca": self.stm_pca,
            "contributions": self.contributions.tolist(),
            "m": self.m,
        })


@dataclass
class FusedContext:
    stm_fusion: list[int]        # sorted ascending
    x_fusion: np.ndarray         # M x K
    alpha: float
    k_f: int                     # fusion size alpha * |StmSC|
    target_dim: int              # K

    def to_json(self) -> str:
        return json.dumps({
            "stm_fusion": self.stm_fusion,
            "alpha": self.alpha,
            "k_f": self.k_f,
            "k": self.target_dim,
        })


def eigen_sym(matrix: np.ndarray,
              off_tol: float = JACOBI_OFF_TOL,
              max_sweeps: int = JACOBI_MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns, each sign-fixed so its largest-magnitude
    component is positive.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric("input must be a square matrix")
    if not np.allclose(a, a.T, atol=SYMMETRY_TOL, rtol=0.0):
        raise NotSymmetric("matrix is not symmetric within 1e-9")
    n = a.shape[0]
    a = (a + a.T) / 2.0
    v = np.eye(n)

    def off_norm(mat):
        off = mat - np.diag(np.diag(mat))
        return np.sqrt(np.sum(off * off))

    for _ in range(max_sweeps):
        if off_norm(a) < off_tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    else:
        if off_norm(a) >= off_tol:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")

    eigvals = np.diag(a).copy()
    order = sorted(range(n), key=lambda i: (-eigvals[i], i))
    eigvals = eigvals[order]
    vecs = v[:, order]
    for k in range(n):
        col = vecs[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            vecs[:, k] = -col
    return eigvals, vecs


def default_m(eigvals: np.ndarray, coverage: float = VARIANCE_COVERAGE) -> int:
    """Smallest count of leading eigenvalues explaining `coverage` of the variance."""
    total = float(np.sum(np.clip(eigvals, 0.0, None)))
    if total <= 0.0:
        return 1
    acc = 0.0
    for i, lam in enumerate(eigvals, start=1):
        acc += max(float(lam), 0.0)
        if acc >= coverage * total:
            return i
    return len(eigvals)


def contribution_select(
    x: np.ndarray,
    m: int | None = None,
    k2: int | None = None,
) -> StatisticalContext:
    """Rank statements by summed absolute loadings on the top-m eigenvectors.

    covX is the covariance of the coverage columns (rows are samples,
    column-mean centering, divisor M-1).  Contribution of statement i is
    sum_p |V_pi| over the m leading eigenvectors; ties break by ascending
    statement index.
    """
    x = np.asarray(x, dtype=np.float64)
    rows, n = x.shape
    if rows < 2:
        raise DegenerateData("need at least 2 samples to form a covariance")
    if k2 is None:
        k2 = n
    if not 1 <= k2 <= n:
        raise DegenerateData(f"K''={k2} outside 1..{n}")
    centered = x - x.mean(axis=0, keepdims=True)
    cov = centered.T @ centered / (rows - 1)
    eigvals, eigvecs = eigen_sym(cov)
    if m is None:
        m = default_m(eigvals)
    if not 1 <= m <= n:
        raise DegenerateData(f"m={m} outside 1..{n}")
    contributions = np.sum(np.abs(eigvecs[:, :m]), axis=1)
    # Identical columns must tie exactly so the index tie-break is
    # deterministic; quantize away solver round-off before ordering.
    snapped = np.round(contributions, 9)
    order = sorted(range(n), key=lambda i: (-snapped[i], i))
    stm_pca = [i + 1 for i in order[:k2]]
    return StatisticalContext(
        stm_pca=stm_pca,
        x_pca=x[:, [s - 1 for s in stm_pca]].copy(),
        contributions=contributions,
        m=m,
    )


def _floor_even(n: int) -> int:
    return n if n % 2 == 0 else n - 1


def default_target_dim(stm_sc, stm_pca, k_f) -> int:
    """Smallest even width >= max(4, initial intersection), capped by |StmSC|.

    The cap is rounded down to even because the denoiser halves its width
    once.
    """
    sc = set(stm_sc)
    initial = [s for s in stm_pca[:k_f] if s in sc]
    lower = max(MIN_WIDTH, len(initial))
    k = lower if lower % 2 == 0 else lower + 1
    cap = _floor_even(len(stm_sc))
    if cap < MIN_WIDTH:
        raise InsufficientContext(
            f"semantic context has {len(stm_sc)} statements; need at least {MIN_WIDTH}"
        )
    return min(k, cap)


def fuse(
    x: np.ndarray,
    stm_sc,
    stm_pca,
    alpha: float = 1.0,
    target_dim: int | None = None,
) -> FusedContext:
    """Fuse semantic and statistical contexts into the model's input columns.

    The fusion starts from StmSC ∩ StmPCA[:K^f] (K^f = round(alpha |StmSC|))
    and then walks StmPCA in order, admitting statements that are also in
    StmSC, until the target width is reached.  The emitted index list is
    sorted ascending.
    """
    if alpha < 0:
        raise ValueError("fusion ratio alpha must be non-negative")
    stm_sc = list(stm_sc)
    stm_pca = list(stm_pca)
    k_f = int(round(alpha * len(stm_sc)))
    if target_dim is None:
        target_dim = default_target_dim(stm_sc, stm_pca, k_f)

    sc = set(stm_sc)
    fusion: list[int] = []
    chosen: set[int] = set()
    # One scan is equivalent to "initial intersection, then refill": every
    # member of StmPCA[:K^f] ∩ StmSC is met first in StmPCA order anyway.
    for s in stm_pca:
        if len(fusion) >= target_dim:
            break
        if s in sc and s not in chosen:
            fusion.append(s)
            chosen.add(s)

    if len(fusion) < target_dim:
        # Downgrade to the widest even context the scan can support.
        shrunk = _floor_even(len(fusion))
        if shrunk < MIN_WIDTH:
            raise InsufficientContext(
                f"fusion scan found only {len(fusion)} usable statements; "
                f"need at least {MIN_WIDTH}"
            )
        fusion = fusion[:shrunk]
        target_dim = shrunk

    fusion_sorted = sorted(fusion)
    x = np.asarray(x)
    return FusedContext(
        stm_fusion=fusion_sorted,
        x_fusion=x[:, [s - 1 for s in fusion_sorted]].copy(),
        alpha=alpha,
        k_f=k_f,
        target_dim=target_dim,
    )


def context_dump(semantic, statistical: StatisticalContext, fused: FusedContext) -> str:
    """JSON dump of the three context layers for a version."""
    return json.dumps({
        "stm_sc": semantic.stm_sc,
        "stm_pca": statistical.stm_pca,
        "stm_fusion": fused.stm_fusion,
        "alpha": fused.alpha,
        "m": statistical.m,
        "k": fused.target_dim,
    })
