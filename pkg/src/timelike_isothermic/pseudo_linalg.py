"""Signed-metric linear algebra for indefinite ambient spaces.

Vectors are plain numpy arrays whose last axis is the coordinate axis; all
operations broadcast over leading (grid) axes.  Frames are square matrices
whose *columns* are frame vectors, so a moving frame F satisfies F_u = F @ A
with A the coefficient matrix in the column convention.  Signatures are kept
as per-coordinate sign vectors in their original coordinate order (they are
never sorted into +/- blocks): the light-cone embeddings place new
coordinates around the old ones and sorting would scramble the published
coordinate formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Condition-number cap for Gram solves.  Null frames are expected in
# light-cone geometry; beyond this we fail loudly instead of returning noise.
COND_CAP = 1e12

# Relative floor below which a partial Gram-Schmidt norm^2 counts as null.
NULL_FLOOR = 1e-8


class DimensionMismatchError(ValueError):
    pass


class DegenerateSpanError(ValueError):
    pass


class NotLorentzianError(ValueError):
    pass


@dataclass(frozen=True)
class SignedMetric:
    """Diagonal-sign or general symmetric bilinear form on R^dim.

    ``signs`` is the per-coordinate sign vector for the diagonal mode.  The
    general mode stores a full symmetric matrix (used for the frame form
    I-hat whose natural basis is a light-cone basis with off-diagonal
    blocks).
    """

    signs: np.ndarray | None = None
    matrix: np.ndarray | None = None
    det_floor: float = 1e-12

    def __post_init__(self):
        if (self.signs is None) == (self.matrix is None):
            raise ValueError("exactly one of signs/matrix must be given")
        if self.signs is not None:
            s = np.asarray(self.signs, dtype=float)
            if s.ndim != 1 or not np.all(np.abs(s) == 1.0):
                raise ValueError("signs must be a 1-d vector of +/-1")
            object.__setattr__(self, "signs", s)
        else:
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("matrix must be square")
            scale = np.abs(m).max()
            if scale == 0 or np.abs(m - m.T).max() > 1e-12 * scale:
                raise ValueError("matrix must be symmetric to 1e-12 relative")
            if abs(np.linalg.det(m)) < self.det_floor:
                raise ValueError("metric matrix is degenerate")
            object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return len(self.signs) if self.signs is not None else self.matrix.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.signs is not None

    def as_matrix(self) -> np.ndarray:
        if self.is_diagonal:
            return np.diag(self.signs)
        return self.matrix

    def lower(self, v: np.ndarray) -> np.ndarray:
        """Apply the metric to the last axis (index lowering)."""
        v = np.asarray(v, dtype=float)
        self._check_dim(v)
        if self.is_diagonal:
            return v * self.signs
        return v @ self.matrix

    def _check_dim(self, v: np.ndarray):
        if v.shape[-1] != self.dim:
            raise DimensionMismatchError(
                f"vector dim {v.shape[-1]} != metric dim {self.dim}")


def diag_metric(*signs: float) -> SignedMetric:
    return SignedMetric(signs=np.array(signs, dtype=float))


def inner(u: np.ndarray, v: np.ndarray, g: SignedMetric) -> np.ndarray:
    """<u,v> under g, broadcasting over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    g._check_dim(u)
    g._check_dim(v)
    if g.is_diagonal:
        return np.einsum("...k,...k,k->...", u, v, g.signs)
    return np.einsum("...k,kl,...l->...", u, g.matrix, v)


def gram(vectors: list[np.ndarray], g: SignedMetric) -> np.ndarray:
    """Gram matrix (...,k,k) of a list of (...,dim) vectors."""
    k = len(vectors)
    rows = [
        np.stack([inner(vectors[i], vectors[j], g) for j in range(k)], axis=-1)
        for i in range(k)
    ]
    return np.stack(rows, axis=-2)


def project_complement(w: np.ndarray, basis: list[np.ndarray],
                       g: SignedMetric, cond_cap: float = COND_CAP) -> np.ndarray:
    """w minus its g-orthogonal projection onto span(basis).

    The Gram matrix of the basis must be invertible; a null or near-null
    span raises DegenerateSpanError so the caller can re-pick the basis.
    """
    w = np.asarray(w, dtype=float)
    G = gram(basis, g)
    conds = np.linalg.cond(G)
    if np.any(~np.isfinite(conds)) or np.any(conds > cond_cap):
        raise DegenerateSpanError(
            f"degenerate span: Gram condition {np.max(conds):.3e} exceeds cap {cond_cap:.1e}")
    rhs = np.stack([inner(b, w, g) for b in basis], axis=-1)
    coef = np.linalg.solve(G, rhs[..., None])[..., 0]
    out = w.copy()
    for i, b in enumerate(basis):
        out = out - coef[..., i, None] * b
    return out


def orthonormalize(vs: list[np.ndarray], g: SignedMetric,
                   null_floor: float = NULL_FLOOR) -> tuple[list[np.ndarray], list[int]]:
    """Pivoted Gram-Schmidt against g for single vectors (no grid axes).

    At each step the remaining vector whose partial-projection norm^2 has the
    largest absolute value is accepted; this avoids dividing by near-null
    norms in indefinite metrics.  Returns unit frame vectors and their signs;
    the count of -1 signs equals the negative inertia of the span.
    """
    remaining = [np.asarray(v, dtype=float).copy() for v in vs]
    frame: list[np.ndarray] = []
    signs: list[int] = []
    target = len(remaining)
    while remaining and len(frame) < target:
        parts = []
        for v in remaining:
            p = v.copy()
            for f, s in zip(frame, signs):
                p = p - s * inner(p, f, g) * f
            parts.append(p)
        norms2 = np.array([float(inner(p, p, g)) for p in parts])
        scale = max(float(max(np.linalg.norm(p) for p in parts)) ** 2, 1e-300)
        best = int(np.argmax(np.abs(norms2)))
        if abs(norms2[best]) <= null_floor * scale:
            raise DegenerateSpanError(
                "orthonormalize: span is degenerate after pivoting")
        p = parts[best]
        s = 1 if norms2[best] > 0 else -1
        frame.append(p / np.sqrt(abs(norms2[best])))
        signs.append(s)
        remaining.pop(best)
    return frame, signs


def group_residual(A: np.ndarray, I_hat: SignedMetric) -> float:
    """max-norm of A^t G A - G; zero iff A is in the indefinite orthogonal group of G."""
    A = np.asarray(A, dtype=float)
    if A.shape[-1] != I_hat.dim or A.shape[-2] != I_hat.dim:
        raise DimensionMismatchError("frame matrix dim mismatch")
    G = I_hat.as_matrix()
    r = np.einsum("...ki,kl,...lj->...ij", A, G, A) - G
    return float(np.abs(r).max())


def algebra_residual(A: np.ndarray, I_hat: SignedMetric) -> float:
    """max-norm of A^t G + G A; zero iff A is in the Lie algebra of the group of G."""
    A = np.asarray(A, dtype=float)
    if A.shape[-1] != I_hat.dim or A.shape[-2] != I_hat.dim:
        raise DimensionMismatchError("frame matrix dim mismatch")
    G = I_hat.as_matrix()
    r = np.einsum("...ki,kl->...il", A, G) + np.einsum("kl,...lj->...kj", G, A)
    return float(np.abs(r).max())


@dataclass(frozen=True)
class NullSlopes:
    """The two lightlike direction slopes mu = dt/ds of E ds^2 + 2F ds dt + G dt^2."""

    mu_plus: float
    mu_minus: float
    at_infinity: bool = False  # set when G = 0 and one root escapes to infinity


def null_slopes(E: float, F: float, G: float, g_floor: float = 1e-12) -> NullSlopes:
    """Real roots of E + 2 F mu + G mu^2 = 0 for a Lorentzian first fundamental form."""
    disc = F * F - E * G
    if disc <= 0:
        raise NotLorentzianError(
            f"not Lorentzian at this point: F^2 - EG = {disc:.3e} <= 0")
    scale = max(abs(E), abs(F), abs(G))
    if abs(G) <= g_floor * scale:
        if abs(F) <= g_floor * scale:
            raise NotLorentzianError("degenerate quadratic: F = G = 0")
        return NullSlopes(mu_plus=-E / (2 * F), mu_minus=np.inf, at_infinity=True)
    root = np.sqrt(disc)
    return NullSlopes(mu_plus=(-F + root) / G, mu_minus=(-F - root) / G)
