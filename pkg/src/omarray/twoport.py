"""Batched 2x2 complex transfer matrices acting on (right-moving, left-moving) amplitudes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TwoPortMatrix:
    """Stack of 2x2 matrices; ``data`` has shape ``(..., 2, 2)``.

    ``info`` carries non-numeric metadata (e.g. which matrix-power path was
    used at each grid point) and does not take part in comparisons.
    """

    data: np.ndarray
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.shape[-2:] != (2, 2):
            raise ValueError(f"expected trailing shape (2, 2), got {d.shape}")
        object.__setattr__(self, "data", d)

    @classmethod
    def from_entries(cls, m11, m12, m21, m22) -> "TwoPortMatrix":
        m11, m12, m21, m22 = np.broadcast_arrays(*(np.asarray(m, dtype=complex) for m in (m11, m12, m21, m22)))
        d = np.empty(m11.shape + (2, 2), dtype=complex)
        d[..., 0, 0] = m11
        d[..., 0, 1] = m12
        d[..., 1, 0] = m21
        d[..., 1, 1] = m22
        return cls(d)

    @classmethod
    def identity(cls, shape=()) -> "TwoPortMatrix":
        d = np.zeros(tuple(shape) + (2, 2), dtype=complex)
        d[..., 0, 0] = 1.0
        d[..., 1, 1] = 1.0
        return cls(d)

    @property
    def shape(self):
        return self.data.shape[:-2]

    @property
    def m11(self):
        return self.data[..., 0, 0]

    @property
    def m12(self):
        return self.data[..., 0, 1]

    @property
    def m21(self):
        return self.data[..., 1, 0]

    @property
    def m22(self):
        return self.data[..., 1, 1]

    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    def det_error(self):
        """``|det - 1|`` relative to the size of the products that cancel in ``ad - bc``.

        In binary64 the determinant of a matrix with entries of size ``|beta|``
        cannot be resolved better than ``~eps * |beta|**2``; this is the
        scale-aware form of the unimodularity check.
        """
        with np.errstate(invalid="ignore", over="ignore"):
            scale = np.maximum(1.0, np.maximum(np.abs(self.m11 * self.m22), np.abs(self.m12 * self.m21)))
            return np.abs(self.det() - 1.0) / scale

    def trace(self):
        return self.m11 + self.m22

    def __matmul__(self, other: "TwoPortMatrix") -> "TwoPortMatrix":
        return TwoPortMatrix(np.matmul(self.data, other.data))

    def __getitem__(self, idx) -> "TwoPortMatrix":
        return TwoPortMatrix(self.data[idx])

    def allclose(self, other: "TwoPortMatrix", atol: float) -> bool:
        return bool(np.all(np.abs(self.data - other.data) <= atol))


def eig2(data: np.ndarray):
    """Closed-form eigen-decomposition of a stack of 2x2 matrices.

    Returns ``(lam, vecs)`` where ``lam[..., k]`` is the k-th eigenvalue and
    ``vecs[..., :, k]`` the matching unit-norm eigenvector. Eigenvalue 0 is
    ``x + s`` and eigenvalue 1 is ``x - s`` with ``x`` half the trace and
    ``s`` the principal square root of ``x**2 - det``.
    """
    a = data[..., 0, 0]
    b = data[..., 0, 1]
    c = data[..., 1, 0]
    d = data[..., 1, 1]
    x = 0.5 * (a + d)
    det = a * d - b * c
    s = np.sqrt(x * x - det)
    lam = np.stack([x + s, x - s], axis=-1)

    vecs = np.empty(data.shape, dtype=complex)
    for k in range(2):
        lk = lam[..., k]
        # two algebraically equivalent candidates; keep the better-conditioned one
        v1 = np.stack([b, lk - a], axis=-1)
        v2 = np.stack([lk - d, c], axis=-1)
        n1 = np.linalg.norm(v1, axis=-1)
        n2 = np.linalg.norm(v2, axis=-1)
        use1 = (n1 >= n2)[..., None]
        v = np.where(use1, v1, v2)
        nv = np.where(use1[..., 0], n1, n2)
        # diagonal matrix with b = c = 0 and lk == a or d
        trivial = nv == 0
        if np.any(trivial):
            e = np.zeros_like(v)
            e[..., k] = 1.0
            v = np.where(trivial[..., None], e, v)
            nv = np.where(trivial, 1.0, nv)
        vecs[..., :, k] = v / nv[..., None]
    return lam, vecs


def _normalize(data):
    scale = np.max(np.abs(data), axis=(-2, -1))
    scale = np.where(scale > 0, scale, 1.0)
    return data / scale[..., None, None], np.log(scale)


def power_squaring(data: np.ndarray, n: int):
    """Binary exponentiation with per-product renormalization.

    Returns ``(mhat, log_scale)`` such that ``M**n == exp(log_scale) * mhat``.
    """
    if n < 0:
        raise ValueError("negative matrix power")
    shape = data.shape[:-2]
    result = np.zeros(data.shape, dtype=complex)
    result[..., 0, 0] = 1.0
    result[..., 1, 1] = 1.0
    log_res = np.zeros(shape)
    base, log_base = _normalize(np.array(data, dtype=complex))
    while n:
        if n & 1:
            result, ls = _normalize(np.matmul(result, base))
            log_res = log_res + log_base + ls
        n >>= 1
        if n:
            base, ls = _normalize(np.matmul(base, base))
            log_base = 2.0 * log_base + ls
    return result, log_res


def power_eig(data: np.ndarray, n: int, degeneracy_tol: float = 1e-7):
    """``M**n`` through ``S D**n S^-1``.

    Returns ``(mhat, log_scale, degenerate)``; entries flagged ``degenerate``
    (nearly coincident eigenvalues or an ill-conditioned eigenbasis) are not
    trustworthy and must be recomputed by another path.
    """
    lam, S = eig2(data)
    detS = S[..., 0, 0] * S[..., 1, 1] - S[..., 0, 1] * S[..., 1, 0]
    gap = np.abs(lam[..., 0] - lam[..., 1])
    big = np.maximum(np.abs(lam).max(axis=-1), 1.0)
    degenerate = (gap < degeneracy_tol * big) | (np.abs(detS) < degeneracy_tol)

    safe_lam = np.where(lam == 0, 1.0, lam)
    loglam = np.log(safe_lam)
    logmag = n * loglam.real
    log_scale = np.max(logmag, axis=-1)
    dn = np.exp(n * loglam - log_scale[..., None])
    dn = np.where(lam == 0, 0.0, dn) if n > 0 else dn

    safe_det = np.where(degenerate, 1.0, detS)
    Sinv = np.empty_like(S)
    Sinv[..., 0, 0] = S[..., 1, 1]
    Sinv[..., 0, 1] = -S[..., 0, 1]
    Sinv[..., 1, 0] = -S[..., 1, 0]
    Sinv[..., 1, 1] = S[..., 0, 0]
    Sinv = Sinv / safe_det[..., None, None]
    mhat = np.matmul(S * dn[..., None, :], Sinv)
    mhat, ls = _normalize(mhat)
    return mhat, log_scale + ls, degenerate
