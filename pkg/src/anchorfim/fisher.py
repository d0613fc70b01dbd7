"""Fisher information assembly, nuisance reduction, rank tests and bounds.

Near-field information matrices in this problem are badly conditioned
(condition numbers of 1e12 to 1e15 are routine: the bulk-delay direction
carries vastly more information than a rotation about the link axis). The
Schur complement and the bound inversions are therefore carried out in
extended precision with mpmath; everything that leaves this module is a
plain float64 array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .derivs import ParamBlock, block_slices
from .errors import InvalidArgumentError

DEFAULT_REL_THRESHOLD = 1e-9
NUISANCE_REL_THRESHOLD = 1e-12
FACTOR_REL_THRESHOLD = 1e-10
ROUNDOFF_FLOOR = 1e-14
WORKING_DIGITS = 40

UNBOUNDED = math.inf
"""Marker returned by :func:`peb` / :func:`oeb` for unidentifiable blocks."""


@dataclass(frozen=True)
class Fim:
    """Real symmetric information matrix with its block layout."""

    matrix: np.ndarray
    blocks: tuple = ()
    factor: np.ndarray | None = field(default=None, compare=False, repr=False)
    """Optional real matrix ``R`` with ``matrix == R.T @ R``; lets nuisance
    reduction find null directions from singular values of ``R`` instead of
    eigenvalues of the squared (and far less resolved) matrix."""

    @property
    def block_index(self) -> dict[ParamBlock, slice]:
        return block_slices(self.blocks)

    def indices(self, blocks: Sequence[ParamBlock]) -> np.ndarray:
        idx = self.block_index
        parts = [np.arange(self.matrix.shape[0])[idx[b]] for b in blocks]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=int)

    def sub(self, rows: Sequence[ParamBlock], cols: Sequence[ParamBlock] | None = None) -> np.ndarray:
        """Sub-matrix for the given row (and column) blocks."""
        cols = rows if cols is None else cols
        return self.matrix[np.ix_(self.indices(rows), self.indices(cols))]


@dataclass(frozen=True)
class Efim:
    """Equivalent FIM of a set of interest blocks.

    ``reference_scale`` is the largest eigenvalue of the interest block
    before the nuisance parameters were removed; it lets the rank test tell
    an all-roundoff result from genuine information.
    """

    matrix: np.ndarray
    blocks: tuple = ()
    nuisance_dims: int = 0
    nuisance_singular: bool = False
    reference_scale: float | None = None
    precise: object = field(default=None, compare=False, repr=False)
    """The same matrix as an extended-precision mpmath matrix, when available."""

    @property
    def block_index(self) -> dict[ParamBlock, slice]:
        return block_slices(self.blocks)


@dataclass(frozen=True)
class IdentReport:
    eigenvalues: np.ndarray
    rank: int
    positive_definite: bool
    rel_threshold: float


def assemble_fim(stacks, snr_linear: float, blocks: Sequence[ParamBlock] | None = None) -> Fim:
    """``2 * snr * sum_t Re(D_t^H D_t)`` over a stack of N_U x K Jacobians.

    Args:
        stacks: sequence (or T x N_U x K array) of per-transmission Jacobians.
        snr_linear: ``1 / sigma^2``.
        blocks: column layout of the Jacobians.
    """
    mats = [np.asarray(d) for d in stacks]
    if not mats:
        raise InvalidArgumentError("empty Jacobian stack")
    if any(m.ndim != 2 for m in mats) or len({m.shape[1] for m in mats}) != 1:
        raise InvalidArgumentError("Jacobians must be 2-D with a common column count")
    if not snr_linear > 0:
        raise InvalidArgumentError("snr_linear must be positive")
    k = mats[0].shape[1]
    if blocks is not None and sum(b.dimension for b in blocks) != k:
        raise InvalidArgumentError("block layout does not match Jacobian width")
    acc = np.zeros((k, k))
    for d in mats:
        acc += (d.conj().T @ d).real
    acc = 2.0 * snr_linear * acc
    acc = 0.5 * (acc + acc.T)
    factor = math.sqrt(2.0 * snr_linear) * stacked_real_jacobian(mats)
    return Fim(acc, tuple(blocks) if blocks is not None else (), factor)


def stacked_real_jacobian(stacks) -> np.ndarray:
    """Real matrix R with ``sum_t Re(D_t^H D_t) = R^T R``."""
    mats = [np.asarray(d) for d in stacks]
    return np.vstack([np.vstack([d.real, d.imag]) for d in mats])


def fim_spectrum(stacks, snr_linear: float) -> np.ndarray:
    """Ascending FIM eigenvalues computed from singular values of the stacked Jacobian.

    Squaring singular values avoids the roundoff floor that forming the
    matrix first puts under the small eigenvalues.
    """
    sv = np.linalg.svd(stacked_real_jacobian(stacks), compute_uv=False)
    k = np.asarray(stacks[0]).shape[1]
    ev = np.zeros(k)
    ev[: sv.size] = 2.0 * snr_linear * sv**2
    return np.sort(ev)


def _to_mp(mat: np.ndarray) -> mpmath.matrix:
    return mpmath.matrix(np.asarray(mat, dtype=float).tolist())


def _from_mp(mat: mpmath.matrix) -> np.ndarray:
    return np.array(mat.tolist(), dtype=float).reshape(mat.rows, mat.cols)


def precise_inverse(mat: np.ndarray) -> np.ndarray:
    """Inverse of a nonsingular float matrix evaluated in extended precision."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        return mat.copy()
    with mpmath.workdps(WORKING_DIGITS):
        return _from_mp(_to_mp(mat) ** -1)


def _pseudo_inverse(mat: np.ndarray, rel_threshold: float) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    wmax = max(float(w.max()), 0.0)
    keep = w > rel_threshold * wmax if wmax > 0 else np.zeros_like(w, dtype=bool)
    inv_w = np.zeros_like(w)
    inv_w[keep] = 1.0 / w[keep]
    return (v * inv_w) @ v.T


def _is_singular(mat: np.ndarray, rel_threshold: float) -> bool:
    w = np.linalg.eigvalsh(mat)
    wmax = float(w.max())
    return not (wmax > 0 and float(w.min()) > rel_threshold * wmax)


def _range_basis(factor: np.ndarray) -> np.ndarray | None:
    """Orthonormal basis of the numerical row space of ``factor``, or None if full rank."""
    _, sv, vt = np.linalg.svd(factor, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return np.zeros((factor.shape[1], 0))
    keep = sv > FACTOR_REL_THRESHOLD * sv[0]
    if keep.all() and sv.size == factor.shape[1]:
        return None
    return vt[keep].T


def _symmetric_float(mat: mpmath.matrix) -> np.ndarray:
    out = _from_mp(mat)
    return 0.5 * (out + out.T)


def schur_complement(matrix: np.ndarray, keep, drop, factor: np.ndarray | None = None) -> tuple[np.ndarray, bool]:
    """Float64 Schur complement of ``matrix[drop, drop]`` onto the ``keep`` indices.

    See :func:`_schur_mp` for how a singular dropped block is handled.
    """
    with mpmath.workdps(WORKING_DIGITS):
        out, singular = _schur_mp(matrix, keep, drop, factor)
    return _symmetric_float(out), singular


def _schur_mp(matrix: np.ndarray, keep, drop, factor: np.ndarray | None = None):
    """Schur complement of ``matrix[drop, drop]`` onto the ``keep`` indices.

    Without ``factor`` the dropped block counts as singular when its
    smallest eigenvalue is below ``NUISANCE_REL_THRESHOLD`` of its largest,
    and is then pseudo-inverted. With ``factor`` (``matrix == R.T @ R``) the
    dropped block is singular when the matching columns of ``R`` lose rank,
    and the inverse is taken on their row space only.

    Returns the complement as an mpmath matrix and whether the dropped
    block was singular.
    """
    matrix = np.asarray(matrix, dtype=float)
    keep, drop = np.asarray(keep, dtype=int), np.asarray(drop, dtype=int)
    a = matrix[np.ix_(keep, keep)]
    if drop.size == 0:
        return _to_mp(a), False
    b = matrix[np.ix_(keep, drop)]
    c = matrix[np.ix_(drop, drop)]
    basis = None
    if factor is not None:
        basis = _range_basis(np.asarray(factor, dtype=float)[:, drop])
        singular = basis is not None
    else:
        singular = _is_singular(c, NUISANCE_REL_THRESHOLD)
    with mpmath.workdps(WORKING_DIGITS):
        if basis is not None:
            if basis.shape[1] == 0:
                return _to_mp(a), True
            v = _to_mp(basis)
            c_inv = v * (v.T * _to_mp(c) * v) ** -1 * v.T
        elif singular:
            c_inv = _to_mp(_pseudo_inverse(c, NUISANCE_REL_THRESHOLD))
        else:
            c_inv = _to_mp(c) ** -1
        b_mp = _to_mp(b)
        out = _to_mp(a) - b_mp * c_inv * b_mp.T
        out = (out + out.T) / 2
    return out, singular


def efim(fim: Fim, interest: Sequence[ParamBlock]) -> Efim:
    """Equivalent FIM of the ``interest`` blocks; all other blocks are nuisance.

    A numerically singular nuisance block is inverted only on its range and
    ``nuisance_singular`` is set; see :func:`_schur_mp` for how singularity
    is decided.
    """
    wanted = set(interest)
    missing = wanted - set(fim.blocks)
    if missing:
        raise InvalidArgumentError(f"blocks not in FIM: {sorted(b.value for b in missing)}")
    ordered = [b for b in fim.blocks if b in wanted]
    keep = fim.indices(ordered)
    drop = np.setdiff1d(np.arange(fim.matrix.shape[0]), keep)
    if keep.size == 0:
        raise InvalidArgumentError("no blocks of interest")
    with mpmath.workdps(WORKING_DIGITS):
        precise, singular = _schur_mp(fim.matrix, keep, drop, fim.factor)
    raw = fim.matrix[np.ix_(keep, keep)]
    ref = float(np.linalg.eigvalsh(raw).max())
    return Efim(_symmetric_float(precise), tuple(ordered), int(drop.size), singular, ref, precise)


def crb(efim_: Efim) -> np.ndarray:
    """Inverse of a nonsingular EFIM, from its extended-precision form when present.

    Inverting the rounded float64 matrix would lose about ``cond * 1e-16``
    of relative accuracy, which is visible for the worse-conditioned
    near-field cases.
    """
    if efim_.precise is None:
        return precise_inverse(efim_.matrix)
    with mpmath.workdps(WORKING_DIGITS):
        return _symmetric_float(efim_.precise ** -1)


def identifiability(efim_: Efim | np.ndarray, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> IdentReport:
    """Eigenvalue rank test; positive definite iff every eigenvalue clears the cutoff.

    The cutoff is ``rel_threshold * lambda_max``. When the EFIM carries the
    scale of its interest block before nuisance reduction, eigenvalues below
    ``ROUNDOFF_FLOOR`` times that scale are treated as zero as well: a
    reduction that cancels all information leaves only roundoff, which must
    count as rank 0 instead of being judged against itself.
    """
    mat = efim_.matrix if isinstance(efim_, Efim) else np.asarray(efim_, dtype=float)
    if mat.size == 0:
        return IdentReport(np.zeros(0), 0, False, rel_threshold)
    w = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    lmax = float(w.max())
    cutoff = rel_threshold * lmax
    if isinstance(efim_, Efim) and efim_.reference_scale is not None:
        cutoff = max(cutoff, ROUNDOFF_FLOOR * efim_.reference_scale)
    rank = int(np.sum(w > cutoff)) if lmax > 0 else 0
    return IdentReport(w, rank, rank == mat.shape[0], rel_threshold)


def _as_slice(efim_: Efim, block) -> slice:
    if isinstance(block, ParamBlock):
        return efim_.block_index[block]
    if isinstance(block, slice):
        return block
    idx = list(block)
    return slice(idx[0], idx[-1] + 1)


def _bound(efim_: Efim, block, rel_threshold: float) -> float:
    sl = _as_slice(efim_, block)
    if not identifiability(efim_, rel_threshold).positive_definite:
        return UNBOUNDED
    cov = crb(efim_)
    return math.sqrt(float(np.trace(cov[sl, sl])))


def peb(efim_: Efim, position_block, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> float:
    """Position error bound in meters; ``inf`` if the EFIM is not positive definite.

    ``position_block`` may be a :class:`ParamBlock`, a slice, or an index range.
    """
    return _bound(efim_, position_block, rel_threshold)


def oeb(efim_: Efim, orientation_block, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> float:
    """Orientation error bound in radians; ``inf`` if not identifiable."""
    return _bound(efim_, orientation_block, rel_threshold)
