"""Overflow-safe accumulation of long matrix products in QR form.

A product A_{N-1} ... A_1 A_0 is maintained as Q * diag(exp(logd)) * Rhat
with Q orthogonal, logd the accumulated log of the R diagonal, and Rhat
unit-diagonal upper-triangular.  QR with a positive diagonal is unique, so
this is the QR factorization of the full product regardless of how steps are
blocked; only logd survives exponent ranges beyond float, and Rhat saturates
(with a flag) once exponent gaps exceed ~230 decades.
"""
from __future__ import annotations

import numpy as np

from .errors import NumericalError

_CLIP = 1e100
_BLOCK = 16


def tree_product(mats: np.ndarray) -> np.ndarray:
    """Product mats[-1] @ ... @ mats[0] by pairwise reduction."""
    m = mats
    while m.shape[0] > 1:
        if m.shape[0] % 2:
            m = np.concatenate([m, np.eye(m.shape[1])[None]], axis=0)
        m = np.matmul(m[1::2], m[0::2])
    return m[0]


class QRAccumulator:
    """Streaming left-multiplication accumulator for matrix cocycle products."""

    def __init__(self, dim: int, keep_r: bool = True):
        self.dim = dim
        self.keep_r = keep_r
        self.q = np.eye(dim)
        self.log_diag = np.zeros(dim)
        self.r_unit = np.eye(dim) if keep_r else None
        self.saturated = False
        self.steps = 0

    def update(self, mats: np.ndarray) -> None:
        """Feed a chunk of generator matrices in orbit order (mats[0] first)."""
        mats = np.asarray(mats, dtype=float)
        for i in range(0, mats.shape[0], _BLOCK):
            block = mats[i : i + _BLOCK]
            prod = tree_product(block)
            if np.all(np.isfinite(prod)):
                self._push(prod, block.shape[0])
            else:
                # block overflowed in dense form: apply its members one at a time
                for j in range(block.shape[0]):
                    single = block[j]
                    if not np.all(np.isfinite(single)):
                        raise NumericalError(
                            f"generator matrix at step {self.steps} is not finite"
                        )
                    self._push(single, 1)

    def _push(self, prod: np.ndarray, nsteps: int) -> None:
        w = prod @ self.q
        q, r = np.linalg.qr(w)
        diag = np.diagonal(r).copy()
        signs = np.where(diag < 0, -1.0, 1.0)
        q = q * signs
        r = r * signs[:, None]
        diag = np.abs(diag)
        if np.any(diag < 1e-300):
            k = int(np.argmin(diag))
            raise NumericalError(
                f"numerically singular product within steps "
                f"[{self.steps}, {self.steps + nsteps}): R[{k},{k}] ~ {diag[k]:.3e}"
            )
        new_log = self.log_diag + np.log(diag)
        if self.keep_r:
            m_unit = r / diag[:, None]
            gaps = np.exp(np.clip(self.log_diag[None, :] - self.log_diag[:, None], -745.0, 700.0))
            upd = (m_unit * gaps) @ self.r_unit
            if np.any(np.abs(upd) > _CLIP) or not np.all(np.isfinite(upd)):
                self.saturated = True
                upd = np.clip(np.nan_to_num(upd, posinf=_CLIP, neginf=-_CLIP), -_CLIP, _CLIP)
            np.fill_diagonal(upd, 1.0)
            self.r_unit = upd
        self.q = q
        self.log_diag = new_log
        self.steps += nsteps

    def dense(self) -> np.ndarray:
        """Reconstruct the product; valid only while unsaturated and in range."""
        if not self.keep_r:
            raise NumericalError("accumulator was run without the R factor")
        if self.saturated:
            raise NumericalError("R factor saturated; dense reconstruction unavailable")
        with np.errstate(over="raise"):
            try:
                d = np.exp(self.log_diag)
            except FloatingPointError:
                raise NumericalError("product magnitude exceeds float range") from None
        return self.q @ (d[:, None] * self.r_unit)


def accumulate_stream(dim: int, chunks, keep_r: bool = True, snapshots=None):
    """Run a QRAccumulator over an iterable of matrix chunks.

    ``snapshots`` is an optional sorted list of step counts at which a
    (q, log_diag, r_unit, saturated) copy is recorded; returns
    (accumulator, {n: snapshot}).
    """
    acc = QRAccumulator(dim, keep_r=keep_r)
    want = sorted(set(snapshots)) if snapshots else []
    taken = {}
    wi = 0

    def _harvest():
        nonlocal wi
        while wi < len(want) and want[wi] <= acc.steps:
            if want[wi] == acc.steps:
                taken[acc.steps] = (
                    acc.q.copy(),
                    acc.log_diag.copy(),
                    None if acc.r_unit is None else acc.r_unit.copy(),
                    acc.saturated,
                )
            wi += 1

    _harvest()
    for chunk in chunks:
        chunk = np.asarray(chunk, dtype=float)
        pos = 0
        total = chunk.shape[0]
        while pos < total:
            limit = total if wi >= len(want) else min(total, pos + want[wi] - acc.steps)
            acc.update(chunk[pos:limit])
            pos = limit
            _harvest()
    return acc, taken
