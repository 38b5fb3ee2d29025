"""Index directions, their orthonormal complements and projected coordinates."""

from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np

from core.errors import DegenerateDirectionError, DimensionError, IdentificationError
from core.models import Direction, IndexFrame

logger = logging.getLogger(__name__)

# |cos(beta, e_j)| above this counts as parallel and e_j is skipped
PARALLEL_THRESHOLD = 1.0 - 1e-8
_IDENTIFICATION_TOL = 1e-14


def normalize_direction(v) -> Direction:
    """v / ||v||, sign-flipped so that the first component is strictly positive."""
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise DegenerateDirectionError(f"Direction {tuple(v)} is not finite")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateDirectionError("Cannot normalize the zero vector")
    beta = v / norm
    if abs(beta[0]) <= _IDENTIFICATION_TOL:
        raise IdentificationError(beta)
    if beta[0] < 0:
        beta = -beta
    return Direction(beta=beta)


def _gram_schmidt(beta: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Orthonormal complement seeded by e_2, ..., e_p, then e_1 as the spare."""
    p = beta.shape[0]
    candidates = list(range(1, p)) + [0]
    chosen: List[Tuple[int, np.ndarray]] = []
    fallback = False
    for j in candidates:
        if len(chosen) == p - 1:
            break
        if abs(beta[j]) > PARALLEL_THRESHOLD:
            fallback = True
            continue
        vec = np.zeros(p)
        vec[j] = 1.0
        # two passes of modified Gram-Schmidt keep orthogonality at machine precision
        for _ in range(2):
            vec = vec - np.dot(beta, vec) * beta
            for _, col in chosen:
                vec = vec - np.dot(col, vec) * col
        norm = np.linalg.norm(vec)
        if norm < 1e-8:
            fallback = True
            continue
        chosen.append((j, vec / norm))
    chosen.sort(key=lambda item: item[0])
    if not chosen:
        return np.zeros((p, 0)), fallback
    return np.column_stack([col for _, col in chosen]), fallback


def complement_basis(direction: Direction) -> np.ndarray:
    """Deterministic p x (p-1) orthonormal complement A(beta)."""
    basis, _ = _gram_schmidt(direction.beta)
    return basis


def index_frame(direction: Direction) -> IndexFrame:
    """Bundle a direction with its complement, remembering whether the fallback fired."""
    basis, fallback = _gram_schmidt(direction.beta)
    if fallback:
        logger.debug("Complement fallback used for beta=%s", direction.beta)
    return IndexFrame(direction=direction, complement=basis, fallback_used=fallback)


def project(X: np.ndarray, frame: IndexFrame) -> Tuple[np.ndarray, np.ndarray]:
    """Z = X beta (n,) and W = X A(beta) (n, p-1)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != frame.direction.p:
        raise DimensionError(
            f"X has shape {X.shape}, expected (n, {frame.direction.p})"
        )
    return X @ frame.beta, X @ frame.complement


def orthogonality_error(frame: IndexFrame) -> float:
    """max |B'B - I| for B = (beta | A(beta))."""
    B = frame.basis
    return float(np.max(np.abs(B.T @ B - np.eye(B.shape[1]))))
