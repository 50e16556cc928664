"""Pure-NumPy training kernel, the fallback when the compiled extension is absent.

Semantics match ``typovec._kernel.train_batch`` exactly: per example, all
scores are taken at the pre-update parameters, the target-side rows then
receive ``lr * weight * coeff * h`` and every composed input row receives the
accumulated ``lr * weight * sum(coeff_j * target_j) / norm``. Gradient deltas
are computed in float64 and cast to the matrix dtype before application.
"""

from __future__ import annotations

import numpy as np


def _logistic_loss(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = np.log1p(np.exp(-x[pos]))
    out[~pos] = -x[~pos] + np.log1p(np.exp(x[~pos]))
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    z = np.exp(x[~pos])
    out[~pos] = z / (1.0 + z)
    return out


def train_batch(input_matrix: np.ndarray, output_matrix: np.ndarray,
                ids_flat: np.ndarray, offsets: np.ndarray, targets: np.ndarray,
                negatives: np.ndarray, branch: np.ndarray, lr: float,
                weight_semantic: float, weight_correction: float,
                normalize: bool) -> tuple[float, int, float, int]:
    """Apply SGD updates for a batch of examples; returns per-branch loss sums.

    Example ``i`` composes ``ids_flat[offsets[i]:offsets[i+1]]``; ``branch`` is
    0 for semantic (targets index the output matrix) and 1 for correction
    (targets index the input matrix).
    """
    dtype = input_matrix.dtype
    loss_sem = loss_cor = 0.0
    n_sem = n_cor = 0
    for i in range(len(targets)):
        ids = ids_flat[offsets[i] : offsets[i + 1]]
        correction = branch[i] == 1
        weight = weight_correction if correction else weight_semantic
        target_matrix = input_matrix if correction else output_matrix

        inv = 1.0 / len(ids) if normalize else 1.0
        h = input_matrix[ids].sum(axis=0).astype(np.float64) * inv
        tids = np.concatenate(([targets[i]], negatives[i]))
        rows = target_matrix[tids].astype(np.float64)
        scores = rows @ h

        signed = scores.copy()
        signed[1:] *= -1.0
        loss = float(_logistic_loss(signed).sum())
        if correction:
            loss_cor += loss
            n_cor += 1
        else:
            loss_sem += loss
            n_sem += 1

        if weight != 0.0:
            coeff = np.empty_like(scores)
            coeff[0] = _sigmoid(np.asarray([-scores[0]]))[0]
            coeff[1:] = -_sigmoid(scores[1:])
            coeff *= lr * weight
            work = rows.T @ coeff
            np.add.at(target_matrix, tids, np.outer(coeff, h).astype(dtype))
            np.add.at(input_matrix, ids, (inv * work).astype(dtype))
    return loss_sem, n_sem, loss_cor, n_cor
