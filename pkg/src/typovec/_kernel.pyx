# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled training kernel: the SGD inner loop over a batch of examples.

Same contract as ``kernel_numpy.train_batch``. Scores and gradient
coefficients use double accumulators; matrices stay float32. The example loop
runs without the GIL so multiple trainer threads update the shared matrices
concurrently (lock-free; dropped updates are tolerated).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p

cnp.import_array()


cdef inline double _logistic_loss(double x) nogil:
    if x >= 0.0:
        return log1p(exp(-x))
    return -x + log1p(exp(x))


cdef inline double _sigmoid(double x) nogil:
    cdef double z
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    z = exp(x)
    return z / (1.0 + z)


def train_batch(float[:, ::1] input_matrix, float[:, ::1] output_matrix,
                long long[::1] ids_flat, long long[::1] offsets,
                long long[::1] targets, long long[:, ::1] negatives,
                unsigned char[::1] branch, double lr,
                double weight_semantic, double weight_correction,
                bint normalize):
    cdef Py_ssize_t n_examples = targets.shape[0]
    cdef Py_ssize_t n_neg = negatives.shape[1]
    cdef Py_ssize_t dim = input_matrix.shape[1]

    cdef double[::1] h = np.empty(dim, dtype=np.float64)
    cdef double[::1] work = np.empty(dim, dtype=np.float64)
    cdef double[::1] coeff = np.empty(n_neg + 1, dtype=np.float64)
    cdef long long[::1] tids = np.empty(n_neg + 1, dtype=np.int64)

    cdef double loss_sem = 0.0, loss_cor = 0.0
    cdef long long n_sem = 0, n_cor = 0
    cdef double inv, s, c, weight, loss
    cdef Py_ssize_t i, j, k, lo, hi, n_ids, rid
    cdef bint correction
    cdef float[:, ::1] target_matrix

    with nogil:
        for i in range(n_examples):
            lo = offsets[i]
            hi = offsets[i + 1]
            n_ids = hi - lo
            correction = branch[i] == 1
            if correction:
                target_matrix = input_matrix
                weight = weight_correction
            else:
                target_matrix = output_matrix
                weight = weight_semantic
            inv = 1.0 / n_ids if normalize else 1.0

            for k in range(dim):
                h[k] = 0.0
            for j in range(n_ids):
                rid = ids_flat[lo + j]
                for k in range(dim):
                    h[k] += input_matrix[rid, k]
            for k in range(dim):
                h[k] *= inv
                work[k] = 0.0

            tids[0] = targets[i]
            for j in range(n_neg):
                tids[j + 1] = negatives[i, j]

            # pass 1: scores, loss, coefficients and the input-side gradient,
            # all read from the pre-update parameters
            loss = 0.0
            for j in range(n_neg + 1):
                rid = tids[j]
                s = 0.0
                for k in range(dim):
                    s += target_matrix[rid, k] * h[k]
                if j == 0:
                    loss += _logistic_loss(s)
                    c = lr * weight * _sigmoid(-s)
                else:
                    loss += _logistic_loss(-s)
                    c = -lr * weight * _sigmoid(s)
                coeff[j] = c
                if weight != 0.0:
                    for k in range(dim):
                        work[k] += c * target_matrix[rid, k]

            # pass 2: apply updates
            if weight != 0.0:
                for j in range(n_neg + 1):
                    rid = tids[j]
                    for k in range(dim):
                        target_matrix[rid, k] += <float> (coeff[j] * h[k])
                for j in range(n_ids):
                    rid = ids_flat[lo + j]
                    for k in range(dim):
                        input_matrix[rid, k] += <float> (inv * work[k])

            if correction:
                loss_cor += loss
                n_cor += 1
            else:
                loss_sem += loss
                n_sem += 1

    return loss_sem, int(n_sem), loss_cor, int(n_cor)
