"""Per-group dictionaries from the SVD of the group matrix, and the
closed-form sparse-coding steps over them.

The SVD of a B_s x c group gives rank-1 atoms u_i v_i^T that are orthonormal
under the trace inner product, so coding a group against its own dictionary
reduces to thresholding the singular values: hard thresholding at sqrt(2*tau)
solves the l0-penalized fit, soft thresholding by tau the l1-penalized one.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GroupDictionary:
    left: np.ndarray  # (B_s, m), column-orthonormal
    right: np.ndarray  # (c, m), column-orthonormal
    singulars: np.ndarray  # (m,), non-negative, non-increasing

    @property
    def m(self):
        return len(self.singulars)


def svd_batch(stack):
    """Thin SVD of a stack of groups with a deterministic sign convention.

    For each singular pair, the entry of u_i with the largest absolute value
    (first such entry on ties) is made non-negative; u_i and v_i flip
    together so the product is unchanged.

    Returns (U, s, Vt) with shapes (g, B_s, m), (g, m), (g, m, c).
    """
    stack = np.asarray(stack, dtype=np.float64)
    if not np.all(np.isfinite(stack)):
        raise ValueError("non-finite group entries")
    u, s, vt = np.linalg.svd(stack, full_matrices=False)
    peak = np.argmax(np.abs(u), axis=1)  # (g, m)
    g_idx = np.arange(u.shape[0])[:, None]
    m_idx = np.arange(u.shape[2])[None, :]
    flip = u[g_idx, peak, m_idx] < 0
    sign = np.where(flip, -1.0, 1.0)
    u = u * sign[:, None, :]
    vt = vt * sign[:, :, None]
    return u, s, vt


def learn_dictionary(group):
    """Self-adaptive dictionary of one group: its (sign-stabilized) SVD."""
    u, s, vt = svd_batch(np.asarray(group, dtype=np.float64)[None])
    return GroupDictionary(u[0], vt[0].T, s[0])


def hard_threshold_values(values, tau):
    """Keep entries strictly above sqrt(2*tau), zero the rest."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    values = np.asarray(values, dtype=np.float64)
    return np.where(values > np.sqrt(2.0 * tau), values, 0.0)


def soft_threshold_values(values, tau):
    """Shrink entries toward zero by tau, clipping at zero."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    return np.maximum(np.asarray(values, dtype=np.float64) - tau, 0.0)


def hard_threshold_code(dictionary, tau):
    return hard_threshold_values(dictionary.singulars, tau)


def soft_threshold_code(dictionary, tau):
    return soft_threshold_values(dictionary.singulars, tau)


def reconstruct_group(dictionary, code):
    """Sum of code_i * u_i v_i^T."""
    code = np.asarray(code, dtype=np.float64)
    if code.shape != dictionary.singulars.shape:
        raise ValueError("code length does not match dictionary")
    return (dictionary.left * code) @ dictionary.right.T
