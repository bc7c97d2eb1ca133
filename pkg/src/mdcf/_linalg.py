"""Small shared linear-algebra helpers (leaf module, no package imports)."""

import numpy as np


def jitter_for(omega, rel_jitter):
    """Diagonal jitter scaled to the covariance's average eigenvalue."""
    k = omega.shape[0]
    return rel_jitter * (float(np.trace(omega)) / k + 1e-12)


def jittered_precision(omega, rel_jitter):
    """Inverse of (omega + jitter I), symmetrized so quadratic forms and
    factor updates see exactly the same coupling coefficients."""
    eps = jitter_for(omega, rel_jitter)
    psi = np.linalg.inv(omega + eps * np.eye(omega.shape[0]))
    return (psi + psi.T) / 2.0


def jittered_logdet(omega, rel_jitter):
    eps = jitter_for(omega, rel_jitter)
    sign, logdet = np.linalg.slogdet(omega + eps * np.eye(omega.shape[0]))
    if sign <= 0:
        return np.nan
    return logdet


def observed_inner_products(U, V, csr):
    """Latent scores u_j . v_k for every observed entry, in csr order.

    U is (d, m) and V is (d, n); csr rows index U's columns and csr.idx
    indexes V's columns.
    """
    rows = csr.expand_rows()
    if len(rows) == 0:
        return np.zeros(0)
    return np.einsum("ij,ij->i", U.T[rows], V.T[csr.idx])
