"""Independent reference computations shared by the test modules."""

from __future__ import annotations

import itertools

import numpy as np

from nfsgates.hyperfine import m_values


def spin_ops(j: float):
    m = m_values(j)
    jz = np.diag(m)
    jp = np.zeros((m.size, m.size))
    for k in range(m.size - 1):  # |m> -> |m+1>
        jp[k + 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    return jz, jp


def brute_force_cg(j1: float, j2: float) -> dict:
    """Coupled states by lowering from the highest weight, Condon-Shortley phases."""
    jz1, jp1 = spin_ops(j1)
    jz2, jp2 = spin_ops(j2)
    i1, i2 = np.eye(jz1.shape[0]), np.eye(jz2.shape[0])
    jz = np.kron(jz1, i2) + np.kron(i1, jz2)
    jp = np.kron(jp1, i2) + np.kron(i1, jp2)
    jm = jp.T
    m1, m2 = m_values(j1), m_values(j2)
    labels = list(itertools.product(m1, m2))
    table = {}
    j = j1 + j2
    while j >= abs(j1 - j2) - 1e-9:
        # highest state: the one-dimensional kernel of J+ inside the M = j subspace
        idx = [k for k, (a, b) in enumerate(labels) if abs(a + b - j) < 1e-9]
        _, sv, vh = np.linalg.svd(jp[:, idx])
        assert len(idx) - np.count_nonzero(sv > 1e-10) == 1
        state = np.zeros(len(labels))
        state[idx] = vh[-1].real
        # phase: <j1 j1; j2 (j - j1) | j j> > 0
        top = labels.index((j1, j - j1)) if (j1, j - j1) in labels else None
        if state[top] < 0:
            state = -state
        m = j
        while m >= -j - 1e-9:
            table[(j, m)] = state.copy()
            norm = np.sqrt(j * (j + 1) - m * (m - 1))
            if norm > 0:
                state = jm @ state / norm
            m -= 1
        j -= 1
    return {
        (a, b, jj, mm): float(vec[labels.index((a, b))])
        for (jj, mm), vec in table.items()
        for a, b in labels
    }
