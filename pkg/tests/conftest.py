import numpy as np
import pytest

from collapsar import default_clock_table


def matmul_oracle(a, b, bits=64):
    """Naive triple-loop product with two's-complement wrap at ``bits``.

    Independent of the simulator: exact Python integers, reduced once per
    output element (modular reduction commutes with the summation).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    t, n = a.shape
    m = b.shape[1]
    half = 1 << (bits - 1)
    full = 1 << bits
    out = [[0] * m for _ in range(t)]
    for i in range(t):
        arow = a[i]
        for j in range(m):
            acc = 0
            for l in range(n):
                acc += int(arow[l]) * int(b[l][j])
            out[i][j] = (acc + half) % full - half
    return np.array(out, dtype=np.int64)


def wrap_signed(value, bits=64):
    half = 1 << (bits - 1)
    return (value + half) % (1 << bits) - half


@pytest.fixture
def clock():
    return default_clock_table()
