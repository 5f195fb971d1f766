import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_spd(rng, n=6, scale_lo=0.1, scale_hi=10.0):
    """Random symmetric positive-definite matrix with eigenvalues in range."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = rng.uniform(scale_lo, scale_hi, n)
    mat = (q * eig) @ q.T
    return 0.5 * (mat + mat.T)
