import math

import numpy as np

TWO_PI = 2.0 * np.pi


def e(x):
    """``exp(2*pi*i*x)`` with the argument reduced mod 1 first."""
    x = np.asarray(x)
    if x.dtype == np.longdouble:
        frac = x - np.floor(x)
        return np.exp(1j * TWO_PI * frac.astype(np.float64))
    x = x.astype(np.float64, copy=False)
    return np.exp(1j * TWO_PI * (x - np.floor(x)))


def fsum_complex(values):
    """Correctly rounded sum of a complex array (order independent)."""
    values = np.asarray(values, dtype=np.complex128).ravel()
    return complex(math.fsum(values.real), math.fsum(values.imag))


def frac_dist(x):
    """Distance to the nearest integer."""
    x = np.asarray(x, dtype=np.float64)
    return np.abs(x - np.round(x))
