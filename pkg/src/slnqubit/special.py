"""Complex digamma and trigamma.

Upward recurrence moves the argument to Re z >= 10, where the Bernoulli
asymptotic series converges to double precision; reflection handles Re z < 0.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

__all__ = ["digamma", "trigamma"]

# B_2k for k = 1..9
_BERNOULLI = (
    1.0 / 6,
    -1.0 / 30,
    1.0 / 42,
    -1.0 / 30,
    5.0 / 66,
    -691.0 / 2730,
    7.0 / 6,
    -3617.0 / 510,
    43867.0 / 798,
)
_SHIFT_TO = 10.0


def _digamma_scalar(z: complex) -> complex:
    if z.real < 0.5:
        if z.imag == 0 and z.real == round(z.real):
            raise ValueError("digamma has poles at non-positive integers")
        # psi(1 - z) - psi(z) = pi cot(pi z)
        return _digamma_scalar(1 - z) - math.pi / cmath.tan(math.pi * z)
    acc = 0j
    while z.real < _SHIFT_TO:
        acc -= 1 / z
        z += 1
    inv2 = 1 / (z * z)
    series = 0j
    p = inv2
    for k, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * k) * p
        p *= inv2
    return acc + cmath.log(z) - 0.5 / z - series


def _trigamma_scalar(z: complex) -> complex:
    if z.real < 0.5:
        if z.imag == 0 and z.real == round(z.real):
            raise ValueError("trigamma has poles at non-positive integers")
        # psi'(1 - z) + psi'(z) = pi^2 / sin^2(pi z)
        return -_trigamma_scalar(1 - z) + (math.pi / cmath.sin(math.pi * z)) ** 2
    acc = 0j
    while z.real < _SHIFT_TO:
        acc += 1 / (z * z)
        z += 1
    inv = 1 / z
    inv2 = inv * inv
    series = 0j
    p = inv2 * inv
    for b in _BERNOULLI:
        series += b * p
        p *= inv2
    return acc + inv + 0.5 * inv2 + series


def digamma(z):
    """psi(z) for complex (or real) ``z``; vectorized."""
    if np.ndim(z):
        return np.vectorize(_digamma_scalar, otypes=[complex])(np.asarray(z, dtype=complex))
    return _digamma_scalar(complex(z))


def trigamma(z):
    """psi'(z) for complex (or real) ``z``; vectorized."""
    if np.ndim(z):
        return np.vectorize(_trigamma_scalar, otypes=[complex])(np.asarray(z, dtype=complex))
    return _trigamma_scalar(complex(z))
