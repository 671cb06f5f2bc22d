"""Seeded random observables for property batteries."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from .frames import DARBOUX, BATH_INDICES, SYSTEM_INDICES
from .scalars import EXACT, GaussianRational
from .series import DEFAULT_ORDER, FormalSeries


def random_coefficient(rng: random.Random, backend: str = EXACT, complex_: bool = True):
    re = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    im = Fraction(rng.randint(-4, 4), rng.randint(1, 3)) if complex_ else Fraction(0)
    if not re and not im:
        re = Fraction(1)
    if backend == EXACT:
        return GaussianRational(re, im)
    return complex(float(re), float(im))


def random_series(rng: random.Random, max_degree: int = 3, *, variables: Sequence[int] = (0, 1, 2, 3),
                  frame=DARBOUX, order: int = DEFAULT_ORDER, backend: str = EXACT,
                  max_terms: int = 4, hbar_terms: bool = True, complex_: bool = True,
                  min_degree: int = 0) -> FormalSeries:
    """Sparse random series with a handful of terms of degree ``<= max_degree``.

    Only the listed variable indices appear. A term carries ``hbar^1`` with
    probability 1/4 when ``hbar_terms`` is set.
    """
    n = frame.dim
    terms: dict = {}
    for _ in range(rng.randint(1, max_terms)):
        deg = rng.randint(min_degree, max_degree)
        mono = [0] * n
        for _ in range(deg):
            mono[rng.choice(list(variables))] += 1
        k = 1 if hbar_terms and order >= 1 and rng.random() < 0.25 else 0
        key = (k, tuple(mono))
        terms[key] = terms.get(key, 0) + random_coefficient(rng, backend, complex_)
    return FormalSeries(terms, frame, order, backend)


def random_bath_series(rng: random.Random, max_degree: int = 3, **kwargs) -> FormalSeries:
    return random_series(rng, max_degree, variables=BATH_INDICES, **kwargs)


def random_system_series(rng: random.Random, max_degree: int = 2, **kwargs) -> FormalSeries:
    return random_series(rng, max_degree, variables=SYSTEM_INDICES, **kwargs)
