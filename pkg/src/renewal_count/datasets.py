"""Bundled data: completed fertility of 1243 German women (children born).

Only the frequency table is public; the individual records with covariates
must be supplied separately (see :func:`find_fertility_csv`).
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

#: number of women with 0, 1, ..., 11 children
FERTILITY_FREQUENCIES = np.array([76, 239, 483, 228, 118, 44, 30, 10, 8, 3, 3, 1])

#: covariates of the regression model, in table order
FERTILITY_COVARIATES = (
    "german",
    "years_school",
    "vocational",
    "university",
    "catholic",
    "protestant",
    "muslim",
    "rural",
    "year_birth",
    "age_marriage",
)

FERTILITY_ENV = "RENEWAL_COUNT_FERTILITY_CSV"


def fertility_counts():
    """Intercept-only count data rebuilt from the frequency table."""
    from .fitting import CountData

    return CountData.from_frequencies(FERTILITY_FREQUENCIES)


def find_fertility_csv(extra: list[str | Path] | None = None) -> Path | None:
    """Locate the individual-level fertility CSV, if present.

    Looks at the ``RENEWAL_COUNT_FERTILITY_CSV`` environment variable, then
    at any ``extra`` paths.
    """
    candidates = []
    if os.environ.get(FERTILITY_ENV):
        candidates.append(Path(os.environ[FERTILITY_ENV]))
    candidates.extend(Path(p) for p in extra or [])
    for p in candidates:
        if p.is_file():
            return p
    return None
