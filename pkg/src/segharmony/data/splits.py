"""Group-wise cross-validation plans."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from ..errors import ConfigError


@dataclass(frozen=True)
class Fold:
    train: tuple
    val: tuple
    test: tuple


@dataclass
class SplitPlan:
    groups: tuple
    scheme: tuple
    folds: list


def make_splits(groups, scheme=(2, 1, 1)):
    """Enumerate every assignment of groups to (train, val, test) sets of the given sizes.

    ``groups`` is a group count or an iterable of group ids. Four groups with
    2-1-1 give 12 folds; three groups with 1-1-1 give 6.
    """
    ids = tuple(range(groups)) if isinstance(groups, int) else tuple(sorted(set(groups)))
    n_train, n_val, n_test = scheme
    if min(scheme) < 0 or n_train < 1:
        raise ConfigError(f"invalid scheme {scheme}", "scheme")
    if len(ids) < n_train + n_val + n_test:
        raise ConfigError(f"{len(ids)} groups cannot fill scheme {scheme}", "scheme")
    folds = []
    for train in combinations(ids, n_train):
        rest = [g for g in ids if g not in train]
        for val in combinations(rest, n_val):
            rest2 = [g for g in rest if g not in val]
            for test in combinations(rest2, n_test):
                folds.append(Fold(train, val, test))
    return SplitPlan(ids, tuple(scheme), folds)
