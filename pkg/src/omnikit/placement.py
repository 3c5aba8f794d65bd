"""Placement prediction from demonstrations: domain, Lookup baseline and the k-sweep."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .errors import UnknownObject
from .seeding import stream

FRUIT = ("orange", "apple", "banana", "lemon", "pear", "peach")
PACKAGED = ("pringles can", "spam", "mustard bottle", "soup can", "cereal box", "ketchup bottle")
DESTINATIONS = ("sink", "shelf")
N_COMBOS = 15
SWEEP_SEED = 42


@dataclass(frozen=True)
class PlacementDomain:
    categories: tuple = (("fruit", FRUIT, "sink"), ("packaged", PACKAGED, "shelf"))

    @property
    def objects(self) -> tuple:
        return tuple(o for _, objs, _ in self.categories for o in objs)

    def destination(self, obj: str) -> str:
        for _, objs, dest in self.categories:
            if obj in objs:
                return dest
        raise UnknownObject(obj)

    def category(self, obj: str) -> str:
        for name, objs, _ in self.categories:
            if obj in objs:
                return name
        raise UnknownObject(obj)


DOMAIN = PlacementDomain()


def make_demos(domain: PlacementDomain, objects) -> dict:
    return {o: domain.destination(o) for o in objects}


def lookup_predict(demos: dict, obj: str, rng, domain: PlacementDomain = DOMAIN) -> str:
    """Copy the demonstrated destination, otherwise guess uniformly."""
    domain.destination(obj)
    if obj in demos:
        return demos[obj]
    return DESTINATIONS[int(rng.integers(2))]


class LookupPredictor:
    name = "lookup"

    def __init__(self, domain: PlacementDomain = DOMAIN):
        self.domain = domain

    def predict(self, demos, obj, rng):
        return lookup_predict(demos, obj, rng, self.domain)

    def proba(self, demos, obj, dest) -> float:
        """Probability of predicting ``dest``."""
        self.domain.destination(obj)
        if obj in demos:
            return float(demos[obj] == dest)
        return 1.0 / len(DESTINATIONS)


class CategoryMajorityPredictor:
    """Deterministic stand-in for a model that generalizes within categories:
    majority destination of demonstrated objects of the same category, else 'sink'."""

    name = "category-majority"

    def __init__(self, domain: PlacementDomain = DOMAIN):
        self.domain = domain

    def predict(self, demos, obj, rng=None):
        cat = self.domain.category(obj)
        votes = [d for o, d in demos.items() if self.domain.category(o) == cat]
        if not votes:
            return "sink"
        return max(DESTINATIONS, key=lambda d: (votes.count(d), d == "sink"))


class ConstantPredictor:
    def __init__(self, dest: str = "sink"):
        self.dest = dest
        self.name = f"always-{dest}"

    def predict(self, demos, obj, rng=None):
        return self.dest


PREDICTORS = {
    "lookup": LookupPredictor,
    "category-majority": CategoryMajorityPredictor,
    "always-sink": lambda: ConstantPredictor("sink"),
    "always-shelf": lambda: ConstantPredictor("shelf"),
}


def get_predictor(name: str):
    try:
        return PREDICTORS[name]()
    except KeyError:
        raise ValueError(f"unknown predictor {name!r}; choose from {sorted(PREDICTORS)}") from None


def _subsets(n_objects: int, k: int, combos: int, rng):
    total = comb(n_objects, k)
    if total <= combos:
        return [list(c) for c in combinations(range(n_objects), k)]
    seen, out = set(), []
    while len(out) < combos:
        s = tuple(sorted(rng.choice(n_objects, k, replace=False).tolist()))
        if s not in seen:
            seen.add(s)
            out.append(list(s))
    return out


def sweep(domain: PlacementDomain = DOMAIN, k_values=range(13), combos: int = N_COMBOS, seed: int = SWEEP_SEED,
          predictor=None, test_only_remaining: bool = False, sampled: bool = False) -> list:
    """Success ratio per demonstration count k: list of (k, mean_ratio, n_combos).

    Predictors exposing ``proba`` are scored by the expected success over their
    random guesses unless ``sampled`` is set, in which case every guess is
    drawn from the seeded stream.
    """
    predictor = predictor or LookupPredictor(domain)
    objs = domain.objects
    rows = []
    for k in k_values:
        rng = stream(seed, "placement-subsets", k)
        guess = stream(seed, "placement-guesses", k)
        ratios = []
        for sub in _subsets(len(objs), k, combos, rng):
            demos = make_demos(domain, [objs[i] for i in sub])
            test = [o for o in objs if o not in demos] if test_only_remaining else list(objs)
            if not test:
                continue
            hits = []
            for o in test:
                truth = domain.destination(o)
                if hasattr(predictor, "proba") and not sampled:
                    hits.append(predictor.proba(demos, o, truth))
                else:
                    hits.append(float(predictor.predict(demos, o, guess) == truth))
            ratios.append(float(np.mean(hits)))
        rows.append((k, float(np.mean(ratios)) if ratios else float("nan"), len(ratios)))
    return rows


def expected_lookup_accuracy(k: int, n_objects: int = 12) -> float:
    if not 0 <= k <= n_objects:
        raise ValueError("k out of range")
    return (k + (n_objects - k) / 2) / n_objects
