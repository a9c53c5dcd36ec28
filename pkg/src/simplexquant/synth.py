"""Synthetic labeled data with class-conditional Bernoulli features.

Feature ``j`` of a row from class ``k`` is 1 with probability
``theta[k, j]``, independently of everything else, so the distribution of
features given the class is the same in every generated file.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Dataset, ProportionVector
from .errors import ConfigError


class Profile(str, enum.Enum):
    RANDOM = "random"
    DISJOINT = "disjoint"
    IDENTICAL = "identical"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class SynthSpec:
    """Generator settings.

    ``signal`` in [0, 1] blends shared base rates (0) with independent
    per-class rates (1) under the random profile.  Under the disjoint
    profile each class owns a block of features, active with probability
    ``on_probability``; every row has at least one active feature in its
    own block and none elsewhere, so classes are separable.
    """

    n_classes: int = 3
    n_features: int = 12
    train_size: int = 300
    train_proportions: Optional[ProportionVector] = None
    pool_per_class: int = 500
    profile: Profile = Profile.RANDOM
    signal: float = 0.5
    on_probability: float = 0.5
    theta: Optional[np.ndarray] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "profile", Profile(self.profile))
        if self.n_classes < 2:
            raise ConfigError("synth needs at least 2 classes")
        if self.n_features < 1:
            raise ConfigError("synth needs at least 1 feature")
        if self.train_size < 2 * self.n_classes:
            raise ConfigError("train_size must allow at least 2 rows per class")
        if self.pool_per_class < 0:
            raise ConfigError("pool_per_class must be nonnegative")
        if not 0.0 <= self.signal <= 1.0:
            raise ConfigError("signal must lie in [0, 1]")
        if not 0.0 < self.on_probability <= 1.0:
            raise ConfigError("on_probability must lie in (0, 1]")
        if self.train_proportions is not None and len(self.train_proportions) != self.n_classes:
            raise ConfigError("train_proportions length differs from n_classes")
        if self.profile is Profile.DISJOINT and self.n_features < self.n_classes:
            raise ConfigError("the disjoint profile needs at least one feature per class")
        if self.profile is Profile.EXPLICIT:
            if self.theta is None:
                raise ConfigError("the explicit profile needs theta")
            t = np.asarray(self.theta, dtype=float)
            if t.shape != (self.n_classes, self.n_features):
                raise ConfigError(f"theta must be {self.n_classes} x {self.n_features}, got {t.shape}")
            if np.any(t < 0) or np.any(t > 1):
                raise ConfigError("theta entries must lie in [0, 1]")


def feature_rates(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    k, v = spec.n_classes, spec.n_features
    if spec.profile is Profile.EXPLICIT:
        return np.asarray(spec.theta, dtype=float)
    base = rng.uniform(0.1, 0.9, size=v)
    if spec.profile is Profile.IDENTICAL:
        return np.tile(base, (k, 1))
    if spec.profile is Profile.RANDOM:
        own = rng.uniform(0.05, 0.95, size=(k, v))
        return (1.0 - spec.signal) * base + spec.signal * own
    theta = np.zeros((k, v))
    for c, block in enumerate(np.array_split(np.arange(v), k)):
        theta[c, block] = spec.on_probability
    return theta


def _draw(spec, theta, counts, rng) -> tuple[np.ndarray, np.ndarray]:
    labels = np.repeat(np.arange(spec.n_classes), counts)
    labels = rng.permutation(labels)
    x = (rng.random((labels.size, spec.n_features)) < theta[labels]).astype(float)
    if spec.profile is Profile.DISJOINT:
        blocks = np.array_split(np.arange(spec.n_features), spec.n_classes)
        for i in np.flatnonzero(~np.any(x * (theta[labels] > 0), axis=1)):
            x[i, rng.choice(blocks[labels[i]])] = 1.0
    return x, labels


def generate(spec: SynthSpec) -> tuple[Dataset, Dataset]:
    """Return ``(training, pool)`` drawn from the same class-conditionals."""
    from .evaluation import apportion

    rng = np.random.default_rng(spec.seed)
    theta = feature_rates(spec, rng)
    names = tuple(f"c{k}" for k in range(spec.n_classes))
    props = spec.train_proportions
    if props is None:
        props = ProportionVector(np.full(spec.n_classes, 1.0 / spec.n_classes))
    train_counts = apportion(props, spec.train_size)
    if np.any(train_counts < 2):
        raise ConfigError(f"training counts {train_counts.tolist()} leave a class with fewer than 2 rows")
    xt, yt = _draw(spec, theta, train_counts, rng)
    training = Dataset(xt, yt, names, True)
    pool_counts = np.full(spec.n_classes, spec.pool_per_class)
    if spec.pool_per_class == 0:
        return training, None
    xp, yp = _draw(spec, theta, pool_counts, rng)
    return training, Dataset(xp, yp, names, True)
