"""Seeded noise streams, Laplace/Gaussian samplers, and tail-probability formulas.

All logarithms are natural.  Randomness is not cryptographic: streams exist
for reproducible simulation, not for deployment against adversaries with
access to the generator state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

__all__ = [
    "RngStream",
    "NoiseSpec",
    "MonteCarloEstimate",
    "ensure_generator",
    "sample_laplace",
    "sample_gaussian",
    "laplace_tail",
    "gaussian_tail_bound",
    "union_flip_bound",
    "required_constant_laplace",
    "required_constant_gaussian",
    "exceedance_probability_mc",
]

RngLike = Union["RngStream", np.random.Generator]


@dataclass(frozen=True)
class RngStream:
    """Value-style handle for a reproducible noise stream.

    The (seed, path) pair fully determines the sample sequence, so callers can
    hand out disjoint substreams (one per query, per teacher, ...) and draw
    from them in any order, on any number of workers, with identical results.
    """

    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for part in self.path:
            if part < 0 or int(part) != part:
                raise ValueError(f"stream path entries must be non-negative integers, got {part!r}")

    def substream(self, *indices: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        """Materialize a fresh generator positioned at the start of this stream."""
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.path))


def ensure_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected an RngStream or numpy Generator, got {type(rng).__name__}")


def sample_laplace(scale: float, rng: RngLike, size=None):
    """Draw from Laplace(0, scale) by inverting the CDF of a single uniform per draw."""
    b = float(scale)
    if not b > 0.0:
        raise ValueError(f"laplace scale must be positive, got {scale!r}")
    out = ensure_generator(rng).laplace(0.0, b, size)
    return float(out) if size is None else out


def sample_gaussian(sigma: float, rng: RngLike, size=None):
    """Draw from N(0, sigma^2)."""
    s = float(sigma)
    if not s > 0.0:
        raise ValueError(f"gaussian std must be positive, got {sigma!r}")
    out = s * ensure_generator(rng).standard_normal(size)
    return float(out) if size is None else out


@dataclass(frozen=True)
class NoiseSpec:
    """Which noise to add and how it is calibrated.

    ``gamma`` is the Laplace inverse-scale privacy parameter (smaller gamma
    means larger noise); the effective Laplace scale is sensitivity / gamma.
    ``sigma`` is the Gaussian std multiplier; the effective std is
    sensitivity * sigma.  Callers that want to pin the raw noise magnitude
    directly can set sensitivity = 1 and put the magnitude in 1/gamma or
    sigma.
    """

    kind: str  # "laplace" | "gaussian"
    gamma: Optional[float] = None
    sigma: Optional[float] = None
    sensitivity: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("laplace", "gaussian"):
            raise ValueError(f"noise kind must be 'laplace' or 'gaussian', got {self.kind!r}")
        if not self.sensitivity > 0.0:
            raise ValueError(f"sensitivity must be positive, got {self.sensitivity!r}")
        if self.kind == "laplace":
            if self.gamma is None or not self.gamma > 0.0:
                raise ValueError("laplace noise needs a positive gamma")
            if self.sigma is not None:
                raise ValueError("laplace noise takes gamma, not sigma")
        else:
            if self.sigma is None or not self.sigma > 0.0:
                raise ValueError("gaussian noise needs a positive sigma")
            if self.gamma is not None:
                raise ValueError("gaussian noise takes sigma, not gamma")

    @property
    def scale(self) -> float:
        """Effective noise scale: Laplace b = sensitivity/gamma, Gaussian std = sensitivity*sigma."""
        if self.kind == "laplace":
            return self.sensitivity / self.gamma
        return self.sensitivity * self.sigma

    def sample(self, rng: RngLike, size=None):
        if self.kind == "laplace":
            return sample_laplace(self.scale, rng, size)
        return sample_gaussian(self.scale, rng, size)


def laplace_tail(threshold: float, gamma: float) -> float:
    """Exact Pr(|Lap(1/gamma)| >= threshold) = e^(-gamma * threshold)."""
    c = float(threshold)
    g = float(gamma)
    if c < 0.0:
        raise ValueError(f"threshold must be non-negative, got {threshold!r}")
    if not g > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    return math.exp(-g * c)


def gaussian_tail_bound(threshold: float, sigma: float) -> float:
    """Upper bound Pr(|N(0, sigma^2)| >= threshold) <= 2 e^(-threshold^2 / (2 sigma^2)), clamped to 1."""
    c = float(threshold)
    s = float(sigma)
    if c < 0.0:
        raise ValueError(f"threshold must be non-negative, got {threshold!r}")
    if not s > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return min(1.0, 2.0 * math.exp(-(c * c) / (2.0 * s * s)))


def union_flip_bound(num_classes: int, spec: NoiseSpec, threshold: float) -> float:
    """Union bound on Pr(max_j |noise_j| >= threshold) over ``num_classes`` coordinates, clamped to 1."""
    if num_classes < 1:
        raise ValueError(f"need at least one class, got {num_classes}")
    c = float(threshold)
    if c < 0.0:
        raise ValueError(f"threshold must be non-negative, got {threshold!r}")
    if spec.kind == "laplace":
        raw = num_classes * math.exp(-c / spec.scale)
    else:
        s = spec.scale
        raw = 2.0 * num_classes * math.exp(-(c * c) / (2.0 * s * s))
    return min(1.0, raw)


def required_constant_laplace(num_classes: int, tau: float, gamma: float) -> float:
    """Smallest threshold making the Laplace union bound equal tau: (1/gamma) ln(L/tau)."""
    if num_classes < 1:
        raise ValueError(f"need at least one class, got {num_classes}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    g = float(gamma)
    if not g > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    return math.log(num_classes / tau) / g


def required_constant_gaussian(num_classes: int, tau: float, sigma: float) -> float:
    """Smallest threshold making the Gaussian union bound equal tau: sqrt(2 sigma^2 ln(2L/tau))."""
    if num_classes < 1:
        raise ValueError(f"need at least one class, got {num_classes}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    s = float(sigma)
    if not s > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return s * math.sqrt(2.0 * math.log(2.0 * num_classes / tau))


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A binomial proportion estimate with its standard error."""

    estimate: float
    standard_error: float
    hits: int
    trials: int


def _binomial_estimate(hits: int, trials: int) -> MonteCarloEstimate:
    p = hits / trials
    se = math.sqrt(p * (1.0 - p) / trials)
    return MonteCarloEstimate(estimate=p, standard_error=se, hits=hits, trials=trials)


def exceedance_probability_mc(
    spec: NoiseSpec,
    num_classes: int,
    threshold: float,
    trials: int,
    rng: RngLike,
    chunk: int = 250_000,
) -> MonteCarloEstimate:
    """Monte-Carlo estimate of Pr(max_j |noise_j| >= threshold) over ``num_classes`` coordinates."""
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if num_classes < 1:
        raise ValueError(f"need at least one class, got {num_classes}")
    gen = ensure_generator(rng)
    c = float(threshold)
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        noise = spec.sample(gen, size=(m, num_classes))
        hits += int(np.count_nonzero(np.max(np.abs(noise), axis=1) >= c))
        done += m
    return _binomial_estimate(hits, trials)
