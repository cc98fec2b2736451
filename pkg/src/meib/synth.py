"""Synthetic two-view benchmark data.

Class-conditional Gaussian latents are concatenated with label-independent
distractor features, pushed through a fixed nonlinearity per view, and
corrupted with Gaussian noise whose level scales with the view's magnitude.

Randomness comes from numpy's PCG64 generator: ``SeedSequence(seed)`` is
spawned into independent streams for (latents, view-1 extras, view-2
extras, view-1 noise, view-2 noise, split), so changing the noise factor
leaves the clean views untouched.
"""

from dataclasses import dataclass

import numpy as np

from meib.data_io import stratified_split
from meib.errors import ConfigError
from meib.model import MultiViewBatch


@dataclass(frozen=True)
class SynthConfig:
    s: int = 500
    latent_dim: int = 20
    extra_dim: int = 5
    noise_factor: float = 0.0
    seed: int = 0
    train_fraction: float = 0.8
    noise_is_variance: bool = True
    # Distractor group sizes are 2s/3 and s/3 rounded to the nearest integer;
    # set True to reject s that is not a multiple of 3 instead.
    require_thirds: bool = False

    def __post_init__(self):
        if self.s < 3:
            raise ConfigError(f"need at least 3 samples per class, got {self.s}")
        if self.require_thirds and self.s % 3:
            raise ConfigError(f"samples per class must be a multiple of 3, got {self.s}")
        if self.latent_dim < 1 or self.extra_dim < 1:
            raise ConfigError("latent_dim and extra_dim must be >= 1")
        if self.noise_factor < 0:
            raise ConfigError("noise_factor must be >= 0")


@dataclass
class SynthDataset:
    train: MultiViewBatch
    test: MultiViewBatch
    provenance: SynthConfig


def noise_level(clean_view, a: float) -> float:
    """``a * max|v|`` over all entries of the clean view."""
    clean_view = np.asarray(clean_view)
    if clean_view.size == 0:
        raise ConfigError("noise level of an empty view is undefined")
    return float(a * np.max(np.abs(clean_view)))


def _extras(rng, n_pos, n_total, dim):
    signs = np.r_[np.ones(n_pos), -np.ones(n_total - n_pos)]
    ext = signs[:, None] + rng.standard_normal((n_total, dim))
    # Group membership is shuffled independently of the class labels.
    return ext[rng.permutation(n_total)]


def clean_views(cfg: SynthConfig):
    """Noise-free views, latent matrix and labels (class 0 rows first)."""
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(6)]
    s, n = cfg.s, 2 * cfg.s
    means = np.r_[np.full(s, 0.5), np.full(s, -0.5)]
    z = means[:, None] + streams[0].standard_normal((n, cfg.latent_dim))
    labels = np.r_[np.zeros(s, dtype=np.int64), np.ones(s, dtype=np.int64)]
    ext1 = _extras(streams[1], round(2 * s / 3), n, cfg.extra_dim)
    ext2 = _extras(streams[2], round(s / 3), n, cfg.extra_dim)
    c1 = np.tanh(np.tanh(np.hstack([z, ext1]))) + 0.1
    c2 = 1.0 / (1.0 + np.exp(-np.hstack([z, ext2]))) - 0.5
    return [c1, c2], z, labels, streams


def generate(cfg: SynthConfig) -> SynthDataset:
    views, _, labels, streams = clean_views(cfg)
    noisy = []
    for v, rng in zip(views, streams[3:5]):
        t = noise_level(v, cfg.noise_factor)
        scale = np.sqrt(t) if cfg.noise_is_variance else t
        noise = rng.standard_normal(v.shape)
        noisy.append(v + scale * noise if t > 0 else v.copy())
    full = MultiViewBatch(noisy, labels)
    split_seed = int(streams[5].integers(2**63 - 1))
    train, test = stratified_split(full, cfg.train_fraction, split_seed)
    return SynthDataset(train, test, cfg)
