"""Gist-style Gabor energy descriptor and feature standardization.

Each patch is described by 32 numbers: the mean magnitude of its
complex response to a bank of 4 scales x 8 orientations of Gabor
filters. Filtering is same-size convolution with mirrored borders,
evaluated through the FFT.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import fft as sp_fft
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DimensionMismatch, InsufficientData, WrongPatchSize

N_SCALES = 4
N_ORIENTATIONS = 8
N_FEATURES = N_SCALES * N_ORIENTATIONS
PATCH_SIZE = 64
STD_FLOOR = 1e-8


@dataclass(frozen=True)
class GaborBank:
    """Immutable bank of ``N_SCALES * N_ORIENTATIONS`` complex kernels.

    Kernel ``j`` has scale ``j // N_ORIENTATIONS`` and orientation
    ``j % N_ORIENTATIONS``.
    """

    kernels: Tuple[np.ndarray, ...]
    wavelengths: np.ndarray
    orientations: np.ndarray
    sigmas: np.ndarray
    patch_size: int = PATCH_SIZE
    _plans: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self):
        return len(self.kernels)

    @staticmethod
    def index(scale: int, orientation: int) -> int:
        return scale * N_ORIENTATIONS + orientation

    def orientation_of(self, j: int) -> float:
        return float(self.orientations[j % N_ORIENTATIONS])

    def wavelength_of(self, j: int) -> float:
        return float(self.wavelengths[j // N_ORIENTATIONS])

    def _scale_plan(self, s: int):
        """Padding and kernel spectra shared by every orientation of scale ``s``."""
        plan = self._plans.get(s)
        if plan is None:
            ks = self.kernels[s * N_ORIENTATIONS:(s + 1) * N_ORIENTATIONS]
            half = ks[0].shape[0] // 2
            # circular convolution over >= patch + 2*half keeps the crop wrap-free
            size = sp_fft.next_fast_len(self.patch_size + 2 * half)
            spectra = np.empty((len(ks), size, size), dtype=np.complex128)
            for o, k in enumerate(ks):
                embed = np.zeros((size, size), dtype=np.complex128)
                embed[:k.shape[0], :k.shape[1]] = k
                embed = np.roll(embed, (-half, -half), axis=(0, 1))
                spectra[o] = sp_fft.fft2(embed)
            plan = (half, size, spectra)
            self._plans[s] = plan
        return plan


def build_gabor_bank(patch_size: int = PATCH_SIZE) -> GaborBank:
    """Build the fixed 4-scale, 8-orientation bank.

    Wavelengths are ``4 * 2**s`` pixels, the Gaussian envelope has
    ``sigma = 0.56 * wavelength`` with unit aspect ratio, and support is
    truncated at ``3 * sigma``. Each kernel is scaled so its envelope sums
    to one (unit gain at the carrier frequency) and then has its mean
    removed so it ignores constant images.
    """
    wavelengths = 4.0 * 2.0 ** np.arange(N_SCALES)
    orientations = np.arange(N_ORIENTATIONS) * np.pi / N_ORIENTATIONS
    sigmas = 0.56 * wavelengths
    kernels = []
    for lam, sigma in zip(wavelengths, sigmas):
        half = int(np.ceil(3.0 * sigma))
        y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
        envelope = np.exp(-(x ** 2 + y ** 2) / (2.0 * sigma ** 2))
        envelope /= envelope.sum()
        for theta in orientations:
            along = x * np.cos(theta) + y * np.sin(theta)
            k = envelope * np.exp(2j * np.pi * along / lam)
            k -= k.mean()
            k.setflags(write=False)
            kernels.append(k)
    for arr in (wavelengths, orientations, sigmas):
        arr.setflags(write=False)
    return GaborBank(tuple(kernels), wavelengths, orientations, sigmas, patch_size)


_DEFAULT_BANK = None


def default_bank() -> GaborBank:
    global _DEFAULT_BANK
    if _DEFAULT_BANK is None:
        _DEFAULT_BANK = build_gabor_bank()
    return _DEFAULT_BANK


def describe_patches(patches: np.ndarray, bank: GaborBank = None) -> np.ndarray:
    """Describe a stack of patches, shape ``(P, size, size)`` -> ``(P, 32)``."""
    bank = bank if bank is not None else default_bank()
    patches = np.asarray(patches, dtype=np.float64)
    size = bank.patch_size
    if patches.ndim != 3 or patches.shape[1:] != (size, size):
        raise WrongPatchSize(
            f"patches must be {size}x{size}, got shape {patches.shape[1:]}")
    out = np.empty((patches.shape[0], N_FEATURES))
    for s in range(N_SCALES):
        half, fft_size, spectra = bank._scale_plan(s)
        extra = fft_size - size - half
        padded = np.pad(patches, ((0, 0), (half, extra), (half, extra)), mode="symmetric")
        img_spec = sp_fft.fft2(padded)
        # inverse one axis at a time, cropping in between
        resp = sp_fft.ifft(img_spec[:, None] * spectra[None], axis=-1, overwrite_x=True)
        resp = sp_fft.ifft(resp[..., half:half + size], axis=-2, overwrite_x=True)
        crop = resp[:, :, half:half + size, :]
        out[:, s * N_ORIENTATIONS:(s + 1) * N_ORIENTATIONS] = np.abs(crop).mean(axis=(2, 3))
    return out


def describe_patch(patch: np.ndarray, bank: GaborBank = None) -> np.ndarray:
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim != 2:
        raise WrongPatchSize(f"expected a 2-D patch, got shape {patch.shape}")
    return describe_patches(patch[None], bank)[0]


class FeatureScaler(TransformerMixin, BaseEstimator):
    """Z-score standardization with population variance and a floor on std."""

    def __init__(self, std_floor=STD_FLOOR):
        self.std_floor = std_floor

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise InsufficientData("need at least 2 feature vectors to fit a scaler")
        self.mean_ = X.mean(axis=0)
        self.scale_ = np.maximum(X.std(axis=0), self.std_floor)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.mean_.shape[0]:
            raise DimensionMismatch(
                f"scaler fitted on {self.mean_.shape[0]} features, got {X.shape[1]}")
        return (X - self.mean_) / self.scale_

    @classmethod
    def from_params(cls, mean, scale, std_floor=STD_FLOOR):
        obj = cls(std_floor=std_floor)
        obj.mean_ = np.asarray(mean, dtype=np.float64)
        obj.scale_ = np.asarray(scale, dtype=np.float64)
        obj.n_features_in_ = obj.mean_.shape[0]
        return obj
