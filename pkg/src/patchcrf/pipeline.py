"""End-to-end patch-sequence CRF classifier.

Training:

1. split every image into a ``grid x grid`` set of patches, order them
   along the scan path and describe each with the 32-d Gabor descriptor;
2. standardize descriptors with training-set statistics;
3. fit one diagonal GMM per class on that class's patch descriptors;
4. derive the class transition matrix from Monte-Carlo KL divergences;
5. run forward-backward on every image to get per-position class
   marginals and concatenate them class-major;
6. train a one-vs-all RBF SVM on those vectors.

All randomness flows from ``random_state`` through fixed sub-seed labels,
so results do not depend on ``n_jobs``.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import crf
from .descriptor import FeatureScaler, build_gabor_bank, describe_patches
from .exceptions import (
    DatasetTooSmall,
    DimensionMismatch,
    EmptyDataset,
    ImageTooSmall,
    PatchCRFError,
    UnknownLabel,
)
from .gmm import DiagonalGaussianMixture
from .grid_scan import GridSpec, ScanOrder, order_patches, partition_image, scan_sequence
from .imaging import LUMA, read_image, resize_bilinear
from .svm import OneVsAllRbfSVM
from .transition import DEFAULT_KL_SAMPLES, build_transition_matrix

logger = logging.getLogger(__name__)

# sub-seed labels
SEED_GMM = 1
SEED_KL = 2
SEED_SVM = 3


def sub_seed(seed, *labels) -> int:
    seed = 0 if seed is None else int(seed)
    return int(np.random.SeedSequence([seed, *labels]).generate_state(1)[0])


def as_gray(image) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 3:
        img = img @ LUMA
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {img.shape}")
    return img


def load(item) -> np.ndarray:
    """Accept an image array or a path to one."""
    if isinstance(item, (str, os.PathLike)):
        return read_image(item)
    return as_gray(item)


def _describe(item) -> str:
    return os.fspath(item) if isinstance(item, (str, os.PathLike)) else "<array>"


@dataclass
class EvalReport:
    classes: List[str]
    accuracy: float
    per_class_accuracy: List[float]
    confusion: List[List[int]]
    n_samples: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "n_samples": self.n_samples,
            "accuracy": self.accuracy,
            "classes": list(self.classes),
            "per_class_accuracy": dict(zip(self.classes, self.per_class_accuracy)),
            "confusion": self.confusion,
        }
        out.update(self.extra)
        return out


class PatchCRFClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Image classifier over CRF marginal features of ordered patches.

    ``transform`` maps images to their probabilistic feature vectors of
    length ``grid**2 * n_classes``; ``predict`` classifies them.

    Parameters
    ----------
    grid : int
        Patches per side; each image yields ``grid**2`` patches.
    order : {"zigzag", "hilbert", "rowprime", "rowraster"}
        Scan order turning the grid into a chain.
    n_components : int
        Components per class mixture.
    kl_samples : int
        Monte-Carlo samples per KL estimate.
    include_self : bool
        Whether the transition softmax normaliser includes the self term.
    svm_c, svm_gamma, svm_tol, svm_max_iter
        SVM settings; ``svm_gamma=None`` means ``1 / feature_dim``.
    gmm_max_iter, gmm_tol
        EM stopping rule.
    patch_size : int
        Side of the square raster each patch is resized to before description.
    random_state : int
        Global seed.
    n_jobs : int
        Worker threads; does not affect results.
    """

    def __init__(self, grid=3, order="zigzag", n_components=4, kl_samples=DEFAULT_KL_SAMPLES,
                 include_self=True, svm_c=10.0, svm_gamma=None, svm_tol=1e-3,
                 svm_max_iter=10_000, gmm_max_iter=200, gmm_tol=1e-6, patch_size=64,
                 random_state=0, n_jobs=1):
        self.grid = grid
        self.order = order
        self.n_components = n_components
        self.kl_samples = kl_samples
        self.include_self = include_self
        self.svm_c = svm_c
        self.svm_gamma = svm_gamma
        self.svm_tol = svm_tol
        self.svm_max_iter = svm_max_iter
        self.gmm_max_iter = gmm_max_iter
        self.gmm_tol = gmm_tol
        self.patch_size = patch_size
        self.random_state = random_state
        self.n_jobs = n_jobs

    # helpers

    def _map(self, fn, items):
        items = list(items)
        if self.n_jobs and self.n_jobs > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                return list(pool.map(fn, items))
        return [fn(it) for it in items]

    def _bank(self):
        bank = getattr(self, "_bank_cache", None)
        if bank is None or bank.patch_size != self.patch_size:
            bank = build_gabor_bank(self.patch_size)
            self._bank_cache = bank
        return bank

    def _path(self):
        grid = GridSpec.square(int(self.grid))
        return grid, scan_sequence(grid, ScanOrder.parse(self.order))

    def encode_image(self, image) -> np.ndarray:
        """Raw ``(grid**2, 32)`` descriptors of one image, in scan order."""
        grid, path = self._path()
        img = load(image)
        try:
            regions = order_patches(partition_image(img, grid), path)
        except ImageTooSmall as exc:
            raise ImageTooSmall(f"{_describe(image)}: {exc}") from exc
        size = int(self.patch_size)
        patches = np.stack([resize_bilinear(r.extract(img), size, size) for r in regions])
        return describe_patches(patches, self._bank())

    def _encode_many(self, images):
        self._bank()
        return self._map(self.encode_image, images)

    def _features_from_descriptors(self, descriptors):
        log_q = crf.log_transition(self.transition_)

        def one(desc):
            u = crf.compute_unaries(self.gmms_, self.scaler_.transform(desc))
            return crf.assemble_feature(crf.chain_marginals(u, log_q))

        return np.vstack(self._map(one, descriptors))

    # estimator API

    def fit(self, X, y):
        X = list(X)
        y = np.asarray(y)
        if len(X) != len(y):
            raise DimensionMismatch(f"{len(X)} images but {len(y)} labels")
        classes, y_idx, counts = np.unique(y, return_inverse=True, return_counts=True)
        need = max(2, int(self.n_components))
        if len(classes) < 2:
            raise DatasetTooSmall(f"need at least 2 classes, got {len(classes)}")
        small = [f"{c!r} ({k})" for c, k in zip(classes, counts) if k < need]
        if small:
            raise DatasetTooSmall(f"classes with fewer than {need} images: {', '.join(small)}")
        self.classes_ = classes
        m = len(classes)

        logger.info("describing %d training images", len(X))
        descriptors = self._encode_many(X)
        self.scaler_ = FeatureScaler().fit(np.vstack(descriptors))
        scaled = [self.scaler_.transform(d) for d in descriptors]

        def fit_class(c):
            data = np.vstack([s for s, k in zip(scaled, y_idx) if k == c])
            gmm = DiagonalGaussianMixture(
                n_components=int(self.n_components), max_iter=self.gmm_max_iter,
                tol=self.gmm_tol, random_state=sub_seed(self.random_state, SEED_GMM, c))
            try:
                return gmm.fit(data)
            except PatchCRFError as exc:
                raise type(exc)(f"class {classes[c]!r}: {exc}") from exc

        logger.info("fitting %d class mixtures", m)
        self.gmms_ = self._map(fit_class, range(m))
        logger.info("estimating transition matrix")
        self.transition_ = build_transition_matrix(
            self.gmms_, n_samples=int(self.kl_samples),
            random_state=sub_seed(self.random_state, SEED_KL),
            include_self=bool(self.include_self), n_jobs=self.n_jobs)

        logger.info("computing CRF features")
        features = self._features_from_descriptors(descriptors)
        self.train_features_ = features
        self.svm_ = OneVsAllRbfSVM(
            C=self.svm_c, gamma=self.svm_gamma, tol=self.svm_tol, max_iter=self.svm_max_iter,
            random_state=sub_seed(self.random_state, SEED_SVM))
        self.svm_.fit(features, y_idx, classes=np.arange(m))
        self.n_features_out_ = features.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "svm_")
        return self._features_from_descriptors(self._encode_many(X))

    def decision_function(self, X):
        return self.svm_.decision_function(self.transform(X))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def predict_image(self, image):
        """Return ``(class_name, decision_values)`` for a single image."""
        decisions = self.decision_function([image])[0]
        return self.classes_[int(np.argmax(decisions))], decisions

    def evaluate(self, X, y) -> EvalReport:
        X = list(X)
        y = np.asarray(y)
        if len(X) == 0:
            raise EmptyDataset("cannot evaluate on an empty dataset")
        check_is_fitted(self, "svm_")
        index = {c: i for i, c in enumerate(self.classes_)}
        unknown = sorted({str(v) for v in y if v not in index})
        if unknown:
            raise UnknownLabel(f"labels not known to the model: {', '.join(unknown)}")
        truth = np.array([index[v] for v in y])
        pred = np.argmax(self.decision_function(X), axis=1)
        m = len(self.classes_)
        confusion = np.zeros((m, m), dtype=int)
        np.add.at(confusion, (truth, pred), 1)
        support = confusion.sum(axis=1)
        per_class = [float(confusion[i, i] / support[i]) if support[i] else None
                     for i in range(m)]
        return EvalReport(
            classes=[str(c) for c in self.classes_],
            accuracy=float(np.trace(confusion) / confusion.sum()),
            per_class_accuracy=per_class,
            confusion=confusion.tolist(),
            n_samples=int(len(X)),
        )
