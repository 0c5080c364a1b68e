"""Save and load fitted classifiers as a versioned JSON document.

Floats are written with ``repr`` precision, so a loaded model reproduces
the fitted one's predictions bit for bit. The layout is fixed by
``model_schema.json`` in this package.
"""

from __future__ import annotations

import json
import os
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from .descriptor import N_FEATURES, FeatureScaler
from .exceptions import SchemaError, VersionMismatch
from .gmm import DiagonalGaussianMixture
from .pipeline import PatchCRFClassifier
from .svm import BinaryRbfSVM, OneVsAllRbfSVM

FORMAT = "patchcrf-model"
VERSION = 1
# runtime-only parameters that must not change the saved bytes
_UNSAVED_PARAMS = ("n_jobs",)


@lru_cache(maxsize=1)
def model_schema() -> dict:
    text = resources.files(__package__).joinpath("model_schema.json").read_text("utf-8")
    return json.loads(text)


def _config(model) -> dict:
    cfg = {k: v for k, v in model.get_params().items() if k not in _UNSAVED_PARAMS}
    cfg["order"] = str(getattr(cfg["order"], "value", cfg["order"]))
    for key in ("grid", "n_components", "kl_samples", "svm_max_iter", "gmm_max_iter",
                "patch_size"):
        cfg[key] = int(cfg[key])
    for key in ("svm_c", "svm_tol", "gmm_tol"):
        cfg[key] = float(cfg[key])
    if cfg["svm_gamma"] is not None:
        cfg["svm_gamma"] = float(cfg["svm_gamma"])
    if cfg["random_state"] is not None:
        cfg["random_state"] = int(cfg["random_state"])
    cfg["include_self"] = bool(cfg["include_self"])
    return cfg


def to_document(model: PatchCRFClassifier) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "config": _config(model),
        "classes": [str(c) for c in model.classes_],
        "scaler": {"mean": model.scaler_.mean_.tolist(), "scale": model.scaler_.scale_.tolist()},
        "gmms": [{"weights": g.weights_.tolist(), "means": g.means_.tolist(),
                  "variances": g.variances_.tolist()} for g in model.gmms_],
        "transition": np.asarray(model.transition_).tolist(),
        "svm": {"machines": [{
            "support_vectors": mach.support_vectors_.tolist(),
            "dual_coef": mach.dual_coef_.tolist(),
            "intercept": float(mach.intercept_),
            "gamma": float(mach.gamma_),
            "C": float(mach.C),
            "converged": bool(mach.converged_),
        } for mach in model.svm_.machines_]},
    }


def dumps(model: PatchCRFClassifier) -> str:
    return json.dumps(to_document(model), indent=1, allow_nan=False) + "\n"


def save_model(model: PatchCRFClassifier, destination) -> None:
    text = dumps(model)
    with open(destination, "w", encoding="utf-8") as fh:
        fh.write(text)


def _path(error) -> str:
    return "/".join(str(p) for p in error.absolute_path) or "<root>"


def _check_consistency(doc):
    m = len(doc["classes"])
    cfg = doc["config"]
    n = cfg["grid"] ** 2

    def expect(cond, where, msg):
        if not cond:
            raise SchemaError(f"{where}: {msg}")

    expect(len(doc["scaler"]["mean"]) == N_FEATURES, "scaler/mean", f"expected {N_FEATURES} values")
    expect(len(doc["scaler"]["scale"]) == N_FEATURES, "scaler/scale", f"expected {N_FEATURES} values")
    expect(len(doc["gmms"]) == m, "gmms", f"expected {m} mixtures, one per class")
    for i, g in enumerate(doc["gmms"]):
        k = len(g["weights"])
        expect(len(g["means"]) == k and len(g["variances"]) == k, f"gmms/{i}",
               "weights, means and variances disagree in component count")
        for part in ("means", "variances"):
            expect(all(len(row) == N_FEATURES for row in g[part]), f"gmms/{i}/{part}",
                   f"rows must have {N_FEATURES} values")
    expect(len(doc["transition"]) == m and all(len(r) == m for r in doc["transition"]),
           "transition", f"expected a {m}x{m} matrix")
    machines = doc["svm"]["machines"]
    expect(len(machines) == m, "svm/machines", f"expected {m} machines, one per class")
    for i, mach in enumerate(machines):
        expect(len(mach["support_vectors"]) == len(mach["dual_coef"]), f"svm/machines/{i}",
               "support_vectors and dual_coef lengths differ")
        expect(all(len(sv) == n * m for sv in mach["support_vectors"]),
               f"svm/machines/{i}/support_vectors", f"vectors must have {n * m} values")


def from_document(doc) -> PatchCRFClassifier:
    if not isinstance(doc, dict):
        raise SchemaError("<root>: model document must be a JSON object")
    if doc.get("format") != FORMAT:
        raise SchemaError(f"format: expected {FORMAT!r}, got {doc.get('format')!r}")
    version = doc.get("version")
    if not isinstance(version, int) or isinstance(version, bool):
        raise SchemaError("version: missing or not an integer")
    if version != VERSION:
        raise VersionMismatch(f"model version {version} is not supported (expected {VERSION})")
    try:
        jsonschema.validate(doc, model_schema())
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{_path(exc)}: {exc.message}") from None
    _check_consistency(doc)

    model = PatchCRFClassifier(**doc["config"])
    model.classes_ = np.array(doc["classes"])
    model.scaler_ = FeatureScaler.from_params(doc["scaler"]["mean"], doc["scaler"]["scale"])
    model.gmms_ = [DiagonalGaussianMixture.from_params(g["weights"], g["means"], g["variances"])
                   for g in doc["gmms"]]
    model.transition_ = np.array(doc["transition"], dtype=np.float64)
    m = len(model.classes_)
    dim = model.grid ** 2 * m
    svm = OneVsAllRbfSVM(C=doc["config"]["svm_c"], gamma=doc["config"]["svm_gamma"],
                         tol=doc["config"]["svm_tol"], max_iter=doc["config"]["svm_max_iter"])
    machines = []
    for mach in doc["svm"]["machines"]:
        sv = np.array(mach["support_vectors"], dtype=np.float64).reshape(-1, dim)
        machines.append(BinaryRbfSVM.from_params(sv, mach["dual_coef"], mach["intercept"],
                                                 mach["gamma"], mach["C"], mach["converged"]))
    svm.machines_ = machines
    svm.classes_ = np.arange(m)
    svm.n_features_in_ = dim
    model.svm_ = svm
    model.n_features_out_ = dim
    return model


def loads(text: str) -> PatchCRFClassifier:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"<root>: not a valid JSON document ({exc})") from None
    return from_document(doc)


def load_model(source) -> PatchCRFClassifier:
    with open(os.fspath(source), "r", encoding="utf-8") as fh:
        return loads(fh.read())
