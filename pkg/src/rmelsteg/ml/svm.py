"""Soft-margin kernel SVM trained with an SMO-type decomposition solver.

Working-set selection uses second-order information (the "WSS 2" rule of
Fan, Chen & Lin); the two-variable subproblem is solved analytically and
clipped to the box. Labels are 0 (cover) / 1 (stego) at the API and +-1
internally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import NotConverged, SingleClass, ValidationError
from .norm import NormStats, apply_norm, fit_norm

FORMAT_VERSION = 1
TAU = 1e-12


@dataclass(frozen=True)
class Kernel:
    name: str = "rbf"  # "linear" | "rbf"
    gamma: float | None = None  # rbf only; None -> 1/d at training time

    def __post_init__(self):
        if self.name not in ("linear", "rbf"):
            raise ValidationError(f"unknown kernel {self.name!r}")

    def resolved(self, d: int) -> "Kernel":
        if self.name == "rbf" and self.gamma is None:
            return Kernel("rbf", 1.0 / max(d, 1))
        return self

    def __call__(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        if self.name == "linear":
            return A @ B.T
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        return np.exp(-self.gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class SvmModel:
    kernel: Kernel
    C: float
    support_vectors: np.ndarray  # in normalised, masked feature space
    alphas: np.ndarray  # dual coefficients in [0, C]
    sv_labels: np.ndarray  # +-1
    bias: float
    norm: NormStats | None = None
    feature_mask: np.ndarray | None = None
    iterations: int = 0

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.norm is not None:
            X = apply_norm(X, self.norm)
        if self.feature_mask is not None:
            X = X[:, self.feature_mask]
        return X

    @property
    def n_features(self) -> int:
        if self.norm is not None:
            return self.norm.m.size
        if self.feature_mask is not None:
            return self.feature_mask.size
        return self.support_vectors.shape[1]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kernel": {"name": self.kernel.name, "gamma": self.kernel.gamma},
            "C": self.C,
            "bias": self.bias,
            "support_vectors": self.support_vectors.tolist(),
            "alphas": self.alphas.tolist(),
            "sv_labels": self.sv_labels.astype(int).tolist(),
            "norm": None if self.norm is None else self.norm.to_dict(),
            "feature_mask": None if self.feature_mask is None else self.feature_mask.astype(int).tolist(),
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValidationError(f"unsupported model format {d.get('format_version')!r}")
        mask = d.get("feature_mask")
        n_sv = len(d["alphas"])
        sv = np.asarray(d["support_vectors"], dtype=float).reshape(n_sv, -1)
        return cls(
            kernel=Kernel(d["kernel"]["name"], d["kernel"]["gamma"]),
            C=float(d["C"]),
            support_vectors=sv,
            alphas=np.asarray(d["alphas"], dtype=float),
            sv_labels=np.asarray(d["sv_labels"], dtype=float),
            bias=float(d["bias"]),
            norm=None if d.get("norm") is None else NormStats.from_dict(d["norm"]),
            feature_mask=None if mask is None else np.asarray(mask, dtype=bool),
            iterations=int(d.get("iterations", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "SvmModel":
        return cls.from_dict(json.loads(text))


def _signs(y) -> np.ndarray:
    y = np.asarray(y)
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 (cover) or 1 (stego)")
    return np.where(y == 1, 1.0, -1.0)


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
              max_iter: int = 100_000) -> tuple[np.ndarray, float, int]:
    """Solve the C-SVC dual for a precomputed kernel matrix.

    ``y`` is +-1. Returns ``(alpha, bias, iterations)``; the decision function
    is ``sum_i alpha_i y_i K(x_i, x) + bias``.
    """
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    diagQ = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while True:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        score = -y * G
        s_up = np.where(up, score, -np.inf)
        i = int(np.argmax(s_up))
        m_up = s_up[i]
        s_low = np.where(low, score, np.inf)
        if m_up - s_low.min() < tol:
            break
        if it >= max_iter:
            raise NotConverged(f"SMO did not reach tolerance {tol} in {max_iter} iterations")
        b = m_up - score
        cand = low & (b > 0)
        a = diagQ[i] + diagQ - 2.0 * y[i] * y * Q[i]
        a = np.where(a > 0, a, TAU)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))

        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(diagQ[i] + diagQ[j] + 2.0 * Q[i, j], TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = max(diagQ[i] + diagQ[j] - 2.0 * Q[i, j], TAU)
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += Q[i] * (ai - ai_old) + Q[j] * (aj - aj_old)
        it += 1

    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yG[free].mean()
    else:
        at_c = alpha >= C
        ub_set = (at_c & (y < 0)) | (~at_c & (y > 0))
        lb_set = (at_c & (y > 0)) | (~at_c & (y < 0))
        ub = yG[ub_set].min() if ub_set.any() else np.inf
        lb = yG[lb_set].max() if lb_set.any() else -np.inf
        rho = (ub + lb) / 2.0
    return alpha, float(-rho), it


def svm_train(X, y, kernel: Kernel | str = "rbf", C: float = 10.0, seed: int = 0,
              normalize: bool = True, feature_mask=None, tol: float = 1e-3,
              max_iter: int = 100_000) -> SvmModel:
    """Fit normalisation (optional) and an SVM on raw features.

    The solver has no random component; ``seed`` is accepted so that every
    training entry point takes one, and is not otherwise used.
    """
    del seed
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValidationError("X must be n x d with one label per row")
    if not np.isfinite(X).all():
        raise ValidationError("feature matrix contains non-finite values")
    ys = _signs(y)
    if np.unique(ys).size < 2:
        raise SingleClass("training set contains a single class")
    if C <= 0:
        raise ValidationError("C must be positive")
    kernel = Kernel(kernel) if isinstance(kernel, str) else kernel
    norm = fit_norm(X) if normalize else None
    Z = apply_norm(X, norm) if norm is not None else X
    mask = None
    if feature_mask is not None:
        mask = np.asarray(feature_mask, dtype=bool)
        if mask.size != X.shape[1] or not mask.any():
            raise ValidationError("feature mask must match d and select at least one feature")
        Z = Z[:, mask]
    kernel = kernel.resolved(Z.shape[1])
    alpha, bias, it = smo_solve(kernel(Z, Z), ys, C, tol, max_iter)
    sv = alpha > 0
    return SvmModel(kernel, float(C), Z[sv], alpha[sv], ys[sv], bias, norm, mask, it)


def decision_function(model: SvmModel, X) -> np.ndarray:
    Z = model.transform(X)
    if model.support_vectors.shape[0] == 0:
        return np.full(Z.shape[0], model.bias)
    return model.kernel(Z, model.support_vectors) @ (model.alphas * model.sv_labels) + model.bias


def svm_predict(model: SvmModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels (1 = stego only when the margin is strictly positive) and margins."""
    margin = decision_function(model, X)
    return (margin > 0).astype(int), margin
