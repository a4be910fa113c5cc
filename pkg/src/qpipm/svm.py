"""SVM dual frontend: LIBSVM parsing, RBF kernel, dual QP construction,
bias recovery and prediction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Bounds, DenseHessian, QpProblem, SparseMatrix

MAX_PRECOMPUTED_SAMPLES = 20000


class SvmParseError(ValueError):
    """Malformed LIBSVM input; message carries the line number."""


class DegenerateModelError(RuntimeError):
    """No support vectors: the trained dual carries no information."""


@dataclass(frozen=True)
class SparseVector:
    """Sparse feature vector with strictly increasing 0-based indices."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    def squared_norm(self) -> float:
        return float(self.values @ self.values)

    def dot(self, other: "SparseVector") -> float:
        """Sparse dot product by merged iteration over the two index lists."""
        i = j = 0
        acc = 0.0
        si, sv = self.indices, self.values
        oi, ov = other.indices, other.values
        while i < len(si) and j < len(oi):
            if si[i] == oi[j]:
                acc += sv[i] * ov[j]
                i += 1
                j += 1
            elif si[i] < oi[j]:
                i += 1
            else:
                j += 1
        return acc

    def to_dense(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        out[self.indices] = self.values
        return out


@dataclass(frozen=True)
class SvmDataset:
    samples: list[SparseVector]
    labels: np.ndarray
    n_features: int

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.float64))

    def __len__(self):
        return len(self.samples)

    def dense_matrix(self) -> np.ndarray:
        x = np.zeros((len(self.samples), self.n_features))
        for i, s in enumerate(self.samples):
            x[i, s.indices] = s.values
        return x


@dataclass(frozen=True)
class SvmConfig:
    sigma: float
    c: float

    def __post_init__(self):
        if self.sigma <= 0 or self.c <= 0:
            raise ValueError("sigma and c must be positive")


@dataclass(frozen=True)
class SvmModel:
    alpha: np.ndarray
    bias: float
    support_indices: np.ndarray
    dataset: SvmDataset
    config: SvmConfig


def parse_libsvm(text: str | bytes) -> SvmDataset:
    """Parse the LIBSVM line format: "<label> <idx>:<val> ..." (1-based indices)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    samples: list[SparseVector] = []
    labels: list[float] = []
    n_features = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise SvmParseError(f"line {lineno}: label '{tokens[0]}' is not numeric") from None
        if label not in (1.0, -1.0):
            raise SvmParseError(f"line {lineno}: non-binary label {tokens[0]} (expected +1/-1)")
        idx: list[int] = []
        vals: list[float] = []
        prev = 0
        for tok in tokens[1:]:
            try:
                pos, val = tok.split(":", 1)
                i = int(pos)
                v = float(val)
            except ValueError:
                raise SvmParseError(f"line {lineno}: malformed feature '{tok}'") from None
            if i <= prev:
                raise SvmParseError(f"line {lineno}: feature indices not strictly increasing")
            prev = i
            idx.append(i - 1)
            vals.append(v)
        n_features = max(n_features, prev)
        samples.append(SparseVector(np.array(idx, dtype=np.int64), np.array(vals)))
        labels.append(label)
    if not samples:
        raise SvmParseError("no samples in input")
    return SvmDataset(samples=samples, labels=np.array(labels), n_features=n_features)


def rbf_kernel(xi: SparseVector, xj: SparseVector, sigma: float) -> float:
    """exp(-||xi - xj||^2 / (2 sigma))."""
    d2 = xi.squared_norm() + xj.squared_norm() - 2.0 * xi.dot(xj)
    return math.exp(-max(d2, 0.0) / (2.0 * sigma))


def _gram_matrix(data: SvmDataset, sigma: float) -> np.ndarray:
    """Dense RBF Gram matrix, exactly symmetric."""
    x = data.dense_matrix()
    sq = (x * x).sum(axis=1)
    g = x @ x.T
    g = 0.5 * (g + g.T)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * g, 0.0)
    d2 = 0.5 * (d2 + d2.T)
    return np.exp(-d2 / (2.0 * sigma))


def build_svm_dual(data: SvmDataset, cfg: SvmConfig) -> QpProblem:
    """Dual QP: min 1/2 a'Ha - a'e  s.t.  a'y = 0,  0 <= a <= c,
    with H_ij = y_i y_j K(x_i, x_j). The Gram matrix is precomputed dense."""
    n = len(data)
    if n > MAX_PRECOMPUTED_SAMPLES:
        raise ValueError(f"{n} samples exceed the dense-kernel cap {MAX_PRECOMPUTED_SAMPLES}")
    if not (np.any(data.labels > 0) and np.any(data.labels < 0)):
        raise ValueError("dataset needs at least one sample of each class")
    y = data.labels
    h = np.outer(y, y) * _gram_matrix(data, cfg.sigma)
    return QpProblem(
        n=n,
        hessian=DenseHessian(h),
        p=-np.ones(n),
        a=SparseMatrix.empty(0, n),
        lin_bounds=Bounds.free(0),
        c=SparseMatrix.from_coo(1, n, np.zeros(n, dtype=np.int64), np.arange(n), y),
        b=np.zeros(1),
        var_bounds=Bounds.box(np.zeros(n), np.full(n, cfg.c)),
    )


def _decision_values(data: SvmDataset, cfg: SvmConfig, alpha: np.ndarray) -> np.ndarray:
    """g_j = sum_i alpha_i y_i K(x_i, x_j), without the bias."""
    return _gram_matrix(data, cfg.sigma) @ (alpha * data.labels)


def extract_model(data: SvmDataset, cfg: SvmConfig, alpha: np.ndarray) -> SvmModel:
    """Recover the bias from free support vectors (or the KKT interval midpoint)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    tau = 1e-5 * cfg.c
    support = np.where(alpha > tau)[0]
    if len(support) == 0:
        raise DegenerateModelError("no support vectors (all alpha at zero)")
    g = _decision_values(data, cfg, alpha)
    y = data.labels
    free = np.where((alpha > tau) & (alpha < cfg.c - tau))[0]
    if len(free):
        bias = float(np.mean(y[free] - g[free]))
    else:
        # all support vectors at the box: bias lies in the KKT-implied interval
        upper_set = ((alpha <= tau) & (y > 0)) | ((alpha >= cfg.c - tau) & (y < 0))
        lower_set = ((alpha <= tau) & (y < 0)) | ((alpha >= cfg.c - tau) & (y > 0))
        cand = y - g
        hi = cand[upper_set].min() if np.any(upper_set) else cand.max()
        lo = cand[lower_set].max() if np.any(lower_set) else cand.min()
        bias = 0.5 * (lo + hi)
    return SvmModel(alpha=alpha, bias=bias, support_indices=support,
                    dataset=data, config=cfg)


def predict(model: SvmModel, x: SparseVector) -> tuple[float, int]:
    """Decision value and label for one sample; ties go to +1."""
    score = model.bias
    y = model.dataset.labels
    for i in model.support_indices:
        score += model.alpha[i] * y[i] * rbf_kernel(
            model.dataset.samples[i], x, model.config.sigma)
    return score, (1 if score >= 0 else -1)


def training_accuracy(model: SvmModel) -> float:
    g = _decision_values(model.dataset, model.config, model.alpha) + model.bias
    pred = np.where(g >= 0, 1.0, -1.0)
    return float(np.mean(pred == model.dataset.labels))
