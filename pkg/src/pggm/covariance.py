"""Datasets and empirical second-moment views.

The estimators touch data only through blocks of the empirical second
moment of the joint sample (Y, X). When q exceeds the sample size the
q-by-q block is kept in factored (Gram) form so nothing of size q*q is
materialized; consumers go through xx_right_multiply / xx_quadratic_trace,
which cost O(nq) per row instead.

Moments are raw (no mean removal): the model is zero-mean. Call
Dataset.centered() first when a mean should be removed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .linalg import symmetrize

DATASET_MAGIC = b"PGGM"
MATRIX_MAGIC = b"PGMX"

COV_MODES = ("auto", "explicit", "gram")


@dataclass(frozen=True)
class Dataset:
    """Joint sample: n rows of y (n by p) alongside n rows of x (n by q)."""

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        x = np.ascontiguousarray(np.asarray(self.x, dtype=np.float64))
        if y.ndim != 2 or x.ndim != 2:
            raise ValueError("y and x must be 2-d arrays")
        if y.shape[0] != x.shape[0]:
            raise ValueError("y and x must have the same number of rows")
        if y.shape[0] < 2:
            raise ValueError("need at least 2 observations")
        if y.shape[1] < 1 or x.shape[1] < 1:
            raise ValueError("need at least one y and one x variable")
        if not (np.isfinite(y).all() and np.isfinite(x).all()):
            raise ValueError("data contains non-finite entries")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.y.shape[1]

    @property
    def q(self) -> int:
        return self.x.shape[1]

    def centered(self) -> "Dataset":
        """Copy with per-column means removed."""
        return Dataset(self.y - self.y.mean(axis=0), self.x - self.x.mean(axis=0))


@dataclass(frozen=True)
class CovarianceView:
    """Blocks of the empirical second moment (1/n) Z'Z of Z = [Y X].

    Exactly one of xx / gram_factor is set (gram_factor is the raw n-by-q
    X with xx = X'X / n implied). q = 0 views (no x block) are legal and
    make the partial objective degenerate to the plain log-det problem.
    """

    yy: np.ndarray
    yx: np.ndarray
    n: int
    xx: np.ndarray | None = None
    gram_factor: np.ndarray | None = None

    def __post_init__(self):
        if (self.xx is None) == (self.gram_factor is None):
            raise ValueError("exactly one of xx and gram_factor must be set")

    @property
    def p(self) -> int:
        return self.yy.shape[0]

    @property
    def q(self) -> int:
        return self.yx.shape[1]

    @property
    def is_gram(self) -> bool:
        return self.gram_factor is not None


def empirical_covariance(d: Dataset, mode: str = "auto") -> CovarianceView:
    """Second-moment blocks of the joint sample, without mean removal.

    mode is one of "auto", "explicit", "gram"; under "auto" the xx block
    stays in Gram form exactly when n < q.
    """
    if mode not in COV_MODES:
        raise ValueError(f"mode must be one of {COV_MODES}, got {mode!r}")
    n = d.n
    yy = symmetrize(d.y.T @ d.y / n)
    yx = d.y.T @ d.x / n
    use_gram = (mode == "gram") or (mode == "auto" and n < d.q)
    if use_gram:
        return CovarianceView(yy=yy, yx=yx, n=n, gram_factor=d.x)
    return CovarianceView(yy=yy, yx=yx, n=n, xx=symmetrize(d.x.T @ d.x / n))


def xx_right_multiply(cv: CovarianceView, m: np.ndarray) -> np.ndarray:
    """m @ xx for p-by-q m, never materializing xx in Gram form."""
    if cv.gram_factor is not None:
        f = cv.gram_factor
        return (m @ f.T) @ f / cv.n
    return m @ cv.xx


def xx_quadratic_trace(cv: CovarianceView, a: np.ndarray, b: np.ndarray) -> float:
    """tr(xx @ a' @ b) for p-by-q a and b."""
    return float(np.sum(xx_right_multiply(cv, b) * a))


def materialize_xx(cv: CovarianceView) -> np.ndarray:
    if cv.gram_factor is not None:
        f = cv.gram_factor
        return symmetrize(f.T @ f / cv.n)
    return cv.xx


def full_sigma(cv: CovarianceView) -> np.ndarray:
    """Assemble the dense (p+q) by (p+q) second-moment matrix."""
    xx = materialize_xx(cv)
    return np.block([[cv.yy, cv.yx], [cv.yx.T, xx]])


def marginal_view(cv: CovarianceView) -> CovarianceView:
    """Drop the x block: a q = 0 view over the same yy moments."""
    p = cv.p
    return CovarianceView(yy=cv.yy, yx=np.zeros((p, 0)), n=cv.n,
                          xx=np.zeros((0, 0)))


def joint_view(cv: CovarianceView) -> CovarianceView:
    """q = 0 view whose yy block is the full joint moment matrix.

    Fitting this view estimates the whole (p+q)-dim precision matrix,
    which is how the full-GGM baseline reuses the solver.
    """
    s = full_sigma(cv)
    d = s.shape[0]
    return CovarianceView(yy=s, yx=np.zeros((d, 0)), n=cv.n,
                          xx=np.zeros((0, 0)))


def read_dataset_csv(path, p: int, q: int) -> Dataset:
    """Load a CSV with one row per observation: p y-columns then q x-columns.

    A single header line is tolerated and skipped if its first field is
    not numeric.
    """
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            raise ValueError(f"{path}: empty file")
        skip = 0
        tok = first.split(",")[0].strip()
        try:
            float(tok)
        except ValueError:
            skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if data.shape[1] != p + q:
        raise ValueError(
            f"{path}: expected {p + q} columns (p={p}, q={q}), got {data.shape[1]}")
    return Dataset(y=data[:, :p], x=data[:, p:])


def write_dataset_bin(path, d: Dataset) -> None:
    """Binary layout: magic "PGGM", u32 n/p/q (little endian), then the
    row-major float64 Y block followed by the X block."""
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<III", d.n, d.p, d.q))
        fh.write(np.ascontiguousarray(d.y, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(d.x, dtype="<f8").tobytes())


def read_dataset_bin(path) -> Dataset:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DATASET_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {DATASET_MAGIC!r}")
        n, p, q = struct.unpack("<III", fh.read(12))
        body = fh.read()
    want = 8 * n * (p + q)
    if len(body) != want:
        raise ValueError(f"{path}: truncated body ({len(body)} bytes, expected {want})")
    y = np.frombuffer(body[: 8 * n * p], dtype="<f8").reshape(n, p)
    x = np.frombuffer(body[8 * n * p:], dtype="<f8").reshape(n, q)
    return Dataset(y=y.astype(np.float64), x=x.astype(np.float64))


def write_matrix_bin(path, m: np.ndarray) -> None:
    """Binary layout: magic "PGMX", u32 rows/cols, row-major float64."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a 2-d array")
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def read_matrix_bin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MATRIX_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MATRIX_MAGIC!r}")
        r, c = struct.unpack("<II", fh.read(8))
        body = fh.read()
    if len(body) != 8 * r * c:
        raise ValueError(f"{path}: truncated body")
    return np.frombuffer(body, dtype="<f8").reshape(r, c).astype(np.float64)
