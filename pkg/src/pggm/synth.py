"""Synthetic ground truth and sampling.

Construction: draw a symmetric 0/1 adjacency M over all p+q variables
with independent Bernoulli(edge_prob) off-diagonals and zero diagonal,
shift it to M + sigma*I with sigma chosen so the condition number hits
the target (default p+q), then add an all-ones q-by-q matrix to the xx
block. By default the result is divided by sigma, putting the yy and
yx blocks on a unit-diagonal scale; normalize=False keeps the raw
matrix. Either way the result is the true joint precision; its inverse
is sampled by a Cholesky transform of iid standard normals.

The condition-number target applies before the all-ones densification
and is unaffected by the normalization; both achieved condition
numbers are recorded.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .covariance import Dataset, read_matrix_bin, write_matrix_bin
from .linalg import cholesky, extreme_eigenvalues, spd_inverse

MAX_REDRAWS = 50


class InfeasibleError(ValueError):
    """No shift can reach the requested condition number."""


class RetryExhaustedError(RuntimeError):
    """Seed-derived redraws kept failing to produce a usable truth."""


def stream_rng(seed, *path) -> np.random.Generator:
    """Counter-based generator keyed by (seed, path): independent,
    reproducible streams for replications and dataset splits."""
    if isinstance(seed, (tuple, list)):
        entropy = tuple(int(s) for s in seed)
    else:
        entropy = int(seed)
    ss = np.random.SeedSequence(entropy, spawn_key=tuple(int(k) for k in path))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    p: int
    q: int
    edge_prob: float = 0.1
    target_condition: float | None = None  # defaults to p + q
    seed: int = 0
    normalize: bool = True  # divide the truth by the calibration shift

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be at least 1")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must lie in [0, 1]")
        if self.target_condition is not None and self.target_condition <= 1.0:
            raise ValueError("target_condition must exceed 1")

    @property
    def condition(self) -> float:
        return float(self.target_condition if self.target_condition is not None
                     else self.p + self.q)


@dataclass(frozen=True)
class GroundTruth:
    spec: SyntheticSpec
    omega: np.ndarray  # true joint precision, (p+q) by (p+q)
    sigma: np.ndarray  # its inverse
    shift: float       # the diagonal shift added to M, before any scaling
    cond_pre: float    # condition number of M + shift*I
    cond_post: float   # condition number after the all-ones densification

    @property
    def p(self) -> int:
        return self.spec.p

    @property
    def q(self) -> int:
        return self.spec.q

    @property
    def omega_yy(self) -> np.ndarray:
        return self.omega[:self.p, :self.p]

    @property
    def omega_yx(self) -> np.ndarray:
        return self.omega[:self.p, self.p:]

    @property
    def omega_xx(self) -> np.ndarray:
        return self.omega[self.p:, self.p:]

    @property
    def sigma_yy(self) -> np.ndarray:
        return self.sigma[:self.p, :self.p]

    @property
    def sigma_yx(self) -> np.ndarray:
        return self.sigma[:self.p, self.p:]

    @property
    def sigma_xx(self) -> np.ndarray:
        return self.sigma[self.p:, self.p:]

    @property
    def support_yy(self) -> np.ndarray:
        return self.omega_yy != 0.0

    @property
    def support_yx(self) -> np.ndarray:
        return self.omega_yx != 0.0


def _draw_adjacency(rng, d, edge_prob):
    upper = rng.random((d, d)) < edge_prob
    m = np.triu(upper, k=1).astype(np.float64)
    return m + m.T


def generate_truth(sp: SyntheticSpec) -> GroundTruth:
    """Draw the true precision for a spec. Raises InfeasibleError when
    edge_prob = 0 (a pure diagonal cannot reach a condition number above
    one) and RetryExhaustedError after MAX_REDRAWS failed draws."""
    d = sp.p + sp.q
    c = sp.condition
    if sp.edge_prob == 0.0:
        raise InfeasibleError(
            "edge_prob 0 gives a diagonal truth with condition number 1")
    rng = stream_rng(sp.seed)
    for _ in range(MAX_REDRAWS):
        m = _draw_adjacency(rng, d, sp.edge_prob)
        lmin, lmax = extreme_eigenvalues(m)
        if lmax <= lmin:
            continue  # M proportional to identity (e.g. all zeros)
        # (lmax + s) / (lmin + s) = c has the unique root below, and it
        # makes M + s*I positive definite since lmin + s > 0
        shift = (lmax - c * lmin) / (c - 1.0)
        base = m + shift * np.eye(d)
        pre_lo, pre_hi = extreme_eigenvalues(base)
        omega = base.copy()
        omega[sp.p:, sp.p:] += 1.0
        f = cholesky(omega)
        if f is None:
            continue
        post_lo, post_hi = extreme_eigenvalues(omega)
        sigma = spd_inverse(f)
        if sp.normalize:
            # shift > 0 whenever M has an edge, so this is a pure
            # rescale: unit diagonal on the yy block, supports and
            # condition numbers untouched
            omega = omega / shift
            sigma = sigma * shift
        return GroundTruth(spec=sp, omega=omega, sigma=sigma, shift=shift,
                           cond_pre=pre_hi / pre_lo, cond_post=post_hi / post_lo)
    raise RetryExhaustedError(
        f"no usable truth after {MAX_REDRAWS} draws (seed {sp.seed})")


def sample_dataset(gt: GroundTruth, n: int, seed) -> Dataset:
    """n iid rows from N(0, sigma), split into the y and x blocks."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = stream_rng(seed)
    f = cholesky(gt.sigma)
    if f is None:
        raise ValueError("ground-truth covariance is not positive definite")
    g = rng.standard_normal((n, gt.p + gt.q))
    z = g @ f.lower.T
    return Dataset(y=z[:, :gt.p], x=z[:, gt.p:])


def density(mask: np.ndarray) -> float:
    return float(np.mean(mask)) if mask.size else 0.0


def save_truth(dirpath, gt: GroundTruth) -> None:
    """Write omega as a binary matrix plus a JSON sidecar with the
    generator parameters, shift, achieved condition numbers and block
    densities."""
    os.makedirs(dirpath, exist_ok=True)
    write_matrix_bin(os.path.join(dirpath, "omega_star.bin"), gt.omega)
    offdiag_yy = gt.support_yy.copy()
    np.fill_diagonal(offdiag_yy, False)
    meta = {
        "spec": asdict(gt.spec),
        "shift": gt.shift,
        "cond_pre": gt.cond_pre,
        "cond_post": gt.cond_post,
        "density_yy_offdiag": density(offdiag_yy),
        "density_yx": density(gt.support_yx),
    }
    with open(os.path.join(dirpath, "truth.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_truth(dirpath) -> GroundTruth:
    with open(os.path.join(dirpath, "truth.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    sp = SyntheticSpec(**meta["spec"])
    omega = read_matrix_bin(os.path.join(dirpath, "omega_star.bin"))
    f = cholesky(omega)
    if f is None:
        raise ValueError(f"{dirpath}: stored truth is not positive definite")
    return GroundTruth(spec=sp, omega=omega, sigma=spd_inverse(f),
                       shift=meta["shift"], cond_pre=meta["cond_pre"],
                       cond_post=meta["cond_post"])
