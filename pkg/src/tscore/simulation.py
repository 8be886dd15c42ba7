"""Monte-Carlo benchmark harness: block signals, block covariances, RMSE tables.

The data model places sparse block-wise signals in long Gaussian panels:
support blocks of ten neighboring coordinates carry a symmetric tent shape
scaled by a random peak, noise is drawn from one of three covariance
regimes (independent, short-range Toeplitz, long-range exchangeable), and
estimators are compared by the support-rescaled root mean squared error
RMSE = (1/s) sqrt(E (T_hat - T)^2).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._rng import derive_seed
from ._tsv import format_float, write_tsv
from .estimators import EstimatorKind, ZPanel, estimate_tscore, true_tscore
from .poly import ApproxConfig


@dataclass(frozen=True)
class SignalSpec:
    """Block-wise tent-shaped signal layout shared by the two mean vectors."""

    n: int
    s: int
    block_len: int = 10
    peak_low: float = 3.0
    peak_high: float = 5.0
    shared_support: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.block_len < 2 or self.block_len % 2 != 0:
            raise ValueError(f"block_len must be even and >= 2, got {self.block_len}")
        if self.s < 0 or self.s > self.n:
            raise ValueError(f"s must be in [0, n], got s={self.s}, n={self.n}")
        if self.s % self.block_len != 0:
            raise ValueError(f"s must be a multiple of block_len, got {self.s}")
        if self.n % self.block_len != 0:
            raise ValueError(f"n must be a multiple of block_len, got {self.n}")
        if self.peak_low > self.peak_high:
            raise ValueError("peak_low must not exceed peak_high")


class CovSpec(str, Enum):
    """Noise covariance regimes; values double as CLI/TSV tokens."""

    IDENTITY = "identity"
    TOEPLITZ10 = "toeplitz10"
    EXCHANGEABLE1000 = "exchangeable1000"

    @property
    def block_size(self) -> int:
        return {"identity": 1, "toeplitz10": 10, "exchangeable1000": 1000}[self.value]


def _cov_block(cov: CovSpec) -> np.ndarray:
    """The repeated covariance block for a non-identity regime."""
    if cov is CovSpec.TOEPLITZ10:
        idx = np.arange(10)
        return 1.0 - 0.1 * np.abs(np.subtract.outer(idx, idx))
    if cov is CovSpec.EXCHANGEABLE1000:
        return np.full((1000, 1000), 0.5) + 0.5 * np.eye(1000)
    raise ValueError(f"no covariance block for {cov}")


_CHOL_CACHE: dict[CovSpec, np.ndarray] = {}


def _cholesky_factor(cov: CovSpec) -> np.ndarray:
    if cov not in _CHOL_CACHE:
        block = _cov_block(cov)
        try:
            _CHOL_CACHE[cov] = np.linalg.cholesky(block)
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"covariance block for {cov.value} is not positive definite") from exc
    return _CHOL_CACHE[cov]


def tent_weights(block_len: int) -> np.ndarray:
    """Symmetric tent shape over an even-length block, peak value 1 attained twice.

    Position j (1-based) carries min(j, block_len + 1 - j) / (block_len / 2);
    for block_len = 10 this is (0.2, 0.4, 0.6, 0.8, 1, 1, 0.8, 0.6, 0.4, 0.2).
    """
    j = np.arange(1, block_len + 1)
    return np.minimum(j, block_len + 1 - j) / (block_len // 2)


def gen_means(spec: SignalSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw the pair of mean vectors for one replicate.

    s/block_len support blocks are chosen uniformly without replacement; each
    chosen block carries the tent shape scaled by a peak ~ U[peak_low,
    peak_high], drawn independently for theta and mu.  With shared_support
    the two vectors use the same blocks; otherwise blocks are chosen
    independently per vector.
    """
    n_blocks = spec.n // spec.block_len
    k = spec.s // spec.block_len
    weights = tent_weights(spec.block_len)

    def fill(blocks: np.ndarray, peaks: np.ndarray) -> np.ndarray:
        vec = np.zeros(spec.n)
        for b, peak in zip(blocks, peaks):
            start = b * spec.block_len
            vec[start : start + spec.block_len] = peak * weights
        return vec

    blocks_theta = rng.choice(n_blocks, size=k, replace=False)
    blocks_mu = blocks_theta if spec.shared_support else rng.choice(n_blocks, size=k, replace=False)
    peaks_theta = rng.uniform(spec.peak_low, spec.peak_high, size=k)
    peaks_mu = rng.uniform(spec.peak_low, spec.peak_high, size=k)
    return fill(blocks_theta, peaks_theta), fill(blocks_mu, peaks_mu)


def sample_mvn(mean: np.ndarray, cov: CovSpec, rng: np.random.Generator) -> np.ndarray:
    """One draw of N(mean, Sigma) for a block-diagonal Sigma of repeated blocks.

    Non-identity regimes use a Cholesky factor of the single repeated block,
    computed once and cached; the identity regime adds i.i.d. standard
    normals directly.
    """
    mean = np.asarray(mean, dtype=np.float64)
    n = mean.shape[0]
    if cov is CovSpec.IDENTITY:
        return mean + rng.standard_normal(n)
    size = cov.block_size
    if n % size != 0:
        raise ValueError(f"panel length {n} is not a multiple of the {cov.value} block size {size}")
    factor = _cholesky_factor(cov)
    noise = rng.standard_normal((n // size, size)) @ factor.T
    return mean + noise.ravel()


def rmse(estimates, truths, s: int) -> float:
    """Support-rescaled root mean squared error over replicates."""
    estimates = np.asarray(estimates, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if estimates.shape != truths.shape or estimates.ndim != 1:
        raise ValueError("estimates and truths must be 1-D with equal length")
    if estimates.shape[0] == 0:
        raise ValueError("need at least one replicate")
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    diff = estimates - truths
    return math.sqrt(math.fsum(diff * diff) / diff.shape[0]) / s


@dataclass(frozen=True)
class SimStudySpec:
    """One benchmark setting: signal layout, covariance, replicates, estimators."""

    signal: SignalSpec
    cov: CovSpec = CovSpec.IDENTITY
    reps: int = 100
    estimators: tuple[EstimatorKind, ...] = tuple(EstimatorKind)
    K: int = 8

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if not self.estimators:
            raise ValueError("estimator set must be nonempty")
        if self.signal.n % self.cov.block_size != 0:
            raise ValueError(
                f"n={self.signal.n} is not divisible by the {self.cov.value} block size"
            )


@dataclass(frozen=True)
class RmseTable:
    """Empirical RMSE keyed by (n, s, covariance token, estimator token)."""

    rows: dict[tuple[int, int, str, str], float]

    def __post_init__(self):
        for key, value in self.rows.items():
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"RMSE for {key} must be finite and >= 0, got {value}")

    def merged_with(self, other: "RmseTable") -> "RmseTable":
        """Union of two tables; duplicate keys must agree."""
        rows = dict(self.rows)
        for key, value in other.rows.items():
            if key in rows and rows[key] != value:
                raise ValueError(f"conflicting RMSE values for {key}")
            rows[key] = value
        return RmseTable(rows=rows)


def _replicate(spec: SimStudySpec, cfg: ApproxConfig, rep: int) -> tuple[float, dict[EstimatorKind, float]]:
    rng = np.random.default_rng([spec.signal.seed, rep])
    theta, mu = gen_means(spec.signal, rng)
    x = ZPanel(z=sample_mvn(theta, spec.cov, rng))
    y = ZPanel(z=sample_mvn(mu, spec.cov, rng))
    truth = true_tscore(theta, mu)
    split_seed = derive_seed(spec.signal.seed, rep)
    values = {
        kind: estimate_tscore(x, y, kind=kind, cfg=cfg, seed=split_seed).value
        for kind in spec.estimators
    }
    return truth, values


def run_study(spec: SimStudySpec, threads: int | None = None) -> RmseTable:
    """Run the replicated study and tabulate RMSE per estimator.

    Each replicate owns the RNG stream keyed by (seed, replicate index), so
    the table is bitwise identical for any thread count; aggregation reads
    results in replicate order.
    """
    cfg = ApproxConfig(n=spec.signal.n, K=spec.K)
    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: _replicate(spec, cfg, r), range(spec.reps)))
    else:
        results = [_replicate(spec, cfg, r) for r in range(spec.reps)]
    truths = np.array([t for t, _ in results])
    rows = {}
    for kind in spec.estimators:
        estimates = np.array([values[kind] for _, values in results])
        key = (spec.signal.n, spec.signal.s, spec.cov.value, kind.value)
        rows[key] = rmse(estimates, truths, spec.signal.s)
    return RmseTable(rows=rows)


def write_rmse_tsv(table: RmseTable, path, comments: list[str] | None = None) -> None:
    """Serialize an RmseTable to TSV, rows sorted by key."""
    rows = [
        (str(n), str(s), cov, estimator, format_float(value))
        for (n, s, cov, estimator), value in sorted(table.rows.items())
    ]
    write_tsv(path, ["n", "s", "cov", "estimator", "rmse"], rows, comments)
