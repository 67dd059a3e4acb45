"""
Gaussian graphical model evidence.

Clique marginal likelihoods with the covariance integrated out under a
hyper-Wishart prior, the likelihood ratios the samplers accept on, and the
intraclass data simulator.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from scipy import linalg
from scipy.special import multigammaln

from src.config.settings import DEFAULT_DELTA
from src.core.errors import DataError, DomainError, NumericalError, RhoOutOfRange
from src.core.graph_core import Graph, VertexSet, mcs_clique_tree
from src.core.junction_tree import JunctionTree
from src.core.perturbation import MoveProposal
from src.core.priors import CliqueSeparatorLaw, log_tree_prior
from src.utils.file_utils import read_matrix_csv

logger = logging.getLogger(__name__)

_LOG_PI = math.log(math.pi)


def log_multigamma(k: int, a: float) -> float:
    """
    log Gamma_k(a) = k(k-1)/4 log(pi) + sum_j log Gamma(a + (1 - j)/2).

    Raises:
        DomainError: if a <= (k - 1)/2
    """
    if k < 0:
        raise DomainError(f"multivariate gamma dimension must be non-negative, got {k}")
    if k == 0:
        return 0.0
    if a <= (k - 1) / 2:
        raise DomainError(f"log_multigamma needs a > {(k - 1) / 2}, got a={a} for k={k}")
    return float(multigammaln(a, k))


def _logdet(matrix: np.ndarray) -> float:
    try:
        factor, _ = linalg.cho_factor(matrix, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Cholesky factorization failed: {exc}") from exc
    return 2.0 * float(np.sum(np.log(np.diag(factor))))


class GaussianEvidence:
    """
    Sufficient statistics of zero-mean Gaussian data plus the hyper-Wishart prior.

    Args:
        n: number of observations
        scatter: p x p matrix sum_i y_i y_i^T (n times the sample covariance)
        delta: prior degrees of freedom, > 0
        scale: p x p positive definite prior scale Q (identity when omitted)

    Raises:
        DomainError: for delta <= 0
        DataError: for mismatched or non-symmetric matrices
    """

    def __init__(
        self,
        n: int,
        scatter: np.ndarray,
        delta: float = DEFAULT_DELTA,
        scale: Optional[np.ndarray] = None,
    ) -> None:
        scatter = np.asarray(scatter, dtype=float)
        if scatter.ndim != 2 or scatter.shape[0] != scatter.shape[1]:
            raise DataError(f"scatter matrix must be square, got shape {scatter.shape}")
        p = scatter.shape[0]
        q = np.eye(p) if scale is None else np.asarray(scale, dtype=float)
        if q.shape != (p, p):
            raise DataError(f"prior scale must be {p}x{p}, got {q.shape}")
        if not (np.allclose(scatter, scatter.T) and np.allclose(q, q.T)):
            raise DataError("scatter and prior scale must be symmetric")
        if delta <= 0:
            raise DomainError(f"degrees of freedom must be positive, got delta={delta}")
        if n < 0:
            raise DataError(f"sample count must be non-negative, got {n}")
        self.n = int(n)
        self.p = p
        self.delta = float(delta)
        self.scatter = scatter
        self.scale = q
        self._posterior = q + scatter
        self._cache: Dict[int, float] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_data(
        cls, data: np.ndarray, delta: float = DEFAULT_DELTA, scale: Optional[np.ndarray] = None
    ) -> "GaussianEvidence":
        """Evidence for an n x p data matrix of zero-mean observations."""
        y = np.asarray(data, dtype=float)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        if y.ndim != 2:
            raise DataError(f"data must be an n x p matrix, got {y.ndim} dimensions")
        if not np.all(np.isfinite(y)):
            raise DataError("data contains non-finite values")
        return cls(y.shape[0], y.T @ y, delta=delta, scale=scale)

    @property
    def covariance(self) -> np.ndarray:
        """The sample covariance D = scatter / n."""
        if self.n == 0:
            return np.zeros_like(self.scatter)
        return self.scatter / self.n

    def log_rho(self, clique: VertexSet) -> float:
        """
        Log marginal likelihood of the data restricted to `clique`.

        -(n|C|/2) log pi + b log|Q_C| - a log|Q_C + S_C| + log Gamma_|C|(a) - log Gamma_|C|(b)
        with b = (delta + |C| - 1)/2 and a = (delta + n + |C| - 1)/2. Zero for the
        empty set. Values are cached per vertex set.

        Raises:
            DomainError: if delta <= |C| - 1
            NumericalError: if a submatrix is not positive definite
        """
        if not clique:
            return 0.0
        cached = self._cache.get(clique.bits)
        if cached is not None:
            return cached
        idx = clique.sorted()
        if idx[-1] >= self.p:
            raise DomainError(f"clique {clique} has vertices outside 0..{self.p - 1}")
        k = len(idx)
        if self.delta <= k - 1:
            raise DomainError(
                f"delta={self.delta} must exceed |C| - 1 = {k - 1} for clique {clique}"
            )
        b = (self.delta + k - 1) / 2
        a = (self.delta + self.n + k - 1) / 2
        sub = np.ix_(idx, idx)
        value = (
            -0.5 * self.n * k * _LOG_PI
            + b * _logdet(self.scale[sub])
            - a * _logdet(self._posterior[sub])
            + log_multigamma(k, a)
            - log_multigamma(k, b)
        )
        with self._lock:
            self._cache.setdefault(clique.bits, value)
        return value


def log_likelihood_ratio(ev: GaussianEvidence, m: MoveProposal) -> float:
    """log rho(C') + log rho(C & C_adj) - log rho(C' & C_adj) - log rho(C)."""
    return (
        ev.log_rho(m.new_clique)
        + ev.log_rho(m.clique & m.anchor_clique)
        - ev.log_rho(m.new_clique & m.anchor_clique)
        - ev.log_rho(m.clique)
    )


def total_log_score(
    ev: Optional[GaussianEvidence], law: CliqueSeparatorLaw, tree: JunctionTree
) -> float:
    """
    Unnormalized log posterior of `tree`: prior plus clique evidence over
    nodes minus separator evidence over edges. Prior only when `ev` is None.
    """
    score = log_tree_prior(law, tree)
    if ev is None:
        return score
    score += sum(ev.log_rho(c) for c in tree.cliques)
    score -= sum(ev.log_rho(tree.separator(i, j)) for i, j in tree.edges())
    return score


@dataclass(frozen=True)
class IntraclassSpec:
    sigma2: float
    rho: float

    def check(self, max_clique_size: int) -> None:
        """
        Raises:
            RhoOutOfRange: if cliques of this size would not be positive definite
        """
        if self.sigma2 <= 0:
            raise RhoOutOfRange(f"variance must be positive, got {self.sigma2}")
        lower = -1.0 / (max_clique_size - 1) if max_clique_size > 1 else -math.inf
        if not lower < self.rho < 1.0:
            raise RhoOutOfRange(
                f"rho={self.rho} outside ({lower}, 1) for cliques of size {max_clique_size}"
            )


def _clique_covariance(size: int, spec: IntraclassSpec) -> np.ndarray:
    return spec.sigma2 * ((1.0 - spec.rho) * np.eye(size) + spec.rho * np.ones((size, size)))


def intraclass_precision(g: Graph, spec: IntraclassSpec) -> np.ndarray:
    """
    Precision of the completion of the intraclass covariance on `g`.

    Sums the padded inverse clique covariances and subtracts the padded
    inverse separator covariances of a junction tree of `g`; the result is
    zero off the graph.

    Raises:
        NotChordal: if `g` is not chordal
        RhoOutOfRange: if rho makes a clique covariance singular
    """
    tree = mcs_clique_tree(g)
    spec.check(max((len(c) for c in tree.cliques), default=1))
    theta = np.zeros((g.p, g.p))
    for c in tree.cliques:
        idx = c.sorted()
        theta[np.ix_(idx, idx)] += np.linalg.inv(_clique_covariance(len(idx), spec))
    for i, j in tree.edges():
        idx = tree.separator(i, j).sorted()
        if idx:
            theta[np.ix_(idx, idx)] -= np.linalg.inv(_clique_covariance(len(idx), spec))
    return (theta + theta.T) / 2


def intraclass_covariance(g: Graph, spec: IntraclassSpec) -> np.ndarray:
    """Covariance with sigma2 on the diagonal, sigma2 * rho on edges and zero precision off `g`."""
    sigma = np.linalg.inv(intraclass_precision(g, spec))
    return (sigma + sigma.T) / 2


def simulate_intraclass(
    g: Graph, spec: IntraclassSpec, n: int, rng: np.random.Generator
) -> np.ndarray:
    """
    Draw n zero-mean Gaussian vectors from the intraclass model on `g`.

    Returns:
        an n x p data matrix

    Raises:
        NotChordal: if `g` is not chordal
        RhoOutOfRange: if rho is outside the positive definite range
    """
    if g.p == 0:
        return np.zeros((n, 0))
    sigma = intraclass_covariance(g, spec)
    try:
        lower = linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"completed covariance is not positive definite: {exc}") from exc
    z = rng.standard_normal((n, g.p))
    logger.debug("Simulated %d observations on %d vertices (%d edges)", n, g.p, g.edge_count)
    return z @ lower.T


def read_data_csv(path: Union[str, Path], skip_header: bool = False) -> np.ndarray:
    """
    Read an n x p data matrix; column order defines vertex indices.

    Raises:
        DataError: if the file is missing or not a numeric matrix
    """
    data = read_matrix_csv(path, skip_header=skip_header)
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: data contains non-finite values")
    return data
