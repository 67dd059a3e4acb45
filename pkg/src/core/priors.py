"""
Clique-separator factorization laws over junction trees.

A law assigns log phi to cliques and log psi to separators; the prior of a
junction tree is the sum of log phi over its nodes minus the sum of log psi
over its edge separators. Normalizing constants are never computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional

from src.config.settings import DEFAULT_ALPHA, DEFAULT_BETA, PRIOR_NAMES
from src.core.errors import ConfigError
from src.core.graph_core import VertexSet
from src.core.junction_tree import JunctionTree
from src.core.perturbation import MoveProposal, UpdateCase

LogWeight = Callable[[VertexSet], float]


def _zero(_: VertexSet) -> float:
    return 0.0


@dataclass(frozen=True)
class CliqueSeparatorLaw:
    """
    phi on cliques and psi on separators, both in log space.

    phi(empty) and psi(empty) are 1 for every law; `log_phi` and `log_psi`
    enforce that before calling the underlying weight functions.
    """

    name: str
    phi: LogWeight = field(default=_zero, compare=False, repr=False)
    psi: LogWeight = field(default=_zero, compare=False, repr=False)
    params: Mapping[str, float] = field(default_factory=dict)
    constant: bool = field(default=False, repr=False)

    @classmethod
    def uniform(cls) -> "CliqueSeparatorLaw":
        return cls(name="uniform", constant=True)

    @classmethod
    def exp_family(cls, alpha: float, beta: float) -> "CliqueSeparatorLaw":
        """phi(C) = exp(alpha (|C| - 1)), psi(S) = exp(beta |S|)."""
        return cls(
            name="expfam",
            phi=lambda c: alpha * (len(c) - 1),
            psi=lambda s: beta * len(s),
            params={"alpha": alpha, "beta": beta},
        )

    @classmethod
    def exp_family_plain(cls, alpha: float, beta: float) -> "CliqueSeparatorLaw":
        """phi(C) = exp(alpha |C|), psi(S) = exp(beta |S|)."""
        return cls(
            name="expfam-plain",
            phi=lambda c: alpha * len(c),
            psi=lambda s: beta * len(s),
            params={"alpha": alpha, "beta": beta},
        )

    @classmethod
    def custom(
        cls, log_phi: LogWeight, log_psi: LogWeight, name: str = "custom"
    ) -> "CliqueSeparatorLaw":
        return cls(name=name, phi=log_phi, psi=log_psi)

    def log_phi(self, clique: VertexSet) -> float:
        return self.phi(clique) if clique else 0.0

    def log_psi(self, separator: VertexSet) -> float:
        return self.psi(separator) if separator else 0.0

    @property
    def is_uniform(self) -> bool:
        """True only for the law built by `uniform()`, whatever the name."""
        return self.constant

    def to_dict(self) -> Dict[str, object]:
        return {"name": self.name, **{k: float(v) for k, v in sorted(self.params.items())}}


def law_from_config(
    name: str, alpha: Optional[float] = None, beta: Optional[float] = None
) -> CliqueSeparatorLaw:
    """
    Build a law from its configuration name and parameters.

    Raises:
        ConfigError: for an unknown name
    """
    a = DEFAULT_ALPHA if alpha is None else float(alpha)
    b = DEFAULT_BETA if beta is None else float(beta)
    if name == "uniform":
        return CliqueSeparatorLaw.uniform()
    if name == "expfam":
        return CliqueSeparatorLaw.exp_family(a, b)
    if name == "expfam-plain":
        return CliqueSeparatorLaw.exp_family_plain(a, b)
    raise ConfigError(f"unknown prior '{name}', expected one of {', '.join(PRIOR_NAMES)}")


def law_from_dict(data: Mapping[str, object]) -> CliqueSeparatorLaw:
    name = str(data.get("name", "uniform"))
    return law_from_config(name, data.get("alpha"), data.get("beta"))  # type: ignore[arg-type]


def log_prior_ratio(law: CliqueSeparatorLaw, m: MoveProposal) -> float:
    """log phi(C') + log psi(C & C_adj) - log psi(C' & C_adj) - log phi(C)."""
    if law.is_uniform:
        return 0.0
    anchor_clique = m.anchor_clique
    return (
        law.log_phi(m.new_clique)
        + law.log_psi(m.clique & anchor_clique)
        - law.log_psi(m.new_clique & anchor_clique)
        - law.log_phi(m.clique)
    )


def log_skeleton_prior(n: int) -> float:
    """Log of the uniform skeleton prior n^-(n-2); zero for n <= 2."""
    if n < 1:
        raise ValueError(f"skeleton needs at least one node, got {n}")
    if n <= 2:
        return 0.0
    return -(n - 2) * math.log(n)


def log_tree_prior(law: CliqueSeparatorLaw, tree: JunctionTree) -> float:
    """Sum of log phi over nodes minus sum of log psi over edge separators."""
    total = sum(law.log_phi(c) for c in tree.cliques)
    total -= sum(law.log_psi(tree.separator(i, j)) for i, j in tree.edges())
    return total


def log_non_maximal_factor(
    law: CliqueSeparatorLaw, case: UpdateCase, clique: VertexSet, new_clique: VertexSet
) -> float:
    """
    Log multiplicative contribution of non-maximal cliques to the acceptance ratio.

    Args:
        case: maximal status of the clique before and after the move
        clique: the clique before the move
        new_clique: the clique after the move

    Returns:
        0 for BOTH_MAXIMAL, log phi(C')/psi(C') for BECOMES_NON_MAXIMAL,
        log psi(C)/phi(C) for BECOMES_MAXIMAL and the sum of the last two for
        BOTH_NON_MAXIMAL
    """
    gained = law.log_phi(new_clique) - law.log_psi(new_clique)
    lost = law.log_psi(clique) - law.log_phi(clique)
    if case is UpdateCase.BOTH_MAXIMAL:
        return 0.0
    if case is UpdateCase.BECOMES_NON_MAXIMAL:
        return gained
    if case is UpdateCase.BECOMES_MAXIMAL:
        return lost
    return gained + lost
