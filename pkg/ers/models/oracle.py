"""
Exact reference answers for validation.

``grid_oracle`` runs a dense forward-backward pass on a discretisation of the
model (or on its exact support when the state space is finite) and returns
per-step posterior marginals and log Z, where Z = E_q[w(X_{1:T})] is the
quantity Ẑ estimates without bias. ``enumerate_paths`` lists every path of a
small finite-state model together with its exact posterior probability.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from ..errors import ContractViolation
from ..model import FeynmanKacModel

logger = logging.getLogger(__name__)

MAX_ENUMERATED_PATHS = 100_000


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Exact posterior summaries on a per-step grid of ``resolution`` nodes.

    ``nodes[t-1]`` are the support points at time t and ``edges[t-1]`` the
    bin edges (None for finite state spaces). ``pair_marginals[t-1]`` is the
    joint law of (x_t, x_{t+1}) when requested.
    """

    nodes: np.ndarray
    edges: Optional[np.ndarray]
    marginals: np.ndarray
    log_z: float
    pair_marginals: Optional[np.ndarray] = None

    def bin_index(self, t: int, values) -> np.ndarray:
        """Map values at 1-based time t to node indices."""
        values = np.asarray(values, dtype=float)
        if self.edges is None:
            lookup = {float(v): i for i, v in enumerate(self.nodes[t - 1])}
            return np.array([lookup[float(v)] for v in values.ravel()], dtype=int).reshape(values.shape)
        inner = self.edges[t - 1][1:-1]
        return np.searchsorted(inner, values, side="right")


def _log_masses(model: FeynmanKacModel, resolution: int):
    """Support nodes per step and the log mass each node carries under q_t."""
    horizon = model.horizon
    if model.proposal_log_density is None:
        raise ContractViolation(f"model {model.name!r} has no proposal density; no oracle available")
    if model.finite_states is not None:
        nodes = np.tile(model.finite_states, (horizon, 1))
        log_q = np.stack([model.proposal_log_density(t, nodes[t - 1]) for t in range(1, horizon + 1)])
        return nodes, None, log_q
    if model.oracle_interval is None:
        raise ContractViolation(f"model {model.name!r} declares no bounded oracle window")

    nodes = np.empty((horizon, resolution))
    edges = np.empty((horizon, resolution + 1))
    log_q = np.empty((horizon, resolution))
    for t in range(1, horizon + 1):
        low, high = model.oracle_interval(t)
        edges[t - 1] = np.linspace(low, high, resolution + 1)
        nodes[t - 1] = 0.5 * (edges[t - 1][:-1] + edges[t - 1][1:])
        width = (high - low) / resolution
        with np.errstate(divide="ignore"):
            log_q[t - 1] = model.proposal_log_density(t, nodes[t - 1]) + math.log(width)
    return nodes, edges, log_q


def grid_oracle(model: FeynmanKacModel, resolution: int = 512, pairwise: bool = False) -> OracleResult:
    """Dense forward-backward pass; O(resolution² T)."""
    if resolution < 2:
        raise ContractViolation(f"oracle resolution must be >= 2, got {resolution}")
    nodes, edges, log_q = _log_masses(model, resolution)
    horizon, m = nodes.shape

    def log_kernel(t):
        x_prev, x = nodes[t - 2][:, None], nodes[t - 1][None, :]
        return model.log_transition_weight(t, x_prev, x) + log_q[t - 1][None, :]

    with np.errstate(divide="ignore", invalid="ignore"):
        log_alpha = np.empty((horizon, m))
        log_alpha[0] = model.log_initial_weight(nodes[0]) + log_q[0]
        for t in range(2, horizon + 1):
            log_alpha[t - 1] = logsumexp(log_alpha[t - 2][:, None] + log_kernel(t), axis=0)

        log_z = float(logsumexp(log_alpha[-1]))
        if not math.isfinite(log_z):
            raise ContractViolation(f"model {model.name!r} has no mass on the oracle grid")

        log_beta = np.zeros((horizon, m))
        pairs = np.empty((horizon - 1, m, m)) if pairwise else None
        for t in range(horizon - 1, 0, -1):
            kernel = log_kernel(t + 1)
            log_beta[t - 1] = logsumexp(kernel + log_beta[t][None, :], axis=1)
            if pairwise:
                pairs[t - 1] = np.exp(log_alpha[t - 1][:, None] + kernel + log_beta[t][None, :] - log_z)

        marginals = np.exp(log_alpha + log_beta - log_z)

    logger.debug(f"{model.name}: oracle log Z = {log_z:.6f} on {m} nodes")
    return OracleResult(nodes=nodes, edges=edges, marginals=marginals, log_z=log_z, pair_marginals=pairs)


def enumerate_paths(model: FeynmanKacModel):
    """All M^T paths of a finite-state model with their exact posterior probabilities.

    Returns ``(paths, probabilities, log_z)`` where paths has shape (M^T, T).
    """
    if model.finite_states is None:
        raise ContractViolation("path enumeration needs a finite state space")
    states = model.finite_states
    count = len(states) ** model.horizon
    if count > MAX_ENUMERATED_PATHS:
        raise ContractViolation(f"{count} paths exceed the enumeration limit {MAX_ENUMERATED_PATHS}")

    paths = np.array(list(itertools.product(states, repeat=model.horizon)), dtype=float)
    with np.errstate(divide="ignore"):
        log_mass = model.log_initial_weight(paths[:, 0]) + model.proposal_log_density(1, paths[:, 0])
        for t in range(2, model.horizon + 1):
            log_mass = log_mass + model.log_transition_weight(t, paths[:, t - 2], paths[:, t - 1])
            log_mass = log_mass + model.proposal_log_density(t, paths[:, t - 1])
    log_z = float(logsumexp(log_mass))
    return paths, np.exp(log_mass - log_z), log_z
