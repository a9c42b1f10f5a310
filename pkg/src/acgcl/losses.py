"""Contrastive losses and their composition.

* inter-graph: per-node margin triplet between a subgraph's embeddings and
  its positive/negative mirror embeddings, averaged over the subgraph.
* balance: entropically regularized transport cost (log-domain Sinkhorn
  scaling, euclidean ground cost, uniform marginals) between batch embedding
  sets, summed for the positive and negative mirrors.
* intra-graph: margin triplet pushing a center node toward its own subgraph
  summary and away from a shuffled one.

The per-sample loss is ``l_intra + alpha * balance / n + beta * l_inter`` and
the training objective is the weighted sum of per-sample losses.

Sinkhorn gradients are exact for the value actually returned: the backward
pass replays the recorded scaling iterations in reverse, so finite
differences and reverse mode agree as long as the iteration count does not
change under perturbation (set ``tol=0`` to pin it at ``max_iters``).
The adaptive regularization (``reg=None`` selects 5% of the median ground
cost) is treated as a constant with respect to the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0      # balance weight
    beta: float = 1.0       # inter-graph weight
    xi: float = 1.0         # inter-graph margin
    epsilon: float = 0.1    # intra-graph margin

    def __post_init__(self):
        for name in ("alpha", "beta", "xi", "epsilon"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name}: must be >= 0")


@dataclass(frozen=True)
class SinkhornConfig:
    reg: float | None = None    # None: 0.05 * median ground cost, per call
    max_iters: int = 200
    tol: float = 1e-6           # l1 marginal violation; 0 disables early stop

    def __post_init__(self):
        if self.reg is not None and self.reg <= 0:
            raise ConfigError("sinkhorn_reg: must be positive (or auto)")
        if self.max_iters < 1:
            raise ConfigError("sinkhorn_iters: must be >= 1")
        if self.tol < 0:
            raise ConfigError("sinkhorn_tol: must be >= 0")


def inter_graph_loss(h, h_pos, h_neg, xi: float) -> ad.Tensor:
    """Mean over nodes of [|h - h+|^2 - |h - h-|^2 + xi]_+ ."""
    h, h_pos, h_neg = ad.as_tensor(h), ad.as_tensor(h_pos), ad.as_tensor(h_neg)
    if not (h.shape == h_pos.shape == h_neg.shape):
        raise ShapeError(f"embedding shapes differ: {h.shape}, {h_pos.shape}, {h_neg.shape}")
    return ad.mean_all(_triplet_hinge_rows(h, h_pos, h_neg, xi))


def inter_graph_losses_grouped(h, h_pos, h_neg, xi: float, group_size: int) -> ad.Tensor:
    """Batched variant: rows come in blocks of ``group_size`` per subgraph;
    returns one mean hinge per subgraph."""
    hinge = _triplet_hinge_rows(ad.as_tensor(h), ad.as_tensor(h_pos), ad.as_tensor(h_neg), xi)
    n = hinge.shape[0]
    if n % group_size != 0:
        raise ShapeError(f"{n} rows do not split into groups of {group_size}")
    return ad.mean_axis(ad.reshape(hinge, (n // group_size, group_size)), 1)


def _triplet_hinge_rows(h, h_pos, h_neg, xi: float) -> ad.Tensor:
    pos = ad.row_sq_norm(ad.sub(h, h_pos))
    neg = ad.row_sq_norm(ad.sub(h, h_neg))
    return ad.relu(ad.add(ad.sub(pos, neg), ad.Tensor(float(xi))))


def intra_graph_loss(h_center, summary, summary_neg, epsilon: float) -> ad.Tensor:
    """[sigmoid(h . s~) - sigmoid(h . s) + epsilon]_+ for one center node."""
    h = ad.as_tensor(h_center)
    pos = ad.sigmoid(ad.dot(h, summary))
    neg = ad.sigmoid(ad.dot(h, summary_neg))
    return ad.relu(ad.add(ad.sub(neg, pos), ad.Tensor(float(epsilon))))


def intra_graph_losses_batched(h_centers, summaries, summaries_neg, epsilon: float) -> ad.Tensor:
    """Row-wise variant over a batch: (n, d) inputs -> (n,) losses."""
    h = ad.as_tensor(h_centers)
    pos = ad.sigmoid(ad.sum_axis(ad.mul(h, summaries), 1))
    neg = ad.sigmoid(ad.sum_axis(ad.mul(h, summaries_neg), 1))
    return ad.relu(ad.add(ad.sub(neg, pos), ad.Tensor(float(epsilon))))


def _resolve_reg(cost: np.ndarray, config: SinkhornConfig) -> float:
    if config.reg is not None:
        return float(config.reg)
    scale = float(np.median(cost))
    if scale <= 0:
        scale = float(cost.mean())
    return 0.05 * scale


def sinkhorn_w1(points_a, points_b, config: SinkhornConfig | None = None) -> ad.Tensor:
    """Entropically regularized transport cost between two point sets.

    Uniform marginals, euclidean ground cost; value is the transport cost of
    the converged plan. Symmetric by construction: the two sets are put in a
    canonical order before solving, so argument order never changes the value.
    """
    config = config or SinkhornConfig()
    a = ad.as_tensor(points_a)
    b = ad.as_tensor(points_b)
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise ShapeError("point sets must be 2-d (points x dim)")
    if a.shape[0] < 1 or b.shape[0] < 1:
        raise ShapeError("point sets must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"point dimensions differ: {a.shape[1]} vs {b.shape[1]}")

    if _canonical_order_swapped(a.value, b.value):
        a, b = b, a
    cost = ad.pairwise_euclidean(a, b)
    if cost.value.max() == 0.0:
        return ad.scale(ad.sum_all(cost), 0.0)   # identical multisets: zero cost
    reg = _resolve_reg(cost.value, config)
    return _sinkhorn_cost_node(cost, reg, config.max_iters, config.tol)


def _canonical_order_swapped(a: np.ndarray, b: np.ndarray) -> bool:
    # Compared on float values (not raw bytes) so the orientation is stable
    # under infinitesimal perturbations of the inputs.
    if a.shape[0] != b.shape[0]:
        return a.shape[0] > b.shape[0]
    fa, fb = a.ravel(), b.ravel()
    differing = np.flatnonzero(fa != fb)
    if differing.size == 0:
        return False
    first = differing[0]
    return bool(fa[first] > fb[first])


_TOL_CHECK_EVERY = 10


def _sinkhorn_cost_node(cost: ad.Tensor, reg: float, max_iters: int, tol: float) -> ad.Tensor:
    m, n = cost.value.shape
    c = cost.value
    c_over = c / reg                 # shared by every update and the replay
    log_a = -np.log(m)
    log_b = -np.log(n)
    weight_a = np.full(m, 1.0 / m)

    f_hist = np.zeros((max_iters, m))
    g_hist = np.zeros((max_iters + 1, n))   # g_hist[0] is the zero start
    g = np.zeros(n)
    used = 0
    for t in range(max_iters):
        f = -reg * _logsumexp(g[None, :] / reg - c_over + log_b, axis=1)
        g = -reg * _logsumexp(f[:, None] / reg - c_over + log_a, axis=0)
        f_hist[t] = f
        g_hist[t + 1] = g
        used = t + 1
        if tol > 0 and used % _TOL_CHECK_EVERY == 0:
            plan = np.exp((f[:, None] + g[None, :]) / reg - c_over + log_a + log_b)
            if np.abs(plan.sum(axis=1) - weight_a).sum() < tol:
                break
    f, g = f_hist[used - 1], g_hist[used]
    plan = np.exp((f[:, None] + g[None, :]) / reg - c_over + log_a + log_b)
    value = float((plan * c).sum())

    def backward_fn(upstream):
        grad_c = upstream * plan * (1.0 - c_over)
        lam_f = upstream * (plan * c).sum(axis=1) / reg
        lam_g = upstream * (plan * c).sum(axis=0) / reg
        for t in range(used - 1, -1, -1):
            f_t = f_hist[t][:, None] / reg - c_over
            w = np.exp(f_t + (g_hist[t + 1] / reg + log_a)[None, :])
            lam_f = lam_f - w @ lam_g
            grad_c = grad_c + w * lam_g[None, :]
            s = np.exp(f_t + (g_hist[t] / reg + log_b)[None, :])
            grad_c = grad_c + s * lam_f[:, None]
            lam_g = -(s.T @ lam_f)
            lam_f = np.zeros(m)
        return (grad_c,)

    return ad._node(np.asarray(value), (cost,), backward_fn)


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    peak = x.max(axis=axis, keepdims=True)
    return (peak + np.log(np.exp(x - peak).sum(axis=axis, keepdims=True))).squeeze(axis)


def balance_loss(h, h_pos, h_neg, config: SinkhornConfig | None = None) -> ad.Tensor:
    """Transport cost from the original embedding set to each mirror set."""
    return ad.add(sinkhorn_w1(h, h_pos, config), sinkhorn_w1(h, h_neg, config))


@dataclass(frozen=True)
class SampleLossBreakdown:
    intra: float
    inter: float
    balance_share: float
    total: float


def per_sample_loss(l_intra, l_inter, l_balance, weights: LossWeights, n: int) -> ad.Tensor:
    """l_intra + alpha * l_balance / n + beta * l_inter for one sample."""
    if n < 1:
        raise ShapeError(f"n must be >= 1, got {n}")
    return ad.add(
        ad.as_tensor(l_intra),
        ad.add(ad.scale(ad.as_tensor(l_balance), weights.alpha / n),
               ad.scale(ad.as_tensor(l_inter), weights.beta)),
    )


def per_sample_losses_batched(l_intra_vec, l_inter_vec, l_balance, weights: LossWeights,
                              n: int) -> ad.Tensor:
    """(n,) per-sample losses from batched components and one shared balance."""
    share = ad.scale(ad.as_tensor(l_balance), weights.alpha / n)
    return ad.add(ad.add(ad.as_tensor(l_intra_vec), ad.scale(ad.as_tensor(l_inter_vec), weights.beta)), share)


def weighted_total_loss(sample_losses, weights, normalize: bool = False) -> ad.Tensor:
    """Sum of w_i * L_i. ``sample_losses`` is a (n,) tensor or a list of
    scalar tensors; ``weights`` an array-like (detached constants)."""
    values = np.asarray(getattr(weights, "values", weights), dtype=np.float64)
    if isinstance(sample_losses, (list, tuple)):
        if len(sample_losses) != values.size:
            raise ShapeError(f"{len(sample_losses)} losses vs {values.size} weights")
        total = ad.Tensor(0.0)
        for loss, w in zip(sample_losses, values):
            total = ad.add(total, ad.scale(ad.as_tensor(loss), float(w)))
    else:
        losses = ad.as_tensor(sample_losses)
        if losses.shape != values.shape:
            raise ShapeError(f"loss shape {losses.shape} vs weights {values.shape}")
        total = ad.sum_all(ad.mul(losses, ad.Tensor(values)))
    if normalize:
        active = int(np.count_nonzero(values))
        total = ad.scale(total, 1.0 / max(1, active))
    return total
