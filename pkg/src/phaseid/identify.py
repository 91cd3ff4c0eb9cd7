"""Base phase identification algorithms.

* voltage Pearson correlation against a per-phase reference
  (transformer or three-phase customer),
* K-means clustering of voltage profiles,
* greedy power correlation on salient load changes with residual
  subtraction from the transformer measurement.

Correlation scores use the unnormalised convention ``s = T * rho``: the sum
of products of standardised deviations (population standard deviation).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import MeasurementCampaign, Phase, PhaseAssignment

log = logging.getLogger(__name__)


class PreconditionError(ValueError):
    """Input campaign lacks the data an algorithm needs."""


@dataclass(frozen=True)
class CorrelationScore:
    customer_id: str
    scores: np.ndarray  # shape (3,), NaN when undefined
    defined: bool
    T: int

    @property
    def rho(self) -> np.ndarray:
        return self.scores / self.T


def _standardize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise z-scores and a mask of columns with non-zero variance."""
    x = np.asarray(x, dtype=float)
    ok = np.ptp(x, axis=0) > 0
    dev = x - x.mean(axis=0)
    sd = np.sqrt((dev * dev).mean(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(ok, dev / np.where(ok, sd, 1.0), 0.0)
    return z, ok


def pearson_matrix(X: np.ndarray, refs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scores of every column of ``X`` (``T x n``) against ``refs`` (``T x 3``).

    Returns ``(scores, defined)`` with ``scores`` of shape ``n x 3``; rows
    whose series or any reference has zero variance are NaN and flagged
    undefined.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise ValueError("correlation needs at least two samples")
    zx, okx = _standardize(X)
    zr, okr = _standardize(refs)
    scores = zx.T @ zr
    defined = okx & okr.all()
    scores[~defined] = np.nan
    return scores, defined


def pearson_scores(series, refs, customer_id: str = "") -> CorrelationScore:
    scores, defined = pearson_matrix(np.asarray(series, dtype=float)[:, None], refs)
    return CorrelationScore(customer_id, scores[0], bool(defined[0]), len(series))


def _references(c: MeasurementCampaign, reference: str) -> np.ndarray:
    if reference == "transformer":
        refs = c.transformer_voltage
    elif reference == "customer":
        refs = c.reference_voltage
    else:
        raise ValueError(f"unknown reference {reference!r}; expected 'transformer' or 'customer'")
    if refs is None:
        raise PreconditionError(f"campaign has no {reference} reference voltage")
    return refs


def voltage_scores(c: MeasurementCampaign, reference: str = "transformer"):
    """Scores for all voltage-bearing customers: ``(indices, scores, defined)``."""
    refs = _references(c, reference)
    idx = np.flatnonzero(c.has_voltage())
    if idx.size == 0:
        return idx, np.zeros((0, 3)), np.zeros(0, dtype=bool)
    scores, defined = pearson_matrix(c.voltage[:, idx], refs)
    return idx, scores, defined


def mlv_assign(c: MeasurementCampaign, reference: str = "transformer") -> list[PhaseAssignment]:
    """Assign each voltage-bearing customer to its best-correlated reference phase.

    Customers without voltage data are omitted.  Zero-variance customers get
    phase a with score ``-T`` and the flag ``"undefined"``.
    """
    tag = "mlv-transfo" if reference == "transformer" else "mlv-customer"
    idx, scores, defined = voltage_scores(c, reference)
    out = []
    for k, i in enumerate(idx):
        cid = c.customer_ids[i]
        if not defined[k]:
            log.warning("customer %s: zero-variance voltage, correlation undefined", cid)
            out.append(PhaseAssignment(cid, Phase.a, -float(c.T), tag, "voltage", "undefined"))
            continue
        j = int(np.argmax(scores[k]))  # first maximum -> a < b < c
        out.append(PhaseAssignment(cid, Phase(j), float(scores[k, j]), tag, "voltage"))
    return out


# --- K-means -----------------------------------------------------------------


@dataclass(frozen=True)
class ClusteringResult:
    labels: np.ndarray  # cluster index per clustered customer
    centers: np.ndarray  # 3 x T
    objective: float
    iterations: int
    history: tuple  # objective after every assignment step
    customer_index: np.ndarray  # campaign column of each clustered customer


def _sq_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centers[None, :, :]
    return (diff * diff).sum(axis=2)


def _objective(D: np.ndarray, labels: np.ndarray) -> float:
    return float(D[np.arange(len(labels)), labels].sum())


def kmeans(X: np.ndarray, k: int = 3, eps: float = 1e-6, max_iter: int = 300, rng=None):
    """Lloyd's algorithm on the rows of ``X``.

    Starts from ``k`` distinct random rows.  Stops when the partition is
    stable, when the objective improves by no more than ``eps`` or after
    ``max_iter`` iterations.  The returned labels are always nearest-center
    labels for the returned centers.
    """
    rng = np.random.default_rng(rng)
    X = np.asarray(X, dtype=float)
    centers = X[rng.choice(len(X), size=k, replace=False)].copy()
    D = _sq_distances(X, centers)
    labels = D.argmin(axis=1)
    J = _objective(D, labels)
    history = [J]
    it = 0
    while it < max_iter:
        it += 1
        candidate = centers.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                candidate[j] = X[members].mean(axis=0)
        D_new = _sq_distances(X, candidate)
        # guard against floating-point ascent of the mean update
        if _objective(D_new, labels) <= J:
            centers, D = candidate, D_new
        new_labels = D.argmin(axis=1)
        J_new = _objective(D, new_labels)
        history.append(J_new)
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        improvement = J - J_new
        J = J_new
        if stable or improvement <= eps:
            break
    return labels, centers, J, it, tuple(history)


def kmeans_cluster(c: MeasurementCampaign, eps: float = 1e-6, max_iter: int = 300,
                   restarts: int = 10, seed: int = 0) -> ClusteringResult:
    idx = np.flatnonzero(c.has_voltage())
    if idx.size < 3:
        raise PreconditionError(f"K-means needs at least 3 customers with voltage data, got {idx.size}")
    X = c.voltage[:, idx].T
    best = None
    for r in range(max(1, restarts)):
        res = kmeans(X, 3, eps, max_iter, np.random.default_rng([seed, r]))
        if best is None or res[2] < best[2]:  # ties keep the lower restart index
            best = res
    labels, centers, J, it, hist = best
    return ClusteringResult(labels, centers, J, it, hist, idx)


def best_permutation(labels: Sequence[int], truth: Sequence[Phase]) -> tuple[dict, float]:
    """Cluster -> phase bijection maximising agreement with ``truth``."""
    best, best_hits = None, -1
    for perm in itertools.permutations(range(3)):
        hits = sum(perm[l] == int(t) for l, t in zip(labels, truth))
        if hits > best_hits:
            best, best_hits = perm, hits
    mapping = {k: Phase(best[k]) for k in range(3)}
    return mapping, best_hits / max(1, len(labels))


def map_clusters(result: ClusteringResult, c: MeasurementCampaign) -> tuple[Optional[dict], str]:
    """Turn cluster indices into phases.

    Returns ``(mapping, mode)`` where mode is ``"reference"`` (centers matched
    to transformer voltages by maximum total correlation over the six
    bijections), ``"best-permutation"`` (truth available, accuracy-maximising
    bijection) or ``"unmapped"`` (mapping is None).
    """
    if c.transformer_voltage is not None:
        scores, defined = pearson_matrix(result.centers.T, c.transformer_voltage)
        scores = np.where(defined[:, None], scores, -np.inf)
        best, best_total = None, -np.inf
        for perm in itertools.permutations(range(3)):
            total = sum(scores[k, perm[k]] for k in range(3))
            if total > best_total:
                best, best_total = perm, total
        if best is not None:
            return {k: Phase(best[k]) for k in range(3)}, "reference"
    if c.truth is not None:
        truth = [c.truth[c.customer_ids[i]] for i in result.customer_index]
        mapping, _ = best_permutation(result.labels, truth)
        return mapping, "best-permutation"
    return None, "unmapped"


def kmeans_assign(c: MeasurementCampaign, eps: float = 1e-6, max_iter: int = 300,
                  restarts: int = 10, seed: int = 0):
    """Cluster voltage profiles into three groups and label them with phases.

    The score of an assignment is the negative Euclidean distance to the
    cluster center.  Returns ``(result, assignments, mapping_mode)``.
    """
    result = kmeans_cluster(c, eps, max_iter, restarts, seed)
    mapping, mode = map_clusters(result, c)
    X = c.voltage[:, result.customer_index].T
    dist = np.sqrt(_sq_distances(X, result.centers)[np.arange(len(X)), result.labels])
    out = []
    for k, i in enumerate(result.customer_index):
        lab = int(result.labels[k])
        if mapping is None:
            out.append(PhaseAssignment(c.customer_ids[i], Phase(lab), -float(dist[k]), "kmeans",
                                       "voltage", "cluster-only"))
        else:
            out.append(PhaseAssignment(c.customer_ids[i], mapping[lab], -float(dist[k]), "kmeans", "voltage"))
    return result, out, mode


# --- power-based greedy correlation -----------------------------------------


@dataclass(frozen=True)
class SalientSet:
    customer_id: str
    indices: np.ndarray  # positions in the first-difference series, ascending
    sh: np.ndarray  # customer's salient changes
    sp: np.ndarray  # m x 3 transformer changes at the same positions


def default_salient_count(T: int) -> int:
    return max(10, math.ceil(0.05 * (T - 1)))


def salient_components(h, p, m: int, customer_id: str = "") -> SalientSet:
    """The ``m`` largest-magnitude first differences of ``h`` and the
    transformer differences at the same time steps.

    Ties in magnitude keep the earlier time step.
    """
    h = np.asarray(h, dtype=float)
    p = np.asarray(p, dtype=float)
    if h.shape[0] < 2:
        raise ValueError("need at least two samples")
    if m < 1:
        raise ValueError("m must be >= 1")
    dh = np.diff(h)
    order = np.argsort(-np.abs(dh), kind="stable")[:m]
    idx = np.sort(order)
    return SalientSet(customer_id, idx, dh[idx], np.diff(p, axis=0)[idx])


def mav(h) -> float:
    """Mean absolute value of a power series."""
    return float(np.mean(np.abs(np.asarray(h, dtype=float))))


def _power_score(s: SalientSet) -> tuple[np.ndarray, bool]:
    scores, defined = pearson_matrix(s.sh[:, None], s.sp)
    if defined[0]:
        return scores[0], True
    # a constant residual column is uninformative; score the others
    zx, okx = _standardize(s.sh[:, None])
    if not okx[0]:
        return np.full(3, np.nan), False
    zr, okr = _standardize(s.sp)
    sc = (zx.T @ zr)[0]
    sc[~okr] = np.nan
    return sc, bool(okr.any())


def greedy_power_match(
    c: MeasurementCampaign,
    m: Optional[int] = None,
    customer_subset: Optional[Sequence[str]] = None,
    pre_assigned: Optional[Mapping[str, Phase]] = None,
):
    """Greedy power correlation with residual subtraction.

    Customers in ``pre_assigned`` have their power removed from the
    transformer measurement before the loop.  The remaining customers (all,
    or ``customer_subset``) are processed in descending MAV order; each goes
    to the phase whose salient residual changes correlate best with its own
    and is then subtracted from that phase.

    Returns ``(assignments, residual)``; the assignments follow campaign
    order.
    """
    if c.transformer_power is None:
        raise PreconditionError("campaign has no transformer power measurement")
    if c.power is None:
        raise PreconditionError("campaign has no customer power matrix")
    residual = np.array(c.transformer_power, dtype=float)
    has_power = c.has_power()
    for cid, ph in (pre_assigned or {}).items():
        i = c.index_of(cid)
        if has_power[i]:
            residual[:, int(Phase.parse(ph))] -= c.power[:, i]
    wanted = c.customer_ids if customer_subset is None else tuple(customer_subset)
    m = default_salient_count(c.T) if m is None else m

    result = {}
    todo = []
    for cid in wanted:
        i = c.index_of(cid)
        if not has_power[i]:
            result[cid] = PhaseAssignment(cid, None, math.nan, "mlp", "power", "no-data")
        else:
            todo.append((-mav(c.power[:, i]), cid, i))
    todo.sort()
    for _, cid, i in todo:
        h = c.power[:, i]
        s = salient_components(h, residual, m, cid)
        scores, ok = _power_score(s)
        if not ok:
            log.warning("customer %s: power correlation undefined", cid)
            j = 0
            result[cid] = PhaseAssignment(cid, Phase.a, -float(len(s.sh)), "mlp", "power", "undefined")
        else:
            j = int(np.nanargmax(scores))
            result[cid] = PhaseAssignment(cid, Phase(j), float(scores[j]), "mlp", "power")
        residual[:, j] -= h
    order = [cid for cid in c.customer_ids if cid in result]
    return [result[cid] for cid in order], residual


def mlp_assign(c: MeasurementCampaign, m: Optional[int] = None,
               customer_subset: Optional[Sequence[str]] = None,
               pre_assigned: Optional[Mapping[str, Phase]] = None) -> list[PhaseAssignment]:
    return greedy_power_match(c, m, customer_subset, pre_assigned)[0]
