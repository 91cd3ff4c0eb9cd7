"""Ensembles combining voltage correlation with power correlation.

Both combiners accept an optional ``power_campaign`` so voltage and power
data may come from campaigns of different length (e.g. a few days of
voltage against weeks of power).  Customer ids must match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .identify import PreconditionError, greedy_power_match, voltage_scores
from .model import MeasurementCampaign, Phase, PhaseAssignment


@dataclass(frozen=True)
class EnsembleConfig:
    threshold_coefficient: float = 0.2
    m: Optional[int] = None
    reference: str = "transformer"

    def __post_init__(self):
        if not math.isfinite(self.threshold_coefficient):
            raise ValueError("threshold_coefficient must be finite")

    def threshold(self, T: int) -> float:
        return self.threshold_coefficient * T


def _voltage_stage(c: MeasurementCampaign, cfg: EnsembleConfig) -> dict:
    """Best phase and score of every customer with a defined voltage correlation."""
    refs = c.transformer_voltage if cfg.reference == "transformer" else c.reference_voltage
    if refs is None:
        return {}
    idx, scores, defined = voltage_scores(c, cfg.reference)
    out = {}
    for k, i in enumerate(idx):
        if defined[k]:
            j = int(np.argmax(scores[k]))
            out[c.customer_ids[i]] = (Phase(j), float(scores[k, j]))
    return out


def _power_stage(pc: MeasurementCampaign, cfg: EnsembleConfig, subset, pre_assigned) -> dict:
    if not subset:
        return {}
    if pc.transformer_power is None or pc.power is None:
        return {}
    return {a.customer_id: a for a in greedy_power_match(pc, cfg.m, subset, pre_assigned)[0]}


def _combine(c, tag, voltage_part, power_part):
    out = []
    for cid in c.customer_ids:
        if cid in voltage_part:
            ph, score = voltage_part[cid]
            out.append(PhaseAssignment(cid, ph, score, tag, "voltage"))
        elif cid in power_part and power_part[cid].assigned:
            a = power_part[cid]
            out.append(PhaseAssignment(cid, a.predicted, a.score, tag, "power", a.flag))
        else:
            out.append(PhaseAssignment(cid, None, math.nan, tag, None, "no-data"))
    return out


def _check_ids(c, pc):
    if pc.customer_ids != c.customer_ids:
        raise PreconditionError("voltage and power campaigns list different customers")


def bagging_assign(c: MeasurementCampaign, cfg: EnsembleConfig = EnsembleConfig(),
                   power_campaign: Optional[MeasurementCampaign] = None) -> list[PhaseAssignment]:
    """Voltage correlation where voltage data exists, power correlation for the rest.

    The power stage runs on the full transformer measurement; nothing decided
    by voltage is subtracted from it.
    """
    pc = c if power_campaign is None else power_campaign
    _check_ids(c, pc)
    voltage_part = _voltage_stage(c, cfg)
    rest = [cid for cid in c.customer_ids if cid not in voltage_part]
    return _combine(c, "bagging", voltage_part, _power_stage(pc, cfg, rest, None))


def boosting_assign(c: MeasurementCampaign, cfg: EnsembleConfig = EnsembleConfig(),
                    power_campaign: Optional[MeasurementCampaign] = None) -> list[PhaseAssignment]:
    """Confident voltage assignments first, power correlation on the residual.

    A customer is decided by voltage when its best score exceeds
    ``threshold_coefficient * T`` (``T`` = voltage series length).  Those
    customers' power is subtracted from their phase in the transformer
    measurement and the remaining customers are matched greedily against the
    residual.
    """
    pc = c if power_campaign is None else power_campaign
    _check_ids(c, pc)
    thr = cfg.threshold(c.T)
    voltage_part = {cid: v for cid, v in _voltage_stage(c, cfg).items() if v[1] > thr}
    rest = [cid for cid in c.customer_ids if cid not in voltage_part]
    pre = {cid: ph for cid, (ph, _) in voltage_part.items()}
    return _combine(c, "boosting", voltage_part, _power_stage(pc, cfg, rest, pre))
