"""Mask-level topology metrics for prediction/ground-truth pairs.

Foreground uses 8-connectivity and background 4-connectivity, the
standard complementary pair that avoids connectivity paradoxes. A hole
is a background component that cannot reach the image border.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

__all__ = [
    "TopoSummary",
    "TopoErrors",
    "AggregateReport",
    "count_components",
    "count_holes",
    "topo_summary",
    "topo_errors",
    "aggregate",
]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def _as_mask(mask: np.ndarray) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"mask must be a non-empty 2-D array, got shape {arr.shape}")
    return arr.astype(bool)


@dataclass(frozen=True)
class TopoSummary:
    """Component and hole counts of one mask."""

    components: int
    holes: int


@dataclass(frozen=True)
class TopoErrors:
    """Per-pair errors: absolute count differences and exact-match flag."""

    cce: int
    hce: int
    etm: int


@dataclass(frozen=True)
class AggregateReport:
    """Batch means; exact topology match is reported as a percentage."""

    cce: float
    hce: float
    etm_pct: float
    n: int

    def as_dict(self) -> dict:
        return {"cce": self.cce, "hce": self.hce, "etm_pct": self.etm_pct, "n": self.n}


def count_components(mask: np.ndarray) -> int:
    """Number of 8-connected foreground components (0 for an empty mask)."""
    mask = _as_mask(mask)
    _, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    return int(count)


def count_holes(mask: np.ndarray) -> int:
    """Number of interior holes.

    A hole is a 4-connected background component with no pixel on the
    image border; 4-connectivity is ndimage's default structure.
    """
    mask = _as_mask(mask)
    labels, count = ndimage.label(~mask)
    if count == 0:
        return 0
    border = np.concatenate(
        [labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]]
    )
    touching = np.unique(border[border > 0])
    return int(count - touching.size)


def topo_summary(mask: np.ndarray) -> TopoSummary:
    """Both counts for one mask."""
    return TopoSummary(components=count_components(mask), holes=count_holes(mask))


def topo_errors(pred: np.ndarray, gt: np.ndarray) -> TopoErrors:
    """Compare a predicted mask against ground truth.

    Returns absolute component and hole count differences, plus etm = 1
    iff both differences are zero.

    Raises:
        ValueError: if the mask shapes differ.
    """
    pred = _as_mask(pred)
    gt = _as_mask(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    cce = abs(count_components(pred) - count_components(gt))
    hce = abs(count_holes(pred) - count_holes(gt))
    return TopoErrors(cce=cce, hce=hce, etm=int(cce == 0 and hce == 0))


def aggregate(items: Iterable[TopoErrors | Sequence[int]]) -> AggregateReport:
    """Mean errors over a batch of per-pair results.

    Accepts :class:`TopoErrors` objects or plain (cce, hce, etm) triples.

    Raises:
        ValueError: for an empty batch.
    """
    cce_values, hce_values, etm_values = [], [], []
    for item in items:
        if isinstance(item, TopoErrors):
            cce, hce, etm = item.cce, item.hce, item.etm
        else:
            cce, hce, etm = item
        cce_values.append(cce)
        hce_values.append(hce)
        etm_values.append(etm)
    if not cce_values:
        raise ValueError("cannot aggregate an empty batch")
    n = len(cce_values)
    return AggregateReport(
        cce=float(np.mean(cce_values)),
        hce=float(np.mean(hce_values)),
        etm_pct=100.0 * float(np.mean(etm_values)),
        n=n,
    )
