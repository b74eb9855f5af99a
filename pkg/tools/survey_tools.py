"""Likert-scale ingestion and per-group profiling of fitted item parameters."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from core.errors import DataValidationError, DimensionMismatch
from core.types import ItemParams

logger = logging.getLogger(__name__)

LIKERT_MIN, LIKERT_MAX = 1, 7
AGREE_FROM = 5
DISAGREE_UP_TO = 3
ABSOLUTE_CUTS = (0.4, 0.6)
QUANTILE_LEVELS = (40.0, 60.0)

ProfileMode = Literal["absolute", "quantile"]
Sign = Literal["+", "-"]


def _normalize_sign(raw: str) -> Sign:
    sign = raw.strip().replace("−", "-")
    if sign not in ("+", "-"):
        raise DataValidationError(f"Item sign must be '+' or '-', got {raw!r}")
    return sign


def _two_column_csv(path: str | Path) -> list[tuple[str, str]]:
    try:
        frame = pd.read_csv(path, header=None, dtype=str, skipinitialspace=True, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise DataValidationError(f"{path}: empty file") from e
    if frame.shape[1] != 2:
        raise DimensionMismatch(f"{path}: expected 2 columns, found {frame.shape[1]}")
    rows = [(a.strip(), b.strip()) for a, b in frame.itertuples(index=False)]
    # optional header row
    if rows and not rows[0][0].isdigit():
        rows = rows[1:]
    return rows


def _item_index(raw: str, source: str) -> int:
    if not raw.isdigit() or int(raw) < 1:
        raise DataValidationError(f"{source}: item index must be a positive integer, got {raw!r}")
    return int(raw) - 1


def read_key(path: str | Path) -> dict[int, Sign]:
    """Scoring key CSV ``item_index,sign`` (1-based items) as {0-based item: sign}."""
    key: dict[int, Sign] = {}
    for item, sign in _two_column_csv(path):
        j = _item_index(item, str(path))
        if j in key:
            raise DataValidationError(f"{path}: item {j + 1} listed twice")
        key[j] = _normalize_sign(sign)
    return key


def read_groups(path: str | Path) -> dict[int, str]:
    """Item grouping CSV ``item_index,group`` (1-based items) as {0-based item: group}."""
    groups: dict[int, str] = {}
    for item, group in _two_column_csv(path):
        j = _item_index(item, str(path))
        if j in groups:
            raise DataValidationError(f"{path}: item {j + 1} listed twice")
        groups[j] = group
    return groups


def binarize_likert(raw: np.ndarray, key: dict[int, Sign]) -> np.ndarray:
    """
    Turn 1..7 answers into binary responses.

    '+' items score 1 for 5, 6 or 7 (agreement); '-' items score 1 for
    1, 2 or 3 (disagreement). Every column needs exactly one key entry.

    Raises:
        DataValidationError: On a value outside 1..7
        DimensionMismatch: If the key does not cover the columns exactly
    """
    raw = np.asarray(raw)
    if raw.ndim != 2:
        raise DimensionMismatch(f"Raw answers must be a matrix, got {raw.ndim} dimension(s)")
    J = raw.shape[1]
    if sorted(key) != list(range(J)):
        raise DimensionMismatch(f"Key covers {len(key)} item(s) but the data has {J} column(s)")
    bad = np.argwhere((raw < LIKERT_MIN) | (raw > LIKERT_MAX))
    if bad.size:
        row, col = (int(i) for i in bad[0])
        raise DataValidationError(
            f"Answer {raw[row, col]} at row {row + 1}, column {col + 1} is outside {LIKERT_MIN}..{LIKERT_MAX}"
        )
    positive = np.array([key[j] == "+" for j in range(J)])
    binary = np.where(positive, raw >= AGREE_FROM, raw <= DISAGREE_UP_TO).astype(np.int8)
    logger.info(f"Binarized {raw.shape[0]}x{J} answers ({int(positive.sum())} positively keyed items)")
    return binary


@dataclass(frozen=True, eq=False)
class GroupProfile:
    """Per-group, per-class pooled means with their low/medium/high labels."""

    means: pd.DataFrame
    labels: pd.DataFrame
    cuts: pd.DataFrame

    def to_frame(self) -> pd.DataFrame:
        """Long format: one row per (group, class)."""
        means = self.means.reset_index().melt(id_vars="group", var_name="class", value_name="mean")
        labels = self.labels.reset_index().melt(id_vars="group", var_name="class", value_name="level")
        frame = means.merge(labels, on=["group", "class"], sort=False)
        return frame.merge(self.cuts.reset_index(), on="group", sort=False)


def _label(value: float, low: float, high: float) -> str:
    if value >= high:
        return "high"
    if value <= low:
        return "low"
    return "medium"


def profile_groups(theta: ItemParams, groups: dict[int, str], mode: ProfileMode = "absolute") -> GroupProfile:
    """
    Pool θ̂ within item groups and label each (group, class) mean.

    ``absolute`` compares the mean with 0.4 and 0.6. ``quantile`` uses the
    40th and 60th percentiles (linear interpolation) of every estimate in
    the group across all classes. A mean at or above the upper cut is high,
    at or below the lower cut low.
    """
    if mode not in ("absolute", "quantile"):
        raise DataValidationError(f"Unknown profile mode {mode!r}")
    unknown = [j + 1 for j in groups if j >= theta.n_items]
    if unknown:
        raise DimensionMismatch(f"Group file names items {unknown} beyond J={theta.n_items}")
    if not groups:
        raise DataValidationError("No item groups given")

    classes = list(range(1, theta.n_classes + 1))
    order = list(dict.fromkeys(groups.values()))
    means, labels, cuts = [], [], []
    for group in order:
        items = sorted(j for j, g in groups.items() if g == group)
        block = theta.theta[items, :]
        group_means = block.mean(axis=0)
        if mode == "absolute":
            low, high = ABSOLUTE_CUTS
        else:
            low, high = (float(q) for q in np.percentile(block, QUANTILE_LEVELS))
        means.append(group_means)
        labels.append([_label(m, low, high) for m in group_means])
        cuts.append((low, high))
        logger.debug(f"Group {group}: {len(items)} items, cuts=({low:.4f}, {high:.4f})")

    index = pd.Index(order, name="group")
    return GroupProfile(
        means=pd.DataFrame(np.array(means), index=index, columns=classes),
        labels=pd.DataFrame(labels, index=index, columns=classes),
        cuts=pd.DataFrame(cuts, index=index, columns=["low_cut", "high_cut"]),
    )
