"""Agreement, error, correlation, and reference-based metrics."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np
from scipy import stats as _scipy_stats


class StatsError(ValueError):
    """Raised for degenerate or malformed metric inputs."""


class Level(str, Enum):
    NOMINAL = "nominal"
    INTERVAL = "interval"


@dataclass(frozen=True)
class PairedRatings:
    """Two ratings per unit, e.g. the two independent annotators of a note."""
    units: tuple[tuple[Hashable, object, object], ...]
    level: Level

    def validate(self) -> None:
        if len(self.units) < 2:
            raise StatsError("paired ratings need at least 2 units")

    @property
    def a_values(self) -> list:
        return [a for _, a, _ in self.units]

    @property
    def b_values(self) -> list:
        return [b for _, _, b in self.units]


def raw_agreement(pairs: PairedRatings) -> float:
    """Percent of units on which the two ratings match exactly."""
    if pairs.level is not Level.NOMINAL:
        raise StatsError("raw agreement is defined for nominal ratings")
    if not pairs.units:
        raise StatsError("raw agreement needs at least one unit")
    matches = sum(1 for _, a, b in pairs.units if a == b)
    return 100.0 * matches / len(pairs.units)


def _nominal_delta(a, b) -> float:
    return 0.0 if a == b else 1.0


def _interval_delta(a, b) -> float:
    return (float(a) - float(b)) ** 2


def _delta_for(level: Level) -> Callable:
    return _nominal_delta if level is Level.NOMINAL else _interval_delta


def alpha_from_ratings(units: Iterable[Sequence], level: Level) -> float | None:
    """Krippendorff's alpha from raw rating lists (one list per unit).

    Builds the coincidence matrix, then alpha = 1 - D_obs/D_exp with the
    nominal (indicator) or interval (squared difference) metric.  Units
    with fewer than two ratings are dropped (pairable values only).
    Returns None when expected disagreement is zero (degenerate data).
    """
    delta = _delta_for(level)
    pairable = [list(u) for u in units if len(u) >= 2]
    values = sorted({v for u in pairable for v in u}, key=repr)
    n_pairable = sum(len(u) for u in pairable)
    if n_pairable < 2:
        return None

    index = {v: i for i, v in enumerate(values)}
    k = len(values)
    coincidence = np.zeros((k, k))
    for unit in pairable:
        m = len(unit)
        for i, a in enumerate(unit):
            for j, b in enumerate(unit):
                if i != j:
                    coincidence[index[a], index[b]] += 1.0 / (m - 1)

    margins = coincidence.sum(axis=1)
    n = margins.sum()
    dmat = np.array([[delta(a, b) for b in values] for a in values])
    d_obs = float((coincidence * dmat).sum()) / n
    d_exp = float((np.outer(margins, margins) * dmat).sum()) / (n * (n - 1))
    if d_exp == 0.0:
        return None
    return 1.0 - d_obs / d_exp


def krippendorff_alpha(pairs: PairedRatings) -> float | None:
    """Alpha over two-rater paired data; None when degenerate (all ratings
    identical everywhere, so chance disagreement is zero)."""
    pairs.validate()
    return alpha_from_ratings([[a, b] for _, a, b in pairs.units],
                              pairs.level)


def fleiss_kappa(table: Sequence[Sequence[int]]) -> float | None:
    """Fleiss' kappa over an n_units x k_categories count matrix with a
    constant number of raters per unit.  None when a single category soaks
    up every rating (chance agreement is 1)."""
    counts = np.asarray(table, dtype=float)
    if counts.ndim != 2 or counts.shape[0] < 1 or counts.shape[1] < 2:
        raise StatsError("rating table must be n_units x k_categories, k >= 2")
    raters = counts.sum(axis=1)
    n_raters = raters[0]
    if n_raters < 2 or not np.all(raters == n_raters):
        raise StatsError("every unit needs the same number (>= 2) of raters")

    p_unit = ((counts * (counts - 1)).sum(axis=1)
              / (n_raters * (n_raters - 1)))
    p_bar = float(p_unit.mean())
    shares = counts.sum(axis=0) / counts.sum()
    p_exp = float((shares ** 2).sum())
    if p_exp == 1.0:
        return None
    return (p_bar - p_exp) / (1.0 - p_exp)


def mse(pairs: PairedRatings) -> float:
    """Mean squared error between the two ratings."""
    if pairs.level is not Level.INTERVAL:
        raise StatsError("MSE is defined for interval ratings")
    if not pairs.units:
        raise StatsError("MSE needs at least one unit")
    return float(np.mean([(float(a) - float(b)) ** 2
                          for _, a, b in pairs.units]))


class CorrelationMethod(str, Enum):
    PEARSON = "pearson"
    SPEARMAN = "spearman"


def correlation(x: Sequence[float], y: Sequence[float],
                method: CorrelationMethod | str = CorrelationMethod.PEARSON,
                ) -> float:
    """Pearson or Spearman (average ranks for ties) coefficient."""
    method = CorrelationMethod(method)
    if len(x) != len(y):
        raise StatsError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise StatsError("correlation needs at least 3 points")
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if method is CorrelationMethod.PEARSON:
        if np.ptp(xs) == 0 or np.ptp(ys) == 0:
            raise StatsError("zero variance input")
        return float(_scipy_stats.pearsonr(xs, ys).statistic)
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        raise StatsError("zero variance input")
    return float(_scipy_stats.spearmanr(xs, ys).statistic)


# ---------------------------------------------------------------------------
# ROUGE
# ---------------------------------------------------------------------------

class RougeVariant(str, Enum):
    R1 = "r1"
    R2 = "r2"
    RL = "rl"


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens; no stemming, no stopword removal."""
    return _TOKEN_RE.findall(text.lower())


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for tok in a:
        row = [0]
        for j, other in enumerate(b, start=1):
            if tok == other:
                row.append(prev[j - 1] + 1)
            else:
                row.append(max(prev[j], row[j - 1]))
        prev = row
    return prev[-1]


def _prf(matches: float, n_candidate: float, n_reference: float) -> RougeScore:
    precision = matches / n_candidate if n_candidate else 0.0
    recall = matches / n_reference if n_reference else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return RougeScore(precision, recall, f1)


def rouge(candidate: str, reference: str,
          variant: RougeVariant | str = RougeVariant.R1) -> RougeScore:
    """Unigram/bigram overlap (clipped) or LCS-based F-measure."""
    if not isinstance(variant, RougeVariant):
        variant = RougeVariant(str(variant).lower())
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if variant is RougeVariant.RL:
        return _prf(_lcs_length(cand, ref), len(cand), len(ref))
    n = 1 if variant is RougeVariant.R1 else 2
    cand_grams = _ngrams(cand, n)
    ref_grams = _ngrams(ref, n)
    matches = sum((cand_grams & ref_grams).values())
    return _prf(matches, sum(cand_grams.values()), sum(ref_grams.values()))
