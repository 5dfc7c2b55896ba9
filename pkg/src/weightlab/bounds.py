"""Importance-weighted margin bound and the densities that feed it.

The bound on target error decomposes into three terms:

    total = (I) weighted margin-violation rate
          + (II) L * sqrt(D + 1) / (gamma * q^((q-1)/2) * sqrt(n))
          + (III) sqrt(ln(log2(4L/gamma)) / n) + sqrt(ln(1/delta) / n)

where D is a Pearson-style chi-square divergence between the target density
and the reweighted source density. Densities are discrete at class-cell
granularity: for synthetic mixtures the class priors are known exactly and
per-sample weights aggregate to their class mean.

Two divergence conventions exist because the displayed formula differs from
the textbook Pearson chi-square; both are implemented (``paper`` is the
default) and every report records which one produced it. The iterated
logarithm in (III) is natural-log-outside, base-2-inside ("ln∘log2").
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from . import SCHEMA_VERSION
from .datagen import Dataset
from .errors import SpecificationError, SupportMismatchError
from .models import ModelParams, margin
from .serialization import read_json, write_json

Convention = Literal["paper", "standard"]
LOG_CONVENTION = "ln∘log2"


@dataclass(frozen=True)
class DiscreteDensityPair:
    """Target density, source density, and cell weights over shared cells.

    ``p_tilde_s`` is the reweighted source density, proportional to w * p_s
    and normalized to sum 1. ``clean_target`` records that the target assigns
    no mass to corrupted samples (their per-sample density ratio is zero).
    """

    labels: tuple[int, ...]
    p_t: np.ndarray
    p_s: np.ndarray
    w: np.ndarray
    clean_target: bool = False

    def __post_init__(self):
        labels = tuple(int(c) for c in self.labels)
        p_t = np.asarray(self.p_t, dtype=np.float64)
        p_s = np.asarray(self.p_s, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        k = len(labels)
        if k < 1 or p_t.shape != (k,) or p_s.shape != (k,) or w.shape != (k,):
            raise SpecificationError("density pair arrays must share one length >= 1")
        for name, p in (("p_t", p_t), ("p_s", p_s)):
            if np.any(p < 0) or not np.all(np.isfinite(p)):
                raise SpecificationError(f"{name} must be finite and nonnegative")
            if abs(p.sum() - 1.0) > 1e-12:
                raise SpecificationError(f"{name} must sum to 1 within 1e-12")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise SpecificationError("cell weights must be finite and positive")
        for name, arr in (("p_t", p_t), ("p_s", p_s), ("w", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "labels", labels)

    @property
    def p_tilde_s(self) -> np.ndarray:
        raw = self.w * self.p_s
        return raw / raw.sum()

    def cell_index(self) -> dict[int, int]:
        return {c: i for i, c in enumerate(self.labels)}


def class_density_pair(
    ds: Dataset,
    sample_weights: np.ndarray,
    target: Literal["source", "uniform"] = "source",
    clean_target: bool = False,
) -> DiscreteDensityPair:
    """Build the class-cell density pair for a dataset and its sample weights.

    p_s = empirical class frequencies; p_t = the same frequencies ("source"
    target) or uniform over classes; with ``clean_target`` the target mass of
    each class is proportional to its count of *non-flagged* samples (a class
    with no clean samples keeps p_t = 0, which the paper-convention divergence
    will reject as a support mismatch).
    """
    w = np.asarray(sample_weights, dtype=np.float64)
    if w.shape != (ds.n,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise SpecificationError("need one positive finite weight per sample")
    cells = sorted(int(c) for c in np.unique(ds.class_of))
    counts = np.array([np.sum(ds.class_of == c) for c in cells], dtype=np.float64)
    p_s = counts / counts.sum()
    if clean_target:
        clean_counts = np.array(
            [np.sum((ds.class_of == c) & ~ds.noise_flag) for c in cells], dtype=np.float64
        )
        if clean_counts.sum() == 0:
            raise SpecificationError("clean target needs at least one clean sample")
        p_t = clean_counts / clean_counts.sum()
    elif target == "uniform":
        p_t = np.full(len(cells), 1.0 / len(cells))
    else:
        p_t = p_s.copy()
    cell_w = np.array([w[ds.class_of == c].mean() for c in cells])
    return DiscreteDensityPair(
        labels=tuple(cells), p_t=p_t, p_s=p_s, w=cell_w, clean_target=clean_target
    )


def sample_ratios(pair: DiscreteDensityPair, ds: Dataset) -> np.ndarray:
    """Per-sample density ratio p_t/p_tilde_s via each sample's class cell.

    Under a clean target, corrupted samples carry ratio 0: they are absent
    from the target, so they drop out of the weighted violation term.
    """
    index = pair.cell_index()
    p_tilde = pair.p_tilde_s
    missing = [int(c) for c in np.unique(ds.class_of) if int(c) not in index]
    if missing:
        raise SupportMismatchError(f"dataset classes {missing} missing from the density pair")
    cell_of = np.array([index[int(c)] for c in ds.class_of])
    ratios = pair.p_t[cell_of] / p_tilde[cell_of]
    if pair.clean_target:
        ratios = np.where(ds.noise_flag, 0.0, ratios)
    return ratios


def chi2_divergence(pair: DiscreteDensityPair, convention: Convention = "paper") -> float:
    """Chi-square divergence between p_t and the reweighted source p_tilde_s.

    ``paper``: sum_x p_tilde_s [(p_tilde_s/p_t)^2 - 1] (as displayed; can be
    marginally negative only through rounding). ``standard``: the Pearson
    divergence sum_x p_t^2/p_tilde_s - 1, always >= 0.
    """
    p_t = pair.p_t
    p_tilde = pair.p_tilde_s
    if convention == "paper":
        live = p_tilde > 0  # cells with p_tilde_s = 0 contribute exactly 0
        if np.any(live & (p_t == 0.0)):
            raise SupportMismatchError("paper convention needs p_t > 0 wherever p_tilde_s > 0")
        return float(np.sum(p_tilde[live] * ((p_tilde[live] / p_t[live]) ** 2 - 1.0)))
    if convention == "standard":
        live = p_t > 0
        if np.any(live & (p_tilde == 0.0)):
            raise SupportMismatchError("standard convention needs p_tilde_s > 0 wherever p_t > 0")
        return float(np.sum(p_t[live] ** 2 / p_tilde[live]) - 1.0)
    raise SpecificationError(f"unknown divergence convention {convention!r}")


@dataclass(frozen=True)
class BoundInputs:
    gamma: float
    delta: float
    q: int
    L: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise SpecificationError("margin threshold gamma must be positive")
        if not (0.0 < self.delta < 1.0):
            raise SpecificationError("confidence delta must lie strictly in (0, 1)")
        if int(self.q) != self.q or self.q < 2:
            raise SpecificationError("depth q must be an integer >= 2")
        object.__setattr__(self, "q", int(self.q))
        if not (np.isfinite(self.L) and self.L > 0):
            raise SpecificationError("input bound L must be positive")
        if self.n < 1:
            raise SpecificationError("sample count must be >= 1")
        if 4.0 * self.L / self.gamma <= 2.0:
            raise SpecificationError(
                "need 4L/gamma > 2 so the iterated logarithm is defined"
            )


def epsilon_term(inputs: BoundInputs) -> float:
    """sqrt(ln(log2(4L/gamma))/n) + sqrt(ln(1/delta)/n)."""
    inner = np.log2(4.0 * inputs.L / inputs.gamma)
    return float(
        np.sqrt(np.log(inner) / inputs.n) + np.sqrt(np.log(1.0 / inputs.delta) / inputs.n)
    )


def _margin_matrix(models: ModelParams | Sequence[ModelParams], ds: Dataset) -> np.ndarray:
    if isinstance(models, ModelParams):
        models = [models]
    if len(models) == 0:
        raise SpecificationError("need at least one model")
    return np.stack([np.asarray(margin(m, ds.features, ds.labels)) for m in models])


def term_I(
    models: ModelParams | Sequence[ModelParams],
    ds: Dataset,
    ratios: np.ndarray,
    gamma: float,
) -> float:
    """(1/n) sum_i ratio_i * P_models[margin_i < gamma].

    With one model the probability is a 0/1 indicator; with several it is the
    mean indicator over models (the expectation-over-seeds variant). A ratio
    of exactly 0 marks a sample absent from the target distribution.
    """
    if gamma <= 0:
        raise SpecificationError("gamma must be positive")
    r = np.asarray(ratios, dtype=np.float64)
    if r.shape != (ds.n,) or np.any(r < 0) or not np.all(np.isfinite(r)):
        raise SpecificationError("ratios must be n nonnegative finite values")
    margins = _margin_matrix(models, ds)
    violation = (margins < gamma).mean(axis=0)
    return float(np.mean(r * violation))


def term_II(pair: DiscreteDensityPair, inputs: BoundInputs, convention: Convention = "paper") -> float:
    d = chi2_divergence(pair, convention)
    return float(
        inputs.L
        * np.sqrt(d + 1.0)
        / (inputs.gamma * inputs.q ** ((inputs.q - 1) / 2.0) * np.sqrt(inputs.n))
    )


def test_error(models: ModelParams | Sequence[ModelParams], ds_test: Dataset) -> float:
    """Fraction of test samples with functional margin <= 0 (mean over models)."""
    if ds_test.n == 0:
        raise SpecificationError("empty test set")
    margins = _margin_matrix(models, ds_test)
    return float((margins <= 0.0).mean())


@dataclass(frozen=True)
class BoundReport:
    gamma: float
    delta: float
    q: int
    L: float
    n: int
    convention: str
    D: float
    I: float
    II: float
    III: float
    total: float
    empirical: float
    log_convention: str = LOG_CONVENTION

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "gamma": self.gamma,
            "delta": self.delta,
            "q": self.q,
            "L": self.L,
            "n": self.n,
            "convention": self.convention,
            "D": self.D,
            "I": self.I,
            "II": self.II,
            "III": self.III,
            "total": self.total,
            "empirical": self.empirical,
            "log_convention": self.log_convention,
        }


def evaluate_bound(
    models: ModelParams | Sequence[ModelParams],
    ds: Dataset,
    pair: DiscreteDensityPair,
    inputs: BoundInputs,
    convention: Convention = "paper",
) -> BoundReport:
    """Assemble the full bound on one dataset: total = I + II + III.

    ``ds`` plays both roles of the desk-scale check — the sample over which
    violations are counted and the draw on which the empirical error is read —
    so ``inputs.n`` must equal its size.
    """
    if inputs.n != ds.n:
        raise SpecificationError("inputs.n must match the evaluated dataset size")
    ratios = sample_ratios(pair, ds)
    d = chi2_divergence(pair, convention)
    i_term = term_I(models, ds, ratios, inputs.gamma)
    ii_term = term_II(pair, inputs, convention)
    iii_term = epsilon_term(inputs)
    return BoundReport(
        gamma=inputs.gamma,
        delta=inputs.delta,
        q=inputs.q,
        L=inputs.L,
        n=inputs.n,
        convention=convention,
        D=d,
        I=i_term,
        II=ii_term,
        III=iii_term,
        total=i_term + ii_term + iii_term,
        empirical=test_error(models, ds),
    )


def save_bound_json(report: BoundReport, path: str | Path) -> None:
    write_json(path, report.to_dict())


def load_bound_json(path: str | Path) -> tuple[BoundReport, int]:
    doc = read_json(path)
    version = int(doc.pop("schema_version", SCHEMA_VERSION))
    return BoundReport(**doc), version
