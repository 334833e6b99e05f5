"""Histograms, KL divergence, covariance-eigenvalue agreement and 2D ratio grids."""
import csv
from dataclasses import dataclass

import numpy as np

LINEAR, LOG = "linear", "log"


@dataclass
class Histogram:
    """Counts over bins ``[e_i, e_{i+1})``; the last bin also holds its upper edge."""

    edges: np.ndarray
    counts: np.ndarray
    scale: str = LINEAR
    underflow: int = 0
    overflow: int = 0

    @property
    def total(self):
        return int(self.counts.sum()) + self.underflow + self.overflow

    def to_dict(self):
        return {
            "edges": self.edges.tolist(),
            "counts": self.counts.tolist(),
            "scale": self.scale,
            "underflow": self.underflow,
            "overflow": self.overflow,
        }


def make_edges(lo, hi, bins, scale=LINEAR):
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not hi > lo:
        raise ValueError("histogram range must satisfy hi > lo")
    if scale == LOG:
        if lo <= 0:
            raise ValueError("log-scaled bins need a positive range")
        return np.geomspace(lo, hi, bins + 1)
    if scale != LINEAR:
        raise ValueError(f"unknown scale {scale!r}")
    return np.linspace(lo, hi, bins + 1)


def build_histogram(values, bins=100, scale=LINEAR, range=None, edges=None):
    """Histogram of a 1D sample; the default range spans the sample itself."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if edges is None:
        if range is None:
            if x.size == 0:
                raise ValueError("cannot infer a range from an empty sample")
            range = (x.min(), x.max())
            if range[1] == range[0]:
                range = (range[0] - 0.5, range[1] + 0.5)
        edges = make_edges(range[0], range[1], bins, scale)
    edges = np.asarray(edges, dtype=np.float64)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly increasing")
    if scale == LOG and np.any(x[(x >= edges[0]) & (x <= edges[-1])] <= 0):
        raise ValueError("log-scaled histogram got nonpositive values")
    idx = np.searchsorted(edges, x, side="right") - 1
    idx[x == edges[-1]] = len(edges) - 2
    under = int(np.sum(idx < 0))
    over = int(np.sum(idx >= len(edges) - 1))
    inside = idx[(idx >= 0) & (idx < len(edges) - 1)]
    counts = np.bincount(inside, minlength=len(edges) - 1)
    return Histogram(edges, counts, scale, under, over)


def kl_divergence(reference, generated, epsilon=1e-12, reverse=False):
    """sum_i p_i log(p_i / q_i), p from ``reference`` and q from ``generated``.

    Both are normalized over in-range counts. If a bin occupied in the
    reference is (nearly) empty in the generated histogram, q is floored at
    ``epsilon`` and renormalized; otherwise q is used as is, so identical
    histograms give exactly 0. ``reverse=True`` swaps the roles (generated||reference).
    """
    if reference.edges.shape != generated.edges.shape or not np.array_equal(reference.edges, generated.edges):
        raise ValueError("histograms must share identical edges")
    if reverse:
        return kl_from_counts(generated.counts, reference.counts, epsilon)
    return kl_from_counts(reference.counts, generated.counts, epsilon)


def kl_from_counts(ref_counts, gen_counts, epsilon=1e-12):
    p = np.asarray(ref_counts, dtype=np.float64)
    q = np.asarray(gen_counts, dtype=np.float64)
    if p.sum() <= 0:
        raise ValueError("reference histogram is empty")
    p = p / p.sum()
    q = q / q.sum() if q.sum() > 0 else np.zeros_like(q)
    support = p > 0
    if np.any(q[support] < epsilon):
        q = np.maximum(q, epsilon)
        q = q / q.sum()
    return float(max(np.sum(p[support] * np.log(p[support] / q[support])), 0.0))


def histogram_kl(reference_values, generated_values, bins=100, scale=LINEAR, range=None, epsilon=1e-12, reverse=False):
    """KL between two 1D samples binned on the reference sample's range."""
    ref = build_histogram(reference_values, bins, scale, range)
    gen = build_histogram(generated_values, edges=ref.edges, scale=scale)
    return kl_divergence(ref, gen, epsilon, reverse)


def data_augmentation_check(
    reference_sampler,
    generated,
    small=10**4,
    large=10**5,
    bins=100,
    scale=LINEAR,
    margin=0.05,
    max_kl=1.0,
):
    """Does the KL hold up when generating more samples than were trained on?

    ``reference_sampler(n)`` returns n fresh 1D reference values; ``generated``
    must hold at least ``large`` values (its first ``small`` form the small
    set). KL is computed at (small, bins), (large, bins) and
    (large, bins * large / small). The check passes when the proportionally
    binned KL is at most the small-sample KL plus ``margin`` and the
    small-sample KL itself is below ``max_kl``.
    """
    gen = np.asarray(generated, dtype=np.float64).ravel()
    if gen.size < large or small < 1 or large < small:
        raise ValueError(f"need at least {large} generated samples")
    prop_bins = int(round(bins * large / small))
    ref_small = np.asarray(reference_sampler(small), dtype=np.float64).ravel()
    ref_large = np.asarray(reference_sampler(large), dtype=np.float64).ravel()
    kl_small = histogram_kl(ref_small, gen[:small], bins, scale)
    kl_large = histogram_kl(ref_large, gen[:large], bins, scale)
    kl_prop = histogram_kl(ref_large, gen[:large], prop_bins, scale)
    return {
        "kl_small": kl_small,
        "kl_large_same_bins": kl_large,
        "kl_large_proportional_bins": kl_prop,
        "bins": bins,
        "proportional_bins": prop_bins,
        "small": small,
        "large": large,
        "passed": bool(kl_prop <= kl_small + margin and kl_small <= max_kl),
    }


def covariance_eigen_agreement(reference, generated):
    """|sum(eig C_ref) - sum(eig C_gen)| / sum(eig C_ref), sample covariances (n-1)."""
    ref = np.asarray(reference, dtype=np.float64)
    gen = np.asarray(generated, dtype=np.float64)
    if ref.ndim != 2 or gen.ndim != 2 or ref.shape[1] != gen.shape[1]:
        raise ValueError("reference and generated must share the same dimension")
    if ref.shape[1] < 2:
        raise ValueError("covariance agreement needs dim >= 2")
    if len(ref) < 2 or len(gen) < 2:
        raise ValueError("need at least two samples per set")
    return eigen_agreement_to_covariance(np.cov(ref, rowvar=False), gen)


def eigen_agreement_to_covariance(reference_cov, generated):
    ref_sum = float(np.sum(np.linalg.eigvalsh(np.asarray(reference_cov))))
    gen_sum = float(np.sum(np.linalg.eigvalsh(np.cov(np.asarray(generated), rowvar=False))))
    return abs(ref_sum - gen_sum) / ref_sum


@dataclass
class RatioGrid:
    edges_x: np.ndarray
    edges_y: np.ndarray
    ratio: np.ndarray
    mask: np.ndarray

    def to_dict(self):
        return {
            "edges_x": self.edges_x.tolist(),
            "edges_y": self.edges_y.tolist(),
            "ratio": [[None if m else float(r) for r, m in zip(rr, mm)] for rr, mm in zip(self.ratio, self.mask)],
        }

    def save_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x_lo", "x_hi", "y_lo", "y_hi", "ratio"])
            for i in np.ndindex(self.ratio.shape):
                r = "" if self.mask[i] else format(self.ratio[i], ".17g")
                w.writerow([self.edges_x[i[0]], self.edges_x[i[0] + 1], self.edges_y[i[1]], self.edges_y[i[1] + 1], r])


def _counts_2d(x, y, ex, ey):
    ix = np.searchsorted(ex, x, side="right") - 1
    iy = np.searchsorted(ey, y, side="right") - 1
    ix[x == ex[-1]] = len(ex) - 2
    iy[y == ey[-1]] = len(ey) - 2
    ok = (ix >= 0) & (ix < len(ex) - 1) & (iy >= 0) & (iy < len(ey) - 1)
    counts = np.zeros((len(ex) - 1, len(ey) - 1), dtype=np.int64)
    np.add.at(counts, (ix[ok], iy[ok]), 1)
    return counts


def build_ratio_grid(reference, generated, bins_x=20, bins_y=20, scales=(LINEAR, LINEAR), ranges=None):
    """Reference/generated count ratio per 2D cell; cells empty in either set are masked.

    ``reference`` and ``generated`` are (n, 2) arrays (the two selected dimensions).
    """
    ref = np.asarray(reference, dtype=np.float64)
    gen = np.asarray(generated, dtype=np.float64)
    if ref.ndim != 2 or gen.ndim != 2 or ref.shape[1] != 2 or gen.shape[1] != 2:
        raise ValueError("ratio grids take two-column samples")
    if ranges is None:
        both = np.vstack([ref, gen])
        ranges = [(both[:, k].min(), both[:, k].max()) for k in range(2)]
    ex = make_edges(*ranges[0], bins_x, scales[0])
    ey = make_edges(*ranges[1], bins_y, scales[1])
    cr = _counts_2d(ref[:, 0], ref[:, 1], ex, ey)
    cg = _counts_2d(gen[:, 0], gen[:, 1], ex, ey)
    mask = (cr == 0) | (cg == 0)
    ratio = np.full(cr.shape, np.nan)
    ratio[~mask] = cr[~mask] / cg[~mask]
    return RatioGrid(ex, ey, ratio, mask)
