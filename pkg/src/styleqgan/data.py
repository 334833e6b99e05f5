"""Reference samplers, [-1, 1] preprocessing and CSV sample files."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

GAUSSIAN3D_COV = np.array([[0.5, 0.1, 0.25], [0.1, 0.5, 0.1], [0.25, 0.1, 0.5]])
RAW, TRANSFORMED = "raw", "transformed"


class DataFormatError(ValueError):
    pass


@dataclass
class SampleSet:
    values: np.ndarray
    columns: tuple = field(default=None)
    space: str = RAW

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValueError("samples must be a (n, dim) array")
        if self.columns is None:
            self.columns = tuple(f"x{i}" for i in range(v.shape[1]))
        self.columns = tuple(self.columns)
        if v.shape[0] == 0:
            v = v.reshape(0, len(self.columns))
        if v.shape[1] != len(self.columns):
            raise ValueError("column names do not match the sample width")
        if self.space not in (RAW, TRANSFORMED):
            raise ValueError(f"unknown sample space {self.space!r}")
        self.values = v

    @property
    def dim(self):
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def gamma_pdf(x, alpha=1.0, beta=1.0):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (alpha - 1) * np.log(x) - x / beta - alpha * math.log(beta) - math.lgamma(alpha)
    return np.where(x > 0, np.exp(logp), 0.0)


def sample_gamma(n, rng, alpha=1.0, beta=1.0):
    """Draws from the gamma density x^(a-1) exp(-x/b) / (b^a Gamma(a))."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if alpha == 1.0:
        x = -beta * np.log1p(-rng.random(n))
    else:
        x = rng.gamma(alpha, beta, n)
    return SampleSet(x[:, None], ("x",))


def gaussian3d_factor():
    return np.linalg.cholesky(GAUSSIAN3D_COV)


def sample_gaussian3d(n, rng):
    """Zero-mean correlated 3D Gaussian with covariance ``GAUSSIAN3D_COV``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    z = rng.standard_normal((n, 3))
    return SampleSet(z @ gaussian3d_factor().T, ("x", "y", "z"))


# -- Yeo-Johnson ---------------------------------------------------------


def yeo_johnson(x, lmbda):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    if abs(lmbda) < 1e-12:
        out[pos] = np.log1p(x[pos])
    else:
        out[pos] = np.expm1(lmbda * np.log1p(x[pos])) / lmbda
    if abs(lmbda - 2) < 1e-12:
        out[~pos] = -np.log1p(-x[~pos])
    else:
        out[~pos] = -np.expm1((2 - lmbda) * np.log1p(-x[~pos])) / (2 - lmbda)
    return out


def yeo_johnson_inverse(y, lmbda):
    y = np.asarray(y, dtype=np.float64)
    out = np.empty_like(y)
    pos = y >= 0
    if abs(lmbda) < 1e-12:
        out[pos] = np.expm1(y[pos])
    else:
        out[pos] = np.expm1(np.log1p(lmbda * y[pos]) / lmbda)
    if abs(lmbda - 2) < 1e-12:
        out[~pos] = -np.expm1(-y[~pos])
    else:
        out[~pos] = -np.expm1(np.log1p(-(2 - lmbda) * y[~pos]) / (2 - lmbda))
    return out


def yeo_johnson_llf(x, lmbda):
    """Profile log-likelihood of a normal fit to the transformed data."""
    x = np.asarray(x, dtype=np.float64)
    y = yeo_johnson(x, lmbda)
    var = np.var(y)
    if not var > 0:
        return -np.inf
    return -0.5 * x.size * np.log(var) + (lmbda - 1) * np.sum(np.sign(x) * np.log1p(np.abs(x)))


def golden_section_max(f, lo, hi, tol=1e-6):
    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_yeo_johnson(x, bounds=(-5.0, 5.0), tol=1e-6):
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2 or np.ptp(x) == 0:
        raise ValueError("power transform needs at least two distinct values")
    lmbda = golden_section_max(lambda l: yeo_johnson_llf(x, l), *bounds, tol=tol)
    if not np.isfinite(yeo_johnson_llf(x, lmbda)):
        raise ValueError("power transform likelihood search failed")
    return lmbda


# -- preprocessors -------------------------------------------------------


@dataclass
class Preprocessor:
    """Per-dimension map into [-1, 1].

    ``minmax``: affine map of [lo, hi] onto [-1, 1].
    ``power``: Yeo-Johnson with fitted lambda, standardization, then minmax.
    """

    kind: str
    lo: np.ndarray
    hi: np.ndarray
    lambdas: np.ndarray = None
    mean: np.ndarray = None
    std: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("minmax", "power"):
            raise ValueError(f"unknown preprocessor kind {self.kind!r}")
        for name in ("lo", "hi", "lambdas", "mean", "std"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.atleast_1d(np.asarray(v, dtype=np.float64)))
        if np.any(self.hi <= self.lo):
            raise ValueError("preprocessor range is degenerate (max <= min)")
        if self.kind == "power" and (self.lambdas is None or np.any(self.std <= 0)):
            raise ValueError("power preprocessor needs lambdas and positive std")

    @property
    def dim(self):
        return self.lo.size

    def _power(self, x):
        cols = [(yeo_johnson(x[:, j], self.lambdas[j]) - self.mean[j]) / self.std[j] for j in range(self.dim)]
        return np.stack(cols, axis=1) if cols else x

    def _power_inverse(self, y):
        cols = [yeo_johnson_inverse(y[:, j] * self.std[j] + self.mean[j], self.lambdas[j]) for j in range(self.dim)]
        return np.stack(cols, axis=1) if cols else y

    def transform(self, samples):
        x = _values(samples, self.dim)
        if self.kind == "power" and len(x):
            x = self._power(x)
        y = 2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0
        return _like(samples, y, TRANSFORMED)

    def inverse_transform(self, samples):
        y = _values(samples, self.dim)
        x = (y + 1.0) * 0.5 * (self.hi - self.lo) + self.lo
        if self.kind == "power" and len(x):
            x = self._power_inverse(x)
        return _like(samples, x, RAW)

    def to_dict(self):
        d = {"kind": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}
        if self.kind == "power":
            d.update(lambdas=self.lambdas.tolist(), mean=self.mean.tolist(), std=self.std.tolist())
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["kind"],
            d["lo"],
            d["hi"],
            d.get("lambdas"),
            d.get("mean"),
            d.get("std"),
        )


def _values(samples, dim):
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != dim:
        raise ValueError(f"expected {dim} columns, got {x.shape[1]}")
    return x


def _like(samples, values, space):
    if isinstance(samples, SampleSet):
        return SampleSet(values, samples.columns, space)
    return values


def fit_minmax(samples):
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if len(x) == 0:
        raise ValueError("cannot fit on an empty sample set")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    lo, hi = x.min(axis=0), x.max(axis=0)
    if np.any(hi <= lo):
        raise ValueError("a dimension is constant; min-max scaling is undefined")
    return Preprocessor("minmax", lo, hi)


def fit_power(samples):
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if len(x) == 0:
        raise ValueError("cannot fit on an empty sample set")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    lambdas = np.array([fit_yeo_johnson(x[:, j]) for j in range(x.shape[1])])
    y = np.stack([yeo_johnson(x[:, j], lambdas[j]) for j in range(x.shape[1])], axis=1)
    mean, std = y.mean(axis=0), y.std(axis=0)
    if np.any(std <= 0):
        raise ValueError("power transform collapsed a dimension")
    z = (y - mean) / std
    return Preprocessor("power", z.min(axis=0), z.max(axis=0), lambdas, mean, std)


def fit_preprocessor(kind, samples):
    if kind == "minmax":
        return fit_minmax(samples)
    if kind == "power":
        return fit_power(samples)
    raise ValueError(f"unknown preprocessor kind {kind!r}")


# -- CSV -----------------------------------------------------------------


def save_csv(samples, path):
    if not isinstance(samples, SampleSet):
        samples = SampleSet(samples)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(samples.columns)
        for row in samples.values:
            writer.writerow([format(v, ".17g") for v in row])


def load_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if not header or any(not h for h in header):
            raise DataFormatError(f"{path}: header has empty column names")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            parsed = []
            for col, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataFormatError(f"{path}: row {lineno}, column {col!r}: not a number: {cell!r}") from None
            rows.append(parsed)
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return SampleSet(values, tuple(header))
