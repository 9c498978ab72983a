"""Loaders and generators for the bundled datasets."""
from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

POLLUTION_COLUMNS = [
    "PREC", "JANT", "JULT", "OVR65", "POPN", "EDUC", "HOUS", "DENS",
    "NONW", "WWDRK", "POOR", "HC", "NOX", "SO2", "HUMID", "MORT",
]


class DataFormatError(ValueError):
    pass


def data_path(name: str) -> Path:
    return Path(resources.files("pawl.targets") / "data" / name)


def load_pollution_data(path=None, standardize=True):
    """Read the 60-city regression data: 15 predictors then the response.

    With ``standardize`` the predictors get zero mean and unit variance
    (population scaling) and the response is centered.
    """
    path = data_path("pollution.csv") if path is None else Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: empty file")
        if len(header) != 16:
            raise DataFormatError(f"{path}: line 1: expected 16 columns, found {len(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 16:
                raise DataFormatError(f"{path}: line {lineno}: expected 16 columns, found {len(row)}")
            try:
                values = []
                for col, cell in enumerate(row, start=1):
                    values.append(float(cell))
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}, column {col}: not a number: {cell!r}") from None
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    data = np.array(rows)
    X, y = data[:, :15], data[:, 15]
    if standardize:
        X = (X - X.mean(axis=0)) / X.std(axis=0)
        y = y - y.mean()
    return X, y


def load_grid_image(path):
    """Binary image from text: one row per line, characters ``0``/``1``."""
    path = Path(path)
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            for col, ch in enumerate(line, start=1):
                if ch not in "01":
                    raise DataFormatError(f"{path}: line {lineno}, column {col}: non-binary pixel {ch!r}")
            if rows and len(line) != len(rows[0]):
                raise DataFormatError(
                    f"{path}: line {lineno}: row has {len(line)} pixels, expected {len(rows[0])}"
                )
            rows.append([int(ch) for ch in line])
    if not rows:
        raise DataFormatError(f"{path}: no pixel rows")
    return np.array(rows, dtype=np.int8)


def save_grid_image(grid, path):
    grid = np.asarray(grid)
    with open(path, "w") as fh:
        for row in grid:
            fh.write("".join(str(int(v)) for v in row) + "\n")


def generate_mixture_data(seed=1, n=100):
    """Draws from the four-component mixture (weights 1/4, means -3, 0, 3, 6, sd 0.55)."""
    rng = np.random.default_rng(seed)
    means = np.array([-3.0, 0.0, 3.0, 6.0])
    labels = rng.integers(0, 4, size=n)
    return means[labels] + 0.55 * rng.standard_normal(n)


def load_mixture_data(path=None):
    path = data_path("mixture_data.csv") if path is None else Path(path)
    values = []
    with open(path) as fh:
        header = fh.readline()
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: not a number: {line!r}") from None
    return np.array(values)


def save_values(values, path, name="y"):
    with open(path, "w") as fh:
        fh.write(name + "\n")
        for v in values:
            fh.write(format(float(v), ".17g") + "\n")


def generate_icefloe_image(seed=7, size=40, noise=0.10):
    """Two overlapping discs on a 40x40 grid plus salt-and-pepper noise."""
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:size, 0:size]
    disc1 = (rows - 0.40 * size) ** 2 + (cols - 0.38 * size) ** 2 < (0.22 * size) ** 2
    disc2 = (rows - 0.62 * size) ** 2 + (cols - 0.66 * size) ** 2 < (0.18 * size) ** 2
    image = (disc1 | disc2).astype(np.int8)
    flip = rng.random((size, size)) < noise
    image[flip] = 1 - image[flip]
    return image


def generate_pollution_standin(seed=1973, n=60, min_energy=376.0):
    """Synthetic 60x15 regression data shaped like the pollution study.

    Predictors share three latent factors (climate, socio-economic, pollution)
    so several of them are strongly collinear, as in the original data; the
    response depends on five of them. The response spread is then rescaled so
    that the lowest g-prior energy over all models equals ``min_energy``
    (scaling y by s shifts every energy by n log s). Values are rounded to two
    decimals.
    """
    from .gprior import GPriorTarget

    rng = np.random.default_rng(seed)
    latent = rng.standard_normal((n, 3))
    loadings = np.array([
        [0.8, 0.1, 0.0], [0.7, 0.0, 0.1], [0.6, 0.2, 0.0], [0.1, 0.6, 0.0], [0.0, 0.7, 0.1],
        [-0.2, -0.7, 0.0], [0.1, 0.5, 0.0], [0.0, 0.2, 0.6], [0.3, 0.6, 0.1], [-0.1, -0.5, 0.1],
        [0.4, 0.6, 0.0], [0.0, 0.0, 0.95], [0.0, 0.0, 0.97], [0.0, 0.3, 0.7], [0.5, -0.2, 0.0],
    ])
    noise = np.sqrt(np.clip(1.0 - (loadings**2).sum(axis=1), 0.02, None))
    Z = latent @ loadings.T + rng.standard_normal((n, 15)) * noise
    centers = np.array([37, 34, 74, 8.8, 3.3, 10.9, 80, 3900, 11.9, 46, 14.4, 38, 23, 54, 58.0])
    scales = np.array([10, 10, 4.8, 1.5, 0.14, 0.85, 5.1, 1450, 8.9, 4.6, 4.2, 92, 46, 63, 5.4])
    X = centers + Z * scales
    effects = np.array([18.0, -14.0, 0, 0, 0, -12.0, 0, 0, 30.0, 0, 0, 0, 0, 16.0, 0])
    y = 940.0 + Z @ effects + 14.0 * rng.standard_normal(n)
    X = np.round(X, 2)
    Xs = (X - X.mean(axis=0)) / X.std(axis=0)
    target = GPriorTarget(Xs, y - y.mean())
    lowest = -target.log_density(target.all_states()).max()
    scale = np.exp((min_energy - lowest) / n)
    y = y.mean() + (y - y.mean()) * scale
    return X, np.round(y, 2)


def save_pollution(X, y, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(POLLUTION_COLUMNS)
        for row, yi in zip(X, y):
            writer.writerow([format(v, ".2f") for v in row] + [format(yi, ".2f")])
