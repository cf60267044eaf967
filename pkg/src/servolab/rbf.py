"""Radial basis function networks with a linear output layer.

Gaussian hidden units h_n(x) = exp(-(||x - c_n|| / radius_n)^2) feed a
full-connect weight matrix, y = W h(x). Centers and radii are placed once
(k-means plus nearest-neighbour radii) and frozen; only W is trained, either
offline by ridge least squares or online by the calling module's update law.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SingularFitError

DEFAULT_N_HIDDEN = 60
DEFAULT_RIDGE = 1e-8
KMEANS_MAX_ITER = 100
RADIUS_NEIGHBOURS = 2
RADIUS_FLOOR = 1e-9


@dataclass(frozen=True)
class RbfLayer:
    """Frozen hidden layer: centers (n_hidden x d_in) and positive radii (n_hidden,)."""

    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        r = np.asarray(self.radii, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1:
            raise DimensionError(f"centers must be (n_hidden, d_in), got {c.shape}")
        if r.shape != (c.shape[0],):
            raise DimensionError(f"radii must have shape ({c.shape[0]},), got {r.shape}")
        if np.any(r <= 0.0):
            raise ValueError("radii must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @property
    def n_hidden(self):
        return self.centers.shape[0]

    @property
    def d_in(self):
        return self.centers.shape[1]


@dataclass
class RbfNetworkModel:
    """Hidden layer plus full-connect output weights W (d_out x n_hidden)."""

    layer: RbfLayer
    weights: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        if w.shape[1] != self.layer.n_hidden:
            raise DimensionError(
                f"weights must have {self.layer.n_hidden} columns, got shape {w.shape}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        self.weights = w

    @property
    def d_out(self):
        return self.weights.shape[0]

    def copy(self):
        return RbfNetworkModel(layer=self.layer, weights=self.weights.copy())


@dataclass(frozen=True)
class TrainingSet:
    """Paired inputs (n x d_in) and targets (n x d_out)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        t = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if len(x) != len(t) or len(x) < 1:
            raise DimensionError(
                f"inputs and targets must have equal nonzero length, got {len(x)} and {len(t)}"
            )
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", t)

    def __len__(self):
        return len(self.inputs)


def activations(layer, x):
    """Hidden-unit outputs for one input vector; each lies in (0, 1]."""
    x = np.asarray(x, dtype=float)
    if x.shape != (layer.d_in,):
        raise DimensionError(f"input must have shape ({layer.d_in},), got {x.shape}")
    dist = np.linalg.norm(layer.centers - x, axis=1)
    return np.exp(-((dist / layer.radii) ** 2))


def activation_matrix(layer, xs):
    """Row i = activations(layer, xs[i]); shape (n, n_hidden)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    diff = xs[:, None, :] - layer.centers[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    return np.exp(-((dist / layer.radii) ** 2))


def forward(model, x):
    """Network output W @ h(x)."""
    return model.weights @ activations(model.layer, x)


def input_jacobian(model, x):
    """d(forward)/dx, shape (d_out, d_in).

    dh_n/dx = h_n * (-2 / radius_n^2) * (x - c_n); used by tests to guard the
    activation implementation, not by any update law.
    """
    x = np.asarray(x, dtype=float)
    h = activations(model.layer, x)
    diff = x[None, :] - model.layer.centers
    dh = (-2.0 * h / model.layer.radii**2)[:, None] * diff
    return model.weights @ dh


def lipschitz_bound(model):
    """Upper bound L with ||f(x) - f(x')|| <= L ||x - x'||.

    The Gaussian unit's gradient norm peaks at sqrt(2/e)/radius.
    """
    peak = np.sqrt(2.0 / np.e) / model.layer.radii
    col_norms = np.linalg.norm(model.weights, axis=0)
    return float(np.sum(col_norms * peak))


def fit_offline(layer, data, ridge=DEFAULT_RIDGE):
    """Least-squares fit of the output weights, centers and radii frozen.

    Minimizes sum ||target - W h(input)||^2 + ridge ||W||_F^2 via the normal
    equations. A singular normal matrix with ridge=0 raises SingularFitError.
    """
    if ridge < 0.0:
        raise ValueError("ridge must be >= 0")
    h = activation_matrix(layer, data.inputs)
    gram = h.T @ h + ridge * np.eye(layer.n_hidden)
    rhs = h.T @ data.targets
    try:
        # Gram matrix is symmetric PSD; Cholesky doubles as the singularity check.
        chol = np.linalg.cholesky(gram)
        wt = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
    except np.linalg.LinAlgError as exc:
        raise SingularFitError(
            "normal matrix is singular; pass ridge > 0 to regularize the fit"
        ) from exc
    return RbfNetworkModel(layer=layer, weights=wt.T)


def fit_residual(model, data):
    """Root mean squared training residual of a fitted model."""
    h = activation_matrix(model.layer, data.inputs)
    pred = h @ model.weights.T
    return float(np.sqrt(np.mean((pred - data.targets) ** 2)))


def place_centers(samples, n_hidden, seed=0, radius_scale=1.0):
    """Choose centers by seeded k-means on the samples, radii from neighbours.

    radius_n is the mean distance from center n to its 2 nearest other
    centers (fewer if the layer is smaller), floored to stay positive.
    radius_scale widens or narrows every radius by a common factor; high
    dimensional fits need factors around 2 for the kernels to overlap.
    """
    if radius_scale <= 0.0:
        raise ValueError("radius_scale must be positive")
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if n_hidden < 1:
        raise ValueError("n_hidden must be >= 1")
    if n_hidden > len(samples):
        raise DimensionError(
            f"n_hidden={n_hidden} exceeds the {len(samples)} available samples"
        )
    rng = np.random.default_rng(seed)
    unique = np.unique(samples, axis=0)
    if n_hidden <= len(unique):
        pick = rng.choice(len(unique), size=n_hidden, replace=False)
        centers = unique[np.sort(pick)].copy()
    else:
        pick = rng.choice(len(samples), size=n_hidden, replace=False)
        centers = samples[np.sort(pick)].copy()

    assign = None
    for _ in range(KMEANS_MAX_ITER):
        dist = np.linalg.norm(samples[:, None, :] - centers[None, :, :], axis=2)
        new_assign = np.argmin(dist, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(n_hidden):
            members = samples[assign == j]
            if len(members):
                centers[j] = members.mean(axis=0)
            # empty cluster keeps its previous center

    if n_hidden == 1:
        radii = np.array([max(float(np.std(samples)), 1.0)])
    else:
        cdist = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
        np.fill_diagonal(cdist, np.inf)
        k = min(RADIUS_NEIGHBOURS, n_hidden - 1)
        nearest = np.sort(cdist, axis=1)[:, :k]
        radii = np.maximum(nearest.mean(axis=1), RADIUS_FLOOR)
    return RbfLayer(centers=centers, radii=radii * radius_scale)


# --- serialization -----------------------------------------------------------
#
# Text format, one file per bank of networks. Comment lines (leading '#') may
# carry metadata such as the config hash; parsers must skip them.
#
#   rbfbank v1 nets=<count>
#   net d_in=<d> n_hidden=<n> d_out=<m>
#   <n lines: center row, d floats>
#   <1 line: n radii>
#   <m lines: weight row, n floats>
#   ... repeated per net
#
# Floats use repr() so a save/load round trip is bit exact.

FORMAT_TAG = "rbfbank"
FORMAT_VERSION = "v1"


def _fmt_row(row):
    return " ".join(repr(float(v)) for v in row)


def save_bank(path, models, meta=None):
    """Write a list of models to a versioned text file with optional metadata."""
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key}={value}")
    lines.append(f"{FORMAT_TAG} {FORMAT_VERSION} nets={len(models)}")
    for model in models:
        layer = model.layer
        lines.append(
            f"net d_in={layer.d_in} n_hidden={layer.n_hidden} d_out={model.d_out}"
        )
        for row in layer.centers:
            lines.append(_fmt_row(row))
        lines.append(_fmt_row(layer.radii))
        for row in model.weights:
            lines.append(_fmt_row(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_bank(path):
    """Read a bank written by save_bank; returns (models, meta)."""
    meta = {}
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    body = []
    for ln in lines:
        if ln.startswith("#"):
            key, _, value = ln[1:].strip().partition("=")
            meta[key.strip()] = value
        elif ln.strip():
            body.append(ln)
    if not body:
        raise ValueError(f"{path}: empty model file")
    header = body[0].split()
    if header[:2] != [FORMAT_TAG, FORMAT_VERSION] or not header[2].startswith("nets="):
        raise ValueError(f"{path}: unrecognized header {body[0]!r}")
    n_nets = int(header[2].split("=")[1])
    models = []
    pos = 1
    for _ in range(n_nets):
        fields = dict(item.split("=") for item in body[pos].split()[1:])
        d_in, n_hidden, d_out = (int(fields[k]) for k in ("d_in", "n_hidden", "d_out"))
        pos += 1
        centers = np.array([[float(v) for v in body[pos + i].split()] for i in range(n_hidden)])
        pos += n_hidden
        radii = np.array([float(v) for v in body[pos].split()])
        pos += 1
        weights = np.array([[float(v) for v in body[pos + i].split()] for i in range(d_out)])
        pos += d_out
        if centers.shape != (n_hidden, d_in) or weights.shape != (d_out, n_hidden):
            raise ValueError(f"{path}: inconsistent dimensions in net block")
        models.append(RbfNetworkModel(layer=RbfLayer(centers, radii), weights=weights))
    return models, meta


def save_training_set(path, data, meta=None):
    """CSV with one row per sample: input values then target values."""
    d_in = data.inputs.shape[1]
    d_out = data.targets.shape[1]
    with open(path, "w") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        header = [f"x{i}" for i in range(d_in)] + [f"t{i}" for i in range(d_out)]
        fh.write(",".join(header) + "\n")
        for x, t in zip(data.inputs, data.targets):
            fh.write(",".join(repr(float(v)) for v in np.concatenate([x, t])) + "\n")


def load_training_set(path):
    """Read a CSV written by save_training_set; returns (TrainingSet, meta)."""
    meta = {}
    rows = []
    header = None
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            if ln.startswith("#"):
                key, _, value = ln[1:].strip().partition("=")
                meta[key.strip()] = value
            elif header is None:
                header = ln.split(",")
            else:
                rows.append([float(v) for v in ln.split(",")])
    if header is None or not rows:
        raise ValueError(f"{path}: no data rows")
    d_in = sum(1 for name in header if name.startswith("x"))
    arr = np.asarray(rows)
    return TrainingSet(inputs=arr[:, :d_in], targets=arr[:, d_in:]), meta
