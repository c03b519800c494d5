"""Population covariance models, seeded Gaussian sampling and file formats.

Model descriptions serialize to JSON objects:

* ``{"kind": "toeplitz", "r": 0.2, "p": 64}`` -- entries ``r**|i-j|``
* ``{"kind": "atomic", "atoms": [[0.1, 25], [3.0, 25]], "seed": 0}`` --
  ``Q diag(...) Q^T`` with ``Q`` a seeded random orthogonal basis and each
  eigenvalue repeated by its multiplicity; ``p`` is the multiplicity total
* ``{"kind": "explicit", "matrix": [[...], ...]}``

``p`` may be left out of a toeplitz description when the caller supplies it
(the Table 1 runner sweeps ``p``).
"""
import csv
import io
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._config import InputError
from .linalg import as_samples, spd_sqrt, symmetrize


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    kind: str
    p: int
    r: float = 0.0
    atoms: tuple = ()
    basis_seed: int = 0
    explicit: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("toeplitz", "atomic", "explicit"):
            raise InputError(f"unknown covariance model kind {self.kind!r}")
        if self.p < 1:
            raise InputError("model dimension must be positive")
        if self.kind == "toeplitz" and not -1.0 < self.r < 1.0:
            raise InputError(f"toeplitz ratio must lie in (-1, 1), got {self.r}")
        if self.kind == "atomic":
            if any(v <= 0 for v, _ in self.atoms):
                raise InputError("atom eigenvalues must be positive")
            if any(int(m) != m or m < 1 for _, m in self.atoms):
                raise InputError("atom multiplicities must be positive integers")
            if sum(int(m) for _, m in self.atoms) != self.p:
                raise InputError("atom multiplicities must sum to p")

    @classmethod
    def toeplitz(cls, r, p):
        return cls("toeplitz", int(p), r=float(r))

    @classmethod
    def atomic(cls, atoms, seed=0):
        atoms = tuple((float(v), int(m)) for v, m in atoms)
        return cls("atomic", sum(m for _, m in atoms), atoms=atoms, basis_seed=int(seed))

    @classmethod
    def from_matrix(cls, C):
        C = symmetrize(C)
        return cls("explicit", C.shape[0], explicit=C)

    @classmethod
    def from_dict(cls, d, p=None):
        if not isinstance(d, dict):
            raise InputError(f"model description must be a JSON object, got {d!r}")
        try:
            return cls._from_dict(d, p)
        except KeyError as exc:
            raise InputError(f"{d.get('kind')} model needs {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad model description {d!r}: {exc}") from None

    @classmethod
    def _from_dict(cls, d, p):
        kind = d.get("kind")
        if kind == "toeplitz":
            dim = d.get("p", p)
            if dim is None:
                raise InputError("toeplitz model needs 'p'")
            return cls.toeplitz(d["r"], dim)
        if kind == "atomic":
            return cls.atomic(d["atoms"], d.get("seed", 0))
        if kind == "explicit":
            return cls.from_matrix(np.asarray(d["matrix"], dtype=float))
        raise InputError(f"unknown covariance model kind {kind!r}")

    def to_dict(self):
        if self.kind == "toeplitz":
            return {"kind": "toeplitz", "r": self.r, "p": self.p}
        if self.kind == "atomic":
            return {"kind": "atomic", "atoms": [list(a) for a in self.atoms],
                    "seed": self.basis_seed}
        return {"kind": "explicit", "matrix": self.explicit.tolist()}

    def with_dim(self, p):
        if self.kind != "toeplitz":
            if p != self.p:
                raise InputError(f"{self.kind} model has fixed dimension {self.p}")
            return self
        return CovarianceModel.toeplitz(self.r, p)

    @cached_property
    def matrix(self):
        return realize_model(self)

    @cached_property
    def root(self):
        return spd_sqrt(self.matrix)


def random_orthogonal(p, seed):
    """Haar-distributed orthogonal matrix from the QR of a seeded Gaussian matrix."""
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    return Q * np.sign(np.diag(R))


def realize_model(model):
    """Dense population covariance matrix of a :class:`CovarianceModel`."""
    if model.kind == "toeplitz":
        idx = np.arange(model.p)
        return model.r ** np.abs(idx[:, None] - idx[None, :])
    if model.kind == "atomic":
        spectrum = np.concatenate([np.full(m, v) for v, m in model.atoms])
        Q = random_orthogonal(model.p, model.basis_seed)
        return symmetrize((Q * spectrum) @ Q.T)
    return model.explicit.copy()


def gaussian_samples(model, n, seed):
    """Draw ``n`` i.i.d. ``N(0, C)`` columns, ``C^{1/2} z`` with ``z`` standard normal.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``; the first
    two make the output a pure function of ``(model, n, seed)``.
    """
    if n < 1:
        raise InputError("need at least one sample")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Z = rng.standard_normal((model.p, int(n)))
    return model.root @ Z


def load_model(path, p=None):
    with open(path) as fh:
        return CovarianceModel.from_dict(json.load(fh), p=p)


def read_matrix_csv(path):
    """Read a headerless CSV of decimal numbers; ragged rows are rejected."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise InputError(f"{path}: empty matrix file")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}: row {i + 1} has {len(row)} fields, expected {width}")
    try:
        data = np.array([[float(c) for c in row] for row in rows])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    return as_samples(data, name=str(path))


def format_matrix_csv(A):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(A):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_matrix_csv(path, A):
    with open(path, "w", newline="") as fh:
        fh.write(format_matrix_csv(A))
