"""Monte Carlo experiment runners and CSV/JSON reporting.

Every trial draws from its own generator, seeded by
``SeedSequence(seed, spawn_key=(key, trial))`` where ``key`` is the swept
parameter (``p`` for table1, ``n`` for figure2). Results are reduced in trial
order, so the CSV output does not depend on the worker count.
"""
import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from ._config import ConfigError, InputError
from .estimators import (build_spectrum, contour_functional_oracle, estimate_frobenius,
                         estimate_wasserstein, plugin_wasserstein)
from .known import DescentOptions, fit_covariance, linear_shrinkage_init
from .linalg import sample_covariance, true_wasserstein
from .models import CovarianceModel, gaussian_samples

TABLE1_P = (2, 4, 8, 16, 32, 64, 128, 256, 512)
FIGURE2_N = (100, 111, 122, 133, 144, 155, 166, 177, 188, 200)
FIGURE2_ATOMS = ((0.1, 25), (3.0, 25), (4.0, 25), (5.0, 25))

EXPERIMENTS = ("table1", "figure2", "oracle-check")


@dataclass
class ExperimentConfig:
    experiment: str = "table1"
    p_list: list = field(default_factory=lambda: list(TABLE1_P))
    n1: int = 1024
    n2: int = 2048
    n_list: list = field(default_factory=lambda: list(FIGURE2_N))
    model1: dict = field(default_factory=lambda: {"kind": "toeplitz", "r": 0.2})
    model2: dict = field(default_factory=lambda: {"kind": "toeplitz", "r": 0.4})
    model: dict = field(default_factory=lambda: {
        "kind": "atomic", "atoms": [list(a) for a in FIGURE2_ATOMS], "seed": 0})
    trials: int = 100
    seed: int = 0
    out: str = None
    workers: int = 1
    per_trial: bool = False
    max_iter: int = 500

    @classmethod
    def defaults(cls, experiment):
        cfg = cls(experiment=experiment)
        if experiment == "figure2":
            cfg.trials = 10
            cfg.p_list = [100]
        elif experiment == "oracle-check":
            cfg.trials = 100
            cfg.p_list = [4, 16, 64]
            cfg.n1, cfg.n2 = 512, 512
        return cfg

    @classmethod
    def from_dict(cls, d, validate=True):
        d = dict(d)
        exp = d.get("experiment", "table1")
        cfg = cls.defaults(exp)
        aliases = {"p-list": "p_list", "n-list": "n_list", "per-trial": "per_trial"}
        for key, value in d.items():
            key = aliases.get(key, key)
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config field {key!r}")
            setattr(cfg, key, value)
        return cfg.validate() if validate else cfg

    def to_dict(self):
        return asdict(self)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if int(self.trials) < 1:
            raise ConfigError("trials: must be >= 1")
        if int(self.workers) < 1:
            raise ConfigError("workers: must be >= 1")
        if not self.p_list or any(int(p) < 1 for p in self.p_list):
            raise ConfigError("p_list: needs positive dimensions")
        if self.experiment in ("table1", "oracle-check"):
            bad = [p for p in self.p_list if int(p) >= min(int(self.n1), int(self.n2))]
            if bad:
                raise ConfigError(f"p_list: {bad} not below min(n1, n2) = {min(self.n1, self.n2)}")
        if self.experiment == "table1":
            for name in ("model1", "model2"):
                try:
                    CovarianceModel.from_dict(getattr(self, name), p=int(self.p_list[0]))
                except InputError as exc:
                    raise ConfigError(f"{name}: {exc}") from None
        if self.experiment == "figure2":
            if len(self.p_list) != 1:
                raise ConfigError("p_list: figure2 uses a single dimension")
            p = int(self.p_list[0])
            bad = [n for n in self.n_list if int(n) < p]
            if bad:
                raise ConfigError(f"n_list: {bad} below p = {p}")
            model = CovarianceModel.from_dict(self.model, p=p)
            if model.p != p:
                raise ConfigError(f"model: dimension {model.p} does not match p = {p}")
        return self


@dataclass
class ResultRow:
    p: int
    n1: int
    n2: int
    trial: object
    method: str
    value: float
    true_value: float
    rel_error: float = None
    wall_time: float = 0.0

    def __post_init__(self):
        if self.rel_error is None:
            self.rel_error = (abs(self.value - self.true_value) / self.true_value
                              if self.true_value > 0 else float("nan"))


CSV_FIELDS = ("p", "n1", "n2", "trial", "method", "value", "true_value", "rel_error")


def rows_to_csv(rows):
    """CSV text with a header; timings are left to the JSON sidecar."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([r.p, r.n1, r.n2, r.trial, r.method,
                    repr(float(r.value)), repr(float(r.true_value)), repr(float(r.rel_error))])
    return buf.getvalue()


def trial_rng(seed, key, trial):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(key), int(trial))))


@lru_cache(maxsize=32)
def _model(desc, p):
    return CovarianceModel.from_dict(json.loads(desc), p=p)


def _key(d):
    return json.dumps(d, sort_keys=True)


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# --- table1 ---------------------------------------------------------------------

def _table1_trial(task):
    seed, p, trial, n1, n2, desc1, desc2 = task
    m1, m2 = _model(desc1, p), _model(desc2, p)
    rng = trial_rng(seed, p, trial)
    X1 = gaussian_samples(m1, n1, rng)
    X2 = gaussian_samples(m2, n2, rng)
    start = time.perf_counter()
    rmt = estimate_wasserstein(X1, X2).value
    t_rmt = time.perf_counter() - start
    plug = plugin_wasserstein(X1, X2).value
    return rmt, plug, t_rmt


def run_table1(cfg):
    """Plug-in vs proposed Wasserstein estimates across ``cfg.p_list``."""
    cfg.validate()
    s1, s2 = _key(cfg.model1), _key(cfg.model2)
    rows = []
    for p in map(int, cfg.p_list):
        truth = true_wasserstein(_model(s1, p).matrix, _model(s2, p).matrix) / p
        tasks = [(cfg.seed, p, t, int(cfg.n1), int(cfg.n2), s1, s2) for t in range(int(cfg.trials))]
        out = _map(_table1_trial, tasks, int(cfg.workers))
        rmt = np.array([o[0] for o in out])
        plug = np.array([o[1] for o in out])
        wall = float(sum(o[2] for o in out))
        if cfg.per_trial:
            for t, (a, b, _) in enumerate(out):
                rows.append(ResultRow(p, cfg.n1, cfg.n2, t, "plugin-wasserstein", b, truth))
                rows.append(ResultRow(p, cfg.n1, cfg.n2, t, "rmt-wasserstein", a, truth))
        rows.append(ResultRow(p, cfg.n1, cfg.n2, "mean", "true", truth, truth))
        rows.append(ResultRow(p, cfg.n1, cfg.n2, "mean", "plugin-wasserstein", float(plug.mean()), truth))
        rows.append(ResultRow(p, cfg.n1, cfg.n2, "mean", "rmt-wasserstein", float(rmt.mean()), truth,
                              wall_time=wall))
    return rows


# --- figure2 ----------------------------------------------------------------------

def _figure2_trial(task):
    seed, n, trial, desc, p, max_iter = task
    model = _model(desc, p)
    C = model.matrix
    X = gaussian_samples(model, n, trial_rng(seed, n, trial))
    start = time.perf_counter()
    fit = fit_covariance(X, DescentOptions(max_iter=max_iter))
    wall = time.perf_counter() - start
    return (true_wasserstein(C, fit.M) / p,
            true_wasserstein(C, sample_covariance(X)) / p,
            true_wasserstein(C, linear_shrinkage_init(X)) / p,
            wall, fit.stalled)


def run_figure2(cfg):
    """Per-dimension ``D_W(C, estimate)`` of the fitted, sample and shrinkage covariances."""
    cfg.validate()
    p = int(cfg.p_list[0])
    desc = _key(cfg.model)
    rows = []
    for n in map(int, cfg.n_list):
        tasks = [(cfg.seed, n, t, desc, p, int(cfg.max_iter)) for t in range(int(cfg.trials))]
        out = np.array(_map(_figure2_trial, tasks, int(cfg.workers)), dtype=float)
        names = ("proposed-fit", "scm", "shrinkage-init")
        if cfg.per_trial:
            for t, o in enumerate(out):
                for k, name in enumerate(names):
                    rows.append(ResultRow(p, n, n, t, name, float(o[k]), 0.0, float("nan")))
        for k, name in enumerate(names):
            rows.append(ResultRow(p, n, n, "mean", name, float(out[:, k].mean()), 0.0, float("nan"),
                                  wall_time=float(out[:, 3].sum()) if k == 0 else 0.0))
    return rows


# --- oracle-check -------------------------------------------------------------------

def _oracle_trial(task):
    seed, p, trial, n1, n2 = task
    rng = trial_rng(seed, p, trial)
    lam = np.sort(rng.uniform(0.2, 3.0, p))
    model = build_spectrum(lam, n1, n2)
    contour = contour_functional_oracle(model, "identity")
    X1 = rng.standard_normal((p, n1))
    X2 = rng.standard_normal((p, n2))
    frob = estimate_frobenius(X1, X2).value
    return contour, float(lam.mean()), frob


def run_oracle_check(cfg):
    """Contour oracle with ``f(t) = t`` against ``mean(lam)``; Frobenius estimate at equal covariances."""
    cfg.validate()
    rows = []
    for p in map(int, cfg.p_list):
        tasks = [(cfg.seed, p, t, int(cfg.n1), int(cfg.n2)) for t in range(int(cfg.trials))]
        out = _map(_oracle_trial, tasks, int(cfg.workers))
        err = max(abs(c - m) / m for c, m, _ in out)
        frob = float(np.mean([o[2] for o in out]))
        if cfg.per_trial:
            for t, (c, m, f) in enumerate(out):
                rows.append(ResultRow(p, cfg.n1, cfg.n2, t, "contour-oracle", c, m))
                rows.append(ResultRow(p, cfg.n1, cfg.n2, t, "rmt-frobenius", f, 0.0, abs(f)))
        rows.append(ResultRow(p, cfg.n1, cfg.n2, "max", "contour-oracle-rel-error", err, 0.0, err))
        rows.append(ResultRow(p, cfg.n1, cfg.n2, "mean", "rmt-frobenius", frob, 0.0, abs(frob)))
    return rows


RUNNERS = {"table1": run_table1, "figure2": run_figure2, "oracle-check": run_oracle_check}


def run_experiment(cfg):
    return RUNNERS[cfg.experiment](cfg)


def write_outputs(cfg, rows, out, elapsed=None, plot=True):
    """Write ``out`` (CSV), ``out.json`` (config echo and timings) and, optionally, a PNG."""
    with open(out, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    sidecar = {
        "config": cfg.to_dict(),
        "elapsed_seconds": elapsed,
        "wall_time": [{"p": r.p, "n1": r.n1, "n2": r.n2, "method": r.method, "seconds": r.wall_time}
                      for r in rows if r.wall_time],
    }
    with open(out + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    paths = [out, out + ".json"]
    if plot:
        from . import plotting
        png = plotting.render(cfg.experiment, rows, out.rsplit(".", 1)[0] + ".png")
        if png:
            paths.append(png)
    return paths
