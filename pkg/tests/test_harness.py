import json

import numpy as np
import pytest

from rmtwasserstein import ConfigError
from rmtwasserstein.harness import (ExperimentConfig, ResultRow, rows_to_csv, run_experiment,
                                    trial_rng, write_outputs)

SMALL_FIG2 = {"experiment": "figure2", "p_list": [6], "n_list": [12, 20], "trials": 2,
              "model": {"kind": "atomic", "atoms": [[0.5, 3], [2.0, 3]], "seed": 1}}


def small(exp, **kw):
    base = {"table1": {"experiment": "table1", "p_list": [2, 8], "n1": 64, "n2": 96, "trials": 4},
            "figure2": SMALL_FIG2,
            "oracle-check": {"experiment": "oracle-check", "p_list": [3], "n1": 40, "n2": 50,
                             "trials": 3}}[exp]
    return ExperimentConfig.from_dict(dict(base, **kw))


def test_trial_streams_are_independent_of_order():
    a = trial_rng(7, 16, 3).standard_normal(4)
    trial_rng(7, 16, 2).standard_normal(100)
    assert np.array_equal(a, trial_rng(7, 16, 3).standard_normal(4))
    assert not np.array_equal(a, trial_rng(7, 16, 4).standard_normal(4))
    assert not np.array_equal(a, trial_rng(8, 16, 3).standard_normal(4))


def test_rel_error_consistent_with_columns():
    r = ResultRow(4, 10, 20, "mean", "x", 1.1, 1.0)
    assert abs(r.rel_error - abs(r.value - r.true_value) / r.true_value) < 1e-12


@pytest.mark.parametrize("exp", ["table1", "figure2", "oracle-check"])
def test_csv_identical_across_worker_counts(exp):
    one = rows_to_csv(run_experiment(small(exp, workers=1)))
    two = rows_to_csv(run_experiment(small(exp, workers=2)))
    assert one == two
    assert one.splitlines()[0] == "p,n1,n2,trial,method,value,true_value,rel_error"


def test_per_trial_rows_and_means():
    rows = run_experiment(small("table1", per_trial=True))
    per = [r.value for r in rows if r.p == 8 and r.method == "rmt-wasserstein" and r.trial != "mean"]
    mean = [r.value for r in rows if r.p == 8 and r.method == "rmt-wasserstein" and r.trial == "mean"]
    assert len(per) == 4 and mean[0] == pytest.approx(np.mean(per), rel=1e-15)
    for r in rows:
        if r.true_value > 0:
            assert abs(r.rel_error - abs(r.value - r.true_value) / r.true_value) < 1e-12


def test_seed_changes_output():
    a = rows_to_csv(run_experiment(small("table1", seed=1)))
    b = rows_to_csv(run_experiment(small("table1", seed=2)))
    assert a != b


def test_config_errors_name_fields():
    with pytest.raises(ConfigError, match="trials"):
        ExperimentConfig.from_dict({"trials": 0})
    with pytest.raises(ConfigError, match="p_list"):
        ExperimentConfig.from_dict({"p_list": [2048]})
    with pytest.raises(ConfigError, match="bogus"):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError, match="n_list"):
        ExperimentConfig.from_dict(dict(SMALL_FIG2, n_list=[3]))


def test_outputs_written(tmp_path):
    cfg = small("figure2")
    rows = run_experiment(cfg)
    paths = write_outputs(cfg, rows, str(tmp_path / "fig.csv"))
    assert [p.rsplit(".", 1)[-1] for p in paths] == ["csv", "json", "png"]
    side = json.loads((tmp_path / "fig.csv.json").read_text())
    assert side["config"]["n_list"] == [12, 20]
    methods = {r.method for r in rows}
    assert methods == {"proposed-fit", "scm", "shrinkage-init"}
