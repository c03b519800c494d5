from rmtwasserstein.harness import ResultRow
from rmtwasserstein.plotting import render


def test_table1_png(tmp_path):
    rows = [ResultRow(p, 10, 20, "mean", m, v * p, 1.0)
            for p in (2, 4) for m, v in (("true", 1.0), ("rmt-wasserstein", 1.1))]
    path = render("table1", rows, str(tmp_path / "t.png"))
    assert (tmp_path / "t.png").read_bytes()[:4] == b"\x89PNG" and path.endswith("t.png")


def test_no_plot_for_oracle(tmp_path):
    assert render("oracle-check", [], str(tmp_path / "o.png")) is None
