import numpy as np
import pytest

from holderlevels import errors
from holderlevels.grid import GridSet, box_dimension, estimate_dimension
from holderlevels.holder import GridFunction
from holderlevels.levels import level_sweep, profile_from_counts
from holderlevels.plotting import emit_plot, render


def test_perfect_slope_annotation(tmp_path):
    est = box_dimension([(n, 4 ** n) for n in range(3, 9)])
    path = emit_plot(est, tmp_path / "fit.svg")
    text = open(path).read()
    assert "slope=2.0000" in text
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")


def test_empty_profile_writes_nothing(tmp_path):
    prof = profile_from_counts(np.arange(3.0), (2, 3, 4), np.zeros((3, 3)), 1.0)
    target = tmp_path / "p.svg"
    with pytest.raises(errors.InvalidArgument):
        emit_plot(prof, target)
    assert not target.exists()


def test_plots_are_byte_stable(tmp_path):
    f = GridFunction.from_callable(lambda x: x[:, 0] * x[:, 1], 2, 6)
    prof = level_sweep(f, GridSet.full(2, 6), 16, range(3, 7))
    est = estimate_dimension(GridSet.full(2, 6), range(2, 7))
    for data in (prof, est):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        emit_plot(data, a)
        emit_plot(data, b)
        assert a.read_bytes() == b.read_bytes()


def test_profile_plot_marks_empty_levels():
    counts = np.array([[4, 8, 16], [0, 0, 0], [2, 4, 8]])
    svg = render(profile_from_counts(np.arange(3.0), (2, 3, 4), counts, 1.0))
    assert "nonempty=2" in svg and "<polyline" in svg


def test_unknown_data_type():
    with pytest.raises(errors.InvalidArgument):
        render([1, 2, 3])


def test_unwritable_path(tmp_path):
    est = box_dimension([(n, 2 ** n) for n in range(3, 6)])
    with pytest.raises(OSError):
        emit_plot(est, tmp_path / "missing-dir" / "x.svg")
