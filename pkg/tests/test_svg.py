import xml.etree.ElementTree as ET

import numpy as np
import pytest

from slitmoments.svg import Plot, nice_ticks


@pytest.mark.parametrize(
    "lo, hi, expected",
    [(0.0, 1.0, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]), (-6.0, 6.0, [-5.0, -2.5, 0.0, 2.5, 5.0]), (3.0, 3.0, [3.0])],
)
def test_nice_ticks(lo, hi, expected):
    assert nice_ticks(lo, hi) == pytest.approx(expected)


def test_plot_is_wellformed_and_deterministic():
    x = np.linspace(0, 1, 50)
    def build():
        p = Plot("demo <&>", "x", "y")
        p.band(x, x - 0.1, x + 0.1).line(x, x * x, dash="3 2").points(x[::10], x[::10])
        p.steps(np.linspace(0, 1, 6), [1, 3, 2, 5, 4])
        return p.to_svg()
    a, b = build(), build()
    assert a == b
    root = ET.fromstring(a.split("\n", 1)[1])
    ns = "{http://www.w3.org/2000/svg}"
    assert root.get("version") == "1.1"
    assert len(root.findall(f".//{ns}polyline")) == 2
    assert len(root.findall(f".//{ns}polygon")) == 1
    assert len(root.findall(f".//{ns}circle")) == 5


def test_nan_points_are_skipped():
    svg = Plot().line([0, 1, 2], [0, np.nan, 1]).to_svg()
    line = next(s for s in svg.splitlines() if s.startswith("<polyline"))
    assert "nan" not in line.lower()
    assert line.count(",") == 2
