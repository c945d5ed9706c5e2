import xml.etree.ElementTree as ET
from collections import Counter

from mtrobust import svg
from mtrobust.divergence import DivergenceHistogram, distribution_stats
from mtrobust.report import BinnedSeries, GridCell

NS = "{http://www.w3.org/2000/svg}"


def parse(doc):
    return ET.fromstring(doc.split("?>", 1)[1])


def test_smiles_histogram_bars():
    h = DivergenceHistogram(Counter({-6: 1, -1: 1, 0: 1}), 1)
    doc = svg.emit_svg(svg.HISTOGRAM, (h, distribution_stats(h)), "overall")
    bars = [r for r in parse(doc).iter(NS + "rect") if r.get("class") == "bar"]
    assert sorted(int(b.get("data-offset")) for b in bars) == [-6, -1, 0]
    assert {b.get("data-count") for b in bars} == {"1"}
    assert len({b.get("height") for b in bars}) == 1
    assert "mu=-2.33" in doc


def test_empty_histogram_placeholder():
    h = DivergenceHistogram()
    doc = svg.emit_svg(svg.HISTOGRAM, (h, distribution_stats(h)))
    assert "no divergent tokens" in doc
    assert not [r for r in parse(doc).iter(NS + "rect") if r.get("class") == "bar"]


def test_single_bubble_position():
    cell = GridCell("<10/2", 7, 40.0, 55.0, True, "", "<10", 2)
    off = GridCell("<5/1", 3, 0.5, None, False, "rb-below-threshold", "<5", 1)
    doc = svg.emit_svg(svg.BUBBLES, [cell, off])
    circles = list(parse(doc).iter(NS + "circle"))
    assert len(circles) == 1
    c = circles[0]
    assert (float(c.get("cx")), float(c.get("cy"))) == svg.cell_center("<10", 2)
    assert (float(c.get("cx")), float(c.get("cy"))) == (svg.MARGIN + 1.5 * svg.CELL,
                                                        svg.MARGIN + 1.5 * svg.CELL)
    assert float(c.get("r")) == svg.MAX_RADIUS
    assert float(c.get("fill-opacity")) == 0.4


def test_error_bars():
    series = [BinnedSeries("1", 10, 30.0, 60.0), BinnedSeries("2", 5, 10.0, 50.0),
              BinnedSeries("3", 0, None, None, False, "empty")]
    doc = svg.emit_svg(svg.ERROR_BARS, series)
    root = parse(doc)
    bars = [r for r in root.iter(NS + "rect") if r.get("class") == "bar"]
    assert [b.get("data-bin") for b in bars] == ["1", "2"]
    assert len(list(root.iter(NS + "polyline"))) == 1
    assert "no sentences" in svg.emit_svg(svg.ERROR_BARS, series[2:])


def test_escaping():
    h = DivergenceHistogram(Counter({1: 2, 2: 1}), 1)
    doc = svg.emit_svg(svg.HISTOGRAM, (h, distribution_stats(h)), "error_type:<R&D>")
    parse(doc)
    assert "&lt;R&amp;D&gt;" in doc
