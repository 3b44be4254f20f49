"""Zigzag layout engine and SVG rendering."""

from pathlib import Path

import numpy as np
import pytest

from zenscope.zenpath import Zenpath, eulerian_all_pairs
from zenscope.zenplot import (
    LayoutGrid,
    acf_panel,
    default_zigzag,
    layout,
    qq_panel,
    render,
    scatter_panel,
    zigzag_cells,
)

DATA = Path(__file__).parent / "data"


def golden_two_panel_svg() -> str:
    """The frozen two-panel scatter rendering (regenerated only on review)."""
    path = Zenpath(groups=((0, 1, 2),))
    grid = layout(path, width=4)
    t = np.linspace(0.05, 0.95, 20)
    panels = [
        scatter_panel(t, t**2),
        scatter_panel(t, 1.0 - t),
    ]
    return render(grid, panels)


class TestDefaultZigzag:
    def test_first_five_cells(self):
        assert zigzag_cells(5, 8) == [(0, 0), (0, 1), (1, 1), (1, 2), (0, 2)]

    def test_single_panel_empty_sequence(self):
        assert default_zigzag(1, 8) == []

    def test_band_capacity(self):
        # A full band holds 2W-1 panels for even widths; the strict
        # horizontal/vertical alternation caps odd widths at 2W-2.
        for width in range(2, 7):
            cells = zigzag_cells(80, width)
            bands = {}
            for r, c in cells:
                bands.setdefault(r // 2, []).append((r, c))
            expect = 2 * width - 1 if width % 2 == 0 else 2 * width - 2
            full = [len(v) for k, v in sorted(bands.items())][:-1]
            assert all(n == expect for n in full)

    def test_direction_reverses_after_descent(self):
        dirs = default_zigzag(12, 3)
        cells = zigzag_cells(12, 3)
        # Band 0 travels right, band 1 left, band 2 right again.
        cols0 = [c for r, c in cells if r < 2]
        cols1 = [c for r, c in cells if 2 <= r < 4]
        assert cols0 == sorted(cols0)
        assert cols1 == sorted(cols1, reverse=True)

    def test_never_collides(self):
        for width in (2, 3, 5, 8):
            cells = zigzag_cells(200, width)
            assert len(set(cells)) == len(cells)
            assert all(0 <= c < width for _, c in cells)

    def test_length_contract(self):
        assert len(default_zigzag(17, 4)) == 16

    def test_width_floor(self):
        with pytest.raises(ValueError):
            default_zigzag(5, 1)


class TestLayout:
    def test_single_pair(self):
        grid = layout(Zenpath(groups=((0, 1),)), width=4)
        assert len(grid.cells_2d) == 1
        axes = [c for c in grid.cells_1d if c.role == "axis"]
        assert len(axes) == 2
        assert {c.labels[0] for c in axes} == {"V1", "V2"}

    def test_chain_emits_d_minus_one_cells(self):
        d = 30
        grid = layout(Zenpath(groups=(tuple(range(d)),)), width=6)
        assert len(grid.cells_2d) == d - 1

    def test_collision_names_step(self):
        path = Zenpath(groups=((0, 1, 2, 3),))
        with pytest.raises(ValueError, match="step 3"):
            layout(path, dirs=["r", "l"], width=4)

    def test_axis_sharing_rule(self):
        # Sideways move keeps the vertical variate; vertical move keeps the
        # horizontal one; the shared variate names the connector strip.
        path = Zenpath(groups=(tuple(range(7)),))
        grid = layout(path, width=8)
        connectors = {c.gap: c for c in grid.cells_1d if c.role == "connector"}
        for prev, cur in zip(grid.cells_2d, grid.cells_2d[1:]):
            if cur.entered in ("l", "r"):
                assert cur.vvar == prev.vvar or cur.vvar == prev.hvar
                shared = cur.vvar
            else:
                shared = cur.hvar
            assert shared in (prev.hvar, prev.vvar)
            gap = [c for c in connectors.values()
                   if c.labels == (f"V{shared + 1}",)]
            assert gap  # the shared variate appears on a connector strip

    def test_narrative_variate_orientation(self):
        # First panel: V1 horizontal, V2 vertical; entered-right panel keeps
        # the vertical variate; entered-down keeps the horizontal.
        grid = layout(Zenpath(groups=(tuple(range(6)),)), width=8)
        p1, p2, p3 = grid.cells_2d[:3]
        assert (p1.hvar, p1.vvar) == (0, 1)
        assert p2.entered == "r" and (p2.hvar, p2.vvar) == (2, 1)
        assert p3.entered == "d" and (p3.hvar, p3.vvar) == (2, 3)

    def test_group_separator(self):
        grid = layout(Zenpath(groups=((0, 1), (2, 3))), width=4)
        seps = [c for c in grid.cells_1d if c.role == "separator"]
        assert len(seps) == 1
        assert seps[0].labels == ("V2", "V3")

    def test_explicit_direction_sequence(self):
        # Two-per-band Q-Q wall: d then a run of r's, then d,d and l's back.
        path = Zenpath(groups=(tuple(range(10)),))
        dirs = ["d", "r", "r", "r", "d", "l", "l", "l"]
        grid = layout(path, dirs=dirs, width=4)
        assert len(grid.cells_2d) == 9
        rows = {c.row for c in grid.cells_2d}
        assert rows == {0, 1, 2}

    def test_wrong_direction_count(self):
        with pytest.raises(ValueError, match="directions"):
            layout(Zenpath(groups=((0, 1, 2),)), dirs=["r", "r"], width=4)

    def test_unknown_direction(self):
        with pytest.raises(ValueError, match="unknown direction"):
            layout(Zenpath(groups=((0, 1, 2),)), dirs=["x"], width=4)

    def test_var_names_used(self):
        grid = layout(Zenpath(groups=((0, 1),)), width=4, var_names=("AAPL", "MSFT"))
        labels = {c.labels[0] for c in grid.cells_1d}
        assert labels == {"AAPL", "MSFT"}


class TestRender:
    def test_empty_grid_valid_svg(self):
        grid = LayoutGrid(cells_2d=(), cells_1d=(), n_rows=0, n_cols=0)
        svg = render(grid, [])
        assert svg.startswith("<?xml") and "</svg>" in svg

    def test_deterministic_bytes(self):
        assert golden_two_panel_svg() == golden_two_panel_svg()

    def test_golden_file(self):
        expected = (DATA / "golden_two_panel.svg").read_text(encoding="utf-8")
        assert golden_two_panel_svg() == expected

    def test_panel_count_mismatch(self):
        grid = layout(Zenpath(groups=((0, 1),)), width=4)
        with pytest.raises(ValueError, match="PanelSpec"):
            render(grid, [])

    def test_scatter_opacity_applied(self):
        svg = golden_two_panel_svg()
        assert 'fill-opacity="0.25"' in svg

    def test_acf_panel_band_lines(self):
        grid = layout(Zenpath(groups=((0, 1),)), width=4)
        svg = render(grid, [acf_panel(np.array([0.5, 0.2, -0.1]), 0.098)])
        assert "stroke-dasharray" in svg

    def test_qq_panel_envelope_layers(self):
        from zenscope.margins import qq_envelope

        rng = np.random.default_rng(0)
        sample = rng.standard_t(5.0, size=40)
        env = qq_envelope(5.0, 40, nsim=100, seed=1)
        grid = layout(Zenpath(groups=((0, 1),)), width=4)
        svg = render(grid, [qq_panel(sample, 5.0, env)])
        assert svg.count("<polygon") == 4  # range + three central bands

    def test_style_override(self):
        grid = layout(Zenpath(groups=((0, 1),)), width=4)
        t = np.linspace(0.1, 0.9, 5)
        svg = render(grid, [scatter_panel(t, t)], style={"point_opacity": 0.5})
        assert 'fill-opacity="0.5"' in svg


class TestPanelBuilders:
    def test_scatter_length_mismatch(self):
        with pytest.raises(ValueError, match="equal length"):
            scatter_panel(np.zeros(3), np.zeros(4))

    def test_qq_sorts_sample(self):
        spec = qq_panel(np.array([3.0, 1.0, 2.0]), 5.0)
        np.testing.assert_array_equal(spec.data["sample"], [1.0, 2.0, 3.0])

    def test_qq_envelope_size_mismatch(self):
        from zenscope.margins import qq_envelope

        env = qq_envelope(5.0, 10, nsim=100, seed=0)
        with pytest.raises(ValueError, match="match"):
            qq_panel(np.zeros(5), 5.0, env)

    def test_acf_lag_count(self):
        spec = acf_panel([0.3, 0.1], 0.1)
        assert len(spec.data["values"]) == 2

    def test_unknown_kind(self):
        from zenscope.zenplot import PanelSpec

        with pytest.raises(ValueError, match="unknown panel kind"):
            PanelSpec("heatmap", {})
