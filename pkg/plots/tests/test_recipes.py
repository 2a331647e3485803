import shutil
import subprocess

import pytest

from cavityplots import FigureRecipe, SchemaError, read_table, render

CLI = shutil.which("cavitychaos")

pytestmark = pytest.mark.skipif(
    CLI is None, reason="simulation CLI not installed; cannot generate CSVs")


def run_cli(*args):
    subprocess.run([CLI, *map(str, args)], check=True, capture_output=True)


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    """Desk-scale CSVs produced by the simulation CLI, one per figure kind."""
    root = tmp_path_factory.mktemp("csv")
    run_cli("doppler", "--delta", 32, "--p0", 32000, "--zin", -1,
            "--tau", 5, "--samples", 101, "--out", root / "doppler.csv")
    run_cli("map", "--axis1", "delta:0:0.5:3", "--axis2",
            "log10alpha:-3:-2:3", "--tau", 50, "--out", root / "map.csv")
    run_cli("scan-inversion", "--tau", 2, "--zin-range=-0.8:0.8:5",
            "--rel-tol", 1e-8, "--abs-tol", 1e-10, "--out", root / "zscan.csv")
    run_cli("scan-exit", "--delta", 0, "--p0-range", "40:120:25",
            "--horizon", 300, "--rel-tol", 1e-8, "--abs-tol", 1e-10,
            "--out", root / "exits.csv")
    run_cli("simulate", "--tau", 5, "--sample-interval", 0.5,
            "--out", root / "traj.csv")
    return root


@pytest.mark.parametrize("figure_id,csv,extra", [
    ("fig1", "doppler.csv", {}),
    ("fig2", "map.csv", {}),
    ("fig3", "map.csv", {}),
    ("fig5", "zscan.csv", {}),
    ("fig6", "exits.csv", {"zoom_windows": ((40.0, 120.0), (60.0, 80.0))}),
    ("fig7", "exits.csv", {}),
    ("fig8", "traj.csv", {}),
])
def test_renders_every_figure(artifacts, tmp_path, figure_id, csv, extra):
    out = tmp_path / f"{figure_id}.png"
    recipe = FigureRecipe(figure_id=figure_id,
                          inputs=(str(artifacts / csv),),
                          output=str(out), **extra)
    assert render(recipe) == str(out)
    assert out.stat().st_size > 0


def test_rendering_is_byte_deterministic(artifacts, tmp_path):
    paths = []
    for name in ("a.png", "b.png"):
        out = tmp_path / name
        render(FigureRecipe(figure_id="fig5",
                            inputs=(str(artifacts / "zscan.csv"),),
                            output=str(out)))
        paths.append(out.read_bytes())
    assert paths[0] == paths[1]


def test_schema_mismatch_names_missing_columns(artifacts, tmp_path):
    # an exit scan fed to the inversion scatter lacks z_in/z_out
    recipe = FigureRecipe(figure_id="fig5",
                          inputs=(str(artifacts / "exits.csv"),),
                          output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="z_in"):
        render(recipe)


def test_empty_csv_is_a_clean_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    recipe = FigureRecipe(figure_id="fig1", inputs=(str(empty),),
                          output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="empty"):
        render(recipe)
    assert not (tmp_path / "x.png").exists()


def test_unknown_figure_id_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown figure id"):
        render(FigureRecipe(figure_id="fig9", inputs=("x.csv",),
                            output=str(tmp_path / "x.png")))


def test_read_table_parses_comments_and_blanks(artifacts):
    table = read_table(artifacts / "exits.csv")
    assert "p0" in table["columns"]
    assert table["comments"]
    assert table["data"].shape[0] == 25


def test_cli_entry_point(artifacts, tmp_path):
    out = tmp_path / "fig1.png"
    proc = subprocess.run(
        ["cavitychaos-plot", "--figure", "fig1",
         "--inputs", str(artifacts / "doppler.csv"), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()


def test_cli_reports_schema_errors(artifacts, tmp_path):
    proc = subprocess.run(
        ["cavitychaos-plot", "--figure", "fig5",
         "--inputs", str(artifacts / "exits.csv"),
         "--out", str(tmp_path / "x.png")],
        capture_output=True, text=True)
    assert proc.returncode == 1
    assert "z_in" in proc.stderr
