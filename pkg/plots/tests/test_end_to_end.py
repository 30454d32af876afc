"""Every simulation CLI output renders to an image without error.

Runs the primary CLI at reduced scale (its external interface), then feeds
each command's outputs through the matching figure recipe.
"""

import math

import pytest
from click.testing import CliRunner

import render
from render import FigureRecipe

gkpmod_cli = pytest.importorskip("gkpmod.cli")


@pytest.fixture(scope="module")
def cli_outputs(tmp_path_factory):
    base = tmp_path_factory.mktemp("cliout")
    runner = CliRunner()
    small = {
        "fig-wigner": ["--set", "target_dim=120", "--set", "ancilla_cutoff=14",
                       "--set", "nbar=1.0", "--set", "grid.extent=3.0",
                       "--set", "grid.points=13", "--set", "density_grid.points=17",
                       "--set", "inputs={vacuum: vacuum}"],
        "fig-scaling": ["--set", "target_dim=120", "--set", "ancilla_cutoff=14",
                        "--set", "nbars=[1.0, 2.0]", "--set", "shots=6"],
        "fig-cubic": ["--set", "target_dim=120", "--set", "ancilla_cutoff=14",
                      "--set", "nbar=1.0", "--set", "input=vacuum",
                      "--set", "grid.points=11", "--set", "grid.extent=3.0"],
        "drive": ["--set", "deltas=[1.0, 0.5]", "--set", "waveform_points=301",
                  "--set", "echo_periods=2"],
        "release": ["--set", "target_dim=80", "--set", "shots=16",
                    "--set", "nbar=1.0"],
        "appd": ["--set", "target_dim=120", "--set", "ancilla_cutoff=14",
                 "--set", "nbars=[1.0, 2.0]", "--set", "shots=12"],
    }
    for command, args in small.items():
        out = base / command
        res = runner.invoke(gkpmod_cli.main,
                            [command, "--out", str(out), "--seed", "3"] + args,
                            catch_exceptions=False)
        assert res.exit_code == 0, res.output
    return base


def test_fig_wigner_renders(cli_outputs, tmp_path):
    d = cli_outputs / "fig-wigner"
    rec = FigureRecipe("wigner-panels", {
        "manifest": str(d / "fig-wigner.manifest.json"),
        "summary": str(d / "squeezing_summary.csv"),
        "wigner_input": {"vacuum": str(d / "wigner_input_vacuum.csv")},
        "wigner_post": {"vacuum": str(d / "wigner_post_vacuum.csv")},
        "density": {"vacuum": str(d / "density_vacuum.csv")},
    }, "fig_wigner.png")
    assert render.render(rec, tmp_path).exists()


def test_fig_scaling_renders(cli_outputs, tmp_path):
    d = cli_outputs / "fig-scaling"
    rec = FigureRecipe("scaling", {
        "manifest": str(d / "fig-scaling.manifest.json"),
        "scaling": str(d / "scaling.csv"),
    }, "fig_scaling.png")
    assert render.render(rec, tmp_path).exists()


def test_fig_cubic_renders(cli_outputs, tmp_path):
    d = cli_outputs / "fig-cubic"
    rec = FigureRecipe("cubic-panels", {
        "manifest": str(d / "fig-cubic.manifest.json"),
        "summary": str(d / "cubic_summary.csv"),
        "wigner_post": {
            "uncorrected": str(d / "wigner_post_uncorrected.csv"),
            "corrected": str(d / "wigner_post_corrected.csv"),
        },
    }, "fig_cubic.png")
    assert render.render(rec, tmp_path).exists()


def test_drive_renders(cli_outputs, tmp_path):
    d = cli_outputs / "drive"
    rec = FigureRecipe("drive", {
        "manifest": str(d / "drive.manifest.json"),
        "waveforms": {"1.0": str(d / "waveform_delta1.csv"),
                      "0.5": str(d / "waveform_delta0.5.csv")},
        "harmonics": str(d / "harmonics.csv"),
    }, "drive.png")
    assert render.render(rec, tmp_path).exists()


def test_release_renders(cli_outputs, tmp_path):
    d = cli_outputs / "release"
    rec = FigureRecipe("release", {
        "manifest": str(d / "release.manifest.json"),
        "release": str(d / "release_shots.csv"),
        "direct": str(d / "direct_shots.csv"),
    }, "release.png")
    assert render.render(rec, tmp_path).exists()


def test_appd_renders(cli_outputs, tmp_path):
    d = cli_outputs / "appd"
    rec = FigureRecipe("box-whisker", {
        "manifest": str(d / "appd.manifest.json"),
        "appd": str(d / "appd.csv"),
    }, "appd.png")
    assert render.render(rec, tmp_path).exists()
