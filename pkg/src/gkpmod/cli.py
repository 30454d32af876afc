"""Command-line interface.

    gkpmod <command> [--config FILE] [--seed N] [--threads N] [--out DIR]
                     [--set key.path=value ...]

Commands reproduce the quantitative figure and table checks: fig-wigner,
fig-scaling, fig-cubic, drive, params, release, appd.  Every command is
deterministic under fixed seed and config, writes machine-readable CSV plus
a JSON manifest, and exits 0 on success, 2 on configuration errors, 3 on
numerical regime errors.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import analytics, circuit, drive as drive_mod, hilbert, modular, noise, release
from .config import resolve
from .errors import ConfigError, GkpmodError
from .manifest import RunManifest, write_csv
from .rng import substream

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# --------------------------------------------------------------------------
# defaults
# --------------------------------------------------------------------------

DEFAULTS = {
    "fig-wigner": {
        "seed": 1,
        "nbar": 3.0,
        "target_dim": 500,
        "ancilla_cutoff": 20,
        "inputs": {"vacuum": "vacuum", "squeezed": "squeezed:3"},
        "grid": {"extent": 6.0, "points": 81},
        "density_grid": {"extent_pad": 3.0, "points": 121},
    },
    "fig-scaling": {
        "seed": 1,
        "nbars": [1.0, 2.0, 3.0, 4.0],
        "shots": 200,
        "target_dim": 500,
        "ancilla_cutoff": 20,
        "input": "vacuum",
    },
    "fig-cubic": {
        "seed": 1,
        "nbar": 3.0,
        "target_dim": 500,
        "ancilla_cutoff": 20,
        "input": "squeezed:3",
        "strength_ratio": 1.0e-3,
        "grid": {"extent": 6.0, "points": 81},
    },
    "drive": {
        "seed": 1,
        "omega_t_hz": 500.0e6,
        "deltas": [1.0, 0.5, 0.1],
        "waveform_points": 2001,
        "n_harmonics": 4,
        "sample_rate": 2.4e9,
        "epsilon": 0.1,
        "echo_periods": 8,
    },
    "params": {
        "seed": 1,
        "e_j_hz": 10.0e9,
        "f_a_hz": 10.0e9,
        "f_t_hz": 0.5e9,
        "l_a_henry": 2.0e-9,
        "l_t_henry": 0.2e-9,
        "c_j_ratio": 0.01,
        "delta_drive": 1.0,
        "kappa_c": 1.0e4,          # 1/(100 us)
        "nbar": 3.0,
    },
    "release": {
        "seed": 1,
        "nbar": 3.0,
        "target_dim": 300,
        "kappa_t_meas": 6.0,
        "shots": 500,
        "input": "vacuum",
    },
    "appd": {
        "seed": 1,
        "nbars": [1.0, 2.0, 3.0, 3.5, 4.0],
        "shots": 200,
        "target_dim": 500,
        "ancilla_cutoff": 20,
    },
}


def _prep(nbar: float) -> modular.AncillaPrep:
    return modular.AncillaPrep(math.sqrt(nbar))


def _phase_grid(extent: float, points: int) -> np.ndarray:
    return np.linspace(-extent, extent, points)


def _emit_field(out: Path, name: str, qs, ps, field, man: RunManifest) -> None:
    rows = []
    for i, qv in enumerate(qs):
        for j, pv in enumerate(ps):
            rows.append((qv, pv, field[i, j]))
    man.add(write_csv(out / name, ["q", "p", "value"], rows))


def _emit_density_grid(out: Path, name: str, eng, psi, extent: float, points: int,
                       man: RunManifest) -> None:
    xs = np.linspace(-extent, extent, points)
    rows = []
    for x in xs:
        for y in xs:
            rows.append((x, y, eng.density(psi, complex(x, y))))
    man.add(write_csv(out / name, ["re_beta", "im_beta", "density"], rows))


# --------------------------------------------------------------------------
# command bodies
# --------------------------------------------------------------------------

def run_fig_wigner(cfg: dict, out: Path, threads: int) -> None:
    man = RunManifest("fig-wigner", cfg, cfg["seed"])
    space = hilbert.FockSpace(cfg["target_dim"])
    prep = _prep(cfg["nbar"])
    qs = _phase_grid(cfg["grid"]["extent"], cfg["grid"]["points"])
    dens_extent = math.sqrt(cfg["nbar"]) + cfg["density_grid"]["extent_pad"]
    summary = []
    for name, spec in cfg["inputs"].items():
        psi = modular.build_input_state(spec, space)
        eng = modular.get_engine(prep, space, cfg["ancilla_cutoff"])
        rec = eng.maximum_likelihood(psi)
        post, _ = eng.post_state(psi, rec.beta)
        rep = hilbert.effective_squeezing(post)
        _emit_field(out, f"wigner_input_{name}.csv", qs, qs,
                    hilbert.phase_space(psi, qs, qs, "wigner"), man)
        _emit_field(out, f"wigner_post_{name}.csv", qs, qs,
                    hilbert.phase_space(post, qs, qs, "wigner"), man)
        _emit_density_grid(out, f"density_{name}.csv", eng, psi,
                           dens_extent, cfg["density_grid"]["points"], man)
        summary.append((name, rec.beta.real, rec.beta.imag, rec.phi,
                        rec.concentration, rep.delta_q, rep.delta_p,
                        rep.mean_photons))
    man.add(write_csv(out / "squeezing_summary.csv",
                      ["input", "ml_re_beta", "ml_im_beta", "phi", "K",
                       "delta_q", "delta_p", "mean_photons"], summary))
    man.write(out)


def run_fig_scaling(cfg: dict, out: Path, threads: int) -> None:
    man = RunManifest("fig-scaling", cfg, cfg["seed"])
    rows = []
    shot_rows = []
    for nbar in cfg["nbars"]:
        alpha = math.sqrt(nbar)
        pcfg = modular.ProtocolConfig(
            ancilla=_prep(nbar), target_dim=cfg["target_dim"],
            ancilla_fock_cutoff=cfg["ancilla_cutoff"], which_stabilizer="S_q",
            shots=cfg["shots"], seed=cfg["seed"], input_state=cfg["input"])
        results = modular.run_protocol(pcfg, threads=threads)
        dqs = np.array([r.report.delta_q for r in results])
        est, lower = analytics.expected_squeezing(alpha)
        rows.append((nbar, alpha, dqs.mean(), dqs.std(ddof=1),
                     analytics.villain_delta(alpha), est, lower))
        for r in results:
            shot_rows.append((nbar, r.shot, r.record.beta.real, r.record.beta.imag,
                              r.record.phi, r.record.concentration,
                              r.report.delta_q, r.report.delta_p,
                              r.report.mean_photons))
    man.add(write_csv(out / "scaling.csv",
                      ["nbar", "alpha", "mc_mean_delta_q", "mc_std_delta_q",
                       "villain_delta", "estimate", "lower_bound"], rows))
    man.add(write_csv(out / "scaling_shots.csv",
                      ["nbar", "shot", "re_beta", "im_beta", "phi", "K",
                       "delta_q", "delta_p", "mean_photons"], shot_rows))
    man.write(out)


def run_fig_cubic(cfg: dict, out: Path, threads: int) -> None:
    man = RunManifest("fig-cubic", cfg, cfg["seed"])
    space = hilbert.FockSpace(cfg["target_dim"])
    prep = _prep(cfg["nbar"])
    psi = modular.build_input_state(cfg["input"], space)
    qs = _phase_grid(cfg["grid"]["extent"], cfg["grid"]["points"])
    rows = []
    for corrected in (False, True):
        params = noise.CubicParams(cfg["strength_ratio"], corrected_drive=corrected)
        eng = noise.cubic_measurement_engine(prep, params, space, cfg["ancilla_cutoff"])
        rec = eng.maximum_likelihood(psi)
        post, _ = eng.post_state(psi, rec.beta)
        rep = hilbert.effective_squeezing(post)
        mode = "corrected" if corrected else "uncorrected"
        _emit_field(out, f"wigner_post_{mode}.csv", qs, qs,
                    hilbert.phase_space(post, qs, qs, "wigner"), man)
        rows.append((mode, cfg["strength_ratio"], rec.beta.real, rec.beta.imag,
                     rep.delta_q, rep.delta_p, rep.mean_photons))
    man.add(write_csv(out / "cubic_summary.csv",
                      ["mode", "strength_ratio", "ml_re_beta", "ml_im_beta",
                       "delta_q", "delta_p", "mean_photons"], rows))
    man.write(out)


def run_drive(cfg: dict, out: Path, threads: int) -> None:
    man = RunManifest("drive", cfg, cfg["seed"])
    omega_t = 2 * math.pi * cfg["omega_t_hz"]
    harm_rows, synth_rows, echo_rows = [], [], []
    for delta in cfg["deltas"]:
        spec = drive_mod.DriveSpec(delta, omega_t)
        t = np.linspace(0, spec.period, cfg["waveform_points"])
        wf = drive_mod.exact_waveform(spec, t)
        man.add(write_csv(out / f"waveform_delta{delta:g}.csv", ["t", "x_ext"],
                          zip(wf.times, wf.values)))
        coeffs = drive_mod.fourier_coeffs(spec, cfg["n_harmonics"])
        freqs = drive_mod.harmonic_frequencies(spec, cfg["n_harmonics"])
        for n, (w, b) in enumerate(zip(freqs, coeffs)):
            harm_rows.append((delta, n, w, b))
        for nh in range(1, cfg["n_harmonics"] + 1):
            synth_rows.append((delta, nh, cfg["sample_rate"],
                               drive_mod.synthesis_error(spec, nh, cfg["sample_rate"])))
        n_periods = cfg["echo_periods"]
        tt = np.linspace(0, n_periods * spec.period, 40001)
        _, fixed = drive_mod.flux_noise_prefactor(spec, cfg["epsilon"], tt)
        schedule = [1.0 if k % 2 == 0 else -1.0 for k in range(n_periods)]
        _, alt = drive_mod.flux_noise_prefactor(spec, cfg["epsilon"], tt,
                                                branch_schedule=schedule)
        echo_rows.append((delta, cfg["epsilon"], abs(fixed), abs(alt)))
    man.add(write_csv(out / "harmonics.csv", ["delta", "n", "omega_n", "b_n"], harm_rows))
    man.add(write_csv(out / "synthesis.csv",
                      ["delta", "n_harmonics", "sample_rate", "rel_error"], synth_rows))
    man.add(write_csv(out / "flux_echo.csv",
                      ["delta", "epsilon", "fixed_branch_residual",
                       "alternating_residual"], echo_rows))
    man.write(out)


def run_params(cfg: dict, out: Path, threads: int) -> None:
    man = RunManifest("params", cfg, cfg["seed"])
    spec = circuit.CircuitSpec.from_frequencies(
        e_j_hz=cfg["e_j_hz"], f_a_hz=cfg["f_a_hz"], f_t_hz=cfg["f_t_hz"],
        l_a_henry=cfg["l_a_henry"], l_t_henry=cfg["l_t_henry"],
        c_j_ratio=cfg["c_j_ratio"], delta_drive=cfg["delta_drive"])
    p = circuit.derive_params(spec)
    two_pi = 2 * math.pi
    rows = [
        ("xi_a", p.xi_a, "1"), ("xi_t", p.xi_t, "1"),
        ("f_a", p.omega_a / two_pi, "Hz"), ("f_t", p.omega_t / two_pi, "Hz"),
        ("g_over_2pi", p.g / two_pi, "Hz"), ("t_coupl", p.t_coupl, "s"),
        ("cubic_ratio", p.cubic_ratio, "1"),
    ]
    man.add(write_csv(out / "derived_params.csv", ["quantity", "value", "unit"], rows))
    report = circuit.validate_table(spec, kappa_c=cfg["kappa_c"],
                                    alpha=math.sqrt(cfg["nbar"]))
    man.add(write_csv(out / "table_checks.csv",
                      ["quantity", "value", "unit", "band_lo", "band_hi", "pass"],
                      report.rows()))
    pot_rows = []
    for xe in np.linspace(0, math.pi, 9):
        xa, xt = circuit.potential_minimum(spec, float(xe))
        pot_rows.append((xe, xa, xt, spec.e_j_hz / spec.e_l_t_hz))
    man.add(write_csv(out / "potential_minimum.csv",
                      ["x_ext", "x_a_star", "x_t_star", "first_order_bound"], pot_rows))
    if report.flags:
        click.echo("flags: " + "; ".join(report.flags), err=True)
    man.write(out)


def run_release(cfg: dict, out: Path, threads: int) -> None:
    man = RunManifest("release", cfg, cfg["seed"])
    space = hilbert.FockSpace(cfg["target_dim"])
    prep = _prep(cfg["nbar"])
    psi = modular.build_input_state(cfg["input"], space)
    rcfg = release.ReleaseConfig(kappa_open=1.0, t_meas=cfg["kappa_t_meas"])
    rel_rows, dir_rows = [], []
    for shot in range(cfg["shots"]):
        rng = substream(cfg["seed"], "release", shot)
        outc, post = release.release_shot(psi, prep, rcfg, rng)
        rep = hilbert.effective_squeezing(post)
        rel_rows.append((shot, outc.i_out, outc.q_out, outc.phi_out, outc.k_eff,
                         rep.delta_q, rep.delta_p))
        rng2 = substream(cfg["seed"], "release-direct", shot)
        rec = modular.sample_outcome(psi, prep, rng2)
        dpost, _ = modular.post_measurement_state(psi, prep, rec.beta)
        drep = hilbert.effective_squeezing(dpost)
        dir_rows.append((shot, rec.beta.real, rec.beta.imag, rec.phi,
                         rec.concentration, drep.delta_q, drep.delta_p,
                         drep.mean_photons))
    man.add(write_csv(out / "release_shots.csv",
                      ["shot", "I_out", "Q_out", "phi_out", "K_eff",
                       "delta_q", "delta_p"], rel_rows))
    man.add(write_csv(out / "direct_shots.csv",
                      ["shot", "re_beta", "im_beta", "phi", "K", "delta_q",
                       "delta_p", "mean_photons"], dir_rows))
    from scipy.stats import ks_2samp
    mean_k2, bound = release.release_moments(prep, rcfg)
    keff2 = np.array([r[4] for r in rel_rows]) ** 2
    ks = ks_2samp([r[5] for r in rel_rows], [r[5] for r in dir_rows])
    man.add(write_csv(out / "release_summary.csv",
                      ["quantity", "value"],
                      [("mean_keff_sq_mc", keff2.mean()),
                       ("mean_keff_sq_closed", mean_k2),
                       ("bound_delta_q", bound),
                       ("ks_statistic", ks.statistic),
                       ("ks_pvalue", ks.pvalue)]))
    man.write(out)


def run_appd(cfg: dict, out: Path, threads: int) -> None:
    man = RunManifest("appd", cfg, cfg["seed"])
    rows = []
    for nbar in cfg["nbars"]:
        pcfg = modular.ProtocolConfig(
            ancilla=_prep(nbar), target_dim=cfg["target_dim"],
            ancilla_fock_cutoff=cfg["ancilla_cutoff"], which_stabilizer="S_q",
            shots=cfg["shots"], seed=cfg["seed"], input_state="vacuum")
        for r in modular.run_protocol(pcfg, threads=threads):
            rows.append((nbar, r.shot, r.report.mean_photons, r.report.delta_p,
                         abs(r.report.delta_p - 1.0)))
    man.add(write_csv(out / "appd.csv",
                      ["nbar", "shot", "mean_photons", "delta_p",
                       "delta_p_rel_err"], rows))
    man.write(out)


RUNNERS = {
    "fig-wigner": run_fig_wigner,
    "fig-scaling": run_fig_scaling,
    "fig-cubic": run_fig_cubic,
    "drive": run_drive,
    "params": run_params,
    "release": run_release,
    "appd": run_appd,
}


# --------------------------------------------------------------------------
# click wiring
# --------------------------------------------------------------------------

def _command(name):
    @click.command(name=name, help=f"emit the data for the {name} check")
    @click.option("--config", "config_path", type=click.Path(), default=None)
    @click.option("--seed", type=int, default=None)
    @click.option("--threads", type=int, default=1)
    @click.option("--out", "out_dir", type=click.Path(), default=".")
    @click.option("--set", "overrides", multiple=True,
                  help="dotted-path config override, e.g. --set grid.points=41")
    def cmd(config_path, seed, threads, out_dir, overrides):
        try:
            cfg = resolve(DEFAULTS[name], config_path, overrides, seed)
        except ConfigError as err:
            click.echo(json.dumps({"error": "config", "detail": str(err)}), err=True)
            sys.exit(EXIT_CONFIG)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        try:
            RUNNERS[name](cfg, out, threads)
        except GkpmodError as err:
            click.echo(json.dumps({
                "error": type(err).__name__, "command": name, "detail": str(err),
            }), err=True)
            sys.exit(EXIT_NUMERICAL)
        except (TypeError, ValueError, KeyError) as err:
            click.echo(json.dumps({
                "error": "config", "command": name, "detail": str(err),
            }), err=True)
            sys.exit(EXIT_CONFIG)
    return cmd


@click.group()
def main():
    """Reproduce the quantitative checks of the modular-measurement study."""


for _name in RUNNERS:
    main.add_command(_command(_name))


if __name__ == "__main__":
    main()
