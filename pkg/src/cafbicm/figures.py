"""Parameter grids that regenerate the threshold and rate curves of the study.

Each figure returns ``{curve_name: (columns, rows)}``.  The ``desk`` preset trades
precision for runtime; ``full`` uses population 1e5 / 2000 iterations and 1e6 MC samples.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .channel import ChannelParams
from .density_evolution import PRESETS, DeParams, find_threshold_auto
from .modulation import make_constellation
from .sir import sweep

SCALE = {
    "desk": {**PRESETS["desk"], "samples": 10**5, "theta_steps": 16},
    "full": {**PRESETS["full"], "samples": 10**6, "theta_steps": 32},
}

ENSEMBLES = [(3, 6), (3, 9), (3, 12), (3, 18)]
FIG3_ENSEMBLES = [(3, 4), (3, 6), (3, 9), (3, 12), (3, 18)]
# SD-optimal phase differences; CAF rates peak at theta = 0
SD_THETA = {"qpsk": math.pi / 4, "8psk": math.pi / 8}

THRESHOLD_COLUMNS = ["dv", "dc", "rate", "scheme", "theta", "threshold_psnr_db", "bracket_lo", "bracket_hi", "seed"]
SIR_COLUMNS = ["scheme", "modulation", "theta", "psnr_db", "sir_bits", "stderr"]


def _threshold_row(dv, dc, modulation, scheme, theta, scale, seed):
    c = make_constellation(modulation)
    params = DeParams(dv, dc, ChannelParams(c, 1.0, theta, scheme), scale["population"], scale["iters"])
    res = find_threshold_auto(params, rng=seed)
    return (dv, dc, params.rate, scheme, theta, res.threshold_psnr_db, res.bracket_lo, res.bracket_hi, seed)


def _thresholds(ensembles, modulation, scheme, theta, scale, seed, workers):
    jobs = [(dv, dc, modulation, scheme, theta, scale, seed + i) for i, (dv, dc) in enumerate(ensembles)]
    if workers <= 1:
        rows = [_threshold_row(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_threshold_row, *zip(*jobs)))
    return THRESHOLD_COLUMNS, rows


def _sir_rows(which, modulation, thetas, psnrs, scale, seed, workers):
    c = make_constellation(modulation)
    pts = sweep(which, c, thetas, psnrs, samples=scale["samples"], seed=seed, workers=workers)
    return SIR_COLUMNS, [(p.scheme, modulation, p.theta, p.psnr_db, p.estimate.value, p.estimate.stderr)
                         for p in pts]


def _theta_grid(period: float, steps: int) -> list[float]:
    return list(np.linspace(0.0, period, steps + 1))


def reproduce_figure(name: str, preset: str = "desk", seed: int | None = None, workers: int = 1) -> dict:
    if preset not in SCALE:
        raise ValueError(f"unknown preset {preset!r}")
    scale = SCALE[preset]
    seed = 0 if seed is None else seed
    psnr_grid = list(np.arange(-5.0, 20.0 + 1e-9, 0.5))

    if name == "fig3":
        return {
            "thresholds_single": _thresholds(FIG3_ENSEMBLES, "qpsk", "single", 0.0, scale, seed, workers),
            "sir_single": _sir_rows("single", "qpsk", [0.0], psnr_grid, scale, seed, workers),
        }
    if name in ("fig4", "fig5"):
        modulation, psnr, period = ("qpsk", 6.0, math.pi / 2) if name == "fig4" else ("8psk", 10.0, math.pi / 4)
        thetas = _theta_grid(period, scale["theta_steps"])
        return {
            "sir_caf_vs_theta": _sir_rows("caf", modulation, thetas, [psnr], scale, seed, workers),
            "sir_sd_vs_theta": _sir_rows("sd", modulation, thetas, [psnr], scale, seed + 1, workers),
        }
    if name in ("fig6", "fig7"):
        modulation = "qpsk" if name == "fig6" else "8psk"
        sd_theta = SD_THETA[modulation]
        return {
            "thresholds_caf_theta0": _thresholds(ENSEMBLES, modulation, "caf", 0.0, scale, seed, workers),
            "thresholds_caf_theta_sd": _thresholds(ENSEMBLES, modulation, "caf", sd_theta, scale, seed + 100,
                                                   workers),
            "sir_caf": _sir_rows("caf", modulation, [0.0], psnr_grid, scale, seed, workers),
            "sir_sd": _sir_rows("sd", modulation, [sd_theta], psnr_grid, scale, seed + 1, workers),
        }
    raise ValueError(f"unknown figure {name!r}")
