"""Received-power comparison of the three optimization pipelines.

For every sample of a chosen split the reference element-wise config,
the combined stripe config, and the network-predicted config are scored
by noiseless received power, 20*log10 of the cascade-gain magnitude.
The gaps (reference minus cheaper method, in dB) quantify how much power
the cheap pipelines give up; summaries report max, mean, median, and the
mean restricted to |elevation| <= 45 degrees, the band where stripe
methods are expected to track the reference closely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from risopt.cnn import Model, pm1_to_states, predict_config
from risopt.data import load_arrays, load_manifest, load_sample_rows, load_splits
from risopt.optimizers import StripeConfig, combine_stripes
from risopt.physics import (
    DB_FLOOR,
    PhaseConfig,
    RxSpec,
    compute_channels,
    compute_illumination,
    objective,
    received_power_db,
    simulate_received_signal,
)

CSV_COLUMNS = ("azimuth_deg", "elevation_deg", "p_im_db", "p_gim_db",
               "p_cnn_db", "gap_gim_db", "gap_cnn_db")

BAND_ELEVATION_DEG = 45.0


def power_db(magnitude: float) -> float:
    """20*log10 of an objective value, floored for exact zeros."""
    if magnitude < 0:
        raise ValueError("magnitude must be >= 0")
    if magnitude == 0.0:
        return DB_FLOOR
    return 20.0 * np.log10(magnitude)


@dataclass(frozen=True)
class EvalReport:
    """Per-sample power rows plus per-method gap summaries."""

    rows: list
    summary: dict

    def to_csv(self, path) -> None:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(repr(float(row[c])) for c in CSV_COLUMNS))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def save_summary(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.summary, sort_keys=True, indent=1) + "\n",
            encoding="utf-8")


def _summarize(rows: list) -> dict:
    elev = np.array([r["elevation_deg"] for r in rows])
    band = np.abs(elev) <= BAND_ELEVATION_DEG
    summary = {}
    for method in ("gim", "cnn"):
        gaps = np.array([r[f"gap_{method}_db"] for r in rows])
        entry = {
            "max_gap_db": float(gaps.max()),
            "mean_gap_db": float(gaps.mean()),
            "median_gap_db": float(np.median(gaps)),
        }
        entry["band45_mean_gap_db"] = float(gaps[band].mean()) if band.any() else None
        summary[method] = entry
    summary["num_samples"] = len(rows)
    return summary


def evaluate_split(data_dir, model: Model, split: str = "test",
                   *, noise_snr_db: float | None = None,
                   noise_seed: int = 0) -> EvalReport:
    """Score one split of a dataset directory with a trained model.

    Stripe and reference configs are decoded from the stored tensor
    files; channels are recomputed from the manifest geometry, so the
    report is self-contained.  With ``noise_snr_db`` set, powers come
    from a seeded noisy link simulation (1000 unit symbols at that SNR
    relative to the reference config) instead of the noiseless formula.
    """
    manifest = load_manifest(data_dir)
    splits = load_splits(data_dir)
    if split not in splits:
        raise ValueError(f"unknown split {split!r}")
    sample_rows = load_sample_rows(data_dir)
    inputs, targets = load_arrays(data_dir)
    if inputs.shape[1:3] != (manifest.geometry.n_rows, manifest.geometry.m_cols):
        raise ValueError("tensor files do not match the manifest geometry")
    if model.in_channels != 2:
        raise ValueError("model does not take 2-channel stripe inputs")

    geom = manifest.geometry
    table = manifest.phase_table
    illum = compute_illumination(geom, manifest.tx)

    rows = []
    for idx in splits[split]:
        meta = sample_rows[idx]
        az, el = meta["azimuth_deg"], meta["elevation_deg"]
        ch = compute_channels(geom, illum, RxSpec(manifest.rx_distance_m, el, az),
                              flat_tx_phase=manifest.flat_tx_phase)
        ref = PhaseConfig(pm1_to_states(targets[idx]), table)
        h_cfg = StripeConfig("horizontal", pm1_to_states(inputs[idx, :, 0, 0]))
        v_cfg = StripeConfig("vertical", pm1_to_states(inputs[idx, 0, :, 1]))
        combined = combine_stripes(h_cfg, v_cfg, table)
        predicted = predict_config(model, h_cfg, v_cfg)

        if noise_snr_db is None:
            p_im = power_db(objective(ch, ref))
            p_gim = power_db(objective(ch, combined))
            p_cnn = power_db(objective(ch, predicted))
        else:
            sigma = objective(ch, ref) * 10.0 ** (-noise_snr_db / 20.0)
            x = np.ones(1000)
            p_im, p_gim, p_cnn = (
                received_power_db(simulate_received_signal(
                    ch, cfg, x, sigma, noise_seed + 3 * int(idx) + k))
                for k, cfg in enumerate((ref, combined, predicted))
            )
        rows.append({
            "azimuth_deg": az,
            "elevation_deg": el,
            "p_im_db": p_im,
            "p_gim_db": p_gim,
            "p_cnn_db": p_cnn,
            "gap_gim_db": p_im - p_gim,
            "gap_cnn_db": p_im - p_cnn,
        })
    return EvalReport(rows, _summarize(rows))


def load_report_csv(path) -> list:
    """Rows of a report CSV as dicts of floats (inverse of to_csv)."""
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    header = tuple(lines[0].split(","))
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected report header {header!r}")
    out = []
    for line in lines[1:]:
        vals = line.split(",")
        if len(vals) != len(CSV_COLUMNS):
            raise ValueError("ragged report row")
        out.append({c: float(v) for c, v in zip(CSV_COLUMNS, vals)})
    return out
