"""Workload recipes. Each returns a report dict and writes its artifacts to ``out_dir``."""

from __future__ import annotations

import io
import json
import math
from pathlib import Path

import numpy as np

from .. import netfile
from ..network import (
    build_network,
    dense_reference_ops,
    parameter_count,
    pilotnet_specs,
    reduction_report,
    run,
)
from ..neuron import delta_stream, sigma_stream
from ..spectral import (
    ingest,
    load_signal,
    magnitude_correlation,
    make_bank,
    reconstruction_correlation,
    reference_stft,
    rf_stft,
    spike_rate,
    spike_spectrogram,
)
from .config import BenchConfig
from .generators import (
    ChirpSpec,
    CorrelatedStreamSpec,
    gen_chirp,
    gen_correlated_stream,
    gen_uncorrelated_stream,
)

REPORT_VERSION = 1


def _clean(obj):
    """Make a structure JSON-safe and platform-stable (numpy scalars, inf)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        # 12 significant digits keeps reports stable across BLAS builds
        return float(f"{v:.12g}")
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _write(out_dir: Path, name: str, text: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)


def _report(config: BenchConfig, results: dict) -> dict:
    return {"format_version": REPORT_VERSION, "config": config.to_dict(), "results": results}


def _seeds(seed: int, n: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(n)]


def run_stft_chirp(config: BenchConfig, out_dir=None) -> dict:
    p = config.params
    if p["signal_file"]:
        signal = load_signal(p["signal_file"])
        if len(signal) < p["window"]:
            raise ValueError(f"signal has {len(signal)} samples, fewer than the window ({p['window']})")
    else:
        signal = gen_chirp(ChirpSpec(p["f_start"], p["f_end"], p["duration"], p["sample_rate"], p["amplitude"]))
    bank = make_bank(p["bank_f_min"], p["bank_f_max"], p["n_neurons"], p["sample_rate"], p["window"], p["threshold"])
    x = ingest(signal, p["input_scale_exp"]).astype(np.float64)

    rf, code = rf_stft(bank, signal, p["input_scale_exp"])
    ref = reference_stft(x, bank.window, 1, bank.freqs_hz, bank.sample_rate)
    decoded = spike_spectrogram(code, bank, len(x))

    results = {
        "signal_samples": len(x),
        "bank": {
            "n_neurons": len(bank),
            "f_min_hz": float(bank.freqs_hz[0]),
            "f_max_hz": float(bank.freqs_hz[-1]),
            "spacing_hz": float(bank.freqs_hz[1] - bank.freqs_hz[0]) if len(bank) > 1 else 0.0,
            "lambda": bank.lam,
            "lambda_fixed": bank.lam_fx,
            "window": bank.window,
            "threshold": bank.threshold,
            "sample_rate": bank.sample_rate,
        },
        "freqs_hz": bank.freqs_hz,
        "correlation": {
            "rf_reconstruction": reconstruction_correlation(rf, bank, x),
            "reference_reconstruction": reconstruction_correlation(ref, bank, x),
            "rf_spike_reconstruction": reconstruction_correlation(decoded, bank, x),
            "rf_vs_reference_magnitude": magnitude_correlation(rf, ref),
        },
        "spike_events": len(code),
        "events_per_second": spike_rate(code, len(x), bank.sample_rate),
    }
    report = _report(config, results)
    if out_dir is not None:
        out = Path(out_dir)
        buf = io.StringIO()
        buf.write("t," + ",".join(f"{f:.6g}" for f in bank.freqs_hz) + "\n")
        for t, row in enumerate(np.abs(rf.coeffs)):
            buf.write(f"{t}," + ",".join(f"{v:.6g}" for v in row) + "\n")
        _write(out, "spectrogram.csv", buf.getvalue())
        _write(out, "report.json", dump_json(report))
    return report


def run_sdnn_video(config: BenchConfig, out_dir=None) -> dict:
    p = config.params
    weight_seed, stream_seed = _seeds(config.seed, 2)
    shape = tuple(p["shape"])
    if p["network_file"]:
        specs = netfile.load(p["network_file"])
        if specs[0].in_shape != shape:
            raise netfile.NetworkFileError(
                f"network input {specs[0].in_shape} does not match stream shape {shape}"
            )
    else:
        specs = pilotnet_specs(shape, seed=weight_seed, threshold=p["hidden_threshold"],
                               output_threshold=p["output_threshold"])
    if p["stream"] == "uncorrelated":
        stream = gen_uncorrelated_stream(shape, p["frames"], stream_seed)
    else:
        stream = gen_correlated_stream(CorrelatedStreamSpec(shape, p["frames"], p["step_scale"], stream_seed))
    net = build_network(specs)
    trace = run(net, stream, encode="delta", threshold=p["input_threshold"])
    reference = dense_reference_ops(specs, p["frames"])
    ratios = reduction_report(trace, reference)
    results = {
        "parameters": parameter_count(specs),
        "layers": [
            {"kind": s.kind, "in_shape": s.in_shape, "out_shape": s.out_shape, "neuron_kind": s.neuron_kind}
            for s in specs
        ],
        "frames": p["frames"],
        "sdnn": trace.counters.to_dict(),
        "dense_reference": reference.to_dict(),
        "reduction": ratios.to_dict(),
    }
    report = _report(config, results)
    if out_dir is not None:
        out = Path(out_dir)
        _write(out, "ops.csv", trace.to_csv())
        _write(out, "report.json", dump_json(report))
    return report


def run_sigma_delta_sweep(config: BenchConfig, out_dir=None) -> dict:
    p = config.params
    (stream_seed,) = _seeds(config.seed, 1)
    x = gen_correlated_stream(CorrelatedStreamSpec((1,), p["length"], p["step_scale"], stream_seed))[:, 0]
    rows = []
    for thr in p["thresholds"]:
        s = delta_stream(x, thr)
        rec = sigma_stream(s)
        rows.append(
            {
                "threshold": thr,
                "spikes": int(np.count_nonzero(s)),
                "max_error": int(np.max(np.abs(x - rec))),
                "mean_abs_error": float(np.mean(np.abs(x - rec))),
            }
        )
    changes = int(np.count_nonzero(np.diff(np.concatenate([[0], x]))))
    counts = [r["spikes"] for r in rows]
    results = {
        "length": len(x),
        "value_changes": changes,
        "sweep": rows,
        "spike_count_monotone": all(a >= b for a, b in zip(counts, counts[1:])),
        "error_within_threshold": all(r["max_error"] <= r["threshold"] for r in rows),
    }
    report = _report(config, results)
    if out_dir is not None:
        out = Path(out_dir)
        lines = ["threshold,spikes,max_error,mean_abs_error"]
        lines += [f"{r['threshold']},{r['spikes']},{r['max_error']},{r['mean_abs_error']:.12g}" for r in rows]
        _write(out, "sweep.csv", "\n".join(lines) + "\n")
        _write(out, "report.json", dump_json(report))
    return report


RUNNERS = {
    "stft-chirp": run_stft_chirp,
    "sdnn-video": run_sdnn_video,
    "sigma-delta-sweep": run_sigma_delta_sweep,
}


def run_workload(config: BenchConfig, out_dir=None) -> dict:
    if out_dir is not None:
        _write(Path(out_dir), "config.resolved.json", dump_json(config.to_dict()))
    return RUNNERS[config.workload](config, out_dir)
