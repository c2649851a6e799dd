#!/usr/bin/env python3
"""Smoke test for the vfdrelay_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/, copies
it to a temporary directory under the importable module name, and exercises
the whole binding surface with closed-form oracles. Run after
`cargo build -p vfdrelay-py` (or `--release`):

    python3 python/smoke_test.py
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO_ROOT / "target" / profile / "libvfdrelay_py.so"
        for profile in ("release", "debug")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "no compiled module found; run `cargo build -p vfdrelay-py` first "
            f"(searched {', '.join(str(c) for c in candidates)})"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="vfdrelay_py_"))
    shutil.copy2(newest, stage / "vfdrelay_py.so")
    sys.path.insert(0, str(stage))
    import vfdrelay_py

    print(f"loaded {newest} (version {vfdrelay_py.__version__})")
    return vfdrelay_py


def check(name, condition, detail=""):
    if not condition:
        sys.exit(f"FAIL {name} {detail}")
    print(f"PASS {name}")


def main():
    m = load_module()

    # Worked single-stage instance: all gains 100, stage 1 quantizes.
    inst = m.ChannelInstance([100.0, 100.0], [100.0])
    cfg = m.ModeConfig([1], [1.0], "sd", "printed")
    report = m.evaluate(inst, cfg)
    hop = math.log2(101.0)
    sigma = 101.0 / (2.0**hop - 1.0)
    rate = math.log2(1.0 + 100.0 / (1.0 + sigma))
    check(
        "worked instance rate",
        abs(report.symmetric_rate - rate) <= 1e-12,
        f"{report.symmetric_rate} vs {rate}",
    )
    check(
        "quantization noise",
        abs(report.quant_noise[1] - 1.01) <= 1e-12,
        str(report.quant_noise),
    )
    check(
        "per-path throughput halves the rate",
        report.per_path_throughput == report.symmetric_rate / 2.0,
    )
    check(
        "binding constraints",
        report.binding == {0: (0, "direct"), 1: (1, "direct")},
        str(report.binding),
    )
    round_trip = json.loads(report.to_json())
    check(
        "JSON report round trip",
        round_trip["symmetric_rate"] == report.symmetric_rate,
    )

    # Information-theoretic helpers against closed forms.
    check(
        "gaussian rate",
        abs(m.gaussian_rate(100.0) - hop) <= 1e-15,
        str(m.gaussian_rate(100.0)),
    )
    noise = m.wyner_ziv_noise(100.0, hop)
    check(
        "quantizer rate/noise inversion",
        abs(m.wyner_ziv_rate(100.0, noise) - hop) <= 1e-12,
        f"noise {noise}",
    )
    check("schedule throughput", m.schedule_throughput(4.0, 3, 3) == 1.0)

    # Search: without cross links the plain decode-and-forward chain wins.
    clean = m.ChannelInstance([100.0, 100.0], [0.0])
    best = m.optimize(clean)
    check(
        "optimizer picks the DF chain",
        best.best_config.qmf_set == [] and abs(best.best_breakdown.symmetric_rate - hop) <= 1e-9,
        repr(best),
    )
    check("per-subset table", len(best.per_subset_rates) == 2, str(best.per_subset_rates))
    bound = m.baseline_rate(clean, "hop_bound")
    check(
        "hop capacity benchmark",
        abs(bound.symmetric_rate - hop) <= 1e-12,
        str(bound.symmetric_rate),
    )

    # Deterministic ensembles: identical draws and identical sweep bytes.
    spec = m.EnsembleSpec(snr_db=20.0, alpha_lo=1.0, alpha_hi=2.0, trials=5, seed=7)
    a = m.draw_instance(spec, 3, 2)
    b = m.draw_instance(spec, 3, 2)
    check("ensemble draw determinism", a.digest() == b.digest())
    rows_1, summary_1 = m.sweep([1, 2], trials=3, schemes=["mixed", "pure_df"], decoder="jd")
    rows_2, summary_2 = m.sweep([1, 2], trials=3, schemes=["mixed", "pure_df"], decoder="jd")
    check("sweep determinism", rows_1 == rows_2 and summary_1 == summary_2)
    check(
        "sweep schema",
        rows_1.splitlines()[0] == "K,trial,scheme,decoder,variant,rate_bits"
        and summary_1.splitlines()[0] == "K,scheme,decoder,variant,mean_rate_bits,std_error,trials",
        rows_1.splitlines()[0],
    )

    # Finite-alphabet solver on the noiseless binary one-stage network.
    dm_spec = json.dumps(
        {
            "x_alphabets": [["0", "1"], ["0", "1"]],
            "u_alphabets": [["0"]],
            "y_alphabets": [["0", "1"], ["0", "1"]],
            "stage_channels": [
                [[[1.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [0.0, 1.0]]]
            ],
            "dest_channel": [[1.0, 0.0], [0.0, 1.0]],
            "paths": [
                {"source": [0.5, 0.5], "relays": [{"u": [1.0], "x_given_u": [[0.5, 0.5]]}]},
                {"source": [0.5, 0.5], "relays": [{"u": [1.0], "x_given_u": [[0.5, 0.5]]}]},
            ],
            "quantizers": [[{"family": "erasure"}], [{"family": "erasure"}]],
        }
    )
    dm_report = json.loads(m.solve_dm_network(dm_spec, [1], [1]))
    check(
        "finite-alphabet noiseless network",
        dm_report["symmetric_rate"] == 1.0 and dm_report["rate_pair"] == [1.0, 1.0],
        str(dm_report["symmetric_rate"]),
    )

    # Validation surfaces as ValueError with the library's message.
    try:
        m.ModeConfig([1], [0.5])
    except ValueError as e:
        check("split validation", "QMF stages require theta = 1" in str(e), str(e))
    else:
        sys.exit("FAIL split validation: no error raised")
    try:
        m.ChannelInstance([100.0], [])
    except ValueError:
        check("channel validation", True)
    else:
        sys.exit("FAIL channel validation: no error raised")
    try:
        m.evaluate(inst, m.ModeConfig([1], [1.0], "sd", "theorem"))
        check("variant plumbing", True)
    except ValueError as e:
        sys.exit(f"FAIL variant plumbing: {e}")

    print("all smoke tests passed")


if __name__ == "__main__":
    main()
