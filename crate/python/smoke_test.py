"""Smoke test for the `dfp` extension module.

Build and install first:
    pip install --no-build-isolation ./crates/py
"""

import pathlib
import sys

import dfp

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main() -> int:
    rows = dfp.schedule_table(500, "4", 100, "0.7", 10)
    assert len(rows) == 11
    assert rows[1]["window_ms"] == 2000 and rows[1]["required"] == 70
    assert rows[10]["window_ms"] == 524_288_000 and rows[10]["required"] == 2
    assert rows[10]["window_human"] == "6.07 d"

    p = dfp.p_challenge(0.01, 0.9, 1.0, 100, 0.1)
    assert abs(p - 0.0089998) < 5e-7, p
    est, se = dfp.monte_carlo(0.01, 0.9, 1.0, 100, 0.1, trials=200_000, seed=3)
    assert abs(est - p) <= 3 * se, (est, se)

    try:
        dfp.p_challenge(1.5, 0.9, 1.0, 100, 0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("p_fraud=1.5 accepted")

    config = (ROOT / "configs" / "baseline.toml").read_text()
    out = dfp.run_scenario(config)
    report = out["report"]
    assert report["finalized"] == 20, report
    assert report["latency"]["p50_ms"] == 500
    assert dfp.run_scenario(config)["report"]["trace_sha256"] == report["trace_sha256"]

    print(f"ok: P(E)={p:.7f}, MC={est:.6f}+-{se:.6f}, baseline p50={report['latency']['p50_ms']} ms")
    return 0


if __name__ == "__main__":
    sys.exit(main())
