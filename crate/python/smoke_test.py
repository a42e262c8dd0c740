"""Smoke test for the lagsynth_py extension.

Build and run from the repository root:

    cargo build --release -p lagsynth-py --features extension-module
    cp target/release/liblagsynth_py.so python/lagsynth_py.so
    python3 python/smoke_test.py
"""

import math
import os
import random
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import lagsynth_py as ls  # noqa: E402


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok   {msg}")


def main():
    rng = random.Random(3)

    x = [[rng.gauss(0, 1) for _ in range(4)] for _ in range(60)]
    y = [1.0 + 2.0 * r[0] - r[2] + 0.1 * rng.gauss(0, 1) for r in x]
    m = ls.fit_sgl(x, [0, 0, 1, 1], y, 0.0, 0.5)
    check(abs(m.coeffs[0] - 2.0) < 0.1 and abs(m.coeffs[2] + 1.0) < 0.1, "unpenalized fit recovers coefficients")
    check(len(m.predict(x[:5])) == 5, "predict returns one value per row")
    lmax = ls.lambda_max(x, [0, 0, 1, 1], y, 0.5)
    check(all(b == 0.0 for b in ls.fit_sgl(x, [0, 0, 1, 1], y, lmax, 0.5).coeffs), "lambda_max gives all zeros")

    p = ls.sgl_prox([3.0, -0.1, 0.2], 1.0, 0.5, 1.0, [0, 0, 1])
    check(p == [2.5, 0.0, 0.0], "prox with alpha=1 is soft thresholding")

    s = [math.sin(0.3 * i) + rng.gauss(0, 0.3) for i in range(128)]
    ft = ls.ft_surrogate(s, 7)
    a, b = ls.amplitude_spectrum(s), ls.amplitude_spectrum(ft)
    check(max(abs(u - v) for u, v in zip(a, b)) < 1e-9, "FT surrogate keeps the amplitude spectrum")
    series, errs = ls.iaaft_surrogate(s, 7)
    check(sorted(series) == sorted(s), "IAAFT surrogate is a permutation")
    check(all(e2 < e1 for e1, e2 in zip(errs, errs[1:])), "IAAFT spectral error decreases")

    check(ls.adf_test(s)["rejected"], "ADF rejects a unit root for a noisy sinusoid")
    w = ls.wilcoxon([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [0.0] * 6)
    check(abs(w["p_value"] - 2 / 64) < 1e-12, "exact Wilcoxon p for six positive differences")
    reject, adj = ls.bh_fdr([0.001, 0.02, 0.5], 0.05)
    check(reject == [True, True, False], "BH rejections")
    check(abs(ls.pearson([1, 2, 3, 4], [2, 4, 5, 4]) - 0.7181848464) < 1e-9, "Pearson r")
    h = ls.double_gamma_hrf(0.5)
    check(abs(h.index(max(h)) * 0.5 - 6.0) <= 0.25, "HRF peaks at 6 s")

    try:
        ls.Scenario("S9")
        check(False, "unknown scenario raises")
    except ValueError:
        check(True, "unknown scenario raises")
    sc = ls.Scenario("S2")
    check("C3" in sc.channel_labels and sc.n_lags > 0, "scenario metadata")
    ds = sc.generate()
    t0 = ds.target(0)
    check(len(ds.features(0)) == len(t0), "features and target have matching length")
    check(ls.Scenario("S2").generate().target(0) == t0, "generation is deterministic")
    res = ds.evaluate("inter", budget=12)
    check(len(res) == 2 and all(r["r"] > 0.5 for r in res), f"nested fit predicts held-out session (r = {[round(r['r'], 3) for r in res]})")
    print("smoke test passed")


if __name__ == "__main__":
    main()
