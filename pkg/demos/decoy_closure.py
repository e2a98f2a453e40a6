"""
Decoy-state estimation versus the true single-pair rate
=======================================================

With a lossy but noiseless channel the decoy bounds should recover most of
the rate obtained from the true single-pair yield and error. Increasing
depolarization drives both rates to zero.
"""

from fsomdi.decoy import DecoySettings, decoy_skr, evaluate_decoy
from fsomdi.detection import NO_SCINTILLATION

settings = DecoySettings()

print(f"{'lambda':>7s} {'eta':>6s} {'R_decoy':>11s} {'R_true':>11s} {'ratio':>6s}")
for lam in (0.0, 0.01, 0.03, 0.05):
    for eta in (0.437, 0.1, 0.01):
        out = evaluate_decoy(settings, lam, 1.0, eta, NO_SCINTILLATION)
        # same observed gain and QBER, but the exact single-pair yield and phase error
        key = ("Z", "mu", "mu")
        true = decoy_skr(settings, out.Q[key], out.E[key], out.Y11_true, out.e11_true)
        ratio = out.R_decoy / true if true > 0 else float("nan")
        print(f"{lam:7.2f} {eta:6.3f} {out.R_decoy:11.3e} {true:11.3e} {ratio:6.3f}")
