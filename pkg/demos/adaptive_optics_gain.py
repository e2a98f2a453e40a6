"""
What adaptive optics buys
=========================

Same clear-sky link evaluated with each AO level. Tracking shrinks the
residual beam wander, the wavefront correction lowers the phase structure
function and hence the depolarization.
"""

from fsomdi import LinkConfig, run_point

print(f"{'ao':8s} {'d [km]':>6s} {'lambda':>8s} {'eta_eff':>8s} {'E_Z':>7s} {'SKR':>10s}")
for d in (5.0, 15.0):
    for ao in ("none", "mild", "medium", "strong"):
        r = run_point(LinkConfig(distance_km=d, ao=ao))
        print(f"{ao:8s} {d:6.0f} {r.lambda_eff:8.4f} {r.eta_eff:8.4f} {r.E_Z:7.4f} {r.skr_bits_per_pulse:10.3e}")
