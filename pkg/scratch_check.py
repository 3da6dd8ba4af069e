"""Scratch verification of designed fixture values (not part of the package)."""
import random

from lrpeval import (
    BoundingBox, DasaParams, ap, dasa, lrp_total, match_optimal, molrp,
    rp_curve, sweep_class,
)
from lrpeval.synth import reference_detectors

for name, (gts, dets) in reference_detectors().items():
    curve = rp_curve(gts, dets, 1, 0.5)
    sweep = sweep_class(gts, dets, 1, 0.5)
    print(f"{name:16s} AP_cont={ap(curve, 'continuous'):.6f} "
          f"AP11={ap(curve, 'pascal11'):.4f} AP101={ap(curve, 'coco101'):.4f} "
          f"oLRP={sweep.olrp:.6f} s*={sweep.s_star}")

# metric-mode triangle inequality probe
rng = random.Random(12345)

def rand_box(r):
    x = r.uniform(0, 20)
    y = r.uniform(0, 20)
    return BoundingBox(x, y, x + r.uniform(0.5, 10), y + r.uniform(0.5, 10))

def rand_set(r, max_n=5):
    return [rand_box(r) for _ in range(r.randint(0, max_n))]

def metric_lrp(xs, ys, tau):
    m = match_optimal(xs, ys, tau)
    return lrp_total(m, n_gt=len(xs), n_det=len(ys), tau=tau)

violations = 0
worst = 0.0
checked = 0
for trial in range(30000):
    X, Y, Z = rand_set(rng), rand_set(rng), rand_set(rng)
    if (not X and not Y) or (not X and not Z) or (not Y and not Z):
        continue
    checked += 1
    d_xy = metric_lrp(X, Y, 0.5)
    d_xz = metric_lrp(X, Z, 0.5)
    d_zy = metric_lrp(Z, Y, 0.5)
    gap = d_xy - (d_xz + d_zy)
    if gap > worst:
        worst = gap
    if gap > 1e-9:
        violations += 1
        if violations <= 5:
            print("VIOLATION", trial, d_xy, d_xz, d_zy, len(X), len(Y), len(Z))
print(f"triangle probe: checked={checked} violations={violations} worst_gap={worst:.3e}")

# DASA reduction identity probe
bad = 0
for trial in range(2000):
    X, Y = rand_set(rng, 8), rand_set(rng, 8)
    if not X and not Y:
        continue
    for tau in (0.5, 0.75):
        m = match_optimal(X, Y, tau)
        z = m.n_tp + m.n_fp + m.n_fn
        if z == 0:
            continue
        lrp = lrp_total(m, len(X), len(Y), tau)
        d = dasa(X, Y, DasaParams(p=1.0, c=1.0 - tau))
        l = max(len(X), len(Y))
        rhs = d * l / ((1.0 - tau) * z)
        if abs(lrp - rhs) > 1e-9 * max(1.0, abs(lrp)):
            bad += 1
            print("REDUCTION MISMATCH", lrp, rhs)
print(f"reduction probe: mismatches={bad}")

# symmetry probe
asym = 0
for trial in range(2000):
    X, Y = rand_set(rng, 6), rand_set(rng, 6)
    if not X and not Y:
        continue
    a = metric_lrp(X, Y, 0.5)
    b = metric_lrp(Y, X, 0.5)
    if a != b:
        asym += 1
print(f"symmetry probe: mismatches={asym}")
