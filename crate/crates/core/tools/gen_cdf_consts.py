#!/usr/bin/env python3
"""Regenerates src/entropy/consts.rs.

The constants are computed with 50-digit mpmath arithmetic and rounded to
integers (or to the nearest f64 for the scale-level boundaries), so the
emitted file is the normative definition of the coder tables.
"""
import mpmath as mp

mp.mp.dps = 50

PHI_STEPS = 1024  # t in [0, 8] at step 1/128
SCALE_LEVELS = 64
SCALE_MIN = mp.mpf("0.11")
SCALE_MAX = mp.mpf("64")


def phi(t):
    return mp.ncdf(t)


def main():
    out = []
    out.append("// Generated by tools/gen_cdf_consts.py. Do not edit by hand.\n")
    out.append("/// Standard normal CDF at t = i/128 for i in 0..=1024, scaled by 2^32.")
    out.append(f"pub const PHI_Q32: [u64; {PHI_STEPS + 1}] = [")
    row = []
    for i in range(PHI_STEPS + 1):
        v = int(mp.nint(phi(mp.mpf(i) / 128) * mp.mpf(2) ** 32))
        row.append(str(v))
        if len(row) == 8:
            out.append("    " + ", ".join(row) + ",")
            row = []
    if row:
        out.append("    " + ", ".join(row) + ",")
    out.append("];\n")

    levels = [SCALE_MIN * (SCALE_MAX / SCALE_MIN) ** (mp.mpf(j) / (SCALE_LEVELS - 1)) for j in range(SCALE_LEVELS)]
    out.append("/// Reciprocal of each scale level, scaled by 2^16 and rounded.")
    out.append(f"pub const INV_SCALE_Q16: [u64; {SCALE_LEVELS}] = [")
    row = []
    for s in levels:
        row.append(str(int(mp.nint(mp.mpf(2) ** 16 / s))))
        if len(row) == 8:
            out.append("    " + ", ".join(row) + ",")
            row = []
    out.append("];\n")

    out.append("/// Scale levels (informational; tables only use `INV_SCALE_Q16`).")
    out.append(f"pub const SCALE_LEVELS: [f64; {SCALE_LEVELS}] = [")
    for s in levels:
        out.append(f"    {repr(float(s))},")
    out.append("];\n")

    out.append("/// Geometric midpoints between adjacent scale levels.")
    out.append(f"pub const SCALE_BOUNDS: [f64; {SCALE_LEVELS - 1}] = [")
    for a, b in zip(levels, levels[1:]):
        out.append(f"    {repr(float(mp.sqrt(a * b)))},")
    out.append("];")
    print("\n".join(out))


if __name__ == "__main__":
    main()
