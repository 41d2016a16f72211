"""Oracle: peak signal-to-noise ratio of the region-labeled phantom defaults.

Multiplicative uniform noise E' = E (1 + p), p ~ U(-m, m), has RMS amplitude
(m / sqrt(3)) * E_rms over the domain, so

    PSNR = 20 log10( E_peak / (m/sqrt(3) * E_rms) ).

This script rasterizes the default seven-region kidney-in-gelatin layout
(standalone copy of the geometry constants) on a fine grid, computes E_rms by
area weighting, and reports the PSNR for 10% and 30% noise.  The default
gelatin modulus was chosen so the 30% figure lands on the published
17.6 dB +- 1 dB check.
"""

import numpy as np

# region moduli in Pa: gelatin, cortex, medulla, pyramids, pelvis, capsule,
# vessels -- labels 0..6
MODULI = [23e3, 26e3, 18e3, 15e3, 12e3, 30e3, 24e3]

KIDNEY_CENTER = (25.0, 27.0)
KIDNEY_ANGLE_DEG = 20.0
BODY_AXES = (14.0, 9.0)
CAPSULE_INNER = (12.8, 7.8)
CORTEX_INNER = (10.5, 6.2)
PELVIS_CENTER_UV = (-4.0, 0.0)
PELVIS_AXES = (5.5, 3.2)
NOTCH_CENTER_UV = (-13.0, 0.0)
NOTCH_R = 4.0
PYRAMIDS_UV = [(3.5, 3.4), (5.5, -0.5), (3.0, -3.6)]
PYRAMID_R = 1.9
VESSELS_UV = [(-11.0, 0.0, 1.6), (-8.0, -1.5, 1.1)]


def label_at(x, y):
    ca = np.cos(np.deg2rad(KIDNEY_ANGLE_DEG))
    sa = np.sin(np.deg2rad(KIDNEY_ANGLE_DEG))
    dx, dy = x - KIDNEY_CENTER[0], y - KIDNEY_CENTER[1]
    u = ca * dx + sa * dy
    v = -sa * dx + ca * dy

    def in_ellipse(ax, ay, uc=0.0, vc=0.0):
        return ((u - uc) / ax) ** 2 + ((v - vc) / ay) ** 2 <= 1.0

    in_notch = (u - NOTCH_CENTER_UV[0]) ** 2 + (v - NOTCH_CENTER_UV[1]) ** 2 <= NOTCH_R ** 2
    body = in_ellipse(*BODY_AXES) & ~in_notch

    lab = np.zeros(np.shape(u), dtype=int)
    lab[body] = 1                                         # cortex by default
    lab[body & in_ellipse(*CORTEX_INNER)] = 2             # medulla
    lab[body & ~in_ellipse(*CAPSULE_INNER)] = 5           # capsule rim
    pel = ((u - PELVIS_CENTER_UV[0]) / PELVIS_AXES[0]) ** 2 + \
          ((v - PELVIS_CENTER_UV[1]) / PELVIS_AXES[1]) ** 2 <= 1.0
    lab[body & pel] = 4                                    # pelvis
    for (uc, vc) in PYRAMIDS_UV:
        pyr = (u - uc) ** 2 + (v - vc) ** 2 <= PYRAMID_R ** 2
        lab[body & pyr] = 3                                # pyramids
    for (uc, vc, r) in VESSELS_UV:
        ves = (u - uc) ** 2 + (v - vc) ** 2 <= r ** 2
        lab[body & ves] = 6                                # vessels
    return lab


def main():
    n = 800
    xs = (np.arange(n) + 0.5) * 50.0 / n
    x, y = np.meshgrid(xs, xs)
    lab = label_at(x, y)
    areas = np.bincount(lab.ravel(), minlength=7) / lab.size
    print("area fractions by label:", np.round(areas, 4))
    assert (areas > 0).all(), "all seven labels must be present"

    e = np.array(MODULI)[lab]
    e_rms = float(np.sqrt(np.mean(e ** 2)))
    e_peak = float(e.max())
    print("E_rms =", e_rms, "Pa; E_peak =", e_peak, "Pa")
    for m in (0.10, 0.30):
        noise_rms = m / np.sqrt(3.0) * e_rms
        psnr = 20.0 * np.log10(e_peak / noise_rms)
        print(f"m = {m}: PSNR = {psnr:.3f} dB")


if __name__ == "__main__":
    main()
