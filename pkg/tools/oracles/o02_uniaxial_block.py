"""Oracle: closed-form uniaxial plane-stress solution for the solver check.

A homogeneous block (width W, height H, thickness t, modulus E, Poisson nu)
carries a uniform compressive pressure p on its top edge.  Bottom edge on
rollers (u_y = 0, u_x free, one node pinned laterally).  The exact solution
is a uniform stress/strain state:

    sigma = [0, -p, 0]
    eps11 = (sigma11 - nu*sigma22)/E =  nu*p/E
    eps22 = (sigma22 - nu*sigma11)/E = -p/E
    gamma12 = 0
    u_x(x) = eps11 * (x - x_pin),  u_y(y) = eps22 * y

Displacement fields are affine, so a bilinear Q4 mesh must reproduce them to
solver precision.  Pure arithmetic, no package imports.
"""


def main():
    e = 10e3          # Pa
    nu = 0.5
    w_mm, h_mm, t_mm = 50.0, 50.0, 1.0
    f_total = 0.01357  # N, compressive

    area_mm2 = w_mm * t_mm
    p_pa = f_total / (area_mm2 * 1e-6)  # N/m^2
    print("pressure p =", p_pa, "Pa  =", f_total / area_mm2, "MPa")

    s11, s22, s12 = 0.0, -p_pa, 0.0
    e11 = (s11 - nu * s22) / e
    e22 = (s22 - nu * s11) / e
    print("sigma =", [s11, s22, s12], "Pa")
    print("eps   =", [e11, e22, 0.0])
    print("top-edge u_y =", e22 * h_mm, "mm")
    print("right-edge u_x (pin at x=0) =", e11 * w_mm, "mm")

    # per-step values for 4 equal increments
    for k in range(1, 5):
        frac = k / 4.0
        print(f"step {k}: s22 = {s22 * frac} Pa, e22 = {e22 * frac}, "
              f"u_top = {e22 * frac * h_mm} mm")


if __name__ == "__main__":
    main()
