"""Oracle: closed-form plane-stress elasticity matrix values.

Computes C(E, nu) = E/(1-nu^2) * [[1, nu, 0], [nu, 1, 0], [0, 0, (1-nu)/2]]
for the reference material (E = 10 kPa, nu = 0.5), plus the stress response
to a few probe strains.  Pure arithmetic, no package imports.
"""

import numpy as np


def c_plane_stress(e, nu):
    f = e / (1.0 - nu * nu)
    return f * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]])


def main():
    e_ref = 10e3  # Pa
    nu = 0.5
    c = c_plane_stress(e_ref, nu)
    np.set_printoptions(precision=12)
    print("C(10 kPa, 0.5) in Pa:")
    print(c)
    print("C in internal units (1 unit = 1e4 Pa):")
    print(c / 1e4)

    eps = np.array([0.01, 0.0, 0.0])
    print("sigma for eps=[0.01,0,0]:", c @ eps, "Pa")

    eps = np.array([0.003, 0.005, 0.0001])
    sig = c @ eps
    print("sigma for probe strain [0.003,0.005,0.0001]:", sig, "Pa")
    print("denominator nu*e11 + e22 =", nu * 0.003 + 0.005)
    print("E recovered = s22*(1-nu^2)/(nu*e11+e22) =",
          sig[1] * (1 - nu * nu) / (nu * 0.003 + 0.005), "Pa")

    # Stress bound for pretraining: per-component uniform strains in [-0.2, 0.2]
    # worst case |s1| = (C11 + C12) * 0.2
    print("max |sigma| over strain cube [-0.2,0.2]^3:",
          (c[0, 0] + c[0, 1]) * 0.2, "Pa  ( internal:",
          (c[0, 0] + c[0, 1]) * 0.2 / 1e4, ")")


if __name__ == "__main__":
    main()
