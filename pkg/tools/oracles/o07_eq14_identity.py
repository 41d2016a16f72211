"""Oracle: modulus-inversion identity.

For plane stress, sigma22 = E/(1-nu^2) * (nu*e11 + e22), so

    E = sigma22 * (1 - nu^2) / (nu*e11 + e22)

recovers E exactly whenever sigma was built from C(E, nu).  Demonstrated for
a sweep of moduli at the standard probe strain; also prints the sensitivity
of the recovered modulus to halving the probe strain (exactly invariant for
a linear material).
"""

import numpy as np


def main():
    nu = 0.5
    probe = np.array([0.003, 0.005, 0.0001])
    denom = nu * probe[0] + probe[1]
    print("denominator:", repr(denom))

    rng = np.random.default_rng(42)
    worst = 0.0
    for e in rng.uniform(1e3, 100e3, size=100):
        f = e / (1.0 - nu * nu)
        s22 = f * (nu * probe[0] + probe[1])
        e_rec = s22 * (1.0 - nu * nu) / denom
        worst = max(worst, abs(e_rec - e) / e)
    print("worst relative recovery error over 100 random moduli:", worst)

    # halving the probe strain: s22 halves, denominator halves -> identical E
    e = 17.3e3
    f = e / (1.0 - nu * nu)
    for scale in (1.0, 0.5):
        p = probe * scale
        s22 = f * (nu * p[0] + p[1])
        print(f"probe x{scale}: E recovered = {s22 * (1 - nu ** 2) / (nu * p[0] + p[1])}")


if __name__ == "__main__":
    main()
