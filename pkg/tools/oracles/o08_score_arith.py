"""Oracle: relative-error score arithmetic.

score(image, target) = per-pixel |E_t - E_i| / E_t, reported as mean and
population standard deviation.  Worked micro-examples.
"""

import numpy as np


def main():
    t = np.full((4, 4), 10e3)
    i = np.full((4, 4), 9e3)
    e = np.abs(t - i) / t
    print("uniform 10 vs 9 kPa: mean =", e.mean(), "std =", e.std())

    t = np.array([[10e3, 20e3]])
    i = np.array([[11e3, 16e3]])
    e = np.abs(t - i) / t
    print("mixed example: errors =", e, "mean =", e.mean(),
          "std =", e.std())


if __name__ == "__main__":
    main()
