"""Oracle: reference values for the network-engine tests.

1. tanh(0.5) to full precision (single-node forward check).
2. Exact least-squares line fit for the 1-D regression set used in the
   training test (normal equations, independent of any training code).
3. Finite-difference Jacobian of a frozen tiny network, computed here with
   an explicit loop so the package's analytic Jacobian has an independent
   reference.  The frozen weights are generated from a seed and printed.
"""

import math

import numpy as np


def logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def tiny_forward(x, w1, b1, w2, b2):
    h = np.tanh(w1 @ x + b1)
    return logistic(w2 @ h + b2)


def main():
    print("tanh(0.5) =", repr(math.tanh(0.5)))

    # --- least-squares oracle for y = 2.5 x - 0.7 fit ------------------
    rng = np.random.default_rng(1234)
    x = rng.uniform(-1.0, 1.0, size=60)
    y = 2.5 * x - 0.7
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    print("lstsq slope/intercept:", repr(coef[0]), repr(coef[1]))

    # --- frozen tiny net + finite-difference Jacobian ------------------
    rng = np.random.default_rng(777)
    w1 = rng.uniform(-0.5, 0.5, size=(4, 3))
    b1 = rng.uniform(-0.1, 0.1, size=4)
    w2 = rng.uniform(-0.5, 0.5, size=(2, 4))
    b2 = rng.uniform(-0.1, 0.1, size=2)
    x0 = np.array([0.3, -0.2, 0.1])

    h = 1e-6
    jac = np.zeros((2, 3))
    for j in range(3):
        xp = x0.copy()
        xm = x0.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (tiny_forward(xp, w1, b1, w2, b2)
                     - tiny_forward(xm, w1, b1, w2, b2)) / (2 * h)
    np.set_printoptions(precision=12)
    print("frozen net seed 777, layout [3,4,2], acts [tanh, logistic]")
    print("forward(x0) =", tiny_forward(x0, w1, b1, w2, b2))
    print("FD Jacobian at x0 = [0.3,-0.2,0.1]:")
    print(jac)


if __name__ == "__main__":
    main()
