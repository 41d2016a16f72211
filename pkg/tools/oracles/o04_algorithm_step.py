"""Oracle: one hand-derived outer iteration of the scaling-field update.

Model: a single-layer *linear* stress network f(x) = W x with unit stress
scale, so every quantity below is explicit matrix arithmetic:

    prediction      sNN   = W (eps / S)        (elementwise division)
    error           e     = st - sNN
    masked output   m(k)  = W[:,k] * eps_k / S_k
    residual loss   L     = 0.5 * sum_p ||e_p||^2

The component update (descent direction, step eta, averaged over the N
sample pairs) is

    dS_k = -(eta / N) * sum_p  e_p . m_p(k)
    S_k <- S_k + dS_k          (k = 1, 2, 3 applied sequentially,
                                so k=2 sees the updated S_1)

This script freezes the resulting S after one outer iteration for a concrete
(W, samples, S0, eta) and verifies the loss decreases.  The sign convention
matters: with e = st - sNN, a positive e . m(k) means the prediction is too
soft, so S_k must DECREASE (stiffen).  The update above does exactly that.
"""

import numpy as np


def main():
    w = np.array([[1.2, 0.4, 0.0],
                  [0.4, 1.2, 0.0],
                  [0.0, 0.0, 0.5]])
    eta = 0.8
    s = np.array([1.0, 1.0, 1.0])

    # two sample pairs: target stresses from a material twice as stiff
    eps = np.array([[0.05, -0.08, 0.02],
                    [0.03, -0.05, -0.01]])
    st = np.array([2.0 * w @ eps[0], 2.0 * w @ eps[1]])
    n = len(eps)

    def loss(s_vec):
        tot = 0.0
        for p in range(n):
            e = st[p] - w @ (eps[p] / s_vec)
            tot += 0.5 * float(e @ e)
        return tot

    print("loss before:", repr(loss(s)))
    rms0 = np.sqrt(np.mean([np.sum((st[p] - w @ (eps[p] / s)) ** 2)
                            for p in range(n)]))
    print("rms before:", repr(float(rms0)))

    for k in range(3):
        acc = 0.0
        for p in range(n):
            e = st[p] - w @ (eps[p] / s)
            masked = w[:, k] * (eps[p][k] / s[k])
            acc += float(e @ masked)
        ds = -(eta / n) * acc
        s[k] = s[k] + ds
        print(f"after k={k + 1}: dS = {ds!r}, S = {s!r}")

    print("loss after:", repr(loss(s)))
    rms1 = np.sqrt(np.mean([np.sum((st[p] - w @ (eps[p] / s)) ** 2)
                            for p in range(n)]))
    print("rms after:", repr(float(rms1)))
    assert loss(s) < loss(np.ones(3)), "descent direction must reduce loss"

    # fixed point check: iterate many times, S should approach 0.5 in the
    # loaded components (target material is 2x stiffer than reference)
    s = np.array([1.0, 1.0, 1.0])
    for _ in range(400):
        for k in range(3):
            acc = 0.0
            for p in range(n):
                e = st[p] - w @ (eps[p] / s)
                masked = w[:, k] * (eps[p][k] / s[k])
                acc += float(e @ masked)
            s[k] = s[k] - (eta / n) * acc
    print("S after 400 iterations:", repr(s))


if __name__ == "__main__":
    main()
