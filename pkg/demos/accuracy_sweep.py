"""Estimator accuracy versus sampling radius, against the closed-form bound.

With bounded noise the interpolation error has two regimes: curvature error
grows like sigma L sqrt(n)/2, noise amplification like 2 eps_f sqrt(n)/sigma.
The best sigma balances them at 2 sqrt(eps_f / L).  This sweep measures the
relative error of LIOD over a sigma grid on a noisy quadratic (30 trials per
point) and prints it next to the guaranteed ceiling, then shows where the
smoothing estimators land at the same cost.

Run:  python3 demos/accuracy_sweep.py
"""

import dataclasses
import math

import numpy as np

from dfoline import (
    NoiseModel,
    RngStream,
    gaussian_directions,
    gsg,
    interpolation_error_bound,
    interpolation_gradient,
    orthonormal_directions,
    quadratic,
    relative_error,
)

EPS_F = 1.0e-5
TRIALS = 30


def mean_theta(fn, estimator, sigma):
    vals = []
    for trial in range(TRIALS):
        oracle = fn.oracle(NoiseModel("uniform", EPS_F, seed=trial))
        x = RngStream(trial, 2).generator().uniform(-2.0, 2.0, fn.n)
        est = estimator(oracle, x, sigma, RngStream(trial, 1))
        vals.append(relative_error(est.g, fn.gradient(x)))
    return float(np.mean(vals))


def main():
    fn = quadratic(10, 1.0, 10.0)
    consts = dataclasses.replace(fn.constants, eps_f=EPS_F)
    sigma_best = 2.0 * math.sqrt(EPS_F / consts.L)
    print(f"{fn.name}, eps_f = {EPS_F:g}, best sigma = {sigma_best:.2e}\n")
    print(f"{'sigma':>10s} {'liod theta':>12s} {'gsg theta':>12s} {'bound/||g||':>12s}")

    def liod(oracle, x, sigma, stream):
        return interpolation_gradient(
            oracle, x, sigma, orthonormal_directions(fn.n, fn.n, stream))

    def gsg_nn(oracle, x, sigma, stream):
        return gsg(oracle, x, sigma, gaussian_directions(fn.n, fn.n, stream))

    # normalize the absolute bound by a typical gradient norm on the box
    typical_g = float(np.mean([
        np.linalg.norm(fn.gradient(RngStream(t, 2).generator().uniform(-2, 2, fn.n)))
        for t in range(TRIALS)
    ]))

    for exp in range(-6, 0):
        sigma = 10.0**exp
        bound = interpolation_error_bound(sigma, fn.n, consts) / typical_g
        print(f"{sigma:>10.0e} {mean_theta(fn, liod, sigma):>12.2e} "
              f"{mean_theta(fn, gsg_nn, sigma):>12.2e} {bound:>12.2e}")

    print("\nliod follows the V shape of the bound: curvature error on the")
    print("right, amplified noise on the left; gsg stays Monte Carlo bound.")


if __name__ == "__main__":
    main()
