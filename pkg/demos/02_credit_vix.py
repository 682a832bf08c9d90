"""Implied variance of a credit-index volatility gauge.

Builds an option chain by hand, evaluates the discrete strip formula

    sigma^2 = (2 / (T * RPV01)) * sum(P(K) * dK / K^2)
              - (1/T) * (CDSI/K0 - 1)^2

and demonstrates two structural properties: the variance grows with option
prices, and splitting a strike's interval in two leaves it unchanged.
"""

import numpy as np

from vollab.creditvix import CreditVixInputs, implied_variance, implied_vol


def make_chain(prices):
    strikes = np.array([60.0, 80.0, 100.0, 120.0, 140.0])
    return CreditVixInputs(
        strikes=strikes,
        prices=np.asarray(prices, float),
        intervals=np.full(5, 20.0),
        k0=100.0,
        cdsi=101.0,
        horizon=1.0 / 12.0,  # one month
        rpv01=1.0,
    )


def main():
    chain = make_chain([0.2, 0.9, 2.1, 0.8, 0.3])
    var = implied_variance(chain)
    print(f"implied variance: {var:.6f}")
    print(f"implied vol:      {implied_vol(chain):.4f} "
          f"({100 * implied_vol(chain):.1f}% annualized)")

    # textbook check: a single strike with T=1/12, RPV01=1, K=100, P=1,
    # dK=10 and no correction gives exactly 24 * 10 / 100^2 = 0.024
    single = CreditVixInputs(
        strikes=np.array([100.0]), prices=np.array([1.0]),
        intervals=np.array([10.0]), k0=100.0, cdsi=100.0,
        horizon=1.0 / 12.0, rpv01=1.0,
    )
    print(f"single-strike hand value: {implied_variance(single):.6f} "
          f"(expected 0.024000)")

    # richer options -> higher variance
    richer = make_chain([0.3, 1.0, 2.2, 0.9, 0.4])
    print(f"after bumping every price: {implied_variance(richer):.6f} "
          f"(> {var:.6f})")

    # splitting the middle strike's interval into two halves changes nothing
    split = CreditVixInputs(
        strikes=np.array([60.0, 80.0, 99.9999, 100.0001, 120.0, 140.0]),
        prices=np.array([0.2, 0.9, 2.1, 2.1, 0.8, 0.3]),
        intervals=np.array([20.0, 20.0, 10.0, 10.0, 20.0, 20.0]),
        k0=100.0, cdsi=101.0, horizon=1.0 / 12.0, rpv01=1.0,
    )
    print(f"after splitting one interval: {implied_variance(split):.6f} "
          f"(~ {var:.6f})")


if __name__ == "__main__":
    main()
