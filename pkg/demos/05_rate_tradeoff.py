"""Shorter packets versus a higher SIR threshold.

Transmitting at rate R = ln(1 + beta) shortens each slot by 1/R but raises the
threshold, which stretches the schedule by exp(R d / alpha). The product has a
single minimum at R = alpha / d.

Run: python demos/05_rate_tradeoff.py
"""

import numpy as np

from slotmix.harness import rate_tradeoff_curve

for d, alpha in ((1, 4.0), (2, 4.0), (2, 3.0)):
    rates, cost = rate_tradeoff_curve(np.linspace(0.05, 10, 2000), d, alpha)
    best = rates[np.argmin(cost)]
    print(f"d={d} alpha={alpha}: minimum at R={best:.3f} (alpha/d = {alpha / d:.3f}), beta={np.expm1(best):.2f}")
