"""Semi-analytical 1D displacement solution via the Welge construction.

Non-wetting phase injected into a water-filled horizontal column with
gravity and capillarity off: the saturation profile is a rarefaction
fan attached to a shock whose saturation comes from the tangent drawn
from the initial state onto the non-wetting fractional-flow curve.
Everything here is closed-form plus scalar root finding, independent of
the finite-volume machinery, so it serves as a benchmark oracle.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


@dataclass(frozen=True)
class FractionalFlow:
    """Non-wetting fractional flow for one material and fluid pair."""

    s_wr: float
    s_nr: float
    pore_size_index: float
    mu_w: float
    mu_n: float

    @property
    def mobile(self):
        return 1.0 - self.s_wr - self.s_nr

    def _se(self, s_n):
        # same clamp as the flow kernels: below s_nr the non-wetting
        # phase is immobile (se pins at 1), so f has a flat foot there
        se = (1.0 - s_n - self.s_wr) / self.mobile
        return np.clip(se, 0.0, 1.0)

    def value(self, s_n):
        lam = self.pore_size_index
        a = (2.0 + 3.0 * lam) / lam
        b = (2.0 + lam) / lam
        se = self._se(s_n)
        lw = se ** a / self.mu_w
        ln = (1.0 - se) ** 2 * (1.0 - se ** b) / self.mu_n
        return ln / (ln + lw)

    def derivative(self, s_n):
        lam = self.pore_size_index
        a = (2.0 + 3.0 * lam) / lam
        b = (2.0 + lam) / lam
        se = self._se(s_n)
        dse = -1.0 / self.mobile
        lw = se ** a / self.mu_w
        ln = (1.0 - se) ** 2 * (1.0 - se ** b) / self.mu_n
        dlw = a * se ** (a - 1.0) * dse / self.mu_w
        dln = (-2.0 * (1.0 - se) * (1.0 - se ** b)
               + (1.0 - se) ** 2 * (-b * se ** (b - 1.0))) * dse / self.mu_n
        return (dln * lw - ln * dlw) / (ln + lw) ** 2


def welge_shock(ff):
    """Tangent point from s_n = 0: the shock saturation and speed.

    Returns (s_shock, dimensionless speed f(s)/s = f'(s)).
    """
    def tangent_gap(s):
        return ff.derivative(s) * s - ff.value(s)

    # start above the flat foot (f and f' both vanish below s_nr, which
    # would hand brentq a spurious root at the bracket edge)
    lo = ff.s_nr + 1e-6 * ff.mobile
    hi = 0.999999 * ff.mobile
    s_shock = brentq(tangent_gap, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return s_shock, ff.value(s_shock) / s_shock


def profile(x_over_l, pvi, ff):
    """Saturation at scaled positions x/L after `pvi` pore volumes.

    Fan for positions slower than the shock (inverted by bisection on
    the monotone branch of f'), sharp zero ahead of it.
    """
    s_shock, speed = welge_shock(ff)
    x_front = pvi * speed
    s_max = ff.mobile
    v_tail = ff.derivative(s_max)  # slowest fan characteristic
    out = np.zeros_like(np.asarray(x_over_l, dtype=float))
    for i, xd in np.ndenumerate(np.asarray(x_over_l, dtype=float)):
        if xd >= x_front:
            continue
        target = xd / pvi
        if target <= v_tail:
            out[i] = s_max
            continue
        # f' decreases with s on [s_shock, s_max]
        lo, hi = s_shock, s_max

        def gap(s):
            return ff.derivative(s) - target

        out[i] = brentq(gap, lo, hi, xtol=1e-14)
    return out


def l1_error(s_sim, s_oracle):
    """Mean absolute saturation difference."""
    return float(np.mean(np.abs(np.asarray(s_sim) - np.asarray(s_oracle))))
