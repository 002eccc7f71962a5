"""High-precision Student-t tail probabilities via direct numerical
integration of the density with mpmath. Independent of the production
code's continued-fraction incomplete-beta route.
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 50


def t_density(x, dof):
    dof = mp.mpf(dof)
    c = mp.gamma((dof + 1) / 2) / (mp.sqrt(dof * mp.pi) * mp.gamma(dof / 2))
    return c * (1 + x * x / dof) ** (-(dof + 1) / 2)


def two_tailed_p(t, dof) -> float:
    """P(|T_dof| >= |t|) by quadrature over the upper tail."""
    t = mp.mpf(abs(float(t)))
    dof = mp.mpf(dof)
    tail = mp.quad(lambda x: t_density(x, dof), [t, mp.inf])
    p = 2 * tail
    return float(min(p, mp.mpf(1)))
