"""Catalog of convex penalties whose proximal maps are activation functions.

Each penalty supplies three mutually consistent formulas:

* ``eval(x)``               -- the penalty value (may be ``inf`` for indicators),
* ``prox(z)``               -- the activation, i.e. argmin_y 1/2||y - z||^2 + psi(y),
* ``conjugate_shifted(z)``  -- the convex conjugate of 1/2||.||^2 + psi at z.

The catalog is closed: the four kinds below cover identity, ReLU, clipping
and soft-thresholding activations.
"""

import numpy as np

INF = float("inf")


def _as_array(x):
    return np.asarray(x, dtype=np.float64)


class ZeroPenalty:
    """psi = 0; the activation is the identity."""

    tag = 0

    def eval(self, x):
        return 0.0

    def prox(self, z):
        return _as_array(z).copy()

    def prox_scaled(self, z, t):
        # prox of t*psi; independent of t for psi = 0
        return _as_array(z).copy()

    def conjugate_shifted(self, z):
        z = _as_array(z)
        return 0.5 * float(np.dot(z.ravel(), z.ravel()))

    def __repr__(self):
        return "ZeroPenalty()"

    def __eq__(self, other):
        return isinstance(other, ZeroPenalty)


class NonNegIndicator:
    """Indicator of the non-negative orthant; the activation is ReLU."""

    tag = 1

    def eval(self, x):
        x = _as_array(x)
        return 0.0 if np.all(x >= 0.0) else INF

    def prox(self, z):
        return np.maximum(0.0, _as_array(z))

    def prox_scaled(self, z, t):
        return np.maximum(0.0, _as_array(z))

    def conjugate_shifted(self, z):
        p = np.maximum(0.0, _as_array(z)).ravel()
        return 0.5 * float(np.dot(p, p))

    def __repr__(self):
        return "NonNegIndicator()"

    def __eq__(self, other):
        return isinstance(other, NonNegIndicator)


class BoxIndicator:
    """Indicator of the box [lo, hi]^n; the activation clips to the box."""

    tag = 2

    def __init__(self, lo=0.0, hi=1.0):
        if not lo < hi:
            raise ValueError(f"empty box: lo={lo} hi={hi}")
        self.lo = float(lo)
        self.hi = float(hi)

    def eval(self, x):
        x = _as_array(x)
        return 0.0 if np.all((x >= self.lo) & (x <= self.hi)) else INF

    def prox(self, z):
        return np.clip(_as_array(z), self.lo, self.hi)

    def prox_scaled(self, z, t):
        return np.clip(_as_array(z), self.lo, self.hi)

    def conjugate_shifted(self, z):
        z = _as_array(z)
        c = np.clip(z, self.lo, self.hi)
        return float(np.sum(z * c - 0.5 * c * c))

    def __repr__(self):
        return f"BoxIndicator(lo={self.lo}, hi={self.hi})"

    def __eq__(self, other):
        return (
            isinstance(other, BoxIndicator)
            and self.lo == other.lo
            and self.hi == other.hi
        )


class L1Penalty:
    """psi = lam * ||.||_1; the activation is soft-thresholding at lam."""

    tag = 3

    def __init__(self, lam=1.0):
        if lam <= 0:
            raise ValueError(f"soft threshold must be positive, got {lam}")
        self.lam = float(lam)

    def eval(self, x):
        return self.lam * float(np.sum(np.abs(_as_array(x))))

    def prox(self, z):
        z = _as_array(z)
        return np.sign(z) * np.maximum(np.abs(z) - self.lam, 0.0)

    def prox_scaled(self, z, t):
        z = _as_array(z)
        return np.sign(z) * np.maximum(np.abs(z) - t * self.lam, 0.0)

    def conjugate_shifted(self, z):
        p = self.prox(z).ravel()
        return 0.5 * float(np.dot(p, p))

    def __repr__(self):
        return f"L1Penalty(lam={self.lam})"

    def __eq__(self, other):
        return isinstance(other, L1Penalty) and self.lam == other.lam


#: tag byte -> penalty class, as used by the model archive format
PENALTY_TAGS = {
    0: ZeroPenalty,
    1: NonNegIndicator,
    2: BoxIndicator,
    3: L1Penalty,
}
