"""Exponent admissibility checks and the mixed-derivative exponent window.

Two layers are reported separately:

* structural conditions on the coefficient family (monotone relaxation,
  singularity orders dominated by the degeneracy orders, finite-entropy
  exponents), and
* the dimension-dependent admissibility chain that guarantees an
  integrability exponent m0 in (1, 2) for the mixed space-time derivative.

The m0 window is obtained by inverting delta = m / (2 - m) against the
strict inequality delta > 1, where delta is fixed by the Hoelder/Sobolev
splitting exponents of the given dimension (and, for n = 2, the free
integrability parameter p > 2).
"""

from dataclasses import dataclass
from typing import Optional

__all__ = ["InequalityCheck", "HypothesisReport", "check_hypotheses"]


@dataclass(frozen=True)
class InequalityCheck:
    """One inequality with its signed margin (positive means satisfied)."""

    name: str
    layer: str
    margin: float
    strict: bool = True

    @property
    def passed(self):
        return self.margin > 0.0 if self.strict else self.margin >= 0.0


@dataclass(frozen=True)
class HypothesisReport:
    n: int
    p: Optional[float]
    checks: tuple
    alpha1: float
    alpha2: float
    delta_gamma: float
    delta_lambda: float
    m0_interval: Optional[tuple]
    m0_default: Optional[float]

    def _layer_pass(self, layer):
        return all(c.passed for c in self.checks if c.layer == layer)

    @property
    def structure_pass(self):
        return self._layer_pass("structure")

    @property
    def entropy_pass(self):
        return self._layer_pass("entropy")

    @property
    def admissibility_pass(self):
        return self._layer_pass("admissibility")

    @property
    def overall_pass(self):
        return all(c.passed for c in self.checks)

    def margin(self, name):
        for c in self.checks:
            if c.name == name:
                return c.margin
        raise KeyError(name)

    def as_dict(self):
        return {
            "n": self.n,
            "p": self.p,
            "overall_pass": self.overall_pass,
            "structure_pass": self.structure_pass,
            "entropy_pass": self.entropy_pass,
            "admissibility_pass": self.admissibility_pass,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "delta_gamma": self.delta_gamma,
            "delta_lambda": self.delta_lambda,
            "m0_interval": list(self.m0_interval) if self.m0_interval else None,
            "m0_default": self.m0_default,
            "checks": [
                {"name": c.name, "layer": c.layer, "margin": c.margin,
                 "strict": c.strict, "passed": c.passed}
                for c in self.checks
            ],
        }


def _admissibility_checks(params, n, p):
    b1, b2 = params.beta1, params.beta2
    mu, gamma, lam = params.mu, params.gamma, params.lam
    checks = []
    if n == 3:
        mu_bound = (5.0 / 6.0) * gamma + 0.5 * (b1 - 10.0 / 3.0)
        checks.append(InequalityCheck("beta1_floor", "admissibility", b1 - 5.0))
        checks.append(InequalityCheck("beta2_floor", "admissibility", b2 - 5.0))
        checks.append(InequalityCheck("mu_upper_bound", "admissibility",
                                      mu_bound - mu))
        checks.append(InequalityCheck("lam_upper_bound", "admissibility",
                                      (3.0 * b2 - 10.0) - lam))
    elif n == 2:
        nu = (p - 1.0) / p
        mu_bound = nu * gamma + 0.5 * (b1 - 4.0 * nu)
        checks.append(InequalityCheck("beta1_floor", "admissibility", b1 - 4.0))
        checks.append(InequalityCheck("beta2_floor", "admissibility", b2 - 4.0))
        checks.append(InequalityCheck("mu_upper_bound", "admissibility",
                                      mu_bound - mu))
    else:
        mu_bound = gamma + 0.5 * (b1 - 4.0)
        checks.append(InequalityCheck("beta1_floor", "admissibility", b1 - 4.0))
        checks.append(InequalityCheck("beta2_floor", "admissibility", b2 - 4.0))
        checks.append(InequalityCheck("mu_upper_bound", "admissibility",
                                      mu_bound - mu))
    return checks


def _deltas(params, n, p):
    """Integrability exponents delta = m/(2-m) fixed by the splitting."""
    b1, b2 = params.beta1, params.beta2
    mu, gamma, lam = params.mu, params.gamma, params.lam
    if n == 3:
        d_gamma = (b1 + (5.0 / 3.0) * gamma - mu - 10.0 / 3.0) / mu
        d_lambda = (b2 + (2.0 / 3.0) * lam - 10.0 / 3.0) / lam
    elif n == 2:
        frac = (p - 2.0) / p
        d_gamma = (b1 + gamma - mu - 2.0 + (gamma - 2.0) * frac) / mu
        d_lambda = (b2 - 2.0 + (lam - 2.0) * frac) / lam
    else:
        d_gamma = (b1 + 2.0 * gamma - mu - 4.0) / mu
        d_lambda = (b2 + lam - 4.0) / lam
    return d_gamma, d_lambda


def check_hypotheses(params, n, p=None):
    """Evaluate every structural and admissibility inequality with margins.

    Failures are reported, never raised.  For n = 2 the free parameter
    p > 2 must be supplied; it enters both the admissible upper bound on
    mu and the resulting m0 window, so the window is p-dependent there.
    """
    if n not in (1, 2, 3):
        raise ValueError("dimension n must be 1, 2 or 3")
    if n == 2:
        if p is None or p <= 2.0:
            raise ValueError("n = 2 requires the integrability parameter p > 2")
    else:
        p = None

    checks = [
        InequalityCheck("mu_gt_gamma", "structure", params.mu - params.gamma),
        InequalityCheck("ceiling_gt_one", "structure", params.t_m - 1.0),
        InequalityCheck("beta1_positive", "structure", params.beta1),
        InequalityCheck("beta2_positive", "structure", params.beta2),
        InequalityCheck("beta1_le_gamma", "structure",
                        params.gamma - params.beta1, strict=False),
        InequalityCheck("beta2_le_lam", "structure",
                        params.lam - params.beta2, strict=False),
        InequalityCheck("gamma_gt_two", "entropy", params.gamma - 2.0),
        InequalityCheck("lam_gt_two", "entropy", params.lam - 2.0),
    ]
    checks.extend(_admissibility_checks(params, n, p))

    alpha1 = 1.0 + 0.5 * (params.mu - params.gamma - params.beta1)
    alpha2 = 1.0 - 0.5 * params.beta2
    d_gamma, d_lambda = _deltas(params, n, p)
    delta = min(d_gamma, d_lambda)
    if delta > 1.0:
        m_max = 2.0 * delta / (1.0 + delta)
        interval = (1.0, m_max)
        m0_default = 0.5 * (1.0 + m_max)
    else:
        interval = None
        m0_default = None

    return HypothesisReport(
        n=n, p=p, checks=tuple(checks), alpha1=alpha1, alpha2=alpha2,
        delta_gamma=d_gamma, delta_lambda=d_lambda,
        m0_interval=interval, m0_default=m0_default)
