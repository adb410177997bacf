"""Hierarchical pooling of a family's parameters across groups.

One family (child plus parent set) observed in F groups is modelled with a
shared latent Dirichlet mean: the joint cell probabilities of group f are
drawn around a common centre, and the centre itself carries a Dirichlet
prior. The posterior over the centre is approximated with a factorized
variational family,

    q(centre) = Dirichlet(tau * kappa),   q(theta_f) = Dirichlet(nu_f),

where kappa lives on the simplex over the (parent config, child level) cells
and tau is a concentration. The fitted kappa feeds a closed-form per-group
marginal-likelihood score.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln, polygamma, softmax

KAPPA_FLOOR = 1e-12
_LOG_TAU_MIN = np.log(1e-8)
_LOG_TAU_MAX = np.log(1e10)


class VariationalConvergenceWarning(RuntimeWarning):
    """Emitted when the coordinate ascent hits its iteration cap."""


@dataclass(frozen=True)
class HierPrior:
    """Hyperparameters of the hierarchical family model.

    ``s`` is the concentration given to each group's Dirichlet around the
    shared centre; ``alpha0`` the Dirichlet hyperprior on the centre itself,
    shaped like the family's (configs, child levels) cell grid.
    """

    s: float
    alpha0: np.ndarray

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("s must be positive")
        alpha0 = np.ascontiguousarray(np.asarray(self.alpha0, dtype=float))
        if alpha0.ndim != 2 or np.any(alpha0 <= 0):
            raise ValueError("alpha0 must be a positive (configs, levels) array")
        alpha0.flags.writeable = False
        object.__setattr__(self, "alpha0", alpha0)

    @property
    def s0(self):
        return float(self.alpha0.sum())

    @staticmethod
    def uniform(shape, s, s0=None):
        """Flat hyperprior: every cell gets s0 / n_cells (1.0 when s0 is None)."""
        n_cells = int(shape[0]) * int(shape[1])
        fill = 1.0 if s0 is None else float(s0) / n_cells
        return HierPrior(s, np.full(shape, fill))


@dataclass(frozen=True)
class VariationalFit:
    """Converged variational parameters for one family.

    kappa: shared-centre mean, strictly positive, sums to 1 over all cells.
    tau: centre concentration.
    nu: per-group Dirichlet parameters, shape (F, configs, levels); at the
        fixed point nu = s * kappa + counts holds exactly.
    """

    kappa: np.ndarray
    tau: float
    nu: np.ndarray
    elbo_trace: tuple
    converged: bool

    def __post_init__(self):
        for name in ("kappa", "nu"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _dirichlet_entropy(params):
    """Entropy of Dirichlet rows; params has shape (..., M)."""
    m = params.shape[-1]
    tot = params.sum(axis=-1)
    return (gammaln(params).sum(axis=-1) - gammaln(tot)
            + (tot - m) * digamma(tot)
            - ((params - 1.0) * digamma(params)).sum(axis=-1))


def _expected_lgamma_alpha(s, kappa, tau):
    """Second-order expansion of E[lnGamma(s * centre_m)] about the mean.

    The exact expectation has no closed form; the quadratic term uses the
    Dirichlet(tau * kappa) variance of each coordinate.
    """
    var = s * s * kappa * (1.0 - kappa) / (tau + 1.0)
    return gammaln(s * kappa) + 0.5 * polygamma(1, s * kappa) * var


def _elbo_flat(n, a0, s, kappa, tau, nu):
    n_groups, m = n.shape
    s0 = a0.sum()
    e_log_theta = digamma(nu) - digamma(nu.sum(axis=1, keepdims=True))
    tk = tau * kappa
    value = float(((n + s * kappa - 1.0) * e_log_theta).sum())
    value += n_groups * float(gammaln(s)) - n_groups * float(_expected_lgamma_alpha(s, kappa, tau).sum())
    value += float(gammaln(s0)) - float(gammaln(a0).sum())
    value += float(((a0 - 1.0) * (digamma(tk) - digamma(tau))).sum())
    value += float(_dirichlet_entropy(nu).sum())
    value += float(_dirichlet_entropy(tk[None, :])[0])
    return value


def _elbo_grad_flat(n, a0, s, kappa, tau, nu):
    """Analytic gradient in the unconstrained parameterization.

    Returns (g_rho, g_tau): g_rho is the gradient with respect to the
    softmax logits of kappa, g_tau the plain tau derivative.
    """
    n_groups, m = n.shape
    e_log_theta_sum = (digamma(nu) - digamma(nu.sum(axis=1, keepdims=True))).sum(axis=0)
    sk = s * kappa
    tk = tau * kappa
    pg1_sk = polygamma(1, sk)
    pg1_tk = polygamma(1, tk)
    var = s * s * kappa * (1.0 - kappa) / (tau + 1.0)
    d_eg = (s * digamma(sk)
            + 0.5 * (s * polygamma(2, sk) * var + pg1_sk * s * s * (1.0 - 2.0 * kappa) / (tau + 1.0)))
    g_kappa = s * e_log_theta_sum - n_groups * d_eg + (a0 - tk) * tau * pg1_tk
    g_rho = kappa * (g_kappa - float((g_kappa * kappa).sum()))
    g_tau = (n_groups * 0.5 * float((pg1_sk * s * s * kappa * (1.0 - kappa)).sum()) / (tau + 1.0) ** 2
             + float(((a0 - 1.0) * (kappa * pg1_tk - polygamma(1, tau))).sum())
             + (tau - m) * float(polygamma(1, tau))
             - float(((tk - 1.0) * kappa * pg1_tk).sum()))
    return g_rho, float(g_tau)


def elbo(counts, prior, kappa, tau, nu):
    """Evidence lower bound of the variational state on a family's counts."""
    n_groups = counts.n_groups
    m = counts.n_configs * counts.child_card
    n = counts.per_group.reshape(n_groups, m).astype(float)
    return _elbo_flat(n, prior.alpha0.reshape(m), prior.s,
                      np.asarray(kappa, float).reshape(m), float(tau),
                      np.asarray(nu, float).reshape(n_groups, m))


def _clamp_simplex(kappa):
    kappa = np.maximum(kappa, KAPPA_FLOOR)
    return kappa / kappa.sum()


def _ascend_centre(n, a0, s, kappa, tau, nu, step, max_steps=40):
    """Backtracking gradient ascent on (kappa, tau) at fixed nu.

    kappa moves through softmax logits, tau through its logarithm; a step is
    accepted only if it improves the bound (Armijo condition), so the bound
    never decreases here.
    """
    rho = np.log(kappa)
    lam = np.log(tau)
    best = _elbo_flat(n, a0, s, kappa, tau, nu)
    for _ in range(max_steps):
        g_rho, g_tau = _elbo_grad_flat(n, a0, s, kappa, tau, nu)
        g_lam = g_tau * tau
        gnorm2 = float(g_rho @ g_rho) + g_lam * g_lam
        if gnorm2 < 1e-24:
            break
        t = step
        accepted = False
        while t >= 2.0 ** -44:
            kappa_t = _clamp_simplex(softmax(rho + t * g_rho))
            tau_t = float(np.exp(np.clip(lam + t * g_lam, _LOG_TAU_MIN, _LOG_TAU_MAX)))
            trial = _elbo_flat(n, a0, s, kappa_t, tau_t, nu)
            if trial > best + 1e-4 * t * gnorm2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        improvement = trial - best
        kappa, tau, best = kappa_t, tau_t, trial
        rho = np.log(kappa)
        lam = np.log(tau)
        step = min(t * 2.0, 1e4)
        if improvement <= 1e-10 * max(1.0, abs(best)):
            break
    return kappa, tau, step


def fit_variational(counts, prior, tol=1e-6, max_iters=500):
    """Coordinate ascent for the shared centre of one family's groups.

    Alternates the closed-form per-group update nu_f = s * kappa + n_f with
    gradient steps on (kappa, tau), tracking the bound after every sweep.
    Stops when the relative change of the bound falls below ``tol`` or after
    ``max_iters`` sweeps (returning the last iterate with a warning).
    """
    if tol <= 0 or max_iters < 1:
        raise ValueError("tol must be positive and max_iters at least 1")
    n_groups = counts.n_groups
    shape = (counts.n_configs, counts.child_card)
    if prior.alpha0.shape != shape:
        raise ValueError("prior shape does not match the family's cell grid")
    m = shape[0] * shape[1]
    n = counts.per_group.reshape(n_groups, m).astype(float)
    a0 = prior.alpha0.reshape(m)
    s = prior.s
    s0 = float(a0.sum())

    if counts.total == 0:
        # no evidence in any group: posterior centre equals the prior centre
        kappa = _clamp_simplex(a0 / s0)
        nu = s * kappa + n
        trace = (_elbo_flat(n, a0, s, kappa, s0, nu),)
        return VariationalFit(kappa.reshape(shape), s0, nu.reshape((n_groups,) + shape),
                              trace, True)

    kappa = _clamp_simplex(n.sum(axis=0) + a0)
    tau = s0
    nu = s * kappa + n
    previous = _elbo_flat(n, a0, s, kappa, tau, nu)
    trace = [previous]
    converged = False
    step = 1.0
    for _ in range(max_iters):
        kappa, tau, step = _ascend_centre(n, a0, s, kappa, tau, nu, step)
        nu = s * kappa + n
        current = _elbo_flat(n, a0, s, kappa, tau, nu)
        trace.append(current)
        if abs(current - previous) <= tol * max(1.0, abs(previous)):
            converged = True
            break
        previous = current
    if not converged:
        warnings.warn("variational fit stopped at max_iters without meeting tol",
                      VariationalConvergenceWarning, stacklevel=2)
    return VariationalFit(kappa.reshape(shape), float(tau),
                          nu.reshape((n_groups,) + shape), tuple(trace), converged)


def bhd_local_log_score(counts, fit, s=1.0):
    """Per-group marginal likelihood of a family under the fitted centre.

    Each group contributes a closed-form Dirichlet-multinomial term with
    cell weights s * kappa; the group terms are summed in group order. With
    a uniform kappa this reduces exactly to the sum of per-group uniform-
    prior scores, since both run through the same evaluation kernel.
    """
    from .scores import bd_local_log_score
    if fit.kappa.shape != (counts.n_configs, counts.child_card):
        raise ValueError("fit shape does not match the family's cell grid")
    alpha = s * fit.kappa
    total = 0.0
    for f in range(counts.n_groups):
        total += bd_local_log_score(counts.per_group[f], alpha)
    return total


def hier_posterior_means(counts, fit, s=1.0):
    """Posterior mean joint cell probabilities per group, shape (F, J, K).

    Every group's table is a convex combination of the shared centre kappa
    and the group's empirical frequencies, so each estimate lies between
    the two; tables sum to 1 over all cells of a group.
    """
    if fit.kappa.shape != (counts.n_configs, counts.child_card):
        raise ValueError("fit shape does not match the family's cell grid")
    n = counts.per_group.astype(float)
    totals = n.sum(axis=(1, 2), keepdims=True)
    return (s * fit.kappa[None, :, :] + n) / (s + totals)
