# -*- coding: utf-8 -*-
"""
Theoretical side of the solvers: spectral surrogates, strong-convexity
constants, parameter regions, rate constants, Cesaro bounds, recurrence
oracles and the feasibility certificate calculator.

Rate calculators never raise on failed preconditions. They return a
RateReport with ``preconditions_ok`` False and the failed conditions listed
in ``violated``; only undefined expressions raise BoundError.
"""
import math
from collections import namedtuple

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, eigsh, ArpackNoConvergence

from linfeas.data_utils import logger


# eigenvalues at or below EIGEN_ZERO_RTOL * lambda_max count as zero
EIGEN_ZERO_RTOL = 1e-10

# dense eigendecomposition of the smaller Gram matrix up to this order
DENSE_EIGEN_LIMIT = 5000

Q1, Q2, OUTSIDE = 'Q1', 'Q2', 'outside'

GSKM_Q1 = 'gskm-q1'
GSKM_Q2 = 'gskm-q2'
PASKM_MATRIX = 'paskm-matrix'
PASKM_ZETA = 'paskm-zeta'

PARAM1, PARAM2, ZETA, CUSTOM = 'param1', 'param2', 'zeta', 'custom'
PASKM_PRESETS = (PARAM1, PARAM2, ZETA, CUSTOM)

SKM_REGIME, GSKM_REGIME, PASKM_REGIME = 'skm', 'gskm', 'paskm'

RK, MM = 'rk', 'mm'


class SpectralError(RuntimeError):
    """The eigen-solver did not converge."""

    def __init__(self, message, residuals=None):
        super(SpectralError, self).__init__(message)
        self.residuals = residuals


class BoundError(ValueError):
    """Parameters outside the window where a bound is defined."""


SpectralInfo = namedtuple('SpectralInfo', ['lambda_min_plus', 'lambda_max', 'frobenius_sq',
                                           'hoffman_sq_surrogate', 'm', 'n', 'rank'])
"""Extremal eigenvalues of A^T A, ||A||_F^2 and the surrogate L^2 = 1/lambda_min_plus."""

ConvexityBounds = namedtuple('ConvexityBounds', ['mu1', 'mu2', 'eta', 'h_delta'])
"""Strong-convexity / smoothness constants of the sampled loss with eta = 2 delta - delta^2 and h = 1 - eta mu1."""

Membership = namedtuple('Membership', ['region', 'slack'])
"""Region of xi and, for xi <= 0, the slack 1 - lhs of the strict Q2 inequality."""

_REPORT_FIELDS = ['regime', 'preconditions_ok', 'violated',
                  'phi1', 'phi2', 'phi', 'rho', 'R1', 'R2', 'R3', 'R4',
                  'Pi1', 'Pi2', 'Pi3', 'Pi4', 'Gamma1', 'Gamma2', 'Gamma3', 'rho1', 'rho2',
                  'cesaro_distance', 'cesaro_loss', 'zeta', 'zeta_ok', 'zeta_rate']

RateReport = namedtuple('RateReport', _REPORT_FIELDS, defaults=(None,) * len(_REPORT_FIELDS))
"""Rate constants of one regime; fields that do not apply stay None."""

CertificateReport = namedtuple('CertificateReport', ['sigma', 'theta_threshold', 'k', 'k_min', 'k_bound',
                                                     'h_log2', 'h_value', 'p_bound', 'psi', 'phi', 'rho_bar'])
"""Certificate-of-feasibility bounds; logarithms in base 2, sigma as given."""

OracleResult = namedtuple('OracleResult', ['simulated', 'bounds'])
"""Value of the equality recurrence and the closed-form bounds keyed by name."""


def report_to_dict(report):
    """JSON-friendly dict of a namedtuple report (numpy scalars become floats)."""
    out = {}
    for key, value in report._asdict().items():
        if isinstance(value, (np.floating, np.integer)):
            value = value.item()
        if isinstance(value, float) and not math.isfinite(value):
            value = str(value)
        out[key] = value
    return out


def _gram_operator(A):
    n = A.shape[1]
    return LinearOperator((n, n), matvec=lambda v: A.T @ (A @ v), dtype=np.float64)


def _arpack(op, k, which):
    try:
        # fixed start vector so repeated estimates agree bit for bit
        v0 = np.random.RandomState(0).standard_normal(op.shape[0])
        return eigsh(op, k=k, which=which, v0=v0, return_eigenvectors=False)
    except ArpackNoConvergence as err:
        residuals = [float(np.linalg.norm(op.matvec(vec) - val * vec))
                     for val, vec in zip(err.eigenvalues, err.eigenvectors.T)]
        raise SpectralError("ARPACK did not converge for which={!r} ({} of {} eigenpairs found)"
                            .format(which, len(err.eigenvalues), k), residuals=residuals)


def spectral_summary(problem):
    """
    Extremal eigenvalues of A^T A.

    The smaller of A^T A and A A^T is decomposed densely when its order is at
    most DENSE_EIGEN_LIMIT; otherwise ARPACK is run on the A^T A operator.

    Parameters
    ----------
    problem : Problem

    Returns
    -------
    SpectralInfo

    """
    m, n = problem.shape
    frobenius_sq = float(problem.row_norms_sq.sum())
    if min(m, n) <= DENSE_EIGEN_LIMIT:
        A = problem.dense()
        gram = A.T @ A if n <= m else A @ A.T
        eigs = linalg.eigvalsh(gram)
        lambda_max = float(eigs[-1])
        nonzero = eigs[eigs > EIGEN_ZERO_RTOL * lambda_max]
    else:
        logger.info("Estimating extremal eigenvalues of a {}x{} Gram operator with ARPACK.".format(n, n))
        op = _gram_operator(problem.A)
        lambda_max = float(_arpack(op, 1, 'LA')[0])
        eigs = np.sort(_arpack(op, min(20, n - 1), 'SA'))
        nonzero = eigs[eigs > EIGEN_ZERO_RTOL * lambda_max]
        if nonzero.size == 0:
            raise SpectralError("no nonzero eigenvalue among the {} smallest of A^T A".format(eigs.size))
    lambda_min_plus = float(nonzero[0])
    return SpectralInfo(lambda_min_plus=lambda_min_plus,
                        lambda_max=lambda_max,
                        frobenius_sq=frobenius_sq,
                        hoffman_sq_surrogate=1.0 / lambda_min_plus,
                        m=m, n=n, rank=int(nonzero.size))


def _eta(delta):
    return 2.0 * delta - delta ** 2


def _check_delta(delta, closed=True):
    upper_ok = delta <= 2 if closed else delta < 2
    if not (delta > 0 and upper_ok):
        raise BoundError("delta must lie in (0, 2{}, got {}".format(']' if closed else ')', delta))


def convexity_bounds(spectral, m, beta, delta):
    """
    mu1 = min(1, lambda_min_plus / m), mu2 = min(1, beta lambda_max / m).

    mu1 uses the consistent-system surrogate of the Hoffman constant.

    Parameters
    ----------
    spectral : SpectralInfo
    m : int
    beta : int
    delta : float

    Returns
    -------
    ConvexityBounds

    """
    _check_delta(delta)
    mu1 = min(1.0, spectral.lambda_min_plus / m)
    mu2 = min(1.0, beta * spectral.lambda_max / m)
    return bounds_from_mu(mu1, mu2, delta)


def bounds_from_mu(mu1, mu2, delta):
    """ConvexityBounds from given mu1 <= mu2."""
    _check_delta(delta)
    if not 0 < mu1 <= mu2 <= 1:
        raise BoundError("need 0 < mu1 <= mu2 <= 1, got mu1={}, mu2={}".format(mu1, mu2))
    eta = _eta(delta)
    return ConvexityBounds(mu1=mu1, mu2=mu2, eta=eta, h_delta=1.0 - eta * mu1)


def q_membership(xi, delta, bounds):
    """
    Q1 = [0, 1]; Q2 = {-1 < xi <= 0 : (1+xi) sqrt(h) - xi (1 + delta sqrt(mu2)) < 1}.

    Parameters
    ----------
    xi : float
    delta : float
    bounds : ConvexityBounds

    Returns
    -------
    Membership
        ``slack`` is 1 - lhs of the Q2 inequality for xi <= 0, else None.

    """
    h = 1.0 - _eta(delta) * bounds.mu1
    slack = None
    if -1 < xi <= 0:
        lhs = (1 + xi) * math.sqrt(h) - xi * (1 + delta * math.sqrt(bounds.mu2))
        slack = 1.0 - lhs
    if 0 <= xi <= 1:
        return Membership(Q1, slack)
    if slack is not None and slack > 0:
        return Membership(Q2, slack)
    return Membership(OUTSIDE, slack)


def scalar_constants(phi1, phi2):
    """phi (largest root of phi^2 + phi1 phi - phi2), rho = phi + phi1 and R1..R4."""
    phi = (-phi1 + math.sqrt(phi1 ** 2 + 4 * phi2)) / 2.0
    rho = phi + phi1
    denom = phi + rho
    if denom <= 0:
        raise BoundError("phi + rho must be positive, got phi1={}, phi2={}".format(phi1, phi2))
    return dict(phi=phi, rho=rho,
                R1=(1 + phi) / denom, R2=(1 - rho) / denom,
                R3=(rho + phi2) / denom, R4=(phi - phi2) / denom)


def matrix_constants(pi1, pi2, pi3, pi4):
    """
    Eigen data of [[pi1, pi2], [pi3, pi4]].

    Gamma1..Gamma3 are None when pi3 or the discriminant vanishes.
    """
    disc = math.sqrt(max((pi1 - pi4) ** 2 + 4 * pi2 * pi3, 0.0))
    out = dict(rho1=(pi1 + pi4 - disc) / 2.0, rho2=(pi1 + pi4 + disc) / 2.0,
               Gamma1=None, Gamma2=None, Gamma3=None)
    if pi3 != 0 and disc > 0:
        out.update(Gamma1=(pi1 - pi4 + disc) / (2 * pi3),
                   Gamma2=(pi1 - pi4 - disc) / (2 * pi3),
                   Gamma3=pi3 / disc)
    return out


def _matrix_violations(pi1, pi2, pi3, pi4):
    violated = []
    if min(pi1, pi2, pi3, pi4) < 0:
        violated.append("Pi entries must be nonnegative")
    det = pi1 * pi4 - pi2 * pi3
    if det < 0:
        violated.append("Pi1 Pi4 - Pi2 Pi3 >= 0")
    if not pi1 + pi4 < 1 + min(1.0, det):
        violated.append("Pi1 + Pi4 < 1 + min(1, Pi1 Pi4 - Pi2 Pi3)")
    return violated


def gskm_rate(xi, delta, bounds):
    """
    Rate constants of GSKM.

    For xi in [0, 1] the scalar recurrence with phi1 = (1-xi) h, phi2 = xi h
    applies and the Cesaro constants (1+phi)/(1-rho) and
    (1+xi)/(2 delta (2-delta)) are reported. For negative xi the 2x2 system
    Pi1 = sqrt(h), Pi2 = |xi|, Pi3 = delta sqrt(mu2 h), Pi4 = |xi| (1 + delta sqrt(mu2))
    applies.

    Parameters
    ----------
    xi : float
    delta : float
    bounds : ConvexityBounds

    Returns
    -------
    RateReport

    """
    _check_delta(delta)
    h = 1.0 - _eta(delta) * bounds.mu1
    violated = []
    if not 0 < delta < 2:
        violated.append("0 < delta < 2")
    membership = q_membership(xi, delta, bounds)

    if 0 <= xi <= 1:
        phi1, phi2 = (1 - xi) * h, xi * h
        if not phi1 + phi2 < 1:
            violated.append("phi1 + phi2 < 1")
        consts = scalar_constants(phi1, phi2)
        rho = consts['rho']
        return RateReport(regime=GSKM_Q1, preconditions_ok=not violated, violated=violated,
                          phi1=phi1, phi2=phi2,
                          cesaro_distance=(1 + consts['phi']) / (1 - rho) if rho < 1 else float('inf'),
                          cesaro_loss=(1 + xi) / (2 * delta * (2 - delta)) if delta < 2 else float('inf'),
                          **consts)

    if membership.region != Q2:
        violated.append("xi in Q = Q1 u Q2")
    pis = dict(Pi1=math.sqrt(h), Pi2=abs(xi), Pi3=delta * math.sqrt(bounds.mu2 * h),
               Pi4=abs(xi) * (1 + delta * math.sqrt(bounds.mu2)))
    violated.extend(_matrix_violations(pis['Pi1'], pis['Pi2'], pis['Pi3'], pis['Pi4']))
    consts = matrix_constants(pis['Pi1'], pis['Pi2'], pis['Pi3'], pis['Pi4'])
    if not consts['rho2'] < 1:
        violated.append("rho2 < 1")
    # for Q2 the certificate uses phi = 0
    return RateReport(regime=GSKM_Q2, preconditions_ok=not violated, violated=violated,
                      phi=0.0, **dict(pis, **consts))


def alpha_limit(gamma, delta, p, mu1):
    """
    Upper limit alpha(gamma, delta, p) on alpha for omega = (2-gamma)/(3+p), clipped to 1.

    Parameters
    ----------
    gamma, delta, p, mu1 : float

    Returns
    -------
    float

    """
    h = 1.0 - _eta(delta) * mu1
    num = (1 + p - gamma + gamma ** 2) * (1 - h)
    den = 1 - h + p + gamma + (gamma - p) * h - gamma ** 2 * h + mu1 * p * gamma * (gamma - 2)
    if den <= 0:
        raise BoundError("alpha limit undefined for gamma={}, delta={}, p={}".format(gamma, delta, p))
    return min(1.0, num / den)


def paskm_preset(delta, bounds, preset=PARAM1, alpha=None, omega=None, gamma=None, p=0.0):
    """
    PASKM triple (alpha, omega, gamma).

    param1 / param2 : gamma = c sqrt(2 delta - delta^2) with c = 1.5 / 2,
        omega = (2-gamma)/(3+p), alpha = 0.99 alpha(gamma, delta, p).
    zeta : zeta = 3.99 eta mu1 / (1-mu1)^2 (1 when mu1 = 1), gamma = sqrt(zeta eta mu1),
        alpha = eta / (eta + gamma), omega = 1 - (zeta mu1^2 + 2 gamma mu1 - zeta mu1) / (1 + zeta mu1^2).
    custom : the given triple, range-checked.

    Parameters
    ----------
    delta : float
        In (0, 2).
    bounds : ConvexityBounds
    preset : str
    alpha, omega, gamma : float
        Only for the custom preset.
    p : float
        Offset in omega for param1 / param2.

    Returns
    -------
    tuple
        (alpha, omega, gamma)

    """
    _check_delta(delta, closed=False)
    eta = _eta(delta)
    mu1 = bounds.mu1
    preset = preset.lower()
    if preset in (PARAM1, PARAM2):
        gamma = (1.5 if preset == PARAM1 else 2.0) * math.sqrt(eta)
        omega = (2 - gamma) / (3 + p)
        alpha = 0.99 * alpha_limit(gamma, delta, p, mu1)
    elif preset == ZETA:
        zeta = 3.99 * eta * mu1 / (1 - mu1) ** 2 if mu1 < 1 else 1.0
        gamma = math.sqrt(zeta * eta * mu1)
        alpha = eta / (eta + gamma)
        omega = 1 - (zeta * mu1 ** 2 + 2 * gamma * mu1 - zeta * mu1) / (1 + zeta * mu1 ** 2)
    elif preset == CUSTOM:
        if None in (alpha, omega, gamma):
            raise BoundError("custom preset needs alpha, omega and gamma")
        if not (0 <= alpha <= 1 and 0 <= omega <= 1 and gamma >= 0):
            raise BoundError("need alpha, omega in [0, 1] and gamma >= 0, got ({}, {}, {})"
                             .format(alpha, omega, gamma))
    else:
        raise BoundError("unknown PASKM preset {!r}, expected one of {}".format(preset, PASKM_PRESETS))
    return float(alpha), float(omega), float(gamma)


def paskm_rate(alpha, omega, gamma, delta, bounds):
    """
    Rate constants of PASKM.

    Two sets of conditions are checked. The 2x2 system on (d(v)^2, d(y)^2) with
    Pi1 = omega (1+gamma), Pi2 = (1-omega) + gamma mu1 (gamma+3 omega-2),
    Pi3 = alpha omega (1+gamma), Pi4 = (1-alpha) h + alpha (1-omega) + alpha gamma mu1 (gamma+3 omega-2)
    gives rate rho2. The zeta parametrisation (zeta = gamma^2 / (eta mu1)) gives rate omega.

    Parameters
    ----------
    alpha, omega, gamma : float
    delta : float
    bounds : ConvexityBounds

    Returns
    -------
    RateReport

    """
    _check_delta(delta)
    eta = _eta(delta)
    mu1 = bounds.mu1
    h = 1.0 - eta * mu1
    slope = gamma + 3 * omega - 2

    matrix_violated = []
    if not 0 < delta < 2:
        matrix_violated.append("0 < delta < 2")
    if not (0 <= alpha <= 1 and 0 <= omega <= 1 and gamma >= 0):
        matrix_violated.append("alpha, omega in [0, 1], gamma >= 0")
    if slope > 0:
        matrix_violated.append("gamma + 3 omega - 2 <= 0")
    cross = omega * h * (1 - alpha) * (1 + gamma)
    if not cross < 1:
        matrix_violated.append("omega h (1-alpha) (1+gamma) < 1")
    cond = omega * (1 + gamma) + h * (1 - alpha) + alpha * (1 - omega) + alpha * gamma * mu1 * slope - cross
    if not cond < 1:
        matrix_violated.append("combined contraction condition < 1 (value {:.6g})".format(cond))

    pis = dict(Pi1=omega * (1 + gamma), Pi2=(1 - omega) + gamma * mu1 * slope,
               Pi3=alpha * omega * (1 + gamma),
               Pi4=(1 - alpha) * h + alpha * (1 - omega) + alpha * gamma * mu1 * slope)
    matrix_violated.extend(_matrix_violations(pis['Pi1'], pis['Pi2'], pis['Pi3'], pis['Pi4']))
    consts = matrix_constants(pis['Pi1'], pis['Pi2'], pis['Pi3'], pis['Pi4'])
    if not consts['rho2'] < 1:
        matrix_violated.append("rho2 < 1")

    zeta_violated = []
    zeta = gamma ** 2 / (eta * mu1) if eta > 0 else float('nan')
    if not zeta > 0:
        zeta_violated.append("zeta > 0")
    else:
        if mu1 < 1 and not zeta < 4 * eta * mu1 / (1 - mu1) ** 2:
            zeta_violated.append("zeta < 4 eta mu1 / (1-mu1)^2")
        if not math.isclose(alpha, eta / (eta + gamma), rel_tol=1e-9):
            zeta_violated.append("alpha = eta / (eta + gamma)")
        omega_expected = 1 - (zeta * mu1 ** 2 + 2 * gamma * mu1 - zeta * mu1) / (1 + zeta * mu1 ** 2)
        if not math.isclose(omega, omega_expected, rel_tol=1e-9):
            zeta_violated.append("omega = 1 - (zeta mu1^2 + 2 gamma mu1 - zeta mu1) / (1 + zeta mu1^2)")
    zeta_ok = not zeta_violated

    regime = PASKM_ZETA if matrix_violated and zeta_ok else PASKM_MATRIX
    violated = matrix_violated if regime == PASKM_MATRIX else []
    if not zeta_ok and matrix_violated:
        violated = matrix_violated + zeta_violated
    return RateReport(regime=regime, preconditions_ok=not matrix_violated or zeta_ok, violated=violated,
                      zeta=zeta, zeta_ok=zeta_ok, zeta_rate=omega if zeta_ok else None,
                      **dict(pis, **consts))


def classical_rate(spectral, variant):
    """
    Rates of the classical limits with delta = 1.

    rk : 1 - lambda_min_plus / ||A||_F^2 (uniform sampling, beta = 1)
    mm : 1 - lambda_min_plus / m (Motzkin, beta = m)

    Parameters
    ----------
    spectral : SpectralInfo
    variant : str

    Returns
    -------
    float

    """
    if variant == RK:
        return 1.0 - spectral.lambda_min_plus / spectral.frobenius_sq
    if variant == MM:
        return 1.0 - spectral.lambda_min_plus / spectral.m
    raise BoundError("unknown classical variant {!r}, expected 'rk' or 'mm'".format(variant))


def rho_bar(report):
    """
    Certificate contraction: rho for the scalar regime, rho2^2 for the 2x2 regime.

    Parameters
    ----------
    report : RateReport

    Returns
    -------
    float

    """
    if report.regime == GSKM_Q1:
        return report.rho
    if report.rho2 is None:
        raise BoundError("report of regime {} has no rho2".format(report.regime))
    return report.rho2 ** 2


def equivalent_paskm_params(xi, delta, alpha):
    """
    PASKM triple whose y-sequence reproduces GSKM with weight xi.

    omega (1-alpha) = -xi and alpha gamma = alpha delta + omega delta (1-alpha).

    Parameters
    ----------
    xi : float
        In (-1, 0].
    delta : float
    alpha : float
        In (0, 1].

    Returns
    -------
    tuple
        (alpha, omega, gamma)

    """
    if not -1 < xi <= 0:
        raise BoundError("equivalence needs -1 < xi <= 0, got {}".format(xi))
    if not 0 < alpha <= 1:
        raise BoundError("equivalence needs 0 < alpha <= 1, got {}".format(alpha))
    if alpha == 1:
        if xi != 0:
            raise BoundError("alpha = 1 only reproduces xi = 0")
        omega = 0.0
    else:
        omega = -xi / (1 - alpha)
    if omega > 1:
        raise BoundError("omega = {} exceeds 1; need alpha <= 1 + xi".format(omega))
    gamma = delta * (alpha - xi) / alpha
    return float(alpha), float(omega), float(gamma)


def _window(condition, message):
    if not condition:
        raise BoundError(message)


def cesaro_bounds(regime, params, d0_sq, f0, k):
    """
    Bound on E[f] at the Cesaro average after k iterations.

    skm : d0^2 / (2 delta k (2 - delta)), params {delta}
    gskm : params {xi, delta, mu2}; -1 < xi <= 0 with delta < 2(1+xi)/(1-2xi),
        or 0 <= xi <= 1 with (1+xi) d0^2 / (2 delta k (2 - delta))
    paskm : params {alpha, omega, gamma, delta} with alpha gamma = alpha delta + omega delta (1-alpha)

    Parameters
    ----------
    regime : str
    params : dict
    d0_sq : float
        d(x_0, P)^2.
    f0 : float
        f(x_0).
    k : int

    Returns
    -------
    float

    """
    _window(k >= 1, "k must be at least 1, got {}".format(k))
    delta = params['delta']
    _window(0 < delta < 2, "0 < delta < 2 violated (delta={})".format(delta))

    if regime == SKM_REGIME:
        return d0_sq / (2 * delta * k * (2 - delta))

    if regime == GSKM_REGIME:
        xi = params['xi']
        if 0 < xi <= 1:
            return (1 + xi) * d0_sq / (2 * delta * k * (2 - delta))
        _window(-1 < xi <= 0, "-1 < xi <= 1 violated (xi={})".format(xi))
        _window(delta < 2 * (1 + xi) / (1 - 2 * xi),
                "delta < 2(1+xi)/(1-2xi) violated (delta={}, xi={})".format(delta, xi))
        mu2 = params.get('mu2', 1.0)
        num = (1 + xi) * (1 + xi - 2 * delta * xi * mu2) * d0_sq + 2 * xi * delta * (delta * xi - delta - 1) * f0
        return num / (2 * delta * k * (2 + 2 * xi + 2 * delta * xi - delta))

    if regime == PASKM_REGIME:
        alpha, omega, gamma = params['alpha'], params['omega'], params['gamma']
        _window(0 < alpha <= 1, "0 <= 1 - alpha < 1 violated (alpha={})".format(alpha))
        _window(0 <= omega < 1, "0 <= omega < 1 violated (omega={})".format(omega))
        c = 1 - omega + alpha * omega
        _window(delta < 2 * c / (1 + 2 * omega - 2 * alpha * omega),
                "delta < 2(1-omega+alpha omega)/(1+2omega-2alpha omega) violated (delta={})".format(delta))
        _window(math.isclose(alpha * gamma, alpha * delta + omega * delta * (1 - alpha), rel_tol=1e-9, abs_tol=1e-12),
                "coupling alpha gamma = alpha delta + omega delta (1-alpha) violated")
        num = c ** 2 * d0_sq + 2 * delta * (delta - 2 + 3 * omega - 3 * alpha * omega
                                             + delta * omega - delta * alpha * omega) * f0
        return num / (2 * delta * k * (2 - 2 * omega + 2 * alpha * omega - 2 * delta * omega
                                       + 2 * delta * alpha * omega - delta))

    raise BoundError("unknown regime {!r}, expected skm, gskm or paskm".format(regime))


def matrix_power_closed_form(pi, k):
    """
    Closed form of [[Pi1, Pi2], [Pi3, Pi4]]^k by diagonalisation.

    M^k = Gamma3 [[Gamma1 rho2^k - Gamma2 rho1^k, Gamma1 Gamma2 (rho1^k - rho2^k)],
                  [rho2^k - rho1^k, Gamma1 rho1^k - Gamma2 rho2^k]]

    Parameters
    ----------
    pi : sequence
        (Pi1, Pi2, Pi3, Pi4).
    k : int

    Returns
    -------
    ndarray
        2x2 matrix.

    """
    consts = matrix_constants(*pi)
    if consts['Gamma1'] is None:
        raise BoundError("closed form needs Pi3 > 0 and distinct eigenvalues")
    g1, g2, g3 = consts['Gamma1'], consts['Gamma2'], consts['Gamma3']
    r1, r2 = consts['rho1'] ** k, consts['rho2'] ** k
    return g3 * np.array([[g1 * r2 - g2 * r1, g1 * g2 * (r1 - r2)],
                          [r2 - r1, g1 * r1 - g2 * r2]])


SCALAR, MATRIX = 'scalar', 'matrix'


def recurrence_oracle(kind, params, init, k):
    """
    Simulate a recurrence with equality and evaluate its closed-form bounds.

    scalar : G_{j+1} = phi1 G_j + phi2 G_{j-1} with G_0 = G_1 = init; returns G_{k+1}
        with bounds 'geometric' = (1+phi) rho^k G_0 and 'parity' = R-form for k.
    matrix : [H, F]_{j+1} = Pi [H, F]_j from init = (H_1, F_1); returns
        Pi^k (H_1, F_1) with bound 'closed_form' from matrix_power_closed_form.

    Parameters
    ----------
    kind : str
    params : dict
        {phi1, phi2} or {Pi1, Pi2, Pi3, Pi4}.
    init : float or pair
    k : int

    Returns
    -------
    OracleResult

    """
    if k < 0:
        raise BoundError("k must be nonnegative, got {}".format(k))
    if kind == SCALAR:
        phi1, phi2 = params['phi1'], params['phi2']
        if phi1 < 0 or phi2 < 0 or not phi1 + phi2 < 1:
            raise BoundError("scalar recurrence needs phi1, phi2 >= 0 and phi1 + phi2 < 1")
        prev, cur = float(init), float(init)
        for _ in range(k):
            prev, cur = cur, phi1 * cur + phi2 * prev
        c = scalar_constants(phi1, phi2)
        rho, phi = c['rho'], c['phi']
        if k % 2 == 0:
            parity = c['R1'] * rho ** (k + 1) + c['R2'] * phi ** (k + 1)
        else:
            parity = c['R3'] * rho ** k - c['R4'] * phi ** k
        return OracleResult(simulated=cur,
                            bounds={'geometric': (1 + phi) * rho ** k * init, 'parity': parity * init})

    if kind == MATRIX:
        pi = (params['Pi1'], params['Pi2'], params['Pi3'], params['Pi4'])
        violated = _matrix_violations(*pi)
        if violated:
            raise BoundError("matrix recurrence preconditions violated: {}".format("; ".join(violated)))
        M = np.array([[pi[0], pi[1]], [pi[2], pi[3]]])
        state = np.asarray(init, dtype=np.float64)
        for _ in range(k):
            state = M @ state
        return OracleResult(simulated=state,
                            bounds={'closed_form': matrix_power_closed_form(pi, k) @ np.asarray(init, dtype=np.float64)})

    raise BoundError("unknown recurrence kind {!r}".format(kind))


def encoding_length(problem, base=math.e):
    """
    sigma = sum ln(|a_ij|+1) + sum ln(|b_i|+1) + ln(mn) + 2.

    Parameters
    ----------
    problem : Problem
    base : float
        Logarithm base; e as written, 2 for the binary reading.

    Returns
    -------
    float

    """
    entries = problem.A.data if problem.is_sparse else problem.A
    total = np.log1p(np.abs(entries)).sum() + np.log1p(np.abs(problem.b)).sum() + math.log(problem.m * problem.n)
    return float(total / math.log(base)) + 2.0


def certificate_bounds(sigma, n, phi, rho_bar, k, psi=1.0):
    """
    Iteration lower bound and failure-probability bound for a certificate of feasibility.

    k_min is the smallest integer above (4 sigma - 4 - log n + log(1+phi) + 2 log psi) / log(1/rho_bar)
    and H = sqrt((1+phi)/n) 2^(2 sigma - 2) psi rho_bar^(k/2); all logs base 2.
    A point with max violation below 2^(1-sigma) certifies feasibility.

    Parameters
    ----------
    sigma : float
    n : int
    phi : float
    rho_bar : float
        In (0, 1).
    k : int
    psi : float
        Largest row norm; 1 for normalized rows.

    Returns
    -------
    CertificateReport

    """
    if not 0 < rho_bar < 1:
        raise BoundError("rho_bar must lie in (0, 1) for a certificate bound, got {}".format(rho_bar))
    if psi <= 0 or n < 1 or phi < 0:
        raise BoundError("need psi > 0, n >= 1 and phi >= 0")
    log_inv_rho = -math.log2(rho_bar)
    k_bound = (4 * sigma - 4 - math.log2(n) + math.log2(1 + phi) + 2 * math.log2(psi)) / log_inv_rho
    k_min = max(0, math.floor(k_bound) + 1)
    h_log2 = 0.5 * (math.log2(1 + phi) - math.log2(n)) + (2 * sigma - 2) + math.log2(psi) - 0.5 * k * log_inv_rho
    h_value = 2.0 ** h_log2 if h_log2 < 1000 else float('inf')
    return CertificateReport(sigma=sigma, theta_threshold=2.0 ** (1 - sigma), k=k, k_min=k_min, k_bound=k_bound,
                             h_log2=h_log2, h_value=h_value, p_bound=min(1.0, h_value),
                             psi=psi, phi=phi, rho_bar=rho_bar)
