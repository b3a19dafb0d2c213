"""Modified Bessel function of the second kind, evaluated in log space.

Temme's series is used for ``x < 2`` and Steed's continued fraction
otherwise, both at a fractional order ``mu`` in ``[-1/2, 1/2)``; the integer
part of the order is reached by stable upward recurrence.  Working in log space
keeps ``z**nu * K_nu(z)`` finite for large orders.
"""

import math

_EPS = 1e-16
_MAXIT = 10000
_XMIN = 2.0
_EULER = 0.5772156649015329
# Taylor coefficients a_k of 1/Gamma(z) = sum a_k z**k (k = 2, 4, 6, 8).
_A2 = 0.5772156649015329
_A4 = -0.0420026350340952
_A6 = -0.0421977345555443
_A8 = 0.0072189432466630
_RESCALE = 1e250
_LOG_RESCALE = math.log(_RESCALE)


def _temme_gammas(mu):
    """Return (gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))."""
    gampl = 1.0 / math.gamma(1.0 + mu)
    gammi = 1.0 / math.gamma(1.0 - mu)
    if abs(mu) < 1e-3:
        m2 = mu * mu
        gam1 = -(_A2 + m2 * (_A4 + m2 * (_A6 + m2 * _A8)))
    else:
        gam1 = (gammi - gampl) / (2.0 * mu)
    gam2 = 0.5 * (gammi + gampl)
    return gam1, gam2, gampl, gammi


def _k_small(mu, x):
    """K_mu(x) and K_{mu+1}(x) for x < 2 (Temme's series)."""
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
    d = -math.log(x2)
    e = mu * d
    fact2 = 1.0 if abs(e) < _EPS else math.sinh(e) / e
    gam1, gam2, gampl, gammi = _temme_gammas(mu)
    ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    total = ff
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d = x2 * x2
    total1 = p
    mu2 = mu * mu
    for i in range(1, _MAXIT + 1):
        ff = (i * ff + p + q) / (i * i - mu2)
        c *= d / i
        p /= i - mu
        q /= i + mu
        term = c * ff
        total += term
        total1 += c * (p - i * ff)
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"Bessel series did not converge (mu={mu}, x={x})")
    return total, total1 * 2.0 / x


def _k_large_scaled(mu, x):
    """exp(x)*K_mu(x) and exp(x)*K_{mu+1}(x) for x >= 2 (Steed's CF2)."""
    mu2 = mu * mu
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu2
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT + 1):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:
        raise ArithmeticError(f"Bessel continued fraction did not converge (mu={mu}, x={x})")
    h = a1 * h
    kmu = math.sqrt(math.pi / (2.0 * x)) / s
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


def log_bessel_k(nu, x):
    """Natural log of K_nu(x) for real order nu and x > 0."""
    if not x > 0.0:
        raise ValueError(f"log_bessel_k requires x > 0, got {x}")
    nu = abs(float(nu))
    nl = int(nu + 0.5)
    mu = nu - nl
    if x < _XMIN:
        kmu, k1 = _k_small(mu, x)
        log_scale = 0.0
    else:
        kmu, k1 = _k_large_scaled(mu, x)
        log_scale = -x
    for i in range(1, nl + 1):
        kmu, k1 = k1, (mu + i) * (2.0 / x) * k1 + kmu
        if k1 > _RESCALE:
            kmu /= _RESCALE
            k1 /= _RESCALE
            log_scale += _LOG_RESCALE
    return math.log(kmu) + log_scale


def bessel_k(nu, x):
    """K_nu(x); underflows to 0 / overflows to inf like the true function."""
    lk = log_bessel_k(nu, x)
    if lk > 709.0:
        return math.inf
    return math.exp(lk)
