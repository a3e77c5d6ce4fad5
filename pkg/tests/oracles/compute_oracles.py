"""Independent reference values frozen into the test-suite.

Pure Python + mpmath; nothing here imports the package.  Run with
``python tests/oracles/compute_oracles.py`` to regenerate the printed values.
"""
import math

import mpmath as mp

mp.mp.dps = 50

T, B0, B1 = 1000, mp.mpf("1e-4"), mp.mpf("0.02")


def beta(s):
    """Linear grid, s = 1..T."""
    return B0 + (s - 1) * (B1 - B0) / (T - 1)


def alpha_bar_T():
    prod = mp.mpf(1)
    for s in range(1, T + 1):
        prod *= 1 - beta(s)
    return prod


def pf_ode_endpoint(mu=2.0, var=0.25, z_T=0.0, substeps=10):
    """Probability-flow ODE of the variance-preserving SDE, RK4 in t.

    dz/dt = -1/2 beta(t) (z + d/dz log p_t(z)), with p_t = N(sqrt(abar) mu, abar var + 1 - abar).
    log abar(t) is linear on each unit interval [s-1, s], so beta(t) = -log(1 - beta_s)
    there; ``substeps`` RK4 steps per interval keep every step inside one segment.
    """
    betas = [float(beta(s)) for s in range(1, T + 1)]
    log_ab = [0.0]
    for b in betas:
        log_ab.append(log_ab[-1] + math.log1p(-b))

    def rhs(t, z, s):
        lam = -math.log1p(-betas[s - 1])
        la = log_ab[s - 1] - lam * (t - (s - 1))
        ab = math.exp(la)
        m, v = math.sqrt(ab) * mu, ab * var + 1 - ab
        return -0.5 * lam * (z + (m - z) / v)

    z = z_T
    h = 1.0 / substeps
    for s in range(T, 0, -1):
        for j in range(substeps):
            t = s - j * h
            k1 = rhs(t, z, s)
            k2 = rhs(t - h / 2, z - h / 2 * k1, s)
            k3 = rhs(t - h / 2, z - h / 2 * k2, s)
            k4 = rhs(t - h, z - h * k3, s)
            z = z - h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


def pf_closed_form(mu=2.0, var=0.25, z_T=0.0):
    """x = z / sqrt(abar) satisfies (x - mu) proportional to sqrt(var + (1 - abar) / abar)."""
    ab = alpha_bar_T()
    sig_T = mp.sqrt((1 - ab) / ab)
    x_T = z_T / mp.sqrt(ab)
    return mu + (x_T - mu) * mp.sqrt(var) / mp.sqrt(var + sig_T ** 2)


def inception_two_vectors():
    p1 = [mp.mpf("0.9"), mp.mpf("0.1")]
    p2 = [mp.mpf("0.1"), mp.mpf("0.9")]
    marg = [(a + b) / 2 for a, b in zip(p1, p2)]
    kl = lambda p: sum(pi * mp.log(pi / qi) for pi, qi in zip(p, marg))
    return mp.e ** ((kl(p1) + kl(p2)) / 2)


if __name__ == "__main__":
    print("alpha_bar_T        ", mp.nstr(alpha_bar_T(), 12))
    print("pf_ode_rk4_endpoint", repr(pf_ode_endpoint()))
    print("pf_closed_form     ", mp.nstr(pf_closed_form(), 12))
    print("IS([.9,.1],[.1,.9])", mp.nstr(inception_two_vectors(), 12))
    print("0.9ln1.8+0.1ln0.2  ", mp.nstr(0.9 * mp.log(1.8) + 0.1 * mp.log(0.2), 12))
