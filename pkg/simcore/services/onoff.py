import math


def exponential_from_uniform(mean, u):
    """Inverse CDF of Exp(mean) at u in [0, 1)."""
    return -mean * math.log1p(-u)


def sample_onoff(tau_on, tau_off, rng):
    """Draw one (on, off) cycle with exponential durations of the given means."""
    u_on, u_off = rng.random(), rng.random()
    return exponential_from_uniform(tau_on, u_on), exponential_from_uniform(tau_off, u_off)
