"""Small constructors shared by the test modules."""

from gpdephase.envmodels import NonEqEnv, SpectralDensity, ThermalEnv


def thermal(gamma0=0.1, s=1.0, cutoff=10.0, temperature=0.0):
    return ThermalEnv(SpectralDensity(gamma0, s, cutoff), temperature)


def noneq(gamma0=0.1, s=1.0, cutoff=10.0, lam=0.3, d=2.0, rebased=True):
    return NonEqEnv(SpectralDensity(gamma0, s, cutoff), lam, d, rebased)
