import pytest

import lduo


@pytest.fixture(scope="session")
def thermo300():
    return lduo.beta_from_temperature(300.0)


@pytest.fixture(scope="session")
def benchmark_ld():
    return lduo.LorentzDrudeBath(eta=50.0, lambda_cutoff=100.0)


@pytest.fixture(scope="session")
def benchmark_uo():
    return lduo.UndampedBath(lambda_reorg=0.5, omega_uo=500.0)


@pytest.fixture(scope="session")
def benchmark_model(thermo300, benchmark_ld, benchmark_uo):
    return lduo.build_bath_model(thermo300, ld=benchmark_ld, uo=benchmark_uo,
                                 K="auto")


@pytest.fixture(scope="session")
def benchmark_system():
    return lduo.SystemModel(omega_eg=3000.0)
