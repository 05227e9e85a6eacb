import pytest

from toricsoliton.toric import anticanonical_polytope, standard_fans


@pytest.fixture(scope="session")
def fans():
    return standard_fans()


@pytest.fixture(scope="session")
def polys(fans):
    return {name: anticanonical_polytope(rays) for name, rays in fans.items()}
