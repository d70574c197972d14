import pathlib

import pytest

from polarwedge import gains_wedge, load_market, separating_polytope

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def t1_text():
    return (DATA / "t1.market").read_text()


@pytest.fixture(scope="session")
def t1(t1_text):
    return load_market(t1_text)


@pytest.fixture(scope="session")
def t1_wedge(t1):
    return gains_wedge(t1)


@pytest.fixture(scope="session")
def t1_m1(t1, t1_wedge):
    return separating_polytope(t1, t1_wedge)


@pytest.fixture(scope="session")
def binomial():
    return load_market(
        "atoms: up down\n"
        "weights: 1/2 1/2\n"
        "periods: 1\n"
        "tree: r -> up down\n"
        "prices: r 0 1\n"
        "prices: up 0 2\n"
        "prices: down 0 1/2\n"
    )


@pytest.fixture(scope="session")
def two_period():
    return load_market(
        "atoms: uu ud du dd\n"
        "weights: 1/4 1/4 1/4 1/4\n"
        "periods: 2\n"
        "tree: r -> a b\n"
        "tree: a -> uu ud\n"
        "tree: b -> du dd\n"
        "prices: r 0 1\n"
        "prices: a 0 2\n"
        "prices: b 0 1/2\n"
        "prices: uu 0 3\n"
        "prices: ud 0 1\n"
        "prices: du 0 1\n"
        "prices: dd 0 1/4\n"
    )


@pytest.fixture(scope="session")
def null_atom_market():
    # atom z carries zero weight; separating measures must vanish there
    return load_market(
        "atoms: u m d z\n"
        "weights: 1/3 1/3 1/3 0\n"
        "periods: 1\n"
        "tree: root -> u m d z\n"
        "prices: root 0 1\n"
        "prices: u 0 2\n"
        "prices: m 0 1\n"
        "prices: d 0 1/2\n"
        "prices: z 0 7\n"
    )
