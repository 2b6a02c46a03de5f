import pytest

from src.config import Config
from src.graph import TreeGraph, parse_graph
from tests.graphs import IV_GRAPH, PATH_WITH_TWO_FOUR, ROOT_CONFOUNDED


@pytest.fixture
def iv_graph() -> TreeGraph:
    return parse_graph(IV_GRAPH)


@pytest.fixture
def root_confounded() -> TreeGraph:
    return parse_graph(ROOT_CONFOUNDED)


@pytest.fixture
def path_two_four() -> TreeGraph:
    return parse_graph(PATH_WITH_TWO_FOUR)


@pytest.fixture
def config() -> Config:
    return Config()
