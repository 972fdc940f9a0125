import pytest

from langlab.grammar import GenerationConfig, default_grammar, generate_corpus


@pytest.fixture(scope="session")
def grammar():
    return default_grammar()


@pytest.fixture(scope="session")
def small_corpus(grammar):
    """1,000 generated sentences shared by the cheaper tests."""
    return generate_corpus(grammar, GenerationConfig(count=1000, seed=2024))
