import pytest
from fastapi.testclient import TestClient

from patternrepo import corpus
from patternrepo.api import create_app
from patternrepo.repository import Repository
from patternrepo.store import Store


@pytest.fixture
def store():
    s = Store()
    yield s
    s.close()


@pytest.fixture
def repo(store):
    return Repository(store)


@pytest.fixture
def seeded_repo(repo):
    corpus.seed(repo)
    return repo


@pytest.fixture
def client(store):
    return TestClient(create_app(store))


@pytest.fixture
def seeded_client(seeded_repo):
    return TestClient(create_app(seeded_repo.store))
