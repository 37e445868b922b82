import json
from pathlib import Path

import pytest

from revent.backends import ReplayBackend
from revent.ingest import load_corpus, load_tagger_predictions

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def worked_corpus():
    return load_corpus(DATA / "corpus.jsonl")


@pytest.fixture(scope="session")
def worked_tagger(worked_corpus):
    return load_tagger_predictions(DATA / "tagger.jsonl", worked_corpus)


@pytest.fixture(scope="session")
def replay_fixture():
    with open(DATA / "replay.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture()
def replay_backend(replay_fixture):
    return ReplayBackend(replay_fixture)


@pytest.fixture(scope="session")
def nisman_doc(worked_corpus):
    return next(d for d in worked_corpus if d.doc_id == "nisman")


@pytest.fixture(scope="session")
def gandhi_doc(worked_corpus):
    return next(d for d in worked_corpus if d.doc_id == "gandhi")
