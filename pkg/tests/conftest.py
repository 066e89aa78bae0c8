import json

import pytest

from apidialog.corpus import generate_corpus, load_dataset, parse_dataset

# Hand-written three-function corpus with overlapping and distinct terms.
TOY_CORPUS = {
    "api": "toy",
    "components": [
        {
            "id": "ssh_write_knownhost",
            "signature": {
                "name": "ssh_write_knownhost",
                "return_type": "int",
                "params": [{"name": "session", "type": "ssh_session"}],
            },
            "summary": "write the current host and key into the known hosts file",
            "properties": {
                "description": "appends the server host key to the knownhost file",
                "returns": "int zero on success",
            },
        },
        {
            "id": "ssh_connect",
            "signature": {
                "name": "ssh_connect",
                "return_type": "int",
                "params": [{"name": "session", "type": "ssh_session"}],
            },
            "summary": "connect to the ssh server",
            "properties": {
                "description": "opens a socket to the remote server and starts the session",
            },
        },
        {
            "id": "ssh_channel_open",
            "signature": {
                "name": "ssh_channel_open",
                "return_type": "int",
                "params": [
                    {"name": "channel", "type": "ssh_channel"},
                    {"name": "flags", "type": "int"},
                ],
            },
            "summary": "open a channel on an established session",
            "properties": {
                "description": "creates a new channel for data transfer over the connection",
                "example": "ssh_channel_open(channel, 0)",
            },
        },
    ],
}


@pytest.fixture(scope="session")
def toy_dataset():
    return parse_dataset(json.loads(json.dumps(TOY_CORPUS)))


@pytest.fixture(scope="session")
def small_dataset():
    return parse_dataset(generate_corpus(count=50, vocab_size=120, seed=7))


@pytest.fixture(scope="session")
def large_dataset():
    return parse_dataset(generate_corpus(count=300, vocab_size=400, seed=11))


@pytest.fixture(scope="session")
def eval_dataset():
    """100-function corpus used by the policy-ordering and training checks."""
    return parse_dataset(generate_corpus(count=100, vocab_size=220, seed=3))


@pytest.fixture()
def toy_corpus_file(tmp_path):
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(TOY_CORPUS))
    return path


@pytest.fixture(scope="session")
def fixture_corpus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "fixture.json"
    path.write_text(json.dumps(TOY_CORPUS))
    return path
