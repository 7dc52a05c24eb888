from pathlib import Path

import pytest

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


def corpus_source(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")
