import sys
from pathlib import Path

import pytest

from ocsis.dsl import parse_files
from ocsis.model import ProcedureSet

REPO = Path(__file__).resolve().parent.parent
CORPUS = REPO / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden"

sys.path.insert(0, str(Path(__file__).resolve().parent))


def corpus_sources() -> list[tuple[str, str]]:
    files = sorted(CORPUS.glob("*.ocsr")) + sorted(CORPUS.glob("*.ocsp"))
    return [(str(f), f.read_text(encoding="utf-8")) for f in files]


@pytest.fixture(scope="session")
def corpus_set() -> ProcedureSet:
    result = parse_files(corpus_sources())
    assert result.ok, [d.render() for d in result.diagnostics]
    return result.pset


@pytest.fixture
def scenario_path():
    def lookup(name: str) -> Path:
        return CORPUS / "scenarios" / f"{name}.ocss"

    return lookup
