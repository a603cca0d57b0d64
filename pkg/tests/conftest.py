import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gazner.corpus import Corpus, Document, load_gazetteer, load_non_entity_list  # noqa: E402
import synth  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def nel():
    return load_non_entity_list(DATA / "non_entity.txt")


@pytest.fixture(scope="session")
def ph_org():
    return load_gazetteer(DATA / "ph_org.txt", "PH_ORG")


@pytest.fixture(scope="session")
def drug():
    return load_gazetteer(DATA / "drug.txt", "DRUG")


@pytest.fixture(scope="session")
def article_doc():
    return Document("article", (DATA / "news_article.txt").read_text(encoding="utf-8").strip())


@pytest.fixture(scope="session")
def article_corpus(article_doc):
    return Corpus((article_doc,))


@pytest.fixture(scope="session")
def synthetic(tmp_path_factory):
    return synth.write_fixture(tmp_path_factory.mktemp("synthetic"))


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = mod.summary_lines() if mod is not None else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
