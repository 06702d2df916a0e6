from __future__ import annotations

import sys
from pathlib import Path

import pytest

from owa.fixtures import write_fixtures
from owa.pipeline import build_layer, load_config, load_triples

# make tests/oracles importable regardless of the rootdir pytest picks
sys.path.insert(0, str(Path(__file__).parent))


def _built(root: Path, scale: str):
    fs = write_fixtures(root, scale)
    fs.manifests = {kind: build_layer(load_config(path)) for kind, path in fs.configs.items()}
    fs.layers = {kind: root / "layers" / f"{kind if kind != 'warc' else 'web'}.n3" for kind in fs.configs}
    return fs


@pytest.fixture(scope="session")
def small_fx(tmp_path_factory):
    """Small fixture collection with all three layers built (each layer under 10k triples)."""
    return _built(tmp_path_factory.mktemp("small"), "small")


@pytest.fixture(scope="session")
def full_fx(tmp_path_factory):
    """Full-scale fixture collection (news layer is about 95k triples) with layers built."""
    return _built(tmp_path_factory.mktemp("full"), "full")


@pytest.fixture(scope="session")
def small_kb_triples(small_fx):
    return load_triples([small_fx.kb])



def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_RESULTS

    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
