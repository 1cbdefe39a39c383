import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: takes several seconds")


@pytest.fixture(scope="session")
def glyph_bank():
    synth = pytest.importorskip("spw_trainer.synth")
    return synth.GlyphBank()
