import json
from pathlib import Path

import pytest

from droidcage.app_model import AppModel, install_app, load_app_model
from droidcage.explorer import baseline_device

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def login_gate() -> AppModel:
    return load_app_model(FIXTURES / "login_gate.app")


@pytest.fixture(scope="session")
def tiny_taps() -> AppModel:
    return load_app_model(FIXTURES / "tiny_taps.app")


@pytest.fixture(scope="session")
def one_button() -> AppModel:
    return load_app_model(FIXTURES / "one_button.app")


@pytest.fixture(scope="session")
def boot_gate() -> AppModel:
    return load_app_model(FIXTURES / "boot_gate.app")


@pytest.fixture(scope="session")
def sealed_bomb() -> AppModel:
    return load_app_model(FIXTURES / "sealed_bomb.app")


@pytest.fixture(scope="session")
def crash_first() -> AppModel:
    return load_app_model(FIXTURES / "crash_first.app")


def device_for(app: AppModel):
    """Fresh baseline device with the app installed and launched."""
    return install_app(baseline_device(), app)


def write_model(tmp_path: Path, doc: dict, name: str = "model.app") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path
