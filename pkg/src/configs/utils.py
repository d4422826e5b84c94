from pathlib import Path

from configs.solving import FIXTURE_SUFFIXES

INSTALLED_PROJECT_ROOT = Path(__file__).parents[1].resolve()


def get_fixture_path(filename: str) -> Path:
    """Return absolute path to the specified fixture `filename` in the configs/files directory."""
    return INSTALLED_PROJECT_ROOT.joinpath('configs', 'files', filename)


def list_fixtures(suffix: str) -> list[Path]:
    """Return all shipped fixture files with the given `suffix`, sorted by name."""
    assert suffix in FIXTURE_SUFFIXES, f"Unknown fixture suffix {suffix}."
    return sorted(get_fixture_path('').glob(f"*{suffix}"))


def read_fixture(filename: str) -> str:
    """Read the fixture `filename` as text."""
    with open(get_fixture_path(filename)) as file:
        return file.read()
