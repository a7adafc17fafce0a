import json
import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

VALID_RESPONSE = {
    "construction_year": 1908,
    "famous_architect": False,
    "landmark": False,
    "popularity": 40,
    "state": 75,
    "architectural_integrity": 80,
    "rarity": 35,
    "style": "jugend",
    "construction_technique": "tegelhus",
    "roof_shape": "mansard",
    "roof_material": "sheet metal",
    "roof_color": "black",
    "facade_material": "plaster",
    "facade_color": "yellow",
    "facade_decoration": 70,
    "window_area": 30,
    "window_shape": "rectangular",
    "window_number": 24,
    "window_avg_pane_number": 6,
    "door_type": "double",
    "door_material": "wood",
    "door_shape": "arched",
    "complexity": 65,
    "symmetry": 80,
    "floor_number": 5,
    "balcony_number": 4,
    "representative_time": 85,
    "representative_place": 60,
    "representative_culture": 55,
    "emotional_reaction": 60,
    "elements": ["balconies", "cornice", "window_casings"],
    "culture_historical": 70,
    "aesthetic": 75,
    "social": 40,
    "visibility_score": 90,
}


@pytest.fixture
def valid_response() -> dict:
    return json.loads(json.dumps(VALID_RESPONSE))


@pytest.fixture
def valid_text() -> str:
    return json.dumps(VALID_RESPONSE)


# --- acceptance summary -------------------------------------------------------

_criteria: dict[int, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    # a failing fixture counts against the criterion too
    if mark is not None and (rep.when == "call" or rep.failed):
        number, title = mark.args
        # parametrized criteria pass only if every case passes
        _, status, secs = _criteria.get(number, (title, "PASS", 0.0))
        status = status if rep.passed else "FAIL"
        _criteria[number] = (title, status, secs + rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, status, secs = _criteria[n]
        terminalreporter.write_line(f"[{status}] {n:>2}. {title} ({secs:.2f}s)")
