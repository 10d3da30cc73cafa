import pytest

_criteria = {}  # number -> [title, passed]


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args))


def pytest_runtest_logreport(report):
    for key, value in report.user_properties:
        if key != "criterion":
            continue
        number, title = value
        entry = _criteria.setdefault(number, [title, True])
        if report.failed or (report.when == "call" and report.skipped):
            entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, passed = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")


@pytest.fixture
def ex1():
    from buchi_bellman import builtin_models
    return builtin_models.model("ex1")


from hypothesis import settings  # noqa: E402

settings.register_profile("repo", derandomize=True, deadline=None)
settings.load_profile("repo")
